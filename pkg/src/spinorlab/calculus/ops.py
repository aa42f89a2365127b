"""Derivative calculus on the expression IR.

Leibniz expansion, reordering of stacked covariant derivatives through the
curvature-derivation commutator, expansion of box factors from the rule
table, and field substitution.  All operations are pure.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from ..algebra.expr import (Expression, Factor, Prefix, Term, canonicalize,
                            eps_factor, field_factor)
from ..algebra.indices import Idx, IndexError_, classify, dn, up
from ..algebra.registry import REGISTRY
from ..algebra.scalars import Scalar
from .rules import RuleTable


# ----------------------------------------------------------------------
# label utilities
# ----------------------------------------------------------------------

def _labels_of_term(t: Term) -> set[str]:
    return {ix.label for ix in t.all_indices()}


def _fresh(base: str, avoid: set[str]):
    n = 0
    while True:
        cand = f"{base}{n}"
        if cand not in avoid:
            avoid.add(cand)
            yield cand
        n += 1


def _rename_term_dummies(t: Term, avoid: set[str]) -> Term:
    free, dummies = classify(t.all_indices())
    clash = {d for d in dummies if d[0] in avoid}
    if not clash:
        return t
    gen = _fresh("y", avoid | _labels_of_term(t))
    mapping = {d: next(gen) for d in sorted(clash)}

    def rn(ix: Idx) -> Idx:
        k = (ix.label, ix.primed)
        return Idx(mapping[k], ix.primed, ix.up) if k in mapping else ix

    return Term(t.coeff, tuple(
        Factor(f.base,
               tuple(Prefix(p.kind, tuple(rn(i) for i in p.idxs))
                     for p in f.prefixes),
               tuple(rn(i) for i in f.idxs))
        for f in t.factors))


# ----------------------------------------------------------------------
# Leibniz derivative
# ----------------------------------------------------------------------

def leibniz(e: Expression, prefix: Prefix,
            allow_contraction: bool = False) -> Expression:
    """Apply one derivative operator across every term by the Leibniz rule.
    Prefix labels must be fresh relative to the free indices (unless the
    collision is an intended contraction and allow_contraction is set);
    term dummies are renamed out of the way automatically.  Epsilon, frame
    and constant factors are skipped (covariantly constant)."""
    plabels = {ix.label for ix in prefix.idxs}
    if not allow_contraction:
        for (lbl, _p, _u) in e.free_sig:
            if lbl in plabels:
                raise IndexError_(
                    f"derivative label {lbl} collides with a free index")
    out_terms = []
    for t in e.terms:
        t = _rename_term_dummies(t, set(plabels))
        targets = [i for i, f in enumerate(t.factors)
                   if not f.is_eps and not f.symbol().constant]
        for i in targets:
            fs = list(t.factors)
            f = fs[i]
            fs[i] = Factor(f.base, (prefix,) + f.prefixes, f.idxs)
            out_terms.append(Term(t.coeff, tuple(fs)))
    return Expression(out_terms)


def apply_deriv(e: Expression, kind: str, *specs: Idx) -> Expression:
    """Differentiate and then raise/contract the derivative indices.

    Each spec is the desired index of the operator; a spec whose label is
    already free in `e` produces a contraction.  Raised specs are built via
    an explicit epsilon, so the result is canonicalization-ready.
    """
    avoid = {ix.label for t in e.terms for ix in t.all_indices()}
    avoid |= {s.label for s in specs}
    gen = _fresh("h", avoid)
    fresh = [Idx(next(gen), s.primed, False) for s in specs]
    pref = Prefix(kind, _prefix_order(kind, fresh))
    out = leibniz(e, pref)
    if out.is_zero():
        return out
    for s, fr in zip(specs, fresh):
        if s.up:
            # T^{s} = eps^{s fr} T_{fr}
            out = out * Expression(
                [Term(Scalar(1), (eps_factor(up(s.label, s.primed),
                                             up(fr.label, fr.primed)),))])
        else:
            out = out.rename_free({fr.label: s.label})
    return canonicalize(out)


def _prefix_order(kind: str, idxs: list[Idx]) -> tuple[Idx, ...]:
    if kind == "nabla":
        u = [i for i in idxs if not i.primed]
        p = [i for i in idxs if i.primed]
        if len(u) != 1 or len(p) != 1:
            raise IndexError_("nabla takes one unprimed and one primed index")
        return (u[0], p[0])
    if kind == "dt":
        if idxs:
            raise IndexError_("dt takes no indices")
        return ()
    if kind == "dS":
        if len(idxs) != 2 or any(i.primed for i in idxs):
            raise IndexError_("dS takes two unprimed indices")
        return tuple(idxs)
    raise IndexError_(f"not a first-order operator: {kind}")


def nabla(e: Expression, u_spec: Idx, p_spec: Idx) -> Expression:
    return apply_deriv(e, "nabla", u_spec, p_spec)


def dt(e: Expression) -> Expression:
    return apply_deriv(e, "dt")


def dS(e: Expression, i1: Idx, i2: Idx) -> Expression:
    return apply_deriv(e, "dS", i1, i2)


# ----------------------------------------------------------------------
# second-derivative handling
# ----------------------------------------------------------------------

def _lower_factor_indices(term: Term, fi: int, positions) -> Term:
    """Rewrite chosen up indices of factor fi as eps^{L f} times the lowered
    factor (fresh dummy f)."""
    avoid = _labels_of_term(term)
    gen = _fresh("x", set(avoid))
    fs = list(term.factors)
    f = fs[fi]
    new_eps = []
    pref = [list(p.idxs) for p in f.prefixes]
    slots = list(f.idxs)
    for (where, pos) in positions:
        ix = pref[where][pos] if where >= 0 else slots[pos]
        if not ix.up:
            continue
        fresh = Idx(next(gen), ix.primed, False)
        new_eps.append(eps_factor(up(ix.label, ix.primed),
                                  up(fresh.label, fresh.primed)))
        if where >= 0:
            pref[where][pos] = fresh
        else:
            slots[pos] = fresh
    fs[fi] = Factor(f.base,
                    tuple(Prefix(p.kind, tuple(pi))
                          for p, pi in zip(f.prefixes, pref)),
                    tuple(slots))
    return Term(term.coeff, tuple(fs) + tuple(new_eps))


def split_second_nablas(e: Expression) -> Expression:
    """Rewrite every stacked pair of covariant derivatives as the
    pair-symmetrized second derivative plus curvature-derivation terms:

        nabla_a nabla_b = nabla2_(ab) + 1/2 eps_{AB} boxP_{A'B'}
                                      + 1/2 eps_{A'B'} boxU_{AB}
    """
    changed = True
    while changed:
        changed = False
        out_terms = []
        for t in e.terms:
            hit = None
            for fi, f in enumerate(t.factors):
                kinds = [p.kind for p in f.prefixes]
                for k in range(len(kinds) - 1):
                    if kinds[k] == "nabla" and kinds[k + 1] == "nabla":
                        hit = (fi, k)
                        break
                if hit:
                    break
            if hit is None:
                out_terms.append(t)
                continue
            changed = True
            fi, k = hit
            f = t.factors[fi]
            p1, p2 = f.prefixes[k], f.prefixes[k + 1]
            (u1, pp1), (u2, pp2) = p1.idxs, p2.idxs
            rest = f.prefixes[:k] + f.prefixes[k + 2:]
            if any(p.kind == "nabla" for p in f.prefixes[:k]):
                raise IndexError_("more than two stacked nablas unsupported")
            # symmetric part
            fs = list(t.factors)
            fs[fi] = Factor(f.base,
                            f.prefixes[:k] + (Prefix("nabla2", (u1, pp1, u2, pp2)),)
                            + f.prefixes[k + 2:],
                            f.idxs)
            out_terms.append(Term(t.coeff, tuple(fs)))
            # eps_{AB} boxP_{A'B'}
            fs = list(t.factors)
            fs[fi] = Factor(f.base,
                            f.prefixes[:k] + (Prefix("boxP", (pp1, pp2)),)
                            + f.prefixes[k + 2:],
                            f.idxs)
            fs.append(eps_factor(u1, u2))
            out_terms.append(Term(t.coeff * Fraction(1, 2), tuple(fs)))
            # eps_{A'B'} boxU_{AB}
            fs = list(t.factors)
            fs[fi] = Factor(f.base,
                            f.prefixes[:k] + (Prefix("boxU", (u1, u2)),)
                            + f.prefixes[k + 2:],
                            f.idxs)
            fs.append(eps_factor(pp1, pp2))
            out_terms.append(Term(t.coeff * Fraction(1, 2), tuple(fs)))
        e = Expression(out_terms, validate=False)
    return e


def commute_nablas(e: Expression, key=None) -> Expression:
    """Reorder stacked covariant derivatives into a target order, adding the
    commutator corrections of the curvature-derivation identity.  `key`
    maps a nabla Prefix to a sortable value; default is the index key."""
    if key is None:
        key = lambda p: tuple(i.key() for i in p.idxs)
    fuel = 200
    while fuel:
        fuel -= 1
        out_terms = []
        changed = False
        for t in e.terms:
            hit = None
            for fi, f in enumerate(t.factors):
                kinds = [p.kind for p in f.prefixes]
                for k in range(len(kinds) - 1):
                    if kinds[k] == "nabla" and kinds[k + 1] == "nabla" \
                            and key(f.prefixes[k]) > key(f.prefixes[k + 1]):
                        hit = (fi, k)
                        break
                if hit:
                    break
            if hit is None:
                out_terms.append(t)
                continue
            changed = True
            fi, k = hit
            f = t.factors[fi]
            p1, p2 = f.prefixes[k], f.prefixes[k + 1]
            (u1, pp1), (u2, pp2) = p1.idxs, p2.idxs
            # nabla_a nabla_b = nabla_b nabla_a + eps(u) boxP(p) + eps(p) boxU(u)
            fs = list(t.factors)
            fs[fi] = Factor(f.base,
                            f.prefixes[:k] + (p2, p1) + f.prefixes[k + 2:],
                            f.idxs)
            out_terms.append(Term(t.coeff, tuple(fs)))
            fs = list(t.factors)
            fs[fi] = Factor(f.base,
                            f.prefixes[:k] + (Prefix("boxP", (pp1, pp2)),)
                            + f.prefixes[k + 2:], f.idxs)
            fs.append(eps_factor(u1, u2))
            out_terms.append(Term(t.coeff, tuple(fs)))
            fs = list(t.factors)
            fs[fi] = Factor(f.base,
                            f.prefixes[:k] + (Prefix("boxU", (u1, u2)),)
                            + f.prefixes[k + 2:], f.idxs)
            fs.append(eps_factor(pp1, pp2))
            out_terms.append(Term(t.coeff, tuple(fs)))
        e = Expression(out_terms, validate=False)
        if not changed:
            return e
    raise RuntimeError("commute_nablas did not terminate")


# ----------------------------------------------------------------------
# box expansion
# ----------------------------------------------------------------------

WEYL_SIGN = -1


class MissingRule(KeyError):
    pass


def expand_box(e: Expression, table: RuleTable | None = None) -> Expression:
    """Replace every curvature-derivation prefix by its rule-table template.
    The derivation acts slot-wise on all indices below it (including inner
    derivative indices) plus one charge term for charged fields."""
    table = table or RuleTable.default()
    changed = True
    while changed:
        changed = False
        out_terms = []
        for t in e.terms:
            hit = None
            for fi, f in enumerate(t.factors):
                if f.prefixes and f.prefixes[0].kind in ("boxU", "boxP"):
                    hit = fi
                    break
                if any(p.kind in ("boxU", "boxP") for p in f.prefixes):
                    raise MissingRule("box below other derivatives unsupported")
            if hit is None:
                out_terms.append(t)
                continue
            changed = True
            out_terms.extend(_expand_one_box(t, hit, table))
        e = Expression(out_terms, validate=False)
    return canonicalize(e)


def _expand_one_box(t: Term, fi: int, table: RuleTable) -> list[Term]:
    # normalize: all indices of the box and of the rest of the chain lowered
    f = t.factors[fi]
    positions = [(0, 0), (0, 1)]
    positions += [(w, p) for w in range(1, len(f.prefixes))
                  for p in range(len(f.prefixes[w].idxs))]
    positions += [(-1, p) for p in range(len(f.idxs))]
    if any((f.prefixes[w].idxs[p] if w >= 0 else f.idxs[p]).up
           for (w, p) in positions):
        t = _lower_factor_indices(t, fi, positions)
        f = t.factors[fi]
    box = f.prefixes[0]
    primed_box = box.kind == "boxP"
    X, Y = box.idxs
    rest = Factor(f.base, f.prefixes[1:], f.idxs)
    sym = rest.symbol()
    # slot list of the remaining chain: (where, pos, idx)
    slots = []
    for w, p in enumerate(rest.prefixes):
        for k, ix in enumerate(p.idxs):
            slots.append((w, k, ix))
    for k, ix in enumerate(rest.idxs):
        slots.append((-1, k, ix))

    others = t.factors[:fi] + t.factors[fi + 1:]
    out = []

    def with_slot(where, pos, new: Idx) -> Factor:
        if where == -1:
            idxs = list(rest.idxs)
            idxs[pos] = new
            return Factor(rest.base, rest.prefixes, tuple(idxs))
        pref = list(rest.prefixes)
        pidx = list(pref[where].idxs)
        pidx[pos] = new
        pref[where] = Prefix(pref[where].kind, tuple(pidx))
        return Factor(rest.base, tuple(pref), rest.idxs)

    avoid = _labels_of_term(t)
    gen = _fresh("b", set(avoid))
    for (where, pos, ix) in slots:
        d_lbl = next(gen)
        if ix.primed == primed_box:
            # same sector: Weyl + Lambda
            psi = field_factor("Psi", [dn(X.label, primed_box),
                                       dn(Y.label, primed_box),
                                       dn(ix.label, primed_box),
                                       up(d_lbl, primed_box)])
            out.append(Term(t.coeff * WEYL_SIGN,
                            others + (psi, with_slot(where, pos,
                                                     dn(d_lbl, primed_box)))))
            lam = field_factor("Lambda", [])
            s_l = table.sign("box.lambda")
            out.append(Term(t.coeff * s_l,
                            others + (lam,
                                      eps_factor(dn(X.label, primed_box),
                                                 dn(ix.label, primed_box)),
                                      with_slot(where, pos,
                                                dn(Y.label, primed_box)))))
            out.append(Term(t.coeff * s_l,
                            others + (lam,
                                      eps_factor(dn(Y.label, primed_box),
                                                 dn(ix.label, primed_box)),
                                      with_slot(where, pos,
                                                dn(X.label, primed_box)))))
        else:
            # cross sector: Phi
            if primed_box:
                phi = field_factor("Phi", [dn(ix.label, False), up(d_lbl, False),
                                           dn(X.label, True), dn(Y.label, True)])
                new = dn(d_lbl, False)
            else:
                phi = field_factor("Phi", [dn(X.label, False), dn(Y.label, False),
                                           dn(ix.label, True), up(d_lbl, True)])
                new = dn(d_lbl, True)
            out.append(Term(t.coeff * table.sign("box.phi"),
                            others + (phi, with_slot(where, pos, new))))
    if sym.charged:
        F = field_factor("F", [dn(X.label, primed_box), dn(Y.label, primed_box)])
        ef = field_factor("e", [])
        skey = "box.charge_p" if primed_box else "box.charge_u"
        out.append(Term(t.coeff * table.sign(skey) * Scalar.i(),
                        others + (F, ef, rest)))
    return out


# ----------------------------------------------------------------------
# substitution and specialization
# ----------------------------------------------------------------------

def substitute_field(e: Expression, name: str, nu: int, np_: int,
                     template: Expression, slot_labels: list[str]) -> Expression:
    """Replace a field by an expression template.

    `slot_labels` are the template's designated free labels matching the
    field's declared slots in order (all written as down indices in the
    template).  Derivative prefixes on replaced factors distribute over the
    template by the Leibniz rule.
    """
    base = ("field", name, nu, np_)
    sym = REGISTRY.lookup(name, nu, np_)
    tpl_free = {lbl: primed for (lbl, primed) in
                (template.free_labels() if not template.is_zero() else set())}
    for sl, chir in zip(slot_labels, sym.slots):
        if tpl_free.get(sl) != chir:
            raise IndexError_(
                f"template label {sl} missing or of wrong chirality for "
                f"slot of {name}")
    out_terms = []
    for t in e.terms:
        pending = [t]
        while pending:
            cur = pending.pop()
            hit = next((i for i, f in enumerate(cur.factors) if f.base == base),
                       None)
            if hit is None:
                out_terms.append(cur)
                continue
            f = cur.factors[hit]
            # lower raised slots first so template labels match cleanly
            if any(ix.up for ix in f.idxs):
                cur = _lower_factor_indices(
                    cur, hit, [(-1, p) for p in range(len(f.idxs))])
                f = cur.factors[hit]
            avoid = _labels_of_term(cur) | set(slot_labels)
            gen = _fresh("s", set(avoid))
            tmp_names = {sl: next(gen) for sl in slot_labels}
            sub = template.rename_free(tmp_names)
            sub = sub.rename_free({tmp_names[sl]: ix.label
                                   for sl, ix in zip(slot_labels, f.idxs)})
            for p in reversed(f.prefixes):
                sub = leibniz(sub, p, allow_contraction=True)
            rest = Expression([Term(cur.coeff,
                                    cur.factors[:hit] + cur.factors[hit + 1:])],
                              validate=False)
            prod = rest * sub
            pending.extend(prod.terms)
    return Expression(out_terms, validate=False)


def set_zero(e: Expression, *keys: tuple[str, int, int]) -> Expression:
    """Drop every term containing one of the given symbols (as a factor,
    derived or not)."""
    bases = {("field",) + k for k in keys}
    return Expression([t for t in e.terms
                       if not any(f.base in bases for f in t.factors)],
                      validate=False)


def symmetrize_free(e: Expression, labels: list[str]) -> Expression:
    """Total symmetrization over the named free labels."""
    out = None
    n = 0
    for perm in itertools.permutations(labels):
        mapping = dict(zip(labels, perm))
        piece = e.rename_free(mapping)
        out = piece if out is None else out + piece
        n += 1
    return out.scaled(Fraction(1, n))


def eps_contract(e: Expression, l1: str, l2: str, primed: bool) -> Expression:
    """Contract two free down indices with eps^{l1 l2}."""
    return canonicalize(e * Expression(
        [Term(Scalar(1), (eps_factor(up(l1, primed), up(l2, primed)),))]))
