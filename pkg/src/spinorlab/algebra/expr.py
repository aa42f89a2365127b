"""Expression IR and canonicalizer for abstract-index 2-spinor calculus.

An Expression is a sum of Terms; a Term is an exact Scalar coefficient times
a multiset of Factors; a Factor is a field symbol (or the epsilon spinor)
carrying a derivative-prefix chain and an index tuple.

Canonical form is reached by
  * normalizing and absorbing epsilon contractions (see-saw raising and
    lowering, delta substitution, chained epsilons),
  * eliminating frame-spinor contractions (t_{AX'} t_B{}^{X'} -> eps),
  * dropping terms with a contraction inside a totally symmetric slot group,
  * a bounded minimization over symmetric-slot permutations, commuting
    derivative orderings and tied factor orderings, with dummies renamed in
    traversal order,
  * merging like terms.
Two expressions are equal iff their canonical forms agree term for term.
"""

from __future__ import annotations

import itertools
from typing import Iterable, NamedTuple, Optional, Sequence

from .indices import Idx, IndexError_, free_signature
from .registry import REGISTRY, FieldSymbol
from .scalars import ONE, Scalar

# derivative prefix kinds; nabla order is significant, the dt/dS family
# commutes, boxU/boxP are the curvature derivations, nabla2 is the
# symmetrized second covariant derivative (pair-exchange symmetric)
PREFIX_KINDS = ("nabla", "dt", "dS", "boxU", "boxP", "nabla2")
COMMUTING = {"dt", "dS"}


class Prefix(NamedTuple):
    kind: str
    idxs: tuple[Idx, ...]

    def __str__(self) -> str:
        if not self.idxs:
            return self.kind
        return self.kind + _print_index_runs(self.idxs)


class Factor(NamedTuple):
    base: tuple                 # ("eps", primed) | ("field", name, nU, nP)
    prefixes: tuple[Prefix, ...]
    idxs: tuple[Idx, ...]

    @property
    def is_eps(self) -> bool:
        return self.base[0] == "eps"

    def symbol(self) -> FieldSymbol:
        _, name, nu, np_ = self.base
        return REGISTRY.lookup(name, nu, np_)

    def all_indices(self) -> list[Idx]:
        out = []
        for p in self.prefixes:
            out.extend(p.idxs)
        out.extend(self.idxs)
        return out

    def __str__(self) -> str:
        parts = [str(p) for p in self.prefixes]
        if self.is_eps:
            parts.append("eps" + _print_index_runs(self.idxs))
        else:
            name = self.base[1]
            parts.append(name + _print_index_runs(self.idxs) if self.idxs else name)
        return " ".join(parts)


def eps_factor(i1: Idx, i2: Idx) -> Factor:
    if i1.primed != i2.primed:
        raise IndexError_("epsilon needs two indices of equal chirality")
    return Factor(("eps", i1.primed), (), (i1, i2))


def field_factor(name: str, idxs: Sequence[Idx],
                 prefixes: Sequence[Prefix] = ()) -> Factor:
    nu = sum(1 for i in idxs if not i.primed)
    np_ = sum(1 for i in idxs if i.primed)
    sym = REGISTRY.lookup(name, nu, np_)
    # written order may interleave chirality; store in declared slot order
    unprimed = [i for i in idxs if not i.primed]
    primed = [i for i in idxs if i.primed]
    ordered = []
    for p in sym.slots:
        ordered.append(primed.pop(0) if p else unprimed.pop(0))
    return Factor(("field", name, nu, np_), tuple(prefixes), tuple(ordered))


class Term(NamedTuple):
    coeff: Scalar
    factors: tuple[Factor, ...]

    def all_indices(self) -> list[Idx]:
        out = []
        for f in self.factors:
            out.extend(f.all_indices())
        return out

    def __str__(self) -> str:
        return print_term(self)


class Expression:
    """Immutable sum of terms over abstract spinor indices."""

    __slots__ = ("terms", "_sig")

    def __init__(self, terms: Iterable[Term], validate: bool = True):
        ts = tuple(t for t in terms if not t.coeff.is_zero())
        object.__setattr__(self, "terms", ts)
        sig = None
        if validate:
            for t in ts:
                s = free_signature(t.all_indices())
                if sig is None:
                    sig = s
                elif s != sig:
                    raise IndexError_(
                        f"free-index signature mismatch between terms: {sig} vs {s}")
        object.__setattr__(self, "_sig", sig)

    def __setattr__(self, *a):
        raise AttributeError("Expression is immutable")

    # -- basic structure ----------------------------------------------
    @property
    def free_sig(self):
        if self._sig is not None or not self.terms:
            return self._sig or ()
        return free_signature(self.terms[0].all_indices())

    def is_zero(self) -> bool:
        return not self.terms

    def free_labels(self) -> set[tuple[str, bool]]:
        return {(lbl, primed) for (lbl, primed, _up) in self.free_sig}

    def all_labels(self) -> set[tuple[str, bool]]:
        out = set()
        for t in self.terms:
            for ix in t.all_indices():
                out.add((ix.label, ix.primed))
        return out

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other: "Expression") -> "Expression":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if set(self.free_sig) != set(other.free_sig):
            raise IndexError_(
                f"free-index signature mismatch: {self.free_sig} vs {other.free_sig}")
        return Expression(self.terms + other.terms, validate=False)

    def __sub__(self, other: "Expression") -> "Expression":
        return self + (-other)

    def __neg__(self) -> "Expression":
        return self.scaled(Scalar(-1))

    def scaled(self, s) -> "Expression":
        s = Scalar.of(s)
        if s.is_zero():
            return Expression(())
        return Expression(tuple(Term(t.coeff * s, t.factors) for t in self.terms),
                          validate=False)

    def __mul__(self, other: "Expression") -> "Expression":
        """Tensor product; matching free labels of opposite variance contract."""
        terms = []
        for ta in self.terms:
            for tb in other.terms:
                terms.append(_merge_product_term(ta, tb))
        return Expression(terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Expression):
            return NotImplemented
        return canonicalize(self).terms == canonicalize(other).terms

    def __hash__(self):
        return hash(canonicalize(self).terms)

    def __str__(self) -> str:
        return print_expression(self)

    def __repr__(self) -> str:
        return f"Expression({self})"

    # -- helpers ----------------------------------------------------------
    def rename_free(self, mapping: dict[str, str]) -> "Expression":
        """Rename free index labels; mapping keys and values are bare labels
        (chirality is preserved)."""
        free = {lbl for (lbl, _p) in self.free_labels()}
        bad = set(mapping) - free
        if bad:
            raise IndexError_(f"not free labels: {sorted(bad)}")

        def rn(ix: Idx) -> Idx:
            if (ix.label, ix.primed) in self.free_labels() and ix.label in mapping:
                return Idx(mapping[ix.label], ix.primed, ix.up)
            return ix

        terms = []
        for t in self.terms:
            terms.append(Term(t.coeff, tuple(
                Factor(f.base,
                       tuple(Prefix(p.kind, tuple(rn(i) for i in p.idxs))
                             for p in f.prefixes),
                       tuple(rn(i) for i in f.idxs))
                for f in t.factors)))
        return Expression(terms)


ZERO_EXPR = Expression(())


def scalar_expr(s) -> Expression:
    return Expression((Term(Scalar.of(s), ()),))


def _fresh_labels(avoid: set[tuple[str, bool]], prefix: str = "z"):
    """Yield labels never colliding with `avoid` (same text may be reused
    for opposite chirality; avoid is checked per chirality by caller)."""
    taken = {lbl for (lbl, _p) in avoid}
    n = 0
    while True:
        cand = f"{prefix}{n}"
        if cand not in taken:
            yield cand
        n += 1


def _rename_dummies_away(term: Term, avoid: set[tuple[str, bool]],
                         pool_prefix: str = "w") -> Term:
    from .indices import classify
    _free, dummies = classify(term.all_indices())
    clashes = {d for d in dummies if (d[0], d[1]) in avoid or
               (d[0], not d[1]) in avoid}
    if not clashes:
        return term
    gen = _fresh_labels(avoid | {(ix.label, ix.primed) for ix in term.all_indices()},
                        pool_prefix)
    mapping = {}
    for (lbl, primed) in sorted(clashes):
        mapping[(lbl, primed)] = next(gen)

    def rn(ix: Idx) -> Idx:
        new = mapping.get((ix.label, ix.primed))
        return Idx(new, ix.primed, ix.up) if new else ix

    return Term(term.coeff, tuple(
        Factor(f.base,
               tuple(Prefix(p.kind, tuple(rn(i) for i in p.idxs)) for p in f.prefixes),
               tuple(rn(i) for i in f.idxs))
        for f in term.factors))


def _merge_product_term(ta: Term, tb: Term) -> Term:
    labels_a = {(ix.label, ix.primed) for ix in ta.all_indices()}
    labels_b = {(ix.label, ix.primed) for ix in tb.all_indices()}
    tb2 = _rename_dummies_away(tb, labels_a, "w")
    ta2 = _rename_dummies_away(ta, labels_b | {(ix.label, ix.primed)
                                               for ix in tb2.all_indices()}, "v")
    return Term(ta2.coeff * tb2.coeff, ta2.factors + tb2.factors)


# ======================================================================
# canonicalization
# ======================================================================

_ENUM_CAP = 20000


def canonicalize(e: Expression, zero_filter: bool = True) -> Expression:
    """Structural canonical form; with zero_filter the exact component
    expansion additionally reduces expressions that vanish only through the
    dimension-2 trace identities to the literal zero Expression."""
    out: dict[tuple, Scalar] = {}
    order: list[tuple] = []
    for t in e.terms:
        ct = _canonical_term(t)
        if ct is None:
            continue
        key = ct.factors
        if key in out:
            out[key] = out[key] + ct.coeff
        else:
            out[key] = ct.coeff
            order.append(key)
    terms = [Term(out[k], k) for k in sorted(out, key=_term_sort_key)
             if not out[k].is_zero()]
    result = Expression(terms, validate=False)
    if zero_filter and result.terms:
        from .components import is_zero_exact
        if is_zero_exact(result):
            return Expression((), validate=False)
    return result


def equal(a: Expression, b: Expression) -> bool:
    """True iff canonicalize(a - b) is the zero Expression.  Raises on
    free-signature mismatch."""
    if a.is_zero() and b.is_zero():
        return True
    if a.is_zero():
        return canonicalize(b).is_zero()
    if b.is_zero():
        return canonicalize(a).is_zero()
    if set(a.free_sig) != set(b.free_sig):
        raise IndexError_(
            f"free-index signature mismatch: {a.free_sig} vs {b.free_sig}")
    return canonicalize(a - b).is_zero()


def _term_sort_key(factors: tuple[Factor, ...]):
    return tuple((f.base, tuple((p.kind, p.idxs) for p in f.prefixes), f.idxs)
                 for f in factors)


def _canonical_term(t: Term) -> Optional[Term]:
    from .indices import classify
    classify(t.all_indices())          # validates occurrence structure
    coeff, factors = _absorb(t.coeff, list(t.factors))
    if coeff.is_zero():
        return None
    if _is_syntactic_zero(factors):
        return None
    coeff, factors = _minimize(coeff, factors)
    if coeff.is_zero() or _is_syntactic_zero(factors):
        return None
    return Term(coeff, tuple(factors))


# -- epsilon and frame elimination -------------------------------------

def _absorb(coeff: Scalar, factors: list[Factor]) -> tuple[Scalar, list[Factor]]:
    changed = True
    while changed:
        changed = False
        # normalize epsilon index order
        for i, f in enumerate(factors):
            if not f.is_eps:
                continue
            i1, i2 = f.idxs
            if i1.up == i2.up:
                if i1.label > i2.label:
                    factors[i] = Factor(f.base, (), (i2, i1))
                    coeff = -coeff
                    changed = True
                elif i1.label == i2.label:
                    raise IndexError_("epsilon with repeated equal-variance label")
            elif i1.up and not i2.up:
                # eps^X{}_Y = -eps_Y{}^X
                factors[i] = Factor(f.base, (), (i2, i1))
                coeff = -coeff
                changed = True
        if changed:
            continue
        # mixed epsilon trace: eps_X{}^X = 2
        for i, f in enumerate(factors):
            if f.is_eps and not f.idxs[0].up and f.idxs[1].up \
                    and f.idxs[0].label == f.idxs[1].label:
                del factors[i]
                coeff = coeff * 2
                changed = True
                break
        if changed:
            continue
        # epsilon contraction with any partner index
        hit = _find_eps_contraction(factors)
        if hit is not None:
            coeff = _apply_eps(coeff, factors, *hit)
            changed = True
            continue
        # frame-frame contraction
        hit = _find_frame_contraction(factors)
        if hit is not None:
            coeff = _apply_frame(coeff, factors, *hit)
            changed = True
    return coeff, factors


def _iter_indices(factors):
    """Yield (fi, where, pos, idx); where is -1 for slots else prefix number."""
    for fi, f in enumerate(factors):
        for pi, p in enumerate(f.prefixes):
            for k, ix in enumerate(p.idxs):
                yield fi, pi, k, ix
        for k, ix in enumerate(f.idxs):
            yield fi, -1, k, ix


def _find_eps_contraction(factors):
    for fi, f in enumerate(factors):
        if not f.is_eps:
            continue
        for side, e_ix in enumerate(f.idxs):
            for gj, where, pos, ix in _iter_indices(factors):
                if gj == fi and where == -1 and pos == side:
                    continue
                if ix.label == e_ix.label and ix.primed == e_ix.primed \
                        and ix.up != e_ix.up:
                    return (fi, side, gj, where, pos)
    return None


def _replace_index(factors, fj, where, pos, new: Idx):
    f = factors[fj]
    if where == -1:
        idxs = list(f.idxs)
        idxs[pos] = new
        factors[fj] = Factor(f.base, f.prefixes, tuple(idxs))
    else:
        pref = list(f.prefixes)
        pidx = list(pref[where].idxs)
        pidx[pos] = new
        pref[where] = Prefix(pref[where].kind, tuple(pidx))
        factors[fj] = Factor(f.base, tuple(pref), f.idxs)


def _apply_eps(coeff, factors, fi, side, gj, where, pos):
    f = factors[fi]
    i1, i2 = f.idxs
    partner = (factors[gj].idxs[pos] if where == -1
               else factors[gj].prefixes[where].idxs[pos])
    if not i1.up and i2.up:
        # mixed eps_X{}^Y is a delta: substitute with sign +1
        other = i2 if side == 0 else i1
        new = Idx(other.label, partner.primed, partner.up)
        sign = 1
    elif not i1.up and not i2.up:
        # eps_{XY}: xi^X eps_{XY} -> +xi_Y ; xi^Y eps_{XY} -> -xi_X
        if side == 0:
            new, sign = Idx(i2.label, partner.primed, False), 1
        else:
            new, sign = Idx(i1.label, partner.primed, False), -1
    else:
        # eps^{XY}: xi_X -> -xi^Y ; xi_Y -> +xi^X
        if side == 0:
            new, sign = Idx(i2.label, partner.primed, True), -1
        else:
            new, sign = Idx(i1.label, partner.primed, True), 1
    _replace_index(factors, gj, where, pos, new)
    del factors[fi]
    return coeff * sign if sign == 1 else -coeff


FRAME_BASE = ("field", "t", 1, 1)


def _find_frame_contraction(factors):
    frames = [i for i, f in enumerate(factors) if f.base == FRAME_BASE]
    for a, b in itertools.combinations(frames, 2):
        fa, fb = factors[a], factors[b]
        for sa, ia in enumerate(fa.idxs):
            for sb, ib in enumerate(fb.idxs):
                if ia.label == ib.label and ia.primed == ib.primed \
                        and ia.up != ib.up:
                    return (a, sa, b, sb)
    return None


def _apply_frame(coeff, factors, a, sa, b, sb):
    """t t contraction -> epsilon on the surviving pair.

    With t_{AA'} t^{BA'} = eps_A{}^B (flat, t_a t^a = 2) the survivors form an
    epsilon whose first slot comes from the frame whose contracted index is
    down."""
    fa, fb = factors[a], factors[b]
    ia, ib = fa.idxs[sa], fb.idxs[sb]
    rest_a = fa.idxs[1 - sa]
    rest_b = fb.idxs[1 - sb]
    first, second = (rest_a, rest_b) if not ia.up else (rest_b, rest_a)
    new = eps_factor(first, second)
    for j in sorted((a, b), reverse=True):
        del factors[j]
    factors.append(new)
    return coeff


# -- zero detection -----------------------------------------------------

def _sym_groups(f: Factor) -> list[list[tuple[int, int]]]:
    """Symmetric groups of index positions: list of [(where, pos)...]."""
    groups = []
    if not f.is_eps:
        sym = f.symbol()
        for g in sym.sym_groups:
            groups.append([(-1, s) for s in g])
    for pi, p in enumerate(f.prefixes):
        if p.kind in ("dS", "boxU", "boxP"):
            groups.append([(pi, 0), (pi, 1)])
    return groups


def _is_syntactic_zero(factors) -> bool:
    for f in factors:
        for group in _sym_groups(f):
            seen: dict[tuple[str, bool], bool] = {}
            for where, pos in group:
                ix = f.prefixes[where].idxs[pos] if where >= 0 else f.idxs[pos]
                k = (ix.label, ix.primed)
                if k in seen and seen[k] != ix.up:
                    return True
                seen[k] = ix.up
    return False


# -- canonical labeling ---------------------------------------------------

def _skeleton_key(f: Factor, free: set[tuple[str, bool]]):
    def mask(ix: Idx):
        if (ix.label, ix.primed) in free:
            return (ix.primed, ix.up, "f", ix.label)
        return (ix.primed, ix.up, "d", "")
    return (f.base,
            tuple((p.kind, tuple(mask(i) for i in p.idxs)) for p in f.prefixes),
            tuple(mask(i) for i in f.idxs))


def _arrangements(f: Factor):
    """All index arrangements of one factor allowed by its symmetries:
    slot-group permutations, commuting-prefix orderings, symmetric prefix
    pair swaps, nabla2 pair exchange."""
    # orderings of the commuting dt/dS prefix block (keep relative order of
    # non-commuting prefixes; dt/dS prefixes may be permuted among their
    # own positions)
    comm_pos = [i for i, p in enumerate(f.prefixes) if p.kind in COMMUTING]
    comm_perms = [list(pp) for pp in itertools.permutations(comm_pos)] or [[]]
    prefix_orderings = []
    for pp in comm_perms:
        order = list(range(len(f.prefixes)))
        for slot, src in zip(comm_pos, pp):
            order[slot] = src
        prefix_orderings.append(tuple(order))
    prefix_orderings = sorted(set(prefix_orderings))

    # per-prefix internal swaps
    pref_swap_choices = []
    for p in f.prefixes:
        if p.kind in ("dS", "boxU", "boxP"):
            pref_swap_choices.append([(0, 1), (1, 0)])
        elif p.kind == "nabla2":
            pref_swap_choices.append([(0, 1, 2, 3), (2, 3, 0, 1)])
        else:
            pref_swap_choices.append([tuple(range(len(p.idxs)))])

    # slot-group permutations
    groups = [] if f.is_eps else list(f.symbol().sym_groups)
    group_perm_choices = [list(itertools.permutations(g)) for g in groups]

    for p_order in prefix_orderings:
        for swaps in itertools.product(*pref_swap_choices):
            prefixes = []
            for i in p_order:
                p = f.prefixes[i]
                sw = swaps[i]
                prefixes.append(Prefix(p.kind, tuple(p.idxs[j] for j in sw)))
            for gperm in itertools.product(*group_perm_choices):
                idxs = list(f.idxs)
                for g, perm in zip(groups, gperm):
                    vals = [f.idxs[s] for s in perm]
                    for s, v in zip(g, vals):
                        idxs[s] = v
                yield Factor(f.base, tuple(prefixes), tuple(idxs))


def _count_arrangements(f: Factor) -> int:
    n = 1
    comm = sum(1 for p in f.prefixes if p.kind in COMMUTING)
    for k in range(2, comm + 1):
        n *= k
    for p in f.prefixes:
        if p.kind in ("dS", "boxU", "boxP", "nabla2"):
            n *= 2
    if not f.is_eps:
        for g in f.symbol().sym_groups:
            for k in range(2, len(g) + 1):
                n *= k
    return n


def _relabel_traversal(factors: list[Factor], free: set[tuple[str, bool]]):
    """Rename dummy labels in traversal order and orient every dummy pair
    first-occurrence-down (each flip contributes a factor -1, the see-saw).
    Returns (sign, relabeled factors)."""
    pool = _fresh_labels(free, "z")
    mapping: dict[tuple[str, bool], str] = {}
    flip: dict[tuple[str, bool], bool] = {}
    sign = 1

    def rn(ix: Idx) -> Idx:
        nonlocal sign
        k = (ix.label, ix.primed)
        if k in free:
            return ix
        if k not in mapping:
            mapping[k] = next(pool)
            flip[k] = ix.up          # first occurrence up -> flip the pair
            if ix.up:
                sign = -sign
        new_up = (not ix.up) if flip[k] else ix.up
        return Idx(mapping[k], ix.primed, new_up)

    out = []
    for f in factors:
        out.append(Factor(
            f.base,
            tuple(Prefix(p.kind, tuple(rn(i) for i in p.idxs)) for p in f.prefixes),
            tuple(rn(i) for i in f.idxs)))
    return sign, out


def _minimize(coeff: Scalar, factors: list[Factor]) -> tuple[Scalar, list[Factor]]:
    free = {(l, p) for (l, p, _u) in free_signature(
        [ix for f in factors for ix in f.all_indices()])}

    # sort factors by skeleton; identical skeletons may be permuted
    keyed = sorted(range(len(factors)), key=lambda i: _skeleton_key(factors[i], free))
    factors = [factors[i] for i in keyed]
    skels = [_skeleton_key(f, free) for f in factors]
    tie_groups = []
    i = 0
    while i < len(factors):
        j = i
        while j + 1 < len(factors) and skels[j + 1] == skels[i]:
            j += 1
        if j > i:
            tie_groups.append(list(range(i, j + 1)))
        i = j + 1

    total = 1
    for f in factors:
        total *= _count_arrangements(f)
    for g in tie_groups:
        for k in range(2, len(g) + 1):
            total *= k

    if total > _ENUM_CAP:
        # fall back: fixed-point iteration (sufficient for huge regular terms)
        sign, out = _relabel_traversal(_iter_fix(factors, free), free)
        return (coeff if sign > 0 else -coeff), out

    tie_perms = [list(itertools.permutations(g)) for g in tie_groups]
    best = None
    killed = False
    for tp in itertools.product(*tie_perms):
        order = list(range(len(factors)))
        for g, perm in zip(tie_groups, tp):
            for slot, src in zip(g, perm):
                order[slot] = src
        base = [factors[i] for i in order]
        for combo in itertools.product(*[list(_arrangements(f)) for f in base]):
            sign, cand = _relabel_traversal(list(combo), free)
            key = _term_sort_key(tuple(cand))
            if best is None or key < best[0]:
                best = (key, cand, sign)
            elif key == best[0] and sign != best[2]:
                killed = True      # same arrangement with opposite sign: zero
    if killed:
        return Scalar(0), best[1]
    sign, cand = best[2], best[1]
    return (coeff if sign > 0 else -coeff), cand


def _iter_fix(factors, free, rounds: int = 6):
    cur = list(factors)
    for _ in range(rounds):
        cur = _relabel_traversal(cur, free)
        nxt = []
        for f in cur:
            pick = min(_arrangements(f),
                       key=lambda g: _skeleton_key(g, free) + _term_sort_key((g,)))
            nxt.append(pick)
        nxt.sort(key=lambda f: _term_sort_key((f,)))
        if nxt == cur:
            break
        cur = nxt
    return cur


# ======================================================================
# printing
# ======================================================================

def _print_index_runs(idxs: Sequence[Idx]) -> str:
    out = []
    run_up = None
    buf: list[str] = []

    def flush():
        nonlocal buf
        if buf:
            mark = "^" if run_up else "_"
            lead = "{}" if out else ""
            out.append(f"{lead}{mark}{{{' '.join(buf)}}}")
            buf = []

    for ix in idxs:
        if run_up is None or ix.up != run_up:
            flush()
            run_up = ix.up
        buf.append(str(ix))
    flush()
    return "".join(out)


def _print_coeff(s: Scalar) -> tuple[str, bool]:
    """Return (text, negated) with a leading minus factored out when the
    scalar is a single signed piece."""
    pieces = sum(1 for x in (s.a, s.b, s.c, s.d) if x)
    if pieces == 1:
        if s.a:
            neg = s.a < 0
            v = abs(s.a)
            return ("" if v == 1 else str(v), neg)
        if s.b:
            neg = s.b < 0
            v = abs(s.b)
            return (("i" if v == 1 else f"{v} i"), neg)
        if s.c:
            neg = s.c < 0
            v = abs(s.c)
            return (("rt2" if v == 1 else f"{v} rt2"), neg)
        neg = s.d < 0
        v = abs(s.d)
        return (("i rt2" if v == 1 else f"{v} i rt2"), neg)
    return (f"({s})", False)


def print_term(t: Term) -> str:
    ctext, neg = _print_coeff(t.coeff)
    body = " ".join(str(f) for f in t.factors)
    if not body:
        body = "1" if not ctext else ""
    joined = " ".join(x for x in (ctext, body) if x)
    return ("-" + joined) if neg else joined


def print_expression(e: Expression) -> str:
    if not e.terms:
        return "0"
    parts = []
    for k, t in enumerate(e.terms):
        txt = print_term(t)
        if k == 0:
            parts.append(txt)
        elif txt.startswith("-"):
            parts.append("- " + txt[1:])
        else:
            parts.append("+ " + txt)
    return " ".join(parts)
