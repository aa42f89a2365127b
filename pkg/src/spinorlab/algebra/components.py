"""Exact symbolic component expansion.

Spinor indices take only the values 0 and 1, so an abstract-index
expression is faithfully represented by its component polynomial: for each
assignment of the free indices, a multilinear polynomial over formal field
components with exact Scalar coefficients.  Declared slot symmetries are
imposed by sorting component tuples inside symmetric groups, pairs of
commuting derivatives likewise.

This expansion is the decision procedure behind zero recognition: it sees
the dimension-dependent trace identities (an antisymmetrized index pair
equals epsilon times a trace) that no finite structural rewriting catches.
Everything is exact rational arithmetic; no floating point.
"""

from __future__ import annotations

import itertools

from .expr import Expression, Factor, Term
from .indices import classify
from .registry import REGISTRY
from .scalars import Scalar

# numeric epsilon components, exact: eps_{01} = eps^{01} = +1
_EPS = ((0, 1), (-1, 0))
_DELTA = ((1, 0), (0, 1))


def _eps_value(f: Factor, v1: int, v2: int) -> int:
    i1, i2 = f.idxs
    if i1.up == i2.up:
        return _EPS[v1][v2]
    if not i1.up and i2.up:          # eps_X{}^Y = delta
        return _DELTA[v1][v2]
    return -_DELTA[v1][v2]           # eps^X{}_Y = -delta


def _frame_value(f: Factor, v1: int, v2: int) -> int:
    """Components of the frame spinor and its raised/lowered variants.
    All-down and all-up forms are the identity; the mixed forms are
    epsilon-valued: t^{A}{}_{B'} = eps_{AB'} (numerically)."""
    i1, i2 = f.idxs
    if i1.up == i2.up:
        return _DELTA[v1][v2]
    if i1.up and not i2.up:          # t^{A}{}_{A'} = E[A, A']
        return _EPS[v1][v2]
    return _EPS[v2][v1]              # t_{A}{}^{A'} = E[A', A]


def _field_monokey(f: Factor, vals: list[int]) -> tuple:
    """Canonical component key for a field factor with all index values
    given in storage order (prefix indices first, then slots).  Returns
    (key, sign_scalar) — raising is resolved by the caller, so `vals` are
    the values of the indices exactly as written; here we only need to
    canonicalize symmetric positions."""
    name, nu, np_ = f.base[1], f.base[2], f.base[3]
    sym = REGISTRY.lookup(name, nu, np_)
    # split values: prefixes then slots
    k = 0
    pvals = []
    for p in f.prefixes:
        pvals.append(vals[k:k + len(p.idxs)])
        k += len(p.idxs)
    svals = list(vals[k:])
    # canonicalize slot symmetry groups by sorting
    for g in sym.sym_groups:
        sub = sorted(svals[i] for i in g)
        for i, v in zip(sorted(g), sub):
            svals[i] = v
    # canonicalize prefixes: boxes and dS pairs sort internally; the dt/dS
    # block sorts as a whole; nabla order is kept; nabla2 sorts its pairs
    pkeys = []
    comm_block = []
    n_dt = 0
    for p, pv in zip(f.prefixes, pvals):
        if p.kind == "dt":
            n_dt += 1
        elif p.kind == "dS":
            comm_block.append(tuple(sorted(pv)))
        elif p.kind in ("boxU", "boxP"):
            pkeys.append((p.kind, tuple(sorted(pv))))
        elif p.kind == "nabla2":
            pair1, pair2 = tuple(pv[0:2]), tuple(pv[2:4])
            pkeys.append(("nabla2",) + tuple(sorted((pair1, pair2))))
        else:
            pkeys.append((p.kind, tuple(pv)))
    if n_dt or comm_block:
        pkeys.insert(0, ("d", n_dt, tuple(sorted(comm_block))))
    return ("f", name, nu, np_, tuple(pkeys), tuple(svals))


class ComponentPoly:
    """Map (free-assignment, monomial) -> Scalar; zero iff empty."""

    def __init__(self):
        self.data: dict[tuple, Scalar] = {}

    def add(self, key, val: Scalar):
        cur = self.data.get(key)
        new = val if cur is None else cur + val
        if new.is_zero():
            self.data.pop(key, None)
        else:
            self.data[key] = new

    def is_zero(self) -> bool:
        return not self.data


def expand_components(e: Expression) -> ComponentPoly:
    poly = ComponentPoly()
    frees = sorted(e.free_sig)
    free_order = {(lbl, primed): n for n, (lbl, primed, _u) in enumerate(frees)}
    for t in e.terms:
        _free, dummies = classify(t.all_indices())
        dlist = sorted(dummies)
        dpos = {d: n for n, d in enumerate(dlist)}
        nf, nd = len(frees), len(dlist)
        for fvals in itertools.product((0, 1), repeat=nf):
            for dvals in itertools.product((0, 1), repeat=nd):
                def val_of(ix):
                    k = (ix.label, ix.primed)
                    if k in free_order:
                        return fvals[free_order[k]]
                    return dvals[dpos[k]]

                coeff = t.coeff
                mono = []
                dead = False
                for f in t.factors:
                    if f.is_eps:
                        ev = _eps_value(f, val_of(f.idxs[0]), val_of(f.idxs[1]))
                        if ev == 0:
                            dead = True
                            break
                        coeff = coeff * ev
                        continue
                    if f.base == ("field", "t", 1, 1) and not f.prefixes:
                        fv = _frame_value(f, val_of(f.idxs[0]), val_of(f.idxs[1]))
                        if fv == 0:
                            dead = True
                            break
                        coeff = coeff * fv
                        continue
                    sym = f.symbol()
                    if sym.constant and f.prefixes:
                        dead = True      # covariantly constant
                        break
                    # an up index with value v reads the stored component
                    # 1 - v with sign +1 for v=0, -1 for v=1 (eps raising)
                    vals = []
                    sgn = 1
                    for ix in f.all_indices():
                        v = val_of(ix)
                        if ix.up:
                            sgn = sgn if v == 0 else -sgn
                            vals.append(1 - v)
                        else:
                            vals.append(v)
                    if sgn != 1:
                        coeff = coeff * sgn
                    mono.append(_field_monokey(f, vals))
                if dead:
                    continue
                poly.add((fvals, tuple(sorted(mono))), coeff)
    return poly


def is_zero_exact(e: Expression) -> bool:
    """Exact decision: does the expression vanish identically (respecting
    declared symmetries and the two-dimensionality of spinor space)?"""
    if not e.terms:
        return True
    return expand_components(e).is_zero()
