"""Text grammar for spinor expressions.

Line-oriented ASCII, e.g.

    nabla_{B' (A} tau_{B) A'}{}^{B'} - nabla_{A' (A} tau_{B)} - m sigma_{A' A B}

* identifiers name registered fields; ``eps`` is the epsilon spinor
* indices sit in ``_{...}`` (down) / ``^{...}`` (up) blocks; a trailing
  apostrophe marks a primed index; ``{}`` between blocks is ignored
* ``( ... )`` inside index blocks opens/closes a symmetrization group,
  which may span factors of the same term; ``|A|`` exempts an index
* operator prefixes: ``nabla_{A A'}``, ``dt``, ``dS_{A B}``,
  ``boxU_{A B}``, ``boxP_{A' B'}``, ``nabla2_{A A' B B'}``
* coefficients: integers, fractions ``3/2``, ``i``, ``rt2`` (with optional
  ``^k``), juxtaposed multiplicatively; parenthesized sums of such pieces
  are accepted at the head of a term.

print() of any expression reparses to an equal Expression.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .expr import (Expression, Factor, Prefix, Term, eps_factor, field_factor)
from .indices import Idx, IndexError_
from .registry import REGISTRY
from .scalars import Scalar

PREFIX_TOKENS = {"nabla": (1, 1), "dt": (0, 0), "dS": (2, 0),
                 "boxU": (2, 0), "boxP": (0, 2), "nabla2": (2, 2)}


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int, text: str):
        super().__init__(f"{msg} at position {pos}: ...{text[max(0, pos - 12):pos + 12]!r}...")
        self.pos = pos


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z][A-Za-z0-9]*'?)
  | (?P<sym>[_^{}()/+\-|*])
""", re.VERBOSE)


def _tokenize(text: str):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError("unexpected character", pos, text)
        if m.lastgroup != "ws":
            toks.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _P:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.k = 0

    def peek(self):
        return self.toks[self.k]

    def next(self):
        t = self.toks[self.k]
        self.k += 1
        return t

    def err(self, msg):
        raise ParseError(msg, self.peek()[2], self.text)

    # -- coefficients ------------------------------------------------------
    def _coeff_atom(self):
        """One multiplicative coefficient piece, or None."""
        kind, val, _ = self.peek()
        if kind == "num":
            self.next()
            num = Fraction(int(val))
            if self.peek()[:2] == ("sym", "/"):
                self.next()
                k2, v2, _ = self.next()
                if k2 != "num":
                    self.err("expected denominator")
                num /= int(v2)
            return Scalar(num)
        if kind == "ident" and val == "i":
            self.next()
            return Scalar.i()
        if kind == "ident" and val == "rt2":
            self.next()
            if self.peek()[:2] == ("sym", "^"):
                self.next()
                neg = False
                if self.peek()[:2] == ("sym", "-"):
                    self.next()
                    neg = True
                k2, v2, _ = self.next()
                if k2 != "num":
                    self.err("expected rt2 exponent")
                p = -int(v2) if neg else int(v2)
                out = Scalar(1)
                step = Scalar.rt2() if p > 0 else Scalar.rt2().inv()
                for _ in range(abs(p)):
                    out = out * step
                return out
            return Scalar.rt2()
        return None

    def _coeff(self):
        """Multiplicative run of coefficient pieces, possibly one
        parenthesized sum.  Returns (scalar, sawAny)."""
        out = Scalar(1)
        saw = False
        while True:
            if self.peek()[:2] == ("sym", "("):
                save = self.k
                try:
                    s = self._paren_coeff()
                except ParseError:
                    self.k = save
                    break
                out = out * s
                saw = True
                continue
            atom = self._coeff_atom()
            if atom is None:
                break
            out = out * atom
            saw = True
            if self.peek()[:2] == ("sym", "*"):
                self.next()
        return out, saw

    def _paren_coeff(self):
        assert self.next()[:2] == ("sym", "(")
        total = Scalar(0)
        sign = 1
        if self.peek()[:2] == ("sym", "-"):
            self.next()
            sign = -1
        while True:
            piece = Scalar(1)
            got = False
            while True:
                atom = self._coeff_atom()
                if atom is None:
                    break
                piece = piece * atom
                got = True
            if not got:
                self.err("expected coefficient piece")
            total = total + (piece if sign > 0 else -piece)
            kind, val, _ = self.next()
            if (kind, val) == ("sym", ")"):
                return total
            if (kind, val) == ("sym", "+"):
                sign = 1
            elif (kind, val) == ("sym", "-"):
                sign = -1
            else:
                self.err("expected + - or ) in coefficient")

    # -- index blocks --------------------------------------------------------
    def _index_blocks(self, group_state):
        """Parse a run of _{...} ^{...} blocks; returns list of
        (Idx, group_id or None)."""
        out = []
        while True:
            kind, val, _ = self.peek()
            if (kind, val) == ("sym", "{"):
                # '{}' filler
                save = self.k
                self.next()
                if self.peek()[:2] == ("sym", "}"):
                    self.next()
                    continue
                self.k = save
                break
            if (kind, val) not in (("sym", "_"), ("sym", "^")):
                break
            self.next()
            up = val == "^"
            if self.peek()[:2] != ("sym", "{"):
                # single index without braces: _A
                out.append(self._one_index(up, group_state))
                continue
            self.next()
            while self.peek()[:2] != ("sym", "}"):
                k2, v2, _ = self.peek()
                if (k2, v2) == ("sym", "("):
                    self.next()
                    if group_state["open"] is not None:
                        self.err("nested symmetrization")
                    group_state["open"] = group_state["next_id"]
                    group_state["sig"] = None
                    group_state["next_id"] += 1
                    continue
                if (k2, v2) == ("sym", ")"):
                    self.next()
                    if group_state["open"] is None:
                        self.err("unmatched ) in indices")
                    group_state["open"] = None
                    continue
                if (k2, v2) == ("sym", "|"):
                    self.next()
                    group_state["bar"] = not group_state.get("bar", False)
                    continue
                out.append(self._one_index(up, group_state))
            self.next()  # closing }
        return out

    def _one_index(self, up: bool, group_state):
        kind, val, _ = self.next()
        if kind != "ident":
            self.err("expected index label")
        primed = val.endswith("'")
        label = val[:-1] if primed else val
        gid = group_state["open"]
        if gid is not None:
            if group_state.get("bar"):
                gid = None
            elif group_state["sig"] is None:
                # the first index after '(' fixes which variance/chirality
                # the round bracket binds; others pass through untouched
                group_state["sig"] = (up, primed)
            elif group_state["sig"] != (up, primed):
                gid = None
        return (Idx(label, primed, up), gid)

    # -- factors ---------------------------------------------------------------
    def _factor(self, group_state):
        prefixes = []
        while True:
            kind, val, pos = self.peek()
            if kind != "ident":
                self.err("expected factor")
            if val in PREFIX_TOKENS:
                self.next()
                idx = self._index_blocks(group_state)
                nu = sum(1 for (i, _g) in idx if not i.primed)
                np_ = sum(1 for (i, _g) in idx if i.primed)
                want = PREFIX_TOKENS[val]
                if (nu, np_) != want:
                    raise ParseError(
                        f"operator {val} needs {want[0]} unprimed / {want[1]} "
                        f"primed indices, got {nu}/{np_}", pos, self.text)
                ordered = _order_prefix_idx(val, idx)
                prefixes.append((Prefix(val, tuple(i for i, _g in ordered)),
                                 [g for _i, g in ordered]))
                continue
            break
        kind, val, pos = self.next()
        idx = self._index_blocks(group_state)
        if val == "eps":
            if len(idx) != 2 or idx[0][0].primed != idx[1][0].primed:
                raise ParseError("eps needs two indices of equal chirality",
                                 pos, self.text)
            fac = eps_factor(idx[0][0], idx[1][0])
            if prefixes:
                raise ParseError("eps cannot carry derivatives", pos, self.text)
            return fac, [g for _i, g in idx], []
        nu = sum(1 for (i, _g) in idx if not i.primed)
        np_ = sum(1 for (i, _g) in idx if i.primed)
        try:
            REGISTRY.lookup(val, nu, np_)
        except KeyError as e:
            raise ParseError(str(e), pos, self.text) from None
        fac = field_factor(val, [i for i, _g in idx],
                           [p for p, _g in prefixes])
        slot_groups = _slot_groups_for(val, [i for i, _g in idx],
                                       [g for _i, g in idx])
        prefix_groups = [g for _p, gs in prefixes for g in gs]
        return fac, slot_groups, prefix_groups

    # -- terms / expression ------------------------------------------------------
    def _term(self, sign: int):
        group_state = {"open": None, "next_id": 0, "bar": False}
        coeff, _saw = self._coeff()
        if sign < 0:
            coeff = -coeff
        factors = []
        groups = []   # parallel annotation: per factor (slot gids, prefix gids)
        while True:
            kind, val, _ = self.peek()
            if kind == "ident":
                fac, slot_g, pref_g = self._factor(group_state)
                factors.append(fac)
                groups.append((slot_g, pref_g))
                continue
            break
        if group_state["open"] is not None:
            self.err("unclosed symmetrization group")
        if not factors and coeff == Scalar(1) and not _saw:
            self.err("empty term")
        return _expand_symmetrizations(Term(coeff, tuple(factors)), groups)

    def expression(self) -> Expression:
        terms = []
        sign = 1
        if self.peek()[:2] == ("sym", "-"):
            self.next()
            sign = -1
        elif self.peek()[:2] == ("sym", "+"):
            self.next()
        while True:
            terms.extend(self._term(sign))
            kind, val, _ = self.peek()
            if kind == "end":
                break
            if (kind, val) == ("sym", "+"):
                self.next()
                sign = 1
            elif (kind, val) == ("sym", "-"):
                self.next()
                sign = -1
            else:
                self.err("expected + or - between terms")
        return Expression(terms)


def _order_prefix_idx(kind: str, pairs):
    """Reorder (Idx, gid) pairs into internal prefix storage order."""
    if kind == "nabla":
        u = [x for x in pairs if not x[0].primed]
        p = [x for x in pairs if x[0].primed]
        return [u[0], p[0]]
    if kind == "nabla2":
        u = [x for x in pairs if not x[0].primed]
        p = [x for x in pairs if x[0].primed]
        return [u[0], p[0], u[1], p[1]]
    return list(pairs)


def _slot_groups_for(name, written_idxs, written_gids):
    """Map written-position group ids onto declared slot order."""
    nu = sum(1 for i in written_idxs if not i.primed)
    np_ = sum(1 for i in written_idxs if i.primed)
    sym = REGISTRY.lookup(name, nu, np_)
    unprimed = [(i, g) for i, g in zip(written_idxs, written_gids) if not i.primed]
    primed = [(i, g) for i, g in zip(written_idxs, written_gids) if i.primed]
    out = []
    for p in sym.slots:
        out.append((primed if p else unprimed).pop(0)[1])
    return out


def _expand_symmetrizations(term: Term, groups) -> list[Term]:
    """Expand all marked symmetrization groups into explicit permutation sums
    with 1/n! coefficients."""
    import itertools as it
    from math import factorial

    # collect positions per group id: (factor#, where, pos)
    # where == -1 for slots, else prefix ordinal
    positions: dict[int, list[tuple[int, int, int]]] = {}
    for fn, (slot_g, pref_g) in enumerate(groups):
        f = term.factors[fn]
        pg = list(pref_g)
        for pi, p in enumerate(f.prefixes):
            for k in range(len(p.idxs)):
                gid = pg.pop(0)
                if gid is not None:
                    positions.setdefault(gid, []).append((fn, pi, k))
        for k, gid in enumerate(slot_g):
            if gid is not None:
                positions.setdefault(gid, []).append((fn, -1, k))
    if not positions:
        return [term]

    def get(fs, fn, where, pos):
        f = fs[fn]
        return f.idxs[pos] if where == -1 else f.prefixes[where].idxs[pos]

    def put(fs, fn, where, pos, ix):
        f = fs[fn]
        if where == -1:
            idxs = list(f.idxs)
            idxs[pos] = ix
            fs[fn] = Factor(f.base, f.prefixes, tuple(idxs))
        else:
            pref = list(f.prefixes)
            pidx = list(pref[where].idxs)
            pidx[pos] = ix
            pref[where] = Prefix(pref[where].kind, tuple(pidx))
            fs[fn] = Factor(f.base, tuple(pref), f.idxs)

    # validate chirality within each group
    for gid, pos_list in positions.items():
        chir = {get(list(term.factors), *p).primed for p in pos_list}
        if len(chir) != 1:
            raise IndexError_("symmetrization group mixes chirality")

    terms = [term]
    for gid in sorted(positions):
        pos_list = positions[gid]
        n = len(pos_list)
        new_terms = []
        for t in terms:
            labels = [get(list(t.factors), *p) for p in pos_list]
            for perm in it.permutations(range(n)):
                fs = list(t.factors)
                for dst, src in enumerate(perm):
                    old = get(fs, *pos_list[dst])
                    # permute labels only; variance stays with the slot
                    put(fs, *pos_list[dst],
                        Idx(labels[src].label, labels[src].primed, old.up))
                new_terms.append(Term(t.coeff * Fraction(1, factorial(n)),
                                      tuple(fs)))
        terms = new_terms
    return terms


def parse(text: str) -> Expression:
    """Parse the documented grammar into an Expression (not canonicalized)."""
    return _P(text).expression()
