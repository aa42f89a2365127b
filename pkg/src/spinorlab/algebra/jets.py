"""Component-evaluation oracle.

Evaluates an Expression numerically on explicit jet data: every
(field, derivative chain) that occurs gets a concrete complex component
array, with declared slot symmetries enforced.  Second covariant
derivatives are stored as a symmetrized jet plus the commutator part
reconstructed from the curvature components, so evaluation is consistent
with derivative reordering.  Epsilon and frame factors evaluate to their
fixed numeric components (eps_{01} = +1, identity frame, t_a t^a = 2).

This code path is deliberately independent of the canonicalizer: it is the
brute-force cross-check used throughout the test suite.
"""

from __future__ import annotations

import string

import numpy as np

from .expr import Expression, Factor
from .indices import classify
from .registry import REGISTRY

E = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)     # eps_{AB} = eps^{AB}
EUP = E                                                     # raising matrix
DELTA = np.eye(2, dtype=complex)

# slot-action signs that are not exposed in the configurable rule table
# (nothing in the verified identities pins them; they follow the standard
# curvature-derivation conventions)
WEYL_SIGN = -1.0


class JetError(KeyError):
    """Missing jet entry or unsupported derivative stack."""


def _sym_axes(arr: np.ndarray, groups) -> np.ndarray:
    """Symmetrize arr over each axis group (trailing batch axis untouched)."""
    import itertools
    for g in groups:
        if len(g) < 2:
            continue
        acc = np.zeros_like(arr)
        n = 0
        for perm in itertools.permutations(g):
            acc += np.moveaxis(arr, g, perm)
            n += 1
        arr = acc / n
    return arr


def _sym_pairs(arr: np.ndarray, pairs) -> np.ndarray:
    """Symmetrize over exchange of axis blocks (each block a tuple of axes)."""
    import itertools
    if len(pairs) < 2:
        return arr
    acc = np.zeros_like(arr)
    n = 0
    flat = [ax for blk in pairs for ax in blk]
    for perm in itertools.permutations(pairs):
        dest = [ax for blk in perm for ax in blk]
        acc += np.moveaxis(arr, flat, dest)
        n += 1
    return acc / n


class JetAssignment:
    """Concrete jets for every (field, derivative chain) in play.

    `table` supplies the box-action signs so that reconstructed commutator
    parts follow the same conventions as the rewriting engine.  With
    flat=True all curvature components vanish.  Entries are produced lazily
    from the RNG and cached, so one assignment gives consistent values to
    every expression evaluated against it.
    """

    def __init__(self, table=None, seed: int = 0, batch: int = 1,
                 flat: bool = False, real_constants: bool = False):
        from ..calculus.rules import RuleTable
        self.table = table if table is not None else RuleTable.default()
        self.rng = np.random.default_rng(seed)
        self.batch = batch
        self.flat = flat
        self.real_constants = real_constants
        self._cache: dict[tuple, np.ndarray] = {}
        self._overrides: dict[tuple, np.ndarray] = {}

    # -- explicit entries ---------------------------------------------------
    def set_entry(self, key, value: np.ndarray):
        self._overrides[key] = np.asarray(value, dtype=complex)

    def _random(self, shape) -> np.ndarray:
        re = self.rng.standard_normal(shape + (self.batch,))
        im = self.rng.standard_normal(shape + (self.batch,))
        return re + 1j * im

    # -- base field arrays ----------------------------------------------------
    def field_arr(self, name: str, nu: int, np_: int) -> np.ndarray:
        key = ("f", name, nu, np_)
        if key in self._overrides:
            return self._overrides[key]
        if key not in self._cache:
            sym = REGISTRY.lookup(name, nu, np_)
            if sym.key == ("t", 1, 1):
                arr = np.broadcast_to(DELTA[..., None],
                                      (2, 2, self.batch)).copy()
            elif self.flat and sym.key in _CURVATURE:
                arr = np.zeros((2,) * len(sym.slots) + (self.batch,), complex)
            else:
                arr = self._random((2,) * len(sym.slots))
                if sym.constant and self.real_constants:
                    arr = arr.real.astype(complex)
                arr = _sym_axes(arr, sym.sym_groups)
            self._cache[key] = arr
        return self._cache[key]

    def djet(self, name, nu, np_, n_dt, n_ds) -> np.ndarray:
        key = ("d", name, nu, np_, n_dt, n_ds)
        if key in self._overrides:
            return self._overrides[key]
        if key not in self._cache:
            sym = REGISTRY.lookup(name, nu, np_)
            nslots = len(sym.slots)
            if sym.constant:
                arr = np.zeros((2,) * (2 * n_ds + nslots) + (self.batch,), complex)
            else:
                arr = self._random((2,) * (2 * n_ds + nslots))
                groups = [(2 * i, 2 * i + 1) for i in range(n_ds)]
                arr = _sym_axes(arr, groups + [tuple(2 * n_ds + i for i in g)
                                               for g in sym.sym_groups])
                arr = _sym_pairs(arr, [tuple(g) for g in groups])
            self._cache[key] = arr
        return self._cache[key]

    def n1(self, name, nu, np_) -> np.ndarray:
        key = ("n1", name, nu, np_)
        if key in self._overrides:
            return self._overrides[key]
        if key not in self._cache:
            sym = REGISTRY.lookup(name, nu, np_)
            if sym.constant:
                arr = np.zeros((2, 2) + (2,) * len(sym.slots) + (self.batch,),
                               complex)
            else:
                arr = self._random((2, 2) + (2,) * len(sym.slots))
                arr = _sym_axes(arr, [tuple(2 + i for i in g)
                                      for g in sym.sym_groups])
            self._cache[key] = arr
        return self._cache[key]

    def n2sym(self, name, nu, np_) -> np.ndarray:
        """Pair-exchange-symmetric part of the second covariant derivative,
        axes (u1, p1, u2, p2) + slots."""
        key = ("n2", name, nu, np_)
        if key in self._overrides:
            return self._overrides[key]
        if key not in self._cache:
            sym = REGISTRY.lookup(name, nu, np_)
            if sym.constant:
                arr = np.zeros((2,) * 4 + (2,) * len(sym.slots) + (self.batch,),
                               complex)
            else:
                arr = self._random((2,) * (4 + len(sym.slots)))
                arr = _sym_axes(arr, [tuple(4 + i for i in g)
                                      for g in sym.sym_groups])
                arr = _sym_pairs(arr, [(0, 1), (2, 3)])
            self._cache[key] = arr
        return self._cache[key]

    def scalar(self, name) -> np.ndarray:
        return self.field_arr(name, 0, 0)


_CURVATURE = {("Psi", 4, 0), ("Psi", 0, 4), ("Phi", 2, 2), ("Lambda", 0, 0),
              ("F", 2, 0), ("F", 0, 2)}


# ----------------------------------------------------------------------
# box action on component arrays
# ----------------------------------------------------------------------

def box_apply(primed_box: bool, W: np.ndarray, chirs, charged: bool,
              jets: JetAssignment) -> np.ndarray:
    """Curvature derivation acting on a component array W whose non-batch
    axes have chirality list `chirs`.  Returns an array with two new leading
    axes for the box indices (all lowered).

    Same-sector slots (slot chirality equal to the box chirality) couple to
    Weyl + Lambda, cross-sector slots to Phi; charged fields pick up one
    -i e F term for the whole factor.  The configurable signs are read from
    the rule table so the oracle and the rewriting engine share one
    convention source.
    """
    tb = jets.table
    n = len(chirs)
    if W.ndim != n + 1:
        raise JetError("chirality list does not match array rank")
    pool = "fghijklmnopqrstuvw"    # letters c, d, e, x, y, Z are reserved
    w_sub = pool[:n]
    out = np.zeros((2, 2) + W.shape, dtype=complex)
    psi = jets.field_arr("Psi", 0, 4) if primed_box else jets.field_arr("Psi", 4, 0)
    psiU = np.einsum("ed,xycdZ->xyceZ", EUP, psi)
    lam = jets.scalar("Lambda")
    phi = jets.field_arr("Phi", 2, 2)
    K_lam = (np.einsum("xc,yd->xycd", E, DELTA)
             + np.einsum("yc,xd->xycd", E, DELTA)).astype(complex)
    if primed_box:
        phiK = np.einsum("ed,cdxyZ->xyceZ", EUP, phi)   # Phi_C{}^{E}{}_{X'Y'}
    else:
        phiK = np.einsum("ed,xycdZ->xyceZ", EUP, phi)   # Phi_{XY C'}{}^{E'}
    for s, chir in enumerate(chirs):
        sub_in = w_sub[:s] + "d" + w_sub[s + 1:] + "Z"
        sub_out = "xy" + w_sub[:s] + "c" + w_sub[s + 1:] + "Z"
        if chir == primed_box:
            out += WEYL_SIGN * np.einsum(f"xycdZ,{sub_in}->{sub_out}", psiU, W)
            out += (float(tb.sign("box.lambda")) * lam
                    * np.einsum(f"xycd,{sub_in}->{sub_out}", K_lam, W))
        else:
            out += float(tb.sign("box.phi")) * np.einsum(
                f"xycdZ,{sub_in}->{sub_out}", phiK, W)
    if charged:
        F = jets.field_arr("F", 0, 2) if primed_box else jets.field_arr("F", 2, 0)
        sign_key = "box.charge_p" if primed_box else "box.charge_u"
        ev = jets.scalar("e")
        out += (float(tb.sign(sign_key)) * 1j * ev
                * np.einsum(f"xyZ,{w_sub}Z->xy{w_sub}Z", F, W))
    return out


# ----------------------------------------------------------------------
# factor and expression evaluation
# ----------------------------------------------------------------------

def _chain_value(f: Factor, jets: JetAssignment) -> tuple[np.ndarray, list]:
    """Component array of one factor with all indices lowered; returns
    (array, chirality list per axis)."""
    if f.is_eps:
        primed = f.base[1]
        return E.copy()[..., None] * np.ones(jets.batch), [primed, primed]
    name, nu, np_ = f.base[1], f.base[2], f.base[3]
    sym = REGISTRY.lookup(name, nu, np_)
    kinds = [p.kind for p in f.prefixes]
    slot_chirs = list(sym.slots)

    def base_chain(kinds_rest, prefs_rest):
        if not kinds_rest:
            return jets.field_arr(name, nu, np_), slot_chirs
        if all(k in ("dt", "dS") for k in kinds_rest):
            n_dt = kinds_rest.count("dt")
            n_ds = kinds_rest.count("dS")
            arr = jets.djet(name, nu, np_, n_dt, n_ds)
            chirs = []
            for p in prefs_rest:
                chirs.extend([False] * len(p.idxs))
            return arr, chirs + slot_chirs
        if kinds_rest == ["nabla"]:
            return jets.n1(name, nu, np_), [False, True] + slot_chirs
        if kinds_rest == ["nabla2"]:
            return jets.n2sym(name, nu, np_), [False, True, False, True] + slot_chirs
        if kinds_rest == ["nabla", "nabla"]:
            n2 = jets.n2sym(name, nu, np_)
            base = jets.field_arr(name, nu, np_)
            boxP = box_apply(True, base, slot_chirs, sym.charged, jets)
            boxU = box_apply(False, base, slot_chirs, sym.charged, jets)
            # [nabla_a, nabla_b] f = eps_{AB} boxP_{A'B'} f + eps_{A'B'} boxU_{AB} f
            comm = (np.einsum("ub,xy...->uxby...", E, boxP)
                    + np.einsum("xy,ub...->uxby...", E, boxU))
            return n2 + 0.5 * comm, [False, True, False, True] + slot_chirs
        if kinds_rest[0] in ("boxU", "boxP"):
            inner, chirs = base_chain(kinds_rest[1:], prefs_rest[1:])
            primed_box = kinds_rest[0] == "boxP"
            arr = box_apply(primed_box, inner, chirs[:len(chirs)], sym.charged,
                            jets)
            return arr, [primed_box, primed_box] + chirs
        raise JetError(f"unsupported derivative stack {kinds_rest} on {name}")

    arr, chirs = base_chain(kinds, list(f.prefixes))
    return arr, chirs


def factor_value(f: Factor, jets: JetAssignment) -> np.ndarray:
    """Full numeric array of a factor, axes ordered (prefix indices...,
    slots..., batch), with raising applied for up indices."""
    arr, _chirs = _chain_value(f, jets)
    idxs = f.all_indices()
    for ax, ix in enumerate(idxs):
        if ix.up:
            arr = np.moveaxis(np.tensordot(EUP, arr, axes=([1], [ax])), 0, ax)
    return arr


def jet_eval(e: Expression, jets: JetAssignment) -> np.ndarray:
    """Evaluate every free-index component; output axes are the free indices
    in sorted signature order plus the batch axis."""
    frees = sorted(e.free_sig)
    letters = {}
    pool = iter(string.ascii_lowercase + string.ascii_uppercase)
    for (lbl, primed, _up) in frees:
        letters[(lbl, primed)] = next(pool)
    out_shape = (2,) * len(frees) + (jets.batch,)
    out = np.zeros(out_shape, dtype=complex)
    for term in e.terms:
        classify(term.all_indices())
        term_letters = dict(letters)
        operands = []
        scripts = []
        for f in term.factors:
            arr = factor_value(f, jets)
            sub = ""
            for ix in f.all_indices():
                k = (ix.label, ix.primed)
                if k not in term_letters:
                    term_letters[k] = next(pool)
                sub += term_letters[k]
            operands.append(arr)
            scripts.append(sub + "...")
        out_sub = "".join(letters[(lbl, p)] for (lbl, p, _u) in frees) + "..."
        if operands:
            val = np.einsum(",".join(scripts) + "->" + out_sub, *operands)
        else:
            val = np.ones(out_shape, dtype=complex)
        out = out + term.coeff.to_complex() * val
    return out


def eval_equal(a: Expression, b: Expression, jets: JetAssignment,
               tol: float = 1e-10) -> bool:
    va, vb = jet_eval(a, jets), jet_eval(b, jets)
    scale = max(1.0, float(np.max(np.abs(va))), float(np.max(np.abs(vb))))
    return bool(np.max(np.abs(va - vb)) <= tol * scale)


def eval_zero(e: Expression, jets: JetAssignment, tol: float = 1e-10,
              scale_terms: bool = True) -> bool:
    """Check an expression evaluates to zero, relative to the magnitude of
    its individual terms (so cancellations count as zero)."""
    v = jet_eval(e, jets)
    if not scale_terms or not e.terms:
        return bool(np.max(np.abs(v)) <= tol)
    scale = 1.0
    for t in e.terms:
        tv = jet_eval(Expression((t,), validate=False), jets)
        scale = max(scale, float(np.max(np.abs(tv))))
    return bool(np.max(np.abs(v)) <= tol * scale)
