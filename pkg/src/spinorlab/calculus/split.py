"""Flat space-spinor 3+1 split.

A covariantly constant timelike frame spinor (t_a t^a = 2, so that
t_{AA'} t^{BA'} = eps_A{}^B) converts primed indices to unprimed ones.
Fields decompose into space-spinor parts,

    tau_{AA'B'}  = t^P{}_{A'} t^Q{}_{B'} (t_{APQ} + eps_{AP} t_Q + eps_{AQ} t_P)
    sigma_{A'AB} = sgn * t^P{}_{A'} (s_{ABP} + eps_{AP} s_B + eps_{BP} s_A)
    sigma_{A'}   = -t^P{}_{A'} sigma_P
    chi_{B'}     = -t^P{}_{B'} chi_P

and the derivative splits as nabla_{AA'} = t_{AA'} dt - t^C{}_{A'} dS_{AC};
equivalently t^{A'}_B nabla_{AA'} = eps_{AB} dt + dS_{AB}.  All derivatives
of the frame vanish and dt, dS commute.
"""

from __future__ import annotations

from ..algebra.expr import (Expression, Factor, Prefix, Term, canonicalize,
                            field_factor)
from ..algebra.indices import Idx, dn, up
from ..algebra.parser import parse
from ..algebra.scalars import Scalar
from .ops import _fresh, _labels_of_term, _lower_factor_indices, substitute_field


class SplitError(ValueError):
    pass


# the sigma-sector orientations are fixed by requiring the split of the
# field equations to reproduce the displayed evolution/constraint system:
# the totally symmetric part and the trace part carry independent signs
SIGMA3_S3_SIGN = -1
SIGMA3_S1_SIGN = +1

_TAU3_TPL = ("t^{P}{}_{X1'} t^{Q}{}_{X2'} t_{X0 P Q}"
             " + t^{P}{}_{X1'} t^{Q}{}_{X2'} eps_{X0 P} t_{Q}"
             " + t^{P}{}_{X1'} t^{Q}{}_{X2'} eps_{X0 Q} t_{P}")
_SIGMA1_TPL = "-t^{P}{}_{X0'} sigma_{P}"
_CHI1_TPL = "-t^{P}{}_{X0'} chi_{P}"


def _sigma3_template() -> Expression:
    s3 = "-" if SIGMA3_S3_SIGN < 0 else ""
    s1 = "-" if SIGMA3_S1_SIGN < 0 else "+"
    return parse(f"{s3}t^{{P}}{{}}_{{X0'}} s_{{X1 X2 P}}"
                 f" {s1} t^{{P}}{{}}_{{X0'}} eps_{{X1 P}} s_{{X2}}"
                 f" {s1} t^{{P}}{{}}_{{X0'}} eps_{{X2 P}} s_{{X1}}")


def split_nablas(e: Expression) -> Expression:
    """Replace every covariant-derivative prefix by its frame split."""
    changed = True
    while changed:
        changed = False
        out_terms = []
        for t in e.terms:
            hit = None
            for fi, f in enumerate(t.factors):
                for k, p in enumerate(f.prefixes):
                    if p.kind == "nabla":
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
            if any(ix.up for ix in f.prefixes[k].idxs):
                t = _lower_factor_indices(t, fi, [(k, 0), (k, 1)])
                f = t.factors[fi]
            u, p = f.prefixes[k].idxs
            avoid = _labels_of_term(t)
            gen = _fresh("c", set(avoid))
            cl = next(gen)
            # t_{AA'} dt X
            fs = list(t.factors)
            fs[fi] = Factor(f.base,
                            f.prefixes[:k] + (Prefix("dt", ()),) + f.prefixes[k + 1:],
                            f.idxs)
            fs.append(field_factor("t", [dn(u.label), dn(p.label, True)]))
            out_terms.append(Term(t.coeff, tuple(fs)))
            # -t^{C}{}_{A'} dS_{AC} X
            fs = list(t.factors)
            fs[fi] = Factor(f.base,
                            f.prefixes[:k]
                            + (Prefix("dS", (dn(u.label), dn(cl))),)
                            + f.prefixes[k + 1:],
                            f.idxs)
            fs.append(field_factor("t", [up(cl), dn(p.label, True)]))
            out_terms.append(Term(-t.coeff, tuple(fs)))
        e = Expression(out_terms, validate=False)
    return e


def space_split(e: Expression, primed_map: dict[str, str] | None = None,
                check: bool = True) -> Expression:
    """Convert a covariant expression to the space-spinor picture.

    Free primed indices are contracted with the frame onto the unprimed
    labels given in primed_map.  Fields are replaced by their space-spinor
    decompositions, derivatives split into dt and dS, and all frame factors
    eliminated.  Raises SplitError if a primed index survives.
    """
    primed_map = primed_map or {}
    free = {}
    if not e.is_zero():
        free = {(lbl, primed): _up for (lbl, primed, _up) in e.free_sig}
    for (lbl, primed), up_flag in free.items():
        if not primed:
            continue
        if lbl not in primed_map:
            raise SplitError(f"no target label for free primed index {lbl}'")
        tgt = primed_map[lbl]
        # multiply with t^{A'}{}_{C} (variance adapted to the free index)
        frame_idx = [dn(tgt), Idx(lbl, True, not up_flag)]
        conv = Expression([Term(Scalar(1), (field_factor("t", frame_idx),))])
        e = e * conv
    e = substitute_field(e, "tau", 1, 2, parse(_TAU3_TPL), ["X0", "X1", "X2"])
    e = substitute_field(e, "sigma", 2, 1, _sigma3_template(), ["X0", "X1", "X2"])
    e = substitute_field(e, "sigma", 0, 1, parse(_SIGMA1_TPL), ["X0"])
    e = substitute_field(e, "chi", 0, 1, parse(_CHI1_TPL), ["X0"])
    e = split_nablas(e)
    out = canonicalize(e)
    if check:
        for t in out.terms:
            for ix in t.all_indices():
                if ix.primed:
                    raise SplitError(f"unsplit primed index {ix.label}'")
            for f in t.factors:
                if f.base == ("field", "t", 1, 1):
                    raise SplitError("frame factor survived the split")
    return out
