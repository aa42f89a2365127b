"""Exact coefficient arithmetic for spinor expressions.

Coefficients live in the field Q(i, sqrt2): every scalar is
(a + b*i) + (c + d*i)*sqrt2 with rational a, b, c, d.  The sqrt2 part only
shows up in the gamma-matrix algebra; everything downstream of the
translation step is Gaussian-rational.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

Rat = Union[int, Fraction]


class Scalar:
    """Element of Q(i, sqrt2), immutable."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: Rat = 0, b: Rat = 0, c: Rat = 0, d: Rat = 0):
        object.__setattr__(self, "a", Fraction(a))
        object.__setattr__(self, "b", Fraction(b))
        object.__setattr__(self, "c", Fraction(c))
        object.__setattr__(self, "d", Fraction(d))

    def __setattr__(self, *args):
        raise AttributeError("Scalar is immutable")

    # -- constructors -------------------------------------------------
    @staticmethod
    def of(x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        return Scalar(Fraction(x))

    @staticmethod
    def i() -> "Scalar":
        return Scalar(0, 1)

    @staticmethod
    def rt2() -> "Scalar":
        return Scalar(0, 0, 1)

    # -- predicates ---------------------------------------------------
    def is_zero(self) -> bool:
        return not (self.a or self.b or self.c or self.d)

    def is_rational(self) -> bool:
        return not (self.b or self.c or self.d)

    # -- ring ops -----------------------------------------------------
    def __add__(self, o) -> "Scalar":
        o = Scalar.of(o)
        return Scalar(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    def __sub__(self, o) -> "Scalar":
        o = Scalar.of(o)
        return Scalar(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)

    def __neg__(self) -> "Scalar":
        return Scalar(-self.a, -self.b, -self.c, -self.d)

    def __mul__(self, o) -> "Scalar":
        o = Scalar.of(o)
        # (p + q*rt2)(r + s*rt2) = (pr + 2qs) + (ps + qr)*rt2 over Q(i)
        pa, pb, qa, qb = self.a, self.b, self.c, self.d
        ra, rb, sa, sb = o.a, o.b, o.c, o.d
        # complex products
        pr = (pa * ra - pb * rb, pa * rb + pb * ra)
        qs = (qa * sa - qb * sb, qa * sb + qb * sa)
        ps = (pa * sa - pb * sb, pa * sb + pb * sa)
        qr = (qa * ra - qb * rb, qa * rb + qb * ra)
        return Scalar(pr[0] + 2 * qs[0], pr[1] + 2 * qs[1],
                      ps[0] + qr[0], ps[1] + qr[1])

    __rmul__ = __mul__
    __radd__ = __add__

    def inv(self) -> "Scalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero Scalar")
        # 1/(p + q*rt2) = (p - q*rt2)/(p^2 - 2 q^2), all over Q(i)
        p = (self.a, self.b)
        q = (self.c, self.d)
        p2 = (p[0] * p[0] - p[1] * p[1], 2 * p[0] * p[1])
        q2 = (q[0] * q[0] - q[1] * q[1], 2 * q[0] * q[1])
        den = (p2[0] - 2 * q2[0], p2[1] - 2 * q2[1])  # complex
        nrm = den[0] * den[0] + den[1] * den[1]
        if nrm == 0:
            raise ZeroDivisionError("inverse of zero norm in Q(i,rt2)")
        dinv = (den[0] / nrm, -den[1] / nrm)
        num = Scalar(p[0], p[1], -q[0], -q[1])
        return num * Scalar(dinv[0], dinv[1])

    def __truediv__(self, o) -> "Scalar":
        return self * Scalar.of(o).inv()

    # -- comparisons ----------------------------------------------------
    def __eq__(self, o) -> bool:
        if not isinstance(o, Scalar):
            try:
                o = Scalar.of(o)
            except (TypeError, ValueError):
                return NotImplemented
        return (self.a, self.b, self.c, self.d) == (o.a, o.b, o.c, o.d)

    def __hash__(self):
        return hash((self.a, self.b, self.c, self.d))

    # -- conversion -----------------------------------------------------
    def to_complex(self) -> complex:
        rt = 2 ** 0.5
        return complex(float(self.a) + float(self.c) * rt,
                       float(self.b) + float(self.d) * rt)

    # -- printing -------------------------------------------------------
    def __str__(self) -> str:
        pieces = []
        if self.a:
            pieces.append(_fmt_rat(self.a))
        if self.b:
            pieces.append(_fmt_rat(self.b) + " i" if abs(self.b) != 1 else
                          ("i" if self.b > 0 else "-i"))
        if self.c:
            pieces.append(_fmt_rat(self.c) + " rt2" if abs(self.c) != 1 else
                          ("rt2" if self.c > 0 else "-rt2"))
        if self.d:
            pieces.append(_fmt_rat(self.d) + " i rt2" if abs(self.d) != 1 else
                          ("i rt2" if self.d > 0 else "-i rt2"))
        if not pieces:
            return "0"
        out = pieces[0]
        for p in pieces[1:]:
            out += (" - " + p[1:]) if p.startswith("-") else (" + " + p)
        return out

    def __repr__(self) -> str:
        return f"Scalar({self})"


def _fmt_rat(x: Fraction) -> str:
    return str(x)


ZERO = Scalar(0)
ONE = Scalar(1)
I = Scalar.i()
RT2 = Scalar.rt2()
