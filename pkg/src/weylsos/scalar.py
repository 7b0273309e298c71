"""Exact arithmetic in the field Q(i, sqrt 2).

A :class:`Scalar` is stored as four :class:`fractions.Fraction` coordinates
``(a, b, c, d)`` meaning ``a + b*i + c*r2 + d*i*r2`` where ``r2 = sqrt(2)``.
Values are immutable and hashable; equal values have equal coordinates.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Union

Rational = Fraction

ScalarLike = Union["Scalar", int, Fraction]

_ZERO = Fraction(0)
_ONE = Fraction(1)


class IrrationalOutsideField(ValueError):
    """Raised when a square root does not live in Q(i, sqrt 2)."""


class Scalar:
    __slots__ = ("a", "b", "c", "d", "_hash")

    def __init__(self, a=0, b=0, c=0, d=0):
        self.a = a if type(a) is Fraction else Fraction(a)
        self.b = b if type(b) is Fraction else Fraction(b)
        self.c = c if type(c) is Fraction else Fraction(c)
        self.d = d if type(d) is Fraction else Fraction(d)
        self._hash = None

    # -- construction -------------------------------------------------------

    @classmethod
    def coerce(cls, x: ScalarLike) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        if isinstance(x, (int, _RationalABC)):
            return cls(Fraction(x))
        if isinstance(x, complex):
            raise TypeError("floating complex values cannot be made exact")
        raise TypeError(f"cannot convert {type(x).__name__} to Scalar")

    # -- predicates ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not (self.a or self.b or self.c or self.d)

    def __bool__(self) -> bool:
        return not self.is_zero()

    def is_rational(self) -> bool:
        return not (self.b or self.c or self.d)

    def is_real(self) -> bool:
        return not (self.b or self.d)

    # -- field operations ---------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        return Scalar(self.a + other.a, self.b + other.b, self.c + other.c, self.d + other.d)

    __radd__ = __add__

    def __neg__(self):
        return Scalar(-self.a, -self.b, -self.c, -self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        return Scalar(self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d)

    def __rsub__(self, other):
        return Scalar.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Scalar):
            if isinstance(other, (int, Fraction)):
                return Scalar(self.a * other, self.b * other, self.c * other, self.d * other)
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        a1, b1, c1, d1 = self.a, self.b, self.c, self.d
        a2, b2, c2, d2 = other.a, other.b, other.c, other.d
        if not (b2 or c2 or d2):
            return Scalar(a1 * a2, b1 * a2, c1 * a2, d1 * a2)
        if not (b1 or c1 or d1):
            return Scalar(a1 * a2, a1 * b2, a1 * c2, a1 * d2)
        # basis products: i*i = -1, r2*r2 = 2, (i r2)*(i r2) = -2, i*(i r2) = -r2
        a = a1 * a2 - b1 * b2 + 2 * c1 * c2 - 2 * d1 * d2
        b = a1 * b2 + b1 * a2 + 2 * c1 * d2 + 2 * d1 * c2
        c = a1 * c2 + c1 * a2 - b1 * d2 - d1 * b2
        d = a1 * d2 + d1 * a2 + b1 * c2 + c1 * b2
        return Scalar(a, b, c, d)

    __rmul__ = __mul__

    def conj(self) -> "Scalar":
        """Complex conjugation (fixes sqrt 2, sends i to -i)."""
        return Scalar(self.a, -self.b, self.c, -self.d)

    def _conj_r2(self) -> "Scalar":
        return Scalar(self.a, self.b, -self.c, -self.d)

    def inv(self) -> "Scalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero scalar")
        if self.is_rational():
            return Scalar(1 / self.a)
        # s * conj(s) lies in Q(sqrt 2); multiply by its sqrt-2 conjugate to reach Q.
        t = self * self.conj()
        norm = t * t._conj_r2()
        return self.conj() * t._conj_r2() * (1 / norm.a)

    def __truediv__(self, other):
        return self * Scalar.coerce(other).inv()

    def __rtruediv__(self, other):
        return Scalar.coerce(other) * self.inv()

    def __pow__(self, n: int) -> "Scalar":
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inv() ** (-n)
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- comparisons / hashing ---------------------------------------------

    def key(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    def __eq__(self, other):
        if isinstance(other, Scalar):
            return self.key() == other.key()
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.a == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key()) if not self.is_rational() else hash(self.a)
        return self._hash

    # -- conversion ---------------------------------------------------------

    def real(self) -> "Scalar":
        return Scalar(self.a, 0, self.c, 0)

    def imag(self) -> "Scalar":
        return Scalar(self.b, 0, self.d, 0)

    def to_float(self) -> complex:
        """Nearest double-precision complex value.

        Each coordinate is rounded once, then combined; sqrt 2 multiples are
        evaluated with a correctly rounded product where possible.
        """
        try:
            re = _fraction_plus_r2(self.a, self.c)
            im = _fraction_plus_r2(self.b, self.d)
        except OverflowError as exc:
            raise OverflowError(f"scalar {self} exceeds double range") from exc
        return complex(re, im)

    def __complex__(self):
        return self.to_float()

    def __float__(self):
        if not self.is_real():
            raise TypeError("scalar has a nonzero imaginary part")
        return self.to_float().real

    def __repr__(self):
        return f"Scalar({format_scalar(self)!r})"

    def __str__(self):
        return format_scalar(self)


def _fraction_plus_r2(p: Fraction, q: Fraction) -> float:
    if not q:
        return float(p)
    if not p:
        return float(q) * math.sqrt(2)
    return float(p) + float(q) * math.sqrt(2)


ZERO = Scalar()
ONE = Scalar(1)
I = Scalar(0, 1)
SQRT2 = Scalar(0, 0, 1)


def _format_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def format_scalar(s: Scalar) -> str:
    """Text form ``p/q + r/s i + t/u r2 + v/w ir2`` with zero terms omitted."""
    parts = []
    for value, unit in ((s.a, ""), (s.b, " i"), (s.c, " r2"), (s.d, " ir2")):
        if not value:
            continue
        sign = "-" if value < 0 else "+"
        body = _format_fraction(abs(value)) + unit
        if not parts:
            parts.append(("-" if sign == "-" else "") + body)
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts) if parts else "0"


def parse_scalar(text: str) -> Scalar:
    from .parsing import parse_scalar_expr

    return parse_scalar_expr(text)


def sqrt_rational(x: ScalarLike) -> Scalar:
    """Square root of a rational number, when it lies in Q(i, sqrt 2).

    Negative inputs give ``i * sqrt(-x)``. Raises
    :class:`IrrationalOutsideField` otherwise.
    """
    s = Scalar.coerce(x)
    if not s.is_rational():
        raise IrrationalOutsideField(f"sqrt of non-rational {s}")
    q = s.a
    if q == 0:
        return ZERO
    root = _sqrt_positive(abs(q))
    return root * I if q < 0 else root


def _rational_sqrt(q: Fraction):
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def _sqrt_positive(q: Fraction) -> Scalar:
    r = _rational_sqrt(q)
    if r is not None:
        return Scalar(r)
    # sqrt(q) = sqrt(q/2) * sqrt 2
    r = _rational_sqrt(q / 2)
    if r is not None:
        return Scalar(0, 0, r)
    raise IrrationalOutsideField(f"sqrt({q}) is not in Q(i, sqrt 2)")
