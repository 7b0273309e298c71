"""Radial Schrodinger operators on the half-line.

For ``L = -r^{1-d} d/dr (r^{d-1} d/dr) + V(r)`` with V a Laurent polynomial,
clear the negative powers with the smallest m and ask for

    (1+X^2)^k ( -X^m Y X^{d-1} Y X^m + X^{2m+d-1} (V(X) - mu) ) (1+X^2)^k
        = u^* A u + v^* (X B) v,    A, B >= 0.

Basis degrees come from matching both sides. With
T = 4k + 2m + d - 1 + max(top power of V, 0) and K = 4k + 2m + d - 1
(the X-degree next to Y^2):

    u: 1, X, ..., X^floor(T/2)          plus X^j Y for j <= K/2 if K is even
    v: 1, X, ..., X^floor((T-1)/2)      plus X^j Y for j <= (K-1)/2 if K is odd

For the r + r^2 + r^3 family and for Coulomb-plus-linear potentials this gives
the known parity-split bases.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import gram
from .ladder import LadderOptions, LadderResult, LadderStep, evaluate, run_levels
from .newton import BasisSpec
from .scalar import Scalar, sqrt_rational
from .weyl import PM1, WeylElement


class PotentialParseError(ValueError):
    pass


@dataclass(frozen=True)
class LaurentPotential:
    """V(r) = sum v_e r^e over integer exponents e."""

    terms: Tuple[Tuple[int, Fraction], ...]

    def __init__(self, terms):
        items = terms.items() if isinstance(terms, dict) else terms
        acc: Dict[int, Fraction] = {}
        for e, v in items:
            acc[int(e)] = acc.get(int(e), Fraction(0)) + Fraction(v)
        object.__setattr__(self, "terms", tuple(sorted((e, v) for e, v in acc.items() if v != 0)))

    def as_dict(self) -> Dict[int, Fraction]:
        return dict(self.terms)

    @property
    def min_power(self) -> int:
        return min((e for e, _ in self.terms), default=0)

    @property
    def max_power(self) -> int:
        return max((e for e, _ in self.terms), default=0)

    def __call__(self, r: float) -> float:
        return sum(float(v) * r**e for e, v in self.terms)

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{v} r^{e}" for e, v in self.terms)

    @classmethod
    def parse(cls, text: str) -> "LaurentPotential":
        """Parse terms like ``-1/1 r^-1 + 1 r^1``; ``r`` alone means r^1."""
        s = text.replace(" ", "")
        if not s:
            raise PotentialParseError("empty potential")
        term = re.compile(
            r"(?P<sign>[+-]?)(?P<coef>\d+(?:\.\d+)?(?:/\d+)?)?\*?(?P<r>r(?:\^(?P<exp>[+-]?\d+))?)?"
        )
        pos = 0
        out: List[Tuple[int, Fraction]] = []
        while pos < len(s):
            m = term.match(s, pos)
            if not m or m.end() == pos or (m.group("coef") is None and m.group("r") is None):
                raise PotentialParseError(f"cannot parse potential at column {pos + 1}: {text!r}")
            if pos > 0 and not m.group("sign"):
                raise PotentialParseError(f"missing operator at column {pos + 1}: {text!r}")
            coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
            if m.group("sign") == "-":
                coef = -coef
            if m.group("r"):
                e = int(m.group("exp")) if m.group("exp") is not None else 1
            else:
                e = 0
            out.append((e, coef))
            pos = m.end()
        return cls(out)


def _xpow(n: int) -> WeylElement:
    return WeylElement.monomial(n, 0)


@dataclass
class RadialProblem:
    V: LaurentPotential
    d: int
    m: int
    target: WeylElement
    mu_carrier: WeylElement
    reference_mismatch: bool = False
    notes: List[str] = field(default_factory=list)

    @property
    def shift(self) -> int:
        return 2 * self.m + self.d - 1


def clearing_exponent(V: LaurentPotential, d: int) -> int:
    """Smallest m >= 0 with r^{2m+d-1} V(r) free of negative powers."""
    return max(0, math.ceil(-(d - 1 + V.min_power) / 2))


def build_radial(V: LaurentPotential, d: int, m: Optional[int] = None) -> RadialProblem:
    """Assemble the conjugated target; ``m`` defaults to the clearing exponent.

    A larger ``m`` keeps one formulation across a potential family, e.g. the
    Coulomb-plus-linear family at zero Coulomb strength.
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    m_min = clearing_exponent(V, d)
    if m is None:
        m = m_min
    elif m < m_min:
        raise ValueError(f"m = {m} leaves negative powers; need m >= {m_min}")
    shift = 2 * m + d - 1
    Y = WeylElement.right(0, PM1)
    Xm = _xpow(m)
    kinetic = -(Xm * Y * _xpow(d - 1) * Y * Xm)
    pot = WeylElement(PM1, {((e + shift,), (0,)): Scalar(v) for e, v in V.terms})
    target = kinetic + pot
    carrier = _xpow(shift)
    if target.star() != target:
        raise gram.NotHermitian("radial target is not hermitian")
    p = RadialProblem(V, d, m, target, carrier)
    if d == 1 and V == LaurentPotential({1: 1, 2: 1, 3: 1}):
        # the tabulated reference value for this case belongs to a state outside L^2(R+)
        p.reference_mismatch = True
        p.notes.append("d = 1 reference value is not comparable with these bounds")
    return p


def radial_bases(p: RadialProblem, k: int) -> Tuple[BasisSpec, BasisSpec]:
    K = 4 * k + p.shift
    T = K + max(p.V.max_power, 0)
    u = [(a, 0) for a in range(T // 2 + 1)]
    v = [(a, 0) for a in range((T - 1) // 2 + 1)]
    if K % 2 == 0:
        u += [(a, 1) for a in range(K // 2 + 1)]
    else:
        v += [(a, 1) for a in range((K - 1) // 2 + 1)]
    return BasisSpec.from_exponents(u), BasisSpec.from_exponents(v)


def radial_gram(p: RadialProblem, k: int) -> gram.GramProblem:
    b = (_xpow(2) + 1) ** k
    bs = b.star()
    u, v = radial_bases(p, k)
    blocks = [(u, WeylElement.constant(1, PM1))]
    labels = ["u"]
    if len(v):
        blocks.append((v, _xpow(1)))
        labels.append("v")
    return gram.build_from_elements(bs * p.target * b, bs * p.mu_carrier * b, blocks, labels)


def bound_radial(p: RadialProblem, k: int, opts: Optional[LadderOptions] = None) -> LadderStep:
    return evaluate(k, radial_gram(p, k), opts or LadderOptions())


def run_radial(p: RadialProblem, k_max: int, opts: Optional[LadderOptions] = None) -> LadderResult:
    return run_levels(lambda k: radial_gram(p, k), k_max, opts or LadderOptions())


# -- closed forms for a r^2 + b r^-2 and a r^-1 + b r^-2 -----------------------


@dataclass
class ClosedFormReport:
    case: str
    a: Fraction
    b: Fraction
    bound: Scalar
    lhs: WeylElement
    rhs: WeylElement
    residual: WeylElement

    @property
    def exact(self) -> bool:
        return self.residual.is_zero()


def verify_closed_form(case: str, a, b) -> ClosedFormReport:
    """Check the one-step certificate of a closed-form potential exactly.

    Both sides are multiplied by X on the left and right, which turns the
    r^-1 terms of g into polynomials: X g^* g X = (gX)^* (gX).

    harmonic  V = a r^2 + b r^-2, a > 0:
        X(-Y^2 + a X^2 - E)X + b = (gX)^*(gX),  gX = YX + sqrt(a) X^2 - (1/2 + s)
    coulomb   V = a r^-1 + b r^-2, a < 0:
        X(-Y^2 + E)X + a X + b = (hX)^*(hX),    hX = YX - a/(1+2s) X - (1/2 + s)
    coulomb, a >= 0 (bound 0):
        X(-Y^2)X + b = (YX - (1/2 + s))^*(YX - (1/2 + s)), the a X term is a weighted square

    where s = sqrt(b + 1/4). Raises IrrationalOutsideField when a needed root
    is not in Q(i, sqrt 2).
    """
    a, b = Fraction(a), Fraction(b)
    if b <= Fraction(-1, 4):
        raise ValueError("need b > -1/4")
    s = sqrt_rational(b + Fraction(1, 4))
    X = _xpow(1)
    Y = WeylElement.right(0, PM1)
    one = WeylElement.constant(1, PM1)
    kinetic = -(X * Y * Y * X)
    half_s = one.scale(Scalar(Fraction(1, 2)) + s)
    if case == "harmonic":
        if a <= 0:
            raise ValueError("harmonic case needs a > 0")
        ra = sqrt_rational(a)
        bound = ra * 2 * (s + 1)
        lhs = kinetic + (X * X * X * X).scale(Scalar(a)) + one.scale(Scalar(b)) - (X * X).scale(bound)
        g = Y * X + (X * X).scale(ra) - half_s
        rhs = g.star() * g
    elif case == "coulomb":
        if a < 0:
            t = Scalar(a) / (s * 2 + 1)
            bound = -(t * t)
            lhs = kinetic + X.scale(Scalar(a)) + one.scale(Scalar(b)) - (X * X).scale(bound)
            h = Y * X - X.scale(t) - half_s
            rhs = h.star() * h
        else:
            bound = Scalar(0)
            lhs = kinetic + X.scale(Scalar(a)) + one.scale(Scalar(b))
            h = Y * X - half_s
            rhs = X.scale(Scalar(a)) + h.star() * h
    else:
        raise ValueError(f"unknown case {case!r}")
    return ClosedFormReport(case, a, b, bound, lhs, rhs, lhs - rhs)
