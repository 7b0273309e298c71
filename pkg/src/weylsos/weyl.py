"""Normal-ordered arithmetic in the Weyl algebra W(d).

Two presentations share one rewrite kernel:

* position-momentum: generators ``X_k`` (left) and ``Y_k`` (right) with
  ``Y_k X_k = X_k Y_k + 1``, involution ``X* = X``, ``Y* = -Y``;
* ladder (d = 1): generators ``a*`` (left) and ``a`` (right) with
  ``a a* = a* a + 1``, involution swapping ``a`` and ``a*``.

A monomial ``(alpha, beta)`` stands for ``X^alpha Y^beta`` (resp.
``(a*)^alpha a^beta``). Elements are immutable maps from monomials to
:class:`~weylsos.scalar.Scalar` with no zero entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from .scalar import ONE, SQRT2, ZERO, I, Scalar, ScalarLike, format_scalar

POSITION_MOMENTUM = "position-momentum"
LADDER = "ladder"


class PresentationMismatch(ValueError):
    pass


class ZeroElement(ValueError):
    pass


@dataclass(frozen=True)
class Presentation:
    kind: str = POSITION_MOMENTUM
    d: int = 1

    def __post_init__(self):
        if self.kind not in (POSITION_MOMENTUM, LADDER):
            raise ValueError(f"unknown presentation kind {self.kind!r}")
        if self.d < 1:
            raise ValueError("dimension must be positive")
        if self.kind == LADDER and self.d != 1:
            raise ValueError("the ladder presentation is only defined for d = 1")

    @property
    def left_names(self) -> List[str]:
        if self.kind == LADDER:
            return ["a*"]
        return ["X"] if self.d == 1 else [f"X{k + 1}" for k in range(self.d)]

    @property
    def right_names(self) -> List[str]:
        if self.kind == LADDER:
            return ["a"]
        return ["Y"] if self.d == 1 else [f"Y{k + 1}" for k in range(self.d)]


PM1 = Presentation(POSITION_MOMENTUM, 1)
LADDER1 = Presentation(LADDER, 1)


class Monomial(NamedTuple):
    alpha: Tuple[int, ...]
    beta: Tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.alpha) + sum(self.beta)

    def sort_key(self):
        return (self.degree, self.alpha, self.beta)


def monomial_key(m: Monomial):
    """Graded lexicographic key on (total degree, alpha, beta)."""
    return (sum(m[0]) + sum(m[1]), m[0], m[1])


@lru_cache(maxsize=None)
def _swap1(b: int, c: int) -> Tuple[Tuple[int, int], ...]:
    """R^b L^c = sum_t t! C(b,t) C(c,t) L^(c-t) R^(b-t); returns (coef, t) pairs."""
    return tuple(
        (math.factorial(t) * math.comb(b, t) * math.comb(c, t), t) for t in range(min(b, c) + 1)
    )


@lru_cache(maxsize=200_000)
def _swap(beta: Tuple[int, ...], gamma: Tuple[int, ...]):
    """Normal order of R^beta L^gamma as ((coef, lower_t), ...) over all generator pairs."""
    out = [(1, ())]
    for b, c in zip(beta, gamma):
        nxt = []
        for coef, ts in out:
            for k, t in _swap1(b, c):
                nxt.append((coef * k, ts + (t,)))
        out = nxt
    return tuple(out)


@lru_cache(maxsize=500_000)
def monomial_product(m1: Monomial, m2: Monomial) -> Tuple[Tuple[int, Monomial], ...]:
    """Normal-ordered expansion of ``m1 * m2`` with integer coefficients."""
    alpha, beta = m1
    gamma, delta = m2
    out = []
    for coef, ts in _swap(beta, gamma):
        a = tuple(x + y - t for x, y, t in zip(alpha, gamma, ts))
        b = tuple(x - t + y for x, t, y in zip(beta, ts, delta))
        out.append((coef, Monomial(a, b)))
    return tuple(out)


@lru_cache(maxsize=200_000)
def _star_monomial(kind: str, m: Monomial) -> Tuple[Tuple[int, Monomial], ...]:
    alpha, beta = m
    if kind == LADDER:
        return ((1, Monomial(beta, alpha)),)
    # (X^a Y^b)* = (-1)^|b| Y^b X^a
    sign = -1 if sum(beta) % 2 else 1
    zero = tuple(0 for _ in alpha)
    return tuple(
        (sign * coef, mono)
        for coef, mono in monomial_product(Monomial(zero, beta), Monomial(alpha, zero))
    )


class WeylElement:
    """An element of W(d) in normal order."""

    __slots__ = ("presentation", "terms", "_hash")

    def __init__(self, presentation: Presentation, terms: Optional[Dict[Monomial, Scalar]] = None):
        self.presentation = presentation
        clean = {}
        if terms:
            for m, c in terms.items():
                c = Scalar.coerce(c)
                if not c.is_zero():
                    clean[Monomial(tuple(m[0]), tuple(m[1]))] = c
        self.terms: Dict[Monomial, Scalar] = clean
        self._hash = None

    @classmethod
    def _raw(cls, presentation, terms):
        obj = cls.__new__(cls)
        obj.presentation = presentation
        obj.terms = terms
        obj._hash = None
        return obj

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, presentation: Presentation = PM1) -> "WeylElement":
        return cls._raw(presentation, {})

    @classmethod
    def constant(cls, value: ScalarLike, presentation: Presentation = PM1) -> "WeylElement":
        zero = (0,) * presentation.d
        return cls(presentation, {Monomial(zero, zero): Scalar.coerce(value)})

    @classmethod
    def monomial(cls, alpha, beta, coef: ScalarLike = 1, presentation: Presentation = PM1):
        if isinstance(alpha, int):
            alpha = (alpha,)
        if isinstance(beta, int):
            beta = (beta,)
        return cls(presentation, {Monomial(tuple(alpha), tuple(beta)): Scalar.coerce(coef)})

    @classmethod
    def left(cls, k: int = 0, presentation: Presentation = PM1) -> "WeylElement":
        """The k-th left generator (X_k, or a* for the ladder presentation)."""
        alpha = tuple(1 if j == k else 0 for j in range(presentation.d))
        return cls.monomial(alpha, (0,) * presentation.d, 1, presentation)

    @classmethod
    def right(cls, k: int = 0, presentation: Presentation = PM1) -> "WeylElement":
        beta = tuple(1 if j == k else 0 for j in range(presentation.d))
        return cls.monomial((0,) * presentation.d, beta, 1, presentation)

    # -- inspection ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    @property
    def degree(self):
        """Total degree; ``-inf`` for the zero element."""
        if not self.terms:
            return -math.inf
        return max(m.degree for m in self.terms)

    def coefficient(self, m) -> Scalar:
        return self.terms.get(Monomial(tuple(m[0]), tuple(m[1])), ZERO)

    def constant_value(self) -> Optional[Scalar]:
        """The scalar value if this element is a constant, else None."""
        if not self.terms:
            return ZERO
        if len(self.terms) == 1:
            (m, c), = self.terms.items()
            if m.degree == 0:
                return c
        return None

    def support(self) -> List[Monomial]:
        return sorted(self.terms, key=monomial_key)

    def is_real(self) -> bool:
        return all(c.is_real() for c in self.terms.values())

    def is_hermitian(self) -> bool:
        return self.star() == self

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "WeylElement"):
        if self.presentation != other.presentation:
            raise PresentationMismatch(f"{self.presentation} vs {other.presentation}")

    def _lift(self, other) -> "WeylElement":
        if isinstance(other, WeylElement):
            self._check(other)
            return other
        return WeylElement.constant(Scalar.coerce(other), self.presentation)

    def __add__(self, other):
        try:
            other = self._lift(other)
        except TypeError:
            return NotImplemented
        terms = dict(self.terms)
        for m, c in other.terms.items():
            s = terms.get(m)
            if s is None:
                terms[m] = c
            else:
                s = s + c
                if s.is_zero():
                    del terms[m]
                else:
                    terms[m] = s
        return WeylElement._raw(self.presentation, terms)

    __radd__ = __add__

    def __neg__(self):
        return WeylElement._raw(self.presentation, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        try:
            other = self._lift(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return self._lift(other) - self

    def scale(self, s: ScalarLike) -> "WeylElement":
        s = Scalar.coerce(s)
        if s.is_zero():
            return WeylElement.zero(self.presentation)
        return WeylElement._raw(self.presentation, {m: c * s for m, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, WeylElement):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        self._check(other)
        acc: Dict[Monomial, Scalar] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                c12 = c1 * c2
                for k, m in monomial_product(m1, m2):
                    v = c12 * k if k != 1 else c12
                    prev = acc.get(m)
                    acc[m] = v if prev is None else prev + v
        return WeylElement._raw(self.presentation, {m: c for m, c in acc.items() if not c.is_zero()})

    def __rmul__(self, other):
        # scalars commute with everything
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    def __truediv__(self, other):
        return self.scale(Scalar.coerce(other).inv())

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are defined")
        result = WeylElement.constant(1, self.presentation)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def star(self) -> "WeylElement":
        """The involution: antilinear anti-automorphism."""
        kind = self.presentation.kind
        acc: Dict[Monomial, Scalar] = {}
        for m, c in self.terms.items():
            cc = c.conj()
            for k, mono in _star_monomial(kind, m):
                v = cc * k
                prev = acc.get(mono)
                acc[mono] = v if prev is None else prev + v
        return WeylElement._raw(self.presentation, {m: c for m, c in acc.items() if not c.is_zero()})

    def conj_coefficients(self) -> "WeylElement":
        return WeylElement._raw(self.presentation, {m: c.conj() for m, c in self.terms.items()})

    # -- equality -----------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, WeylElement):
            return self.presentation == other.presentation and self.terms == other.terms
        if isinstance(other, (int, Scalar)) or hasattr(other, "denominator"):
            return self == self._lift(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.presentation, frozenset(self.terms.items())))
        return self._hash

    # -- text ---------------------------------------------------------------

    def __str__(self):
        return format_element(self)

    def __repr__(self):
        return f"WeylElement({format_element(self)!r})"


# -- text format -------------------------------------------------------------


def format_monomial(m: Monomial, presentation: Presentation) -> str:
    parts = []
    for names, exps in ((presentation.left_names, m.alpha), (presentation.right_names, m.beta)):
        for name, e in zip(names, exps):
            if e:
                parts.append(f"{name}^{e}")
    return " ".join(parts)


def format_element(u: WeylElement) -> str:
    """Canonical text: ``(3/2) X^2 Y^1`` style terms in graded-lex order."""
    if u.is_zero():
        return "0"
    pieces = []
    for m in u.support():
        coef = format_scalar(u.terms[m])
        mono = format_monomial(m, u.presentation)
        pieces.append(f"({coef})" + (f" {mono}" if mono else ""))
    return " + ".join(pieces)


def parse_element(text: str, presentation: Presentation = PM1) -> WeylElement:
    """Parse a Weyl element; products may be written in any order."""
    from .parsing import parse_expression

    gens = {}
    for k, name in enumerate(presentation.left_names):
        gens[name] = WeylElement.left(k, presentation)
    for k, name in enumerate(presentation.right_names):
        gens[name] = WeylElement.right(k, presentation)

    def generator(name):
        if name in gens:
            return gens[name]
        # allow run-together single-letter generators such as "XY"
        if presentation.kind == POSITION_MOMENTUM and presentation.d == 1 and set(name) <= {"X", "Y"}:
            out = WeylElement.constant(1, presentation)
            for ch in name:
                out = out * gens[ch]
            return out
        return None

    return parse_expression(
        text, lambda s: WeylElement.constant(s, presentation), generator
    )


# -- standard elements -------------------------------------------------------


def X(k: int = 0, d: int = 1) -> WeylElement:
    return WeylElement.left(k, Presentation(POSITION_MOMENTUM, d))


def Y(k: int = 0, d: int = 1) -> WeylElement:
    return WeylElement.right(k, Presentation(POSITION_MOMENTUM, d))


def a_star() -> WeylElement:
    return WeylElement.left(0, LADDER1)


def a() -> WeylElement:
    return WeylElement.right(0, LADDER1)


def number_operator(presentation: Presentation = PM1) -> WeylElement:
    """N = sum_i (X_i^2 - Y_i^2 - 1)/2, which is a* a in the ladder presentation."""
    if presentation.kind == LADDER:
        return a_star() * a()
    d = presentation.d
    total = WeylElement.zero(presentation)
    for k in range(d):
        xk = WeylElement.left(k, presentation)
        yk = WeylElement.right(k, presentation)
        total = total + (xk * xk - yk * yk - 1) / 2
    return total


# -- leading symbol ----------------------------------------------------------


@dataclass(frozen=True)
class CommutativePolynomial:
    """Polynomial in commuting variables (X_1..X_d, xi_1..xi_d) over Q(i, sqrt 2)."""

    d: int
    terms: Dict[Monomial, Scalar] = field(default_factory=dict)

    def __mul__(self, other: "CommutativePolynomial") -> "CommutativePolynomial":
        acc: Dict[Monomial, Scalar] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = Monomial(
                    tuple(x + y for x, y in zip(m1.alpha, m2.alpha)),
                    tuple(x + y for x, y in zip(m1.beta, m2.beta)),
                )
                acc[m] = acc.get(m, ZERO) + c1 * c2
        return CommutativePolynomial(self.d, {m: c for m, c in acc.items() if not c.is_zero()})

    def __eq__(self, other):
        if not isinstance(other, CommutativePolynomial):
            return NotImplemented
        return self.d == other.d and self.terms == other.terms

    def substitute_i_xi(self) -> "CommutativePolynomial":
        """Replace xi by i*xi."""
        out = {}
        for m, c in self.terms.items():
            out[m] = c * (I ** (sum(m.beta) % 4))
        return CommutativePolynomial(self.d, out)

    def is_real(self) -> bool:
        return all(c.is_real() for c in self.terms.values())

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at rows of ``points`` laid out as (X_1..X_d, xi_1..xi_d)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(points.shape[0], dtype=complex)
        d = self.d
        for m, c in self.terms.items():
            val = np.full(points.shape[0], c.to_float())
            for k in range(d):
                if m.alpha[k]:
                    val = val * points[:, k] ** m.alpha[k]
                if m.beta[k]:
                    val = val * points[:, d + k] ** m.beta[k]
            out += val
        return out

    def __str__(self):
        if not self.terms:
            return "0"
        names_x = ["X"] if self.d == 1 else [f"X{k + 1}" for k in range(self.d)]
        names_xi = ["xi"] if self.d == 1 else [f"xi{k + 1}" for k in range(self.d)]
        pieces = []
        for m in sorted(self.terms, key=monomial_key):
            mono = " ".join(
                f"{n}^{e}" for n, e in zip(names_x + names_xi, m.alpha + m.beta) if e
            )
            pieces.append(f"({format_scalar(self.terms[m])})" + (f" {mono}" if mono else ""))
        return " + ".join(pieces)


def leading_symbol(c: WeylElement) -> CommutativePolynomial:
    if c.is_zero():
        raise ZeroElement("the zero element has no leading symbol")
    if c.presentation.kind != POSITION_MOMENTUM:
        raise ValueError("leading symbols are defined in the position-momentum presentation")
    top = c.degree
    return CommutativePolynomial(
        c.presentation.d, {m: s for m, s in c.terms.items() if m.degree == top}
    )


@dataclass(frozen=True)
class SymbolCheck:
    passed: bool
    point: Optional[Tuple[float, ...]] = None
    value: Optional[float] = None
    samples: int = 0

    def __str__(self):
        if self.passed:
            return f"PassedHeuristic({self.samples} samples)"
        return f"FailedAt({self.point})"


def _sphere_points(dim: int, samples: int, seed: int) -> np.ndarray:
    from scipy.special import ndtri
    from scipy.stats import qmc

    axes = []
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        axes.append(e)
        axes.append(-e)
    pts = np.array(axes)
    rest = samples - len(pts)
    if rest > 0:
        u = qmc.Halton(d=dim, scramble=True, seed=seed).random(rest)
        g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        pts = np.vstack([pts, g])
    return pts[:samples] if samples >= 1 else pts[:0]


def symbol_positivity_sample(c: WeylElement, samples: int = 10_000, seed: int = 0) -> SymbolCheck:
    """Screen the strict positivity of the symbol ``c̄(X, i xi)`` on the unit sphere.

    Coordinate axis points are tried first, then scrambled Halton points
    pushed onto the sphere. Diagnostic only; a pass proves nothing.
    """
    sym = leading_symbol(c).substitute_i_xi()
    pts = _sphere_points(2 * c.presentation.d, samples, seed)
    vals = sym.evaluate(pts).real
    bad = np.nonzero(vals <= 0.0)[0]
    if bad.size:
        j = int(bad[0])
        return SymbolCheck(False, tuple(float(x) + 0.0 for x in pts[j]), float(vals[j]), len(pts))
    return SymbolCheck(True, samples=len(pts))


# -- multidegree (d = 1) -----------------------------------------------------


@dataclass(frozen=True)
class Multidegree:
    d1: int
    d2: int
    gamma: Dict[Tuple[int, int], Scalar]
    f_top: List[Scalar]  # coefficients of f_{d2}(p), low to high
    g_top: List[Scalar]  # coefficients of g_{d1}(q), low to high

    @property
    def corner(self) -> Scalar:
        """The coefficient gamma_{d1, d2}."""
        return self.gamma.get((self.d1, self.d2), ZERO)


def multidegree(c: WeylElement) -> Multidegree:
    """Rewrite ``c`` as sum gamma_{jl} p^j q^l with p = -iY, q = X (p left of q)."""
    if c.is_zero():
        raise ZeroElement("the zero element has no multidegree")
    if c.presentation != PM1:
        raise ValueError("multidegree is defined for W(1) in the position-momentum presentation")
    gamma: Dict[Tuple[int, int], Scalar] = {}
    for m, coef in c.terms.items():
        a_, b_ = m.alpha[0], m.beta[0]
        # X^a Y^b = sum_t (-1)^t t! C(a,t) C(b,t) Y^(b-t) X^(a-t), and Y = i p
        for t in range(min(a_, b_) + 1):
            k = (-1) ** t * math.factorial(t) * math.comb(a_, t) * math.comb(b_, t)
            j, l = b_ - t, a_ - t
            val = coef * k * (I ** (j % 4))
            key = (j, l)
            gamma[key] = gamma.get(key, ZERO) + val
    gamma = {k: v for k, v in gamma.items() if not v.is_zero()}
    d1 = max(j for j, _ in gamma)
    d2 = max(l for _, l in gamma)
    f_top = [gamma.get((j, d2), ZERO) for j in range(d1 + 1)]
    g_top = [gamma.get((d1, l), ZERO) for l in range(d2 + 1)]
    while len(f_top) > 1 and f_top[-1].is_zero():
        f_top.pop()
    while len(g_top) > 1 and g_top[-1].is_zero():
        g_top.pop()
    return Multidegree(d1, d2, gamma, f_top, g_top)


# -- change of generators (d = 1) --------------------------------------------


def _substitute(c: WeylElement, target: Presentation, left: WeylElement, right: WeylElement):
    left_pows = [WeylElement.constant(1, target)]
    right_pows = [WeylElement.constant(1, target)]
    out = WeylElement.zero(target)
    for m, coef in c.terms.items():
        a_, b_ = m.alpha[0], m.beta[0]
        while len(left_pows) <= a_:
            left_pows.append(left_pows[-1] * left)
        while len(right_pows) <= b_:
            right_pows.append(right_pows[-1] * right)
        out = out + (left_pows[a_] * right_pows[b_]).scale(coef)
    return out


_INV_SQRT2 = SQRT2.inv()


def to_ladder(c: WeylElement) -> WeylElement:
    """Rewrite a W(1) element in a, a* via X = (a + a*)/sqrt2, Y = (a - a*)/sqrt2."""
    if c.presentation == LADDER1:
        return c
    if c.presentation != PM1:
        raise PresentationMismatch("to_ladder needs a W(1) position-momentum element")
    x = (a() + a_star()).scale(_INV_SQRT2)
    y = (a() - a_star()).scale(_INV_SQRT2)
    return _substitute(c, LADDER1, x, y)


def from_ladder(c: WeylElement) -> WeylElement:
    """Inverse of :func:`to_ladder`: a* = (X - Y)/sqrt2, a = (X + Y)/sqrt2."""
    if c.presentation == PM1:
        return c
    if c.presentation != LADDER1:
        raise PresentationMismatch("from_ladder needs a ladder element")
    ast = (X() - Y()).scale(_INV_SQRT2)
    an = (X() + Y()).scale(_INV_SQRT2)
    return _substitute(c, PM1, ast, an)


def to_presentation(c: WeylElement, presentation: Presentation) -> WeylElement:
    if c.presentation == presentation:
        return c
    if presentation == LADDER1:
        return to_ladder(c)
    if presentation == PM1:
        return from_ladder(c)
    raise PresentationMismatch(f"cannot convert {c.presentation} to {presentation}")


def sum_elements(items: Iterable[WeylElement], presentation: Presentation = PM1) -> WeylElement:
    total = WeylElement.zero(presentation)
    for u in items:
        total = total + u
    return total
