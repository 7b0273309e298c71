"""Noncommutative Newton polygons for W(1) and monomial basis selection.

All geometry is on exact integer points; the hull is Andrew's monotone
chain and containment tests are exact cross-product signs (closed sets).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Iterable, List, Sequence, Set, Tuple

from .weyl import Monomial, WeylElement, monomial_key

Point = Tuple[int, int]


@dataclass(frozen=True)
class LatticePolygon:
    """Convex lattice polygon given by its extreme points, counterclockwise."""

    vertices: Tuple[Point, ...] = ()

    def is_empty(self) -> bool:
        return not self.vertices

    def contains(self, p: Point) -> bool:
        v = self.vertices
        if not v:
            return False
        if len(v) == 1:
            return p == v[0]
        if len(v) == 2:
            return cross(v[0], v[1], p) == 0 and _between(v[0], v[1], p)
        return all(cross(v[i], v[(i + 1) % len(v)], p) >= 0 for i in range(len(v)))

    def __eq__(self, other):
        if not isinstance(other, LatticePolygon):
            return NotImplemented
        return _canonical(self.vertices) == _canonical(other.vertices)

    def __hash__(self):
        return hash(_canonical(self.vertices))


def _canonical(vs):
    if not vs:
        return ()
    k = vs.index(min(vs))
    return tuple(vs[k:]) + tuple(vs[:k])


def _between(a: Point, b: Point, p: Point) -> bool:
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def cross(o: Point, a: Point, b: Point) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Iterable[Point]) -> LatticePolygon:
    pts = sorted(set((int(x), int(y)) for x, y in points))
    if len(pts) <= 2:
        return LatticePolygon(tuple(pts))
    lower: List[Point] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: List[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return LatticePolygon(tuple(lower[:-1] + upper[:-1]))


def _require_d1(c: WeylElement):
    if c.presentation.d != 1:
        raise ValueError("Newton polygons are implemented for W(1) only")


def expanded_support(c: WeylElement) -> Set[Point]:
    """Exponent support with every (a, b) widened to (a-k, b-k), k <= min(a, b)."""
    _require_d1(c)
    out: Set[Point] = set()
    for m in c.terms:
        a, b = m.alpha[0], m.beta[0]
        for k in range(min(a, b) + 1):
            out.add((a - k, b - k))
    return out


def newton_prime(c: WeylElement) -> LatticePolygon:
    return convex_hull(expanded_support(c))


def minkowski_sum(p: LatticePolygon, q: LatticePolygon) -> LatticePolygon:
    """Minkowski sum of convex polygons by merging edge vectors in angular order."""
    if p.is_empty() or q.is_empty():
        return LatticePolygon()
    P, Q = _start_lowest(p.vertices), _start_lowest(q.vertices)
    if len(P) < 3 or len(Q) < 3:
        # degenerate pieces: the hull of pairwise sums is exact and cheap here
        return convex_hull((a[0] + b[0], a[1] + b[1]) for a in P for b in Q)
    n, m = len(P), len(Q)
    out = []
    i = j = 0
    while i < n or j < m:
        out.append((P[i % n][0] + Q[j % m][0], P[i % n][1] + Q[j % m][1]))
        ep = _sub(P[(i + 1) % n], P[i % n])
        eq = _sub(Q[(j + 1) % m], Q[j % m])
        turn = ep[0] * eq[1] - ep[1] * eq[0]
        if turn >= 0 and i < n:
            i += 1
        if turn <= 0 and j < m:
            j += 1
    return convex_hull(out)


def _sub(a: Point, b: Point) -> Point:
    return (a[0] - b[0], a[1] - b[1])


def _start_lowest(vs: Sequence[Point]) -> Tuple[Point, ...]:
    k = min(range(len(vs)), key=lambda i: (vs[i][1], vs[i][0]))
    return tuple(vs[k:]) + tuple(vs[:k])


@dataclass(frozen=True)
class BasisSpec:
    """Ordered, duplicate-free list of monomials."""

    monomials: Tuple[Monomial, ...]

    def __post_init__(self):
        if len(set(self.monomials)) != len(self.monomials):
            raise ValueError("basis contains duplicate monomials")

    def __len__(self):
        return len(self.monomials)

    def __iter__(self):
        return iter(self.monomials)

    def __getitem__(self, i):
        return self.monomials[i]

    @classmethod
    def from_exponents(cls, pairs: Iterable[Tuple[int, int]]) -> "BasisSpec":
        """Basis of W(1) monomials X^a Y^b given as (a, b) pairs, order kept."""
        return cls(tuple(Monomial((a,), (b,)) for a, b in pairs))

    def sorted(self) -> "BasisSpec":
        return BasisSpec(tuple(sorted(self.monomials, key=monomial_key)))


def half_polytope_basis(P: LatticePolygon) -> BasisSpec:
    """Monomials X^a Y^b with (2a, 2b) in P, graded-lex ordered."""
    if P.is_empty():
        return BasisSpec(())
    xs = [v[0] for v in P.vertices]
    ys = [v[1] for v in P.vertices]
    out = []
    for a in range(max(0, math.ceil(min(xs) / 2)), max(xs) // 2 + 1):
        for b in range(max(0, math.ceil(min(ys) / 2)), max(ys) // 2 + 1):
            if P.contains((2 * a, 2 * b)):
                out.append(Monomial((a,), (b,)))
    return BasisSpec(tuple(sorted(out, key=monomial_key)))


def dense_basis(maxdeg: int, d: int = 1) -> BasisSpec:
    """All monomials of total degree <= maxdeg in 2d generators."""
    out = []
    for deg in range(maxdeg + 1):
        for combo in combinations_with_replacement(range(2 * d), deg):
            exps = [0] * (2 * d)
            for g in combo:
                exps[g] += 1
            out.append(Monomial(tuple(exps[:d]), tuple(exps[d:])))
    return BasisSpec(tuple(sorted(out, key=monomial_key)))
