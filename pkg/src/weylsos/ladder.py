"""Denominator ladders: mu_k(c, s) for growing products b_k = s_1 ... s_k.

For each level the driver picks a monomial basis, compiles
``b_k^*(c - mu)b_k = v^H Z v`` with :mod:`weylsos.gram`, solves the SDP and
records the bound. The stopping rule returns the first strict local maximum
of the computed sequence.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple, Union

from . import gram, sdp
from .newton import BasisSpec, convex_hull, dense_basis, expanded_support, half_polytope_basis
from .scalar import I, Scalar, ScalarLike
from .weyl import PM1, WeylElement, X, number_operator, to_presentation

log = logging.getLogger(__name__)


class LadderError(ValueError):
    pass


class OddDegree(LadderError):
    pass


class EmptyList(LadderError):
    pass


class ZeroReference(LadderError):
    pass


FAMILY_KINDS = ("affine", "one_plus_x2", "number_op", "two_n_plus_one", "custom")


@dataclass(frozen=True)
class DenominatorFamily:
    """Factors s_1, s_2, ... whose running products are the denominators.

    ``number_op`` uses s_k = N + (m_k + alpha) with m_k cycling through ``m``;
    a single entry gives a constant sequence, a window of integers gives the
    round-robin enumeration.
    """

    kind: str
    a: Scalar = Scalar(-1)
    alpha: Fraction = Fraction(1, 2)
    m: Tuple[int, ...] = (0,)
    factors: Tuple[WeylElement, ...] = ()

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == "number_op" and not self.m:
            raise ValueError("number_op needs a nonempty m sequence")

    @classmethod
    def affine(cls, a: ScalarLike = -1) -> "DenominatorFamily":
        return cls("affine", a=Scalar.coerce(a))

    @classmethod
    def one_plus_x2(cls) -> "DenominatorFamily":
        return cls("one_plus_x2")

    @classmethod
    def number_op(cls, alpha=Fraction(1, 2), m: Sequence[int] = (0,)) -> "DenominatorFamily":
        return cls("number_op", alpha=Fraction(alpha), m=tuple(int(v) for v in m))

    @classmethod
    def two_n_plus_one(cls) -> "DenominatorFamily":
        return cls("two_n_plus_one")

    @classmethod
    def custom(cls, factors: Sequence[WeylElement]) -> "DenominatorFamily":
        return cls("custom", factors=tuple(factors))

    def m_k(self, k: int) -> int:
        return self.m[(k - 1) % len(self.m)]

    def factor(self, k: int, presentation=PM1) -> WeylElement:
        """s_k for k >= 1, expressed in ``presentation``."""
        if k < 1:
            raise ValueError("factors are indexed from 1")
        one = WeylElement.constant(1, presentation)
        if self.kind == "affine":
            s = X().scale(self.a) + WeylElement.constant(I)
            return to_presentation(s, presentation)
        if self.kind == "one_plus_x2":
            return to_presentation(X() * X() + 1, presentation)
        if self.kind == "number_op":
            return number_operator(presentation) + one.scale(Scalar(self.m_k(k) + self.alpha))
        if self.kind == "two_n_plus_one":
            return number_operator(presentation) * 2 + one
        if k > len(self.factors):
            raise ValueError(f"custom family has only {len(self.factors)} factors")
        return to_presentation(self.factors[k - 1], presentation)

    def denominator(self, k: int, presentation=PM1) -> WeylElement:
        b = WeylElement.constant(1, presentation)
        for j in range(1, k + 1):
            b = b * self.factor(j, presentation)
        return b


@dataclass
class LadderOptions:
    feas_tol: float = 1e-9
    gap_tol: float = 1e-9
    max_iter: int = 100
    solver: str = "embedded"  # or "external:<command template>"
    embedding: str = "auto"
    stop_on_trouble: bool = False
    prune: bool = True

    def sdp_options(self) -> sdp.SolverOptions:
        return sdp.SolverOptions(self.feas_tol, self.gap_tol, self.max_iter)


@dataclass
class LadderStep:
    k: int
    mu: float
    status: str
    n_basis: int
    n_words: int
    n_rows: int = 0
    n_pruned: int = 0
    block_sizes: List[int] = field(default_factory=list)
    iterations: int = 0
    gap: float = math.nan
    primal_infeasibility: float = math.nan
    dual_infeasibility: float = math.nan
    residual: float = math.nan
    min_eigenvalue: float = math.nan
    seconds: float = 0.0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == sdp.Status.OPTIMAL.value


@dataclass
class LadderResult:
    steps: List[LadderStep]
    chosen: Optional[int]
    estimate: Optional[float]  # None means Unknown

    @property
    def mus(self) -> List[float]:
        return [s.mu for s in self.steps]

    @property
    def n_k(self) -> List[int]:
        return [s.n_basis for s in self.steps]

    @property
    def m_k(self) -> List[int]:
        return [s.n_words for s in self.steps]

    @property
    def best(self) -> float:
        return self.steps[self.chosen].mu if self.chosen is not None else math.nan

    def to_dict(self) -> dict:
        return {
            "steps": [s.__dict__ for s in self.steps],
            "chosen": self.chosen,
            "best": self.best,
            "estimate": self.estimate,
        }


# -- single level ------------------------------------------------------------


def solve_gram(p: gram.GramProblem, opts: LadderOptions):
    """Realify and solve one GramProblem. Returns (mu, step fields, Z blocks)."""
    ex = gram.realify_exact(p, opts.embedding)
    P = ex.to_sdp()
    if opts.solver == "embedded":
        sol = sdp.solve(P, opts.sdp_options())
    elif opts.solver.startswith("external:"):
        sol = sdp.solve_external(P, opts.solver[len("external:"):], opts.sdp_options())
    else:
        raise ValueError(f"unknown solver {opts.solver!r}")
    mu = P.mu(sol)
    Z = ex.gram_from_realified(sol.X)
    cert = gram.certify(p, Z, mu)
    info = dict(
        n_rows=len(ex.rows),
        iterations=sol.iterations,
        gap=sol.gap,
        primal_infeasibility=sol.primal_infeasibility,
        dual_infeasibility=sol.dual_infeasibility,
        residual=cert.residual,
        min_eigenvalue=cert.min_eigenvalue,
    )
    return mu, sol.status.value, info, Z


def evaluate(k: int, p: gram.GramProblem, opts: LadderOptions) -> LadderStep:
    t0 = time.perf_counter()
    step = LadderStep(k, math.nan, "", p.n_basis, p.n_words, block_sizes=p.block_sizes)
    try:
        if opts.prune:
            p, removed = gram.prune_forced_zero(p)
            step.n_pruned = len(removed)
            step.block_sizes = p.block_sizes
        mu, status, info, _ = solve_gram(p, opts)
        step.mu, step.status = mu, status
        for key, v in info.items():
            setattr(step, key, v)
    except gram.InconsistentSystem as exc:
        # some word of the target cannot be produced by the basis
        step.status = sdp.Status.INFEASIBLE.value
        step.message = str(exc)
    step.seconds = time.perf_counter() - t0
    log.info("k=%d mu=%.12g status=%s (%.2fs)", k, step.mu, step.status, step.seconds)
    return step


def run_levels(build: Callable[[int], gram.GramProblem], k_max: int, opts: LadderOptions) -> LadderResult:
    steps: List[LadderStep] = []
    for k in range(k_max + 1):
        step = evaluate(k, build(k), opts)
        steps.append(step)
        if opts.stop_on_trouble and not step.optimal:
            break
    mus = []
    for s in steps:
        if not math.isfinite(s.mu):
            break
        mus.append(s.mu)
    if mus:
        chosen, estimate = stop_select(mus)
    else:
        chosen, estimate = None, None
    return LadderResult(steps, chosen, estimate)


# -- driver ------------------------------------------------------------------

BasisMode = Union[str, Sequence[BasisSpec]]


def polytope_basis(target: WeylElement, mu_carrier: WeylElement) -> BasisSpec:
    """Half of N'(target) joined with the mu-carrier support."""
    pts = expanded_support(target) | expanded_support(mu_carrier)
    return half_polytope_basis(convex_hull(pts))


def build_level(
    c: WeylElement,
    fam: DenominatorFamily,
    k: int,
    basis_mode: BasisMode = "dense",
    grading: Optional[gram.Grading] = None,
) -> gram.GramProblem:
    pres = c.presentation
    b = fam.denominator(k, pres)
    one = WeylElement.constant(1, pres)
    if isinstance(basis_mode, str):
        if basis_mode == "dense":
            deg = int(b.degree) + int(c.degree) // 2
            basis = dense_basis(deg, pres.d)
        elif basis_mode == "polytope":
            if pres != PM1:
                raise LadderError("polytope bases need the position-momentum presentation of W(1)")
            bs = b.star()
            basis = polytope_basis(bs * c * b, bs * b)
        else:
            raise LadderError(f"unknown basis mode {basis_mode!r}")
    else:
        basis = basis_mode[k]
    p = gram.build(c, b, [(basis, one)])
    if grading is not None:
        p = gram.block_diagonalize(p, grading)
    return p


def run(
    c: WeylElement,
    fam: DenominatorFamily,
    k_max: int,
    basis_mode: BasisMode = "dense",
    grading: Optional[gram.Grading] = None,
    opts: Optional[LadderOptions] = None,
) -> LadderResult:
    if c.star() != c:
        raise gram.NotHermitian("c is not hermitian")
    if c.is_zero() or int(c.degree) % 2:
        raise OddDegree(f"c must have even total degree, got {c.degree}")
    if not isinstance(basis_mode, str) and len(basis_mode) < k_max + 1:
        raise LadderError(f"need {k_max + 1} explicit bases, got {len(basis_mode)}")
    opts = opts or LadderOptions()
    return run_levels(lambda k: build_level(c, fam, k, basis_mode, grading), k_max, opts)


def stop_select(mus: Sequence[float]) -> Tuple[int, Optional[float]]:
    """First strict local maximum of the increasing prefix, with its gap estimate.

    Returns ``(l, None)`` when the sequence never turns down.
    """
    if not mus:
        raise EmptyList("no values to select from")
    for l in range(len(mus) - 1):
        if mus[l + 1] < mus[l]:
            if l == 0:
                return 0, mus[0] - mus[1]
            return l, min(mus[l] - mus[l - 1], mus[l] - mus[l + 1])
        if mus[l + 1] == mus[l]:
            # the strictly increasing prefix ends without a downturn
            return l, None
    return len(mus) - 1, None


def series_csv(result: LadderResult, reference: float) -> str:
    """``k,mu,log10_rel_err`` for every Optimal step."""
    if reference == 0:
        raise ZeroReference("reference value must be nonzero")
    lines = ["k,mu,log10_rel_err"]
    for s in result.steps:
        if not s.optimal:
            continue
        rel = abs((reference - s.mu) / reference)
        err = "-inf" if rel == 0 else f"{math.log10(rel):.12g}"
        lines.append(f"{s.k},{s.mu:.12g},{err}")
    return "\n".join(lines) + "\n"


def symplectic_rescale(c: WeylElement, lam: ScalarLike) -> WeylElement:
    """X -> lam X, Y -> Y / lam; keeps YX - XY = 1. Diagnostic only."""
    if c.presentation != PM1:
        raise LadderError("rescaling is defined on the position-momentum presentation")
    lam = Scalar.coerce(lam)
    inv = lam.inv()
    out = {}
    for m, coef in c.terms.items():
        out[m] = coef * lam ** m.alpha[0] * inv ** m.beta[0]
    return WeylElement(PM1, out)


def shifted_bases(k_max: int) -> List[BasisSpec]:
    """v_k = (1, X, ..., X^{k+2}, Y, XY, ..., X^k Y)."""
    return [
        BasisSpec.from_exponents([(a, 0) for a in range(k + 3)] + [(a, 1) for a in range(k + 1)])
        for k in range(k_max + 1)
    ]

