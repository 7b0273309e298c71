"""Compile hermitian-square identities into exact linear constraint data.

The identity being compiled is

    target - mu * mu_carrier = sum_blocks sum_ij Z_ij * (m_i^* weight m_j)

with one hermitian PSD matrix ``Z`` per block. ``target = b^* c b`` and
``mu_carrier = b^* w b`` for a denominator ``b`` and a hermitian weight ``w``
(usually 1). Everything up to the final float conversion is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .newton import BasisSpec
from .scalar import I, ONE, ZERO, Scalar
from .sdp import SdpProblem, extract_hermitian
from .weyl import Monomial, WeylElement, monomial_key


class GramError(ValueError):
    pass


class NotHermitian(GramError):
    pass


class ZeroDenominator(GramError):
    pass


class NotInvariant(GramError):
    pass


class PivotZero(GramError):
    pass


class ShapeMismatch(GramError):
    pass


class InconsistentSystem(GramError):
    """The target has a word that no Gram matrix can produce."""


@dataclass(frozen=True)
class Block:
    basis: BasisSpec
    weight: WeylElement
    label: str = ""

    def __len__(self):
        return len(self.basis)


@dataclass
class GramProblem:
    target: WeylElement
    mu_carrier: WeylElement
    blocks: List[Block]
    # expansions[b][(i, j)] = m_i^* . weight . m_j, for every ordered pair
    expansions: List[Dict[Tuple[int, int], WeylElement]]
    words: List[Monomial]

    @property
    def presentation(self):
        return self.target.presentation

    @property
    def block_sizes(self) -> List[int]:
        return [len(b) for b in self.blocks]

    @property
    def n_basis(self) -> int:
        return sum(self.block_sizes)

    @property
    def n_words(self) -> int:
        return len(self.words)

    def structure(self, word, block: int) -> np.ndarray:
        """Complex matrix T^(w) of one block: T_ij = coefficient of w in m_i^* w m_j."""
        word = Monomial(tuple(word[0]), tuple(word[1]))
        n = len(self.blocks[block])
        T = np.zeros((n, n), dtype=complex)
        for (i, j), e in self.expansions[block].items():
            c = e.terms.get(word)
            if c is not None:
                T[i, j] = c.to_float()
        return T

    def structure_exact(self, word, block: int) -> Dict[Tuple[int, int], Scalar]:
        word = Monomial(tuple(word[0]), tuple(word[1]))
        out = {}
        for ij, e in self.expansions[block].items():
            c = e.terms.get(word)
            if c is not None:
                out[ij] = c
        return out

    def is_real(self) -> bool:
        if not (self.target.is_real() and self.mu_carrier.is_real()):
            return False
        return all(e.is_real() for exp in self.expansions for e in exp.values())

    def n_gram_unknowns(self) -> int:
        """Upper-triangle entries over all blocks (real count of a real Gram matrix)."""
        return sum(n * (n + 1) // 2 for n in self.block_sizes)


def _expand_block(basis: BasisSpec, weight: WeylElement) -> Dict[Tuple[int, int], WeylElement]:
    pres = weight.presentation
    monos = [WeylElement(pres, {m: ONE}) for m in basis]
    stars = [u.star() for u in monos]
    hermitian_weight = weight.star() == weight
    out: Dict[Tuple[int, int], WeylElement] = {}
    n = len(monos)
    for i in range(n):
        left = stars[i] * weight
        for j in range(i, n):
            e = left * monos[j]
            out[(i, j)] = e
            if i != j:
                out[(j, i)] = e.star() if hermitian_weight else stars[j] * weight * monos[i]
    return out


def build_from_elements(
    target: WeylElement,
    mu_carrier: WeylElement,
    blocks: Sequence[Tuple[BasisSpec, WeylElement]],
    labels: Optional[Sequence[str]] = None,
) -> GramProblem:
    """Assemble a GramProblem for an already-conjugated target and mu carrier."""
    if target.star() != target:
        raise NotHermitian("target is not hermitian")
    if mu_carrier.star() != mu_carrier:
        raise NotHermitian("mu carrier is not hermitian")
    blks = []
    for k, (basis, weight) in enumerate(blocks):
        if not isinstance(basis, BasisSpec):
            basis = BasisSpec(tuple(basis))
        if weight.star() != weight:
            raise NotHermitian(f"weight of block {k} is not hermitian")
        blks.append(Block(basis, weight, labels[k] if labels else ""))
    expansions = [_expand_block(b.basis, b.weight) for b in blks]
    words = set(target.terms) | set(mu_carrier.terms)
    for exp in expansions:
        for e in exp.values():
            words.update(e.terms)
    return GramProblem(target, mu_carrier, blks, expansions, sorted(words, key=monomial_key))


def build(
    c: WeylElement,
    b: WeylElement,
    blocks: Sequence[Tuple[BasisSpec, WeylElement]],
    mu_weight: Optional[WeylElement] = None,
) -> GramProblem:
    """GramProblem for ``b^*(c - mu w)b`` with ``w = mu_weight`` (default 1)."""
    if c.star() != c:
        raise NotHermitian("c is not hermitian")
    if b.is_zero():
        raise ZeroDenominator("denominator is zero")
    if mu_weight is None:
        mu_weight = WeylElement.constant(1, c.presentation)
    bs = b.star()
    return build_from_elements(bs * c * b, bs * mu_weight * b, blocks)


# -- symmetry ----------------------------------------------------------------


@dataclass(frozen=True)
class Grading:
    """Z_n grading: monomial grade = sum alpha_k*left_k + sum beta_k*right_k mod n."""

    order: int
    left: Tuple[int, ...]
    right: Tuple[int, ...]

    def grade(self, m: Monomial) -> int:
        g = sum(a * w for a, w in zip(m.alpha, self.left)) + sum(b * w for b, w in zip(m.beta, self.right))
        return g % self.order

    def grades(self, u: WeylElement) -> set:
        return {self.grade(m) for m in u.terms}

    @classmethod
    def trivial(cls, d: int = 1) -> "Grading":
        return cls(1, (0,) * d, (0,) * d)

    @classmethod
    def ladder_z4(cls) -> "Grading":
        """rho(i): a -> i a, a* -> -i a* (X -> iY, Y -> iX in position-momentum form)."""
        return cls(4, (3,), (1,))


def block_diagonalize(p: GramProblem, g: Grading) -> GramProblem:
    """Split every block into grade classes; only equal-grade pairs may couple."""
    for name, u in (("target", p.target), ("mu carrier", p.mu_carrier)):
        bad = g.grades(u) - {0}
        if bad:
            raise NotInvariant(f"{name} has words of nonzero grade {sorted(bad)}")
    blocks: List[Block] = []
    expansions: List[Dict[Tuple[int, int], WeylElement]] = []
    for blk, exp in zip(p.blocks, p.expansions):
        if not blk.weight.is_zero() and g.grades(blk.weight) - {0}:
            raise NotInvariant("block weight is not grade zero")
        classes: Dict[int, List[int]] = {}
        for idx, m in enumerate(blk.basis):
            classes.setdefault(g.grade(m), []).append(idx)
        for grade in sorted(classes):
            idx = classes[grade]
            basis = BasisSpec(tuple(blk.basis[i] for i in idx))
            label = f"{blk.label}grade{grade}" if blk.label else f"grade{grade}"
            blocks.append(Block(basis, blk.weight, label))
            expansions.append(
                {(a, b): exp[(i, j)] for a, i in enumerate(idx) for b, j in enumerate(idx)}
            )
    words = set(p.target.terms) | set(p.mu_carrier.terms)
    for exp in expansions:
        for e in exp.values():
            words.update(e.terms)
    return GramProblem(p.target, p.mu_carrier, blocks, expansions, sorted(words, key=monomial_key))


# -- exact linear algebra ----------------------------------------------------

# Parameters of a hermitian block Z = P + iQ: ("p", blk, i, j) for i <= j and
# ("q", blk, i, j) for i < j.
Param = Tuple[str, int, int, int]


def _to_field(x: Scalar, rational: bool):
    return x.a if rational else x


def _reduce(row: dict, rhs, pivots: dict, pivot_rows: list):
    """Reduce ``row`` against echelon rows; returns the reduced (row, rhs)."""
    row = dict(row)
    changed = True
    while changed:
        changed = False
        hits = [c for c in row if c in pivots]
        for col in hits:
            coef = row.get(col)
            if coef is None:
                continue
            prow, prhs = pivot_rows[pivots[col]]
            factor = coef / prow[col]
            for k, v in prow.items():
                nv = row.get(k)
                nv = -factor * v if nv is None else nv - factor * v
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
            rhs = rhs - factor * prhs
            changed = True
    return row, rhs


def independent_rows(rows: Sequence[dict], rhs: Sequence, zero) -> Tuple[List[int], List[int]]:
    """Exact greedy selection of a maximal independent subset of ``rows``.

    Returns (kept indices, dropped indices). Raises InconsistentSystem when a
    dependent row's right-hand side disagrees.
    """
    pivots: Dict = {}
    pivot_rows: list = []
    kept, dropped = [], []
    for k, (row, b) in enumerate(zip(rows, rhs)):
        red, rb = _reduce(row, b, pivots, pivot_rows)
        if not red:
            if rb != zero and rb:
                raise InconsistentSystem(f"constraint {k} is inconsistent")
            dropped.append(k)
            continue
        col = min(red, key=lambda c: (len(str(red[c])), c))
        pivots[col] = len(pivot_rows)
        pivot_rows.append((red, rb))
        kept.append(k)
    return kept, dropped


@dataclass
class ExactSystem:
    """Exact realified data: rows . params = rhs, mu = offset - objective . params."""

    problem: GramProblem
    complex_embedding: bool
    rational: bool
    params: List[Param]
    rows: List[Dict[Param, object]]
    rhs: List[object]
    objective: Dict[Param, object]
    offset: object
    pivot_word: Monomial
    n_raw_rows: int
    rank_with_mu: int

    def matrix_sizes(self) -> List[int]:
        f = 2 if self.complex_embedding else 1
        return [f * n for n in self.problem.block_sizes]

    def param_values(self, Z_blocks: Sequence[Sequence[Sequence[Scalar]]]) -> Dict[Param, Scalar]:
        vals: Dict[Param, Scalar] = {}
        for b, Z in enumerate(Z_blocks):
            n = len(Z)
            for i in range(n):
                for j in range(i, n):
                    z = Scalar.coerce(Z[i][j])
                    vals[("p", b, i, j)] = z.real()
                    if i < j:
                        vals[("q", b, i, j)] = z.imag()
        return vals

    def evaluate(self, values: Dict[Param, Scalar]):
        """Exact residuals of every row and the implied mu for given params."""
        conv = (lambda s: Scalar.coerce(s).a) if self.rational else Scalar.coerce

        def dot(row):
            total = Fraction(0) if self.rational else ZERO
            for k, v in row.items():
                x = values.get(k)
                if x is not None:
                    total = total + v * conv(x)
            return total

        residuals = [dot(r) - b for r, b in zip(self.rows, self.rhs)]
        mu = self.offset - dot(self.objective)
        return residuals, mu

    def to_sdp(self, normalize: bool = True) -> SdpProblem:
        sizes = self.matrix_sizes()
        m = len(self.rows)
        A = [np.zeros((m, s, s)) for s in sizes]
        b = np.zeros(m)
        C = [np.zeros((s, s)) for s in sizes]
        for r, (row, rb) in enumerate(zip(self.rows, self.rhs)):
            for param, v in row.items():
                self._place(A, (r,), param, _float(v))
            b[r] = _float(rb)
        for param, v in self.objective.items():
            self._place(C, (), param, _float(v))
        scale = np.ones(m)
        if normalize and m:
            norms = np.sqrt(sum(np.einsum("kij,kij->k", Ab, Ab) for Ab in A))
            scale = np.where(norms > 0, norms, 1.0)
            for Ab in A:
                Ab /= scale[:, None, None]
            b = b / scale
        meta = {
            "words": str(self.problem.n_words),
            "basis": str(self.problem.n_basis),
            "embedding": "complex" if self.complex_embedding else "real",
        }
        return SdpProblem(sizes, C, A, b, offset=_float(self.offset), metadata=meta)

    def _place(self, mats, lead, param, v):
        kind, blk, i, j = param
        M = mats[blk]
        if not self.complex_embedding:
            if i == j:
                M[lead + (i, i)] += v
            else:
                M[lead + (i, j)] += v / 2
                M[lead + (j, i)] += v / 2
            return
        n = self.problem.block_sizes[blk]
        if kind == "p":
            if i == j:
                M[lead + (i, i)] += v / 2
                M[lead + (n + i, n + i)] += v / 2
            else:
                for (r, c) in ((i, j), (j, i), (n + i, n + j), (n + j, n + i)):
                    M[lead + (r, c)] += v / 4
        else:
            M[lead + (n + i, j)] += v / 4
            M[lead + (j, n + i)] += v / 4
            M[lead + (n + j, i)] -= v / 4
            M[lead + (i, n + j)] -= v / 4

    def gram_from_realified(self, W_blocks: Sequence[np.ndarray]) -> List[np.ndarray]:
        out = []
        for W, n in zip(W_blocks, self.problem.block_sizes):
            if self.complex_embedding:
                out.append(extract_hermitian(W))
            else:
                out.append(np.array(W, dtype=float))
        return out


def _float(v) -> float:
    if isinstance(v, Scalar):
        return v.to_float().real
    return float(v)


def _choose_pivot_word(p: GramProblem, pivot_word=None) -> Monomial:
    if pivot_word is not None:
        return Monomial(tuple(pivot_word[0]), tuple(pivot_word[1]))
    if not p.mu_carrier.terms:
        raise PivotZero("mu carrier is zero")
    return min(p.mu_carrier.terms, key=monomial_key)


def realify_exact(p: GramProblem, embedding: str = "auto", pivot_word=None) -> ExactSystem:
    """Exact real constraint system with mu eliminated through the pivot word.

    ``embedding``: "complex" always uses Z = P + iQ; "real" drops Q (valid only
    for real data); "auto" picks "real" when every coefficient is real.
    """
    if embedding not in ("auto", "real", "complex"):
        raise ValueError(f"unknown embedding {embedding!r}")
    real_data = p.is_real()
    if embedding == "real" and not real_data:
        raise GramError("real embedding requested for complex data")
    use_complex = embedding == "complex" or (embedding == "auto" and not real_data)

    rational = all(
        c.c == 0 and c.d == 0
        for u in [p.target, p.mu_carrier] + [e for exp in p.expansions for e in exp.values()]
        for c in u.terms.values()
    )
    zero = Fraction(0) if rational else ZERO

    # complex coefficient of each parameter in each word equation
    word_rows: Dict[Monomial, Dict[Param, Scalar]] = {}
    for blk, exp in enumerate(p.expansions):
        for (i, j), e in exp.items():
            if i == j:
                targets = ((("p", blk, i, i), ONE),)
            elif i < j:
                targets = ((("p", blk, i, j), ONE), (("q", blk, i, j), I))
            else:
                targets = ((("p", blk, j, i), ONE), (("q", blk, j, i), -I))
            for w, t in e.terms.items():
                row = word_rows.setdefault(w, {})
                for param, f in targets:
                    if param[0] == "q" and not use_complex:
                        continue
                    v = t * f if f is not ONE else t
                    prev = row.get(param)
                    row[param] = v if prev is None else prev + v

    pivot = _choose_pivot_word(p, pivot_word)

    raw_rows, raw_mu, raw_rhs, raw_tags = [], [], [], []
    for w in p.words:
        crow = word_rows.get(w, {})
        mu_c = p.mu_carrier.terms.get(w, ZERO)
        t_c = p.target.terms.get(w, ZERO)
        parts = [("re", Scalar.real), ("im", Scalar.imag)]
        for tag, part in parts:
            row = {}
            for k, v in crow.items():
                pv = part(v)
                if pv:
                    row[k] = _to_field(pv, rational)
            mu_v = _to_field(part(mu_c), rational)
            rhs_v = _to_field(part(t_c), rational)
            if not row and not mu_v and not rhs_v:
                continue
            raw_rows.append(row)
            raw_mu.append(mu_v)
            raw_rhs.append(rhs_v)
            raw_tags.append((w, tag))

    # rank of the full system including the mu column (diagnostic)
    mu_col = ("mu", -1, 0, 0)
    with_mu = [{**r, mu_col: m} if m else r for r, m in zip(raw_rows, raw_mu)]
    kept_mu, _ = independent_rows(with_mu, raw_rhs, zero)

    piv_idx = None
    for tag in ("re", "im"):
        for k, (w, t) in enumerate(raw_tags):
            if w == pivot and t == tag and raw_mu[k]:
                piv_idx = k
                break
        if piv_idx is not None:
            break
    if piv_idx is None:
        raise PivotZero(f"mu carrier has zero coefficient at pivot word {pivot}")

    prow, pmu, prhs = raw_rows[piv_idx], raw_mu[piv_idx], raw_rhs[piv_idx]
    elim_rows, elim_rhs = [], []
    for k, (row, mu_v, rhs_v) in enumerate(zip(raw_rows, raw_mu, raw_rhs)):
        if k == piv_idx:
            continue
        if mu_v:
            f = mu_v / pmu
            row = dict(row)
            for key, v in prow.items():
                nv = row.get(key)
                nv = -f * v if nv is None else nv - f * v
                if nv:
                    row[key] = nv
                else:
                    row.pop(key, None)
            rhs_v = rhs_v - f * prhs
        elim_rows.append(row)
        elim_rhs.append(rhs_v)

    kept, _ = independent_rows(elim_rows, elim_rhs, zero)
    rows = [elim_rows[k] for k in kept]
    rhs = [elim_rhs[k] for k in kept]
    objective = {k: v / pmu for k, v in prow.items()}
    offset = prhs / pmu

    params = sorted({k for r in rows for k in r} | set(objective))
    return ExactSystem(
        problem=p,
        complex_embedding=use_complex,
        rational=rational,
        params=params,
        rows=rows,
        rhs=rhs,
        objective=objective,
        offset=offset,
        pivot_word=pivot,
        n_raw_rows=len(raw_rows),
        rank_with_mu=len(kept_mu),
    )


def realify(p: GramProblem, embedding: str = "auto", pivot_word=None) -> SdpProblem:
    """Real standard-form SDP whose optimum gives ``mu = offset - objective``."""
    return realify_exact(p, embedding, pivot_word).to_sdp()


# -- certificates ------------------------------------------------------------


@dataclass
class CertificateReport:
    residual: float
    min_eigenvalues: List[float]
    worst_word: Optional[Monomial] = None

    @property
    def min_eigenvalue(self) -> float:
        return min(self.min_eigenvalues) if self.min_eigenvalues else 0.0


def gram_element_float(p: GramProblem, Z_blocks: Sequence[np.ndarray]) -> Dict[Monomial, complex]:
    acc: Dict[Monomial, complex] = {}
    for exp, Z in zip(p.expansions, Z_blocks):
        for (i, j), e in exp.items():
            z = Z[i, j]
            if z == 0:
                continue
            for w, c in e.terms.items():
                acc[w] = acc.get(w, 0.0) + z * c.to_float()
    return acc


def gram_element_exact(p: GramProblem, Z_blocks) -> WeylElement:
    total: Dict[Monomial, Scalar] = {}
    for exp, Z in zip(p.expansions, Z_blocks):
        for (i, j), e in exp.items():
            z = Scalar.coerce(Z[i][j])
            if z.is_zero():
                continue
            for w, c in e.terms.items():
                total[w] = total.get(w, ZERO) + z * c
    return WeylElement(p.presentation, total)


def certify(p: GramProblem, Z_blocks: Sequence[np.ndarray], mu: float) -> CertificateReport:
    """Max-norm coefficient residual of the identity, plus min eigenvalue per block."""
    if len(Z_blocks) != len(p.blocks):
        raise ShapeMismatch(f"expected {len(p.blocks)} blocks, got {len(Z_blocks)}")
    Zs = []
    for Z, blk in zip(Z_blocks, p.blocks):
        Z = np.asarray(Z)
        if Z.shape != (len(blk), len(blk)):
            raise ShapeMismatch(f"block shape {Z.shape} != {(len(blk), len(blk))}")
        Zs.append(Z)
    acc = gram_element_float(p, Zs)
    for w, c in p.target.terms.items():
        acc[w] = acc.get(w, 0.0) - c.to_float()
    for w, c in p.mu_carrier.terms.items():
        acc[w] = acc.get(w, 0.0) + mu * c.to_float()
    worst, res = None, 0.0
    for w, v in acc.items():
        if abs(v) > res:
            worst, res = w, abs(v)
    eigs = [float(np.linalg.eigvalsh((Z + Z.conj().T) / 2)[0]) if Z.size else 0.0 for Z in Zs]
    return CertificateReport(res, eigs, worst)


# -- exact pruning -----------------------------------------------------------


def prune_forced_zero(p: GramProblem) -> Tuple[GramProblem, List[Tuple[int, Monomial]]]:
    """Drop basis monomials whose diagonal Gram entry is forced to vanish.

    A word whose equation involves only diagonal entries, all with
    coefficients of one sign, and whose target and mu coefficients are zero
    pins those entries to 0. A PSD matrix with a zero diagonal entry has a
    zero row, so the monomial can be removed. Repeats until nothing changes.
    """
    removed: List[Tuple[int, Monomial]] = []
    keep = [list(range(len(b))) for b in p.blocks]
    while True:
        live = [set(k) for k in keep]
        contrib: Dict[Monomial, List[Tuple[int, int, int, Scalar]]] = {}
        for blk, exp in enumerate(p.expansions):
            for (i, j), e in exp.items():
                if i in live[blk] and j in live[blk]:
                    for w, c in e.terms.items():
                        contrib.setdefault(w, []).append((blk, i, j, c))
        kill = set()
        for w, items in contrib.items():
            if w in p.target.terms or w in p.mu_carrier.terms:
                continue
            if any(i != j for _, i, j, _ in items):
                continue
            signs = {c.a > 0 for _, _, _, c in items if c.is_real()}
            if len(signs) == 1 and all(c.is_real() for *_, c in items):
                kill.update((blk, i) for blk, i, _, _ in items)
        if not kill:
            break
        for blk, i in sorted(kill):
            removed.append((blk, p.blocks[blk].basis[i]))
            keep[blk].remove(i)
    if not removed:
        return p, removed
    blocks, expansions = [], []
    for blk, idx in enumerate(keep):
        if not idx:
            continue
        old = p.blocks[blk]
        blocks.append(Block(BasisSpec(tuple(old.basis[i] for i in idx)), old.weight, old.label))
        exp = p.expansions[blk]
        expansions.append({(a, b): exp[(i, j)] for a, i in enumerate(idx) for b, j in enumerate(idx)})
    words = set(p.target.terms) | set(p.mu_carrier.terms)
    for exp in expansions:
        for e in exp.values():
            words.update(e.terms)
    return GramProblem(p.target, p.mu_carrier, blocks, expansions, sorted(words, key=monomial_key)), removed
