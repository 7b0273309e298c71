"""Block-diagonal real semidefinite programs.

Primal:  minimize <C, X>  subject to  <A_k, X> = b_k,  X >= 0
Dual:    maximize b.y     subject to  sum_k y_k A_k + S = C,  S >= 0

``solve`` is an infeasible primal-dual path-following method with
Nesterov-Todd scaling and Mehrotra's predictor-corrector, working on dense
blocks. SDPA sparse files are read and written here as well.
"""

from __future__ import annotations

import enum
import logging
import math
import os
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import linalg as sla

log = logging.getLogger(__name__)


class SdpError(Exception):
    pass


class IllFormed(SdpError):
    pass


class BackendUnavailable(SdpError):
    pass


class ParseFailure(SdpError):
    pass


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_TROUBLE = "NumericalTrouble"
    ITER_LIMIT = "IterLimit"


@dataclass
class SdpProblem:
    block_sizes: List[int]
    C: List[np.ndarray]
    A: List[np.ndarray]  # per block, shape (m, n, n)
    b: np.ndarray
    offset: float = 0.0
    metadata: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.block_sizes = [int(n) for n in self.block_sizes]
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = self.b.size
        if len(self.C) != len(self.block_sizes) or len(self.A) != len(self.block_sizes):
            raise IllFormed("number of blocks does not match block sizes")
        self.C = [np.asarray(c, dtype=float) for c in self.C]
        self.A = [np.asarray(a, dtype=float).reshape(m, n, n) if m else np.zeros((0, n, n))
                  for a, n in zip(self.A, self.block_sizes)]
        for n, c, a in zip(self.block_sizes, self.C, self.A):
            if n <= 0:
                raise IllFormed("block sizes must be positive")
            if c.shape != (n, n) or a.shape != (m, n, n):
                raise IllFormed("matrix shape does not match its block size")
            scale = 1.0 + max(np.abs(c).max(initial=0.0), np.abs(a).max(initial=0.0))
            if not np.allclose(c, c.T, atol=1e-12 * scale) or not np.allclose(
                a, a.transpose(0, 2, 1), atol=1e-12 * scale
            ):
                raise IllFormed("matrices must be symmetric")

    @property
    def n_constraints(self) -> int:
        return int(self.b.size)

    def apply(self, X: Sequence[np.ndarray]) -> np.ndarray:
        """The vector of <A_k, X>."""
        out = np.zeros(self.n_constraints)
        for a, x in zip(self.A, X):
            out += np.einsum("kij,ij->k", a, x)
        return out

    def adjoint(self, y: np.ndarray) -> List[np.ndarray]:
        return [np.einsum("k,kij->ij", y, a) for a in self.A]

    def objective(self, X: Sequence[np.ndarray]) -> float:
        return float(sum(np.vdot(c, x) for c, x in zip(self.C, X)))

    def mu(self, sol: "SdpSolution") -> float:
        """User-facing value ``offset - primal objective``."""
        return self.offset - sol.primal_objective


@dataclass
class SdpSolution:
    X: List[np.ndarray]
    y: np.ndarray
    S: List[np.ndarray]
    primal_objective: float
    dual_objective: float
    gap: float
    status: Status
    iterations: int
    primal_infeasibility: float = math.nan
    dual_infeasibility: float = math.nan
    history: List[dict] = field(default_factory=list)

    @property
    def relative_gap(self) -> float:
        return self.gap / (1.0 + abs(self.primal_objective) + abs(self.dual_objective))


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-9
    gap_tol: float = 1e-9
    max_iter: int = 100
    step: float = 0.98


def embed_hermitian(H: np.ndarray) -> np.ndarray:
    """Real symmetric [[P, -Q], [Q, P]] for H = P + iQ; eigenvalues are doubled."""
    H = np.asarray(H, dtype=complex)
    P, Q = H.real, H.imag
    return np.block([[P, -Q], [Q, P]])


def extract_hermitian(W: np.ndarray) -> np.ndarray:
    """Nearest H with embed_hermitian(H) = W, averaging the repeated parts."""
    n = W.shape[0] // 2
    P = (W[:n, :n] + W[n:, n:]) / 2
    Q = (W[n:, :n] - W[:n, n:]) / 2
    return P + 1j * Q


def _chol(M):
    return np.linalg.cholesky(M)


def _max_step(L: np.ndarray, D: np.ndarray) -> float:
    """Largest alpha with L L^T + alpha D still PSD (inf if unbounded)."""
    Linv = sla.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    T = Linv @ D @ Linv.T
    lam = np.linalg.eigvalsh((T + T.T) / 2)[0]
    return math.inf if lam >= 0 else -1.0 / lam


def _initial_point(p: SdpProblem):
    X, S = [], []
    for n, c, a in zip(p.block_sizes, p.C, p.A):
        normA = np.sqrt(np.einsum("kij,kij->k", a, a)) if p.n_constraints else np.zeros(0)
        xi = max(10.0, math.sqrt(n))
        if normA.size:
            xi = max(xi, n * float(np.max((1.0 + np.abs(p.b)) / (1.0 + normA))))
        eta = max(10.0, math.sqrt(n), float(np.linalg.norm(c)), float(normA.max(initial=0.0)))
        eta = (1.0 + eta) / math.sqrt(n)
        X.append(xi * np.eye(n))
        S.append(eta * np.eye(n))
    return X, np.zeros(p.n_constraints), S


def solve(p: SdpProblem, opts: Optional[SolverOptions] = None, **kw) -> SdpSolution:
    """Solve with the embedded interior-point method.

    Keyword arguments override fields of ``opts`` (``feas_tol``, ``gap_tol``,
    ``max_iter``, ``step``).
    """
    opts = opts or SolverOptions()
    if kw:
        opts = SolverOptions(**{**opts.__dict__, **kw})
    m = p.n_constraints
    ntot = sum(p.block_sizes)
    normb = 1.0 + float(np.linalg.norm(p.b))
    normC = 1.0 + math.sqrt(sum(float(np.vdot(c, c)) for c in p.C))
    Aflat = [a.reshape(m, a.shape[1] * a.shape[2]) for a in p.A]

    X, y, S = _initial_point(p)
    history: List[dict] = []
    best = None
    status = Status.ITER_LIMIT
    it = 0

    def measures(X, y, S):
        rp = p.b - p.apply(X)
        AtY = p.adjoint(y)
        Rd = [c - aty - s for c, aty, s in zip(p.C, AtY, S)]
        pobj = p.objective(X)
        dobj = float(p.b @ y)
        pinf = float(np.linalg.norm(rp)) / normb
        dinf = math.sqrt(sum(float(np.vdot(r, r)) for r in Rd)) / normC
        gap = pobj - dobj
        relgap = abs(gap) / (1.0 + abs(pobj) + abs(dobj))
        compl = sum(float(np.vdot(x, s)) for x, s in zip(X, S))
        return rp, Rd, pobj, dobj, pinf, dinf, gap, relgap, compl, AtY

    for it in range(opts.max_iter + 1):
        rp, Rd, pobj, dobj, pinf, dinf, gap, relgap, compl, AtY = measures(X, y, S)
        history.append(dict(iter=it, pobj=pobj, dobj=dobj, pinf=pinf, dinf=dinf, relgap=relgap))
        merit = max(pinf / opts.feas_tol, dinf / opts.feas_tol, relgap / opts.gap_tol)
        if best is None or merit < best[0]:
            best = (merit, [x.copy() for x in X], y.copy(), [s.copy() for s in S], it)
        if pinf <= opts.feas_tol and dinf <= opts.feas_tol and relgap <= opts.gap_tol:
            status = Status.OPTIMAL
            break
        # infeasibility certificates
        by = float(p.b @ y)
        if by > 0:
            ray = math.sqrt(sum(float(np.vdot(a + s, a + s)) for a, s in zip(AtY, S))) / by
            if ray < 1e-8 and by > 1e8:
                status = Status.INFEASIBLE
                break
        cx = pobj
        if cx < 0:
            ax = float(np.linalg.norm(p.apply(X))) / -cx
            if ax < 1e-8 and -cx > 1e8:
                status = Status.UNBOUNDED
                break
        if it == opts.max_iter:
            status = Status.ITER_LIMIT
            break

        try:
            step = _nt_step(p, X, y, S, rp, Rd, compl / ntot, Aflat, opts)
        except np.linalg.LinAlgError as exc:
            log.debug("iteration %d: %s", it, exc)
            status = Status.NUMERICAL_TROUBLE
            break
        if step is None:
            status = Status.NUMERICAL_TROUBLE
            break
        X, y, S, ap, ad = step
        if max(ap, ad) < 1e-10:
            status = Status.NUMERICAL_TROUBLE
            break

    if status != Status.OPTIMAL and best is not None:
        _, X, y, S, _ = best
    rp, Rd, pobj, dobj, pinf, dinf, gap, relgap, compl, _ = measures(X, y, S)
    return SdpSolution(
        X=X, y=y, S=S, primal_objective=pobj, dual_objective=dobj, gap=gap,
        status=status, iterations=it, primal_infeasibility=pinf,
        dual_infeasibility=dinf, history=history,
    )


def _nt_step(p, X, y, S, rp, Rd, mu, Aflat, opts):
    m = p.n_constraints
    Gs, ds, Ws = [], [], []
    LX, LS = [], []
    for x, s in zip(X, S):
        lx = _chol(x)
        ls = _chol(s)
        U, d, Vt = np.linalg.svd(ls.T @ lx)
        G = lx @ Vt.T / np.sqrt(d)[None, :]
        Gs.append(G)
        ds.append(d)
        Ws.append(G @ G.T)
        LX.append(lx)
        LS.append(ls)

    # Schur complement M_kl = <A_k, W A_l W>
    M = np.zeros((m, m))
    for a, af, W in zip(p.A, Aflat, Ws):
        if not m:
            break
        WAW = W @ a @ W
        M += af @ WAW.reshape(m, -1).T
    M = (M + M.T) / 2

    factor = None
    if m:
        try:
            factor = sla.cho_factor(M, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            shift = 1e-14 * max(1.0, float(np.max(np.abs(np.diag(M)))))
            factor = sla.cho_factor(M + shift * np.eye(m), lower=True, check_finite=False)

    def direction(Kmats):
        Rc = [G @ K @ G.T for G, K in zip(Gs, Kmats)]
        WRdW = [W @ r @ W for W, r in zip(Ws, Rd)]
        rhs = rp - p.apply(Rc) + p.apply(WRdW)
        dy = sla.cho_solve(factor, rhs, check_finite=False) if m else np.zeros(0)
        AtdY = p.adjoint(dy)
        dS = [r - a for r, a in zip(Rd, AtdY)]
        dX = [rc - W @ s @ W for rc, W, s in zip(Rc, Ws, dS)]
        dX = [(v + v.T) / 2 for v in dX]
        dS = [(v + v.T) / 2 for v in dS]
        return dX, dy, dS

    def steps(dX, dS):
        ap = min(_max_step(l, d) for l, d in zip(LX, dX))
        ad = min(_max_step(l, d) for l, d in zip(LS, dS))
        return ap, ad

    # predictor
    K_aff = [np.diag(-d) for d in ds]
    dXa, dya, dSa = direction(K_aff)
    ap, ad = steps(dXa, dSa)
    ap_a, ad_a = min(1.0, ap), min(1.0, ad)
    ntot = sum(p.block_sizes)
    mu_aff = sum(
        float(np.vdot(x + ap_a * dx, s + ad_a * ds_)) for x, dx, s, ds_ in zip(X, dXa, S, dSa)
    ) / ntot
    expon = max(1.0, 3.0 * min(ap_a, ad_a) ** 2)
    sigma = min(1.0, max(0.0, mu_aff / mu) ** expon)

    # corrector with the Mehrotra second-order term, in scaled coordinates
    Ks = []
    for G, d, dx, ds_ in zip(Gs, ds, dXa, dSa):
        Gi = np.linalg.inv(G)
        dXt = Gi @ dx @ Gi.T
        dSt = G.T @ ds_ @ G
        prod = dXt @ dSt
        R = sigma * mu * np.eye(len(d)) - np.diag(d * d) - (prod + prod.T) / 2
        Ks.append(2.0 * R / (d[:, None] + d[None, :]))
    dX, dy, dS = direction(Ks)
    ap, ad = steps(dX, dS)
    gamma = opts.step
    ap = min(1.0, gamma * ap)
    ad = min(1.0, gamma * ad)
    if not (np.isfinite(ap) and np.isfinite(ad)):
        return None
    Xn = [x + ap * dx for x, dx in zip(X, dX)]
    yn = y + ad * dy
    Sn = [s + ad * ds_ for s, ds_ in zip(S, dS)]
    return Xn, yn, Sn, ap, ad


# -- SDPA sparse format -------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def export_sdpa(p: SdpProblem) -> str:
    """SDPA sparse (.dat-s) text.

    SDPA-family solvers maximize tr(F0 Y) subject to tr(Fi Y) = c_i, so the
    objective block is written as ``-C``; their reported optimum is the
    negated primal objective of ``p``.
    """
    lines = [
        str(p.n_constraints),
        str(len(p.block_sizes)),
        " ".join(str(n) for n in p.block_sizes),
        " ".join(_fmt(v) for v in p.b),
    ]
    mats = [[-c for c in p.C]] + [[a[k] for a in p.A] for k in range(p.n_constraints)]
    for matno, blocks in enumerate(mats):
        for blk, M in enumerate(blocks, start=1):
            iu, ju = np.triu_indices(M.shape[0])
            for i, j in zip(iu, ju):
                v = M[i, j]
                if v != 0.0:
                    lines.append(f"{matno} {blk} {i + 1} {j + 1} {_fmt(v + 0.0)}")
    return "\n".join(lines) + "\n"


def _clean_header(line: str) -> List[str]:
    for ch in "{}(),":
        line = line.replace(ch, " ")
    return line.split()


def parse_sdpa(text: str) -> SdpProblem:
    """Read SDPA sparse text written by :func:`export_sdpa` (or any dense-block file)."""
    lines = [ln for ln in text.splitlines() if ln.strip() and ln.lstrip()[0] not in "\"*"]
    try:
        m = int(_clean_header(lines[0])[0])
        nb = int(_clean_header(lines[1])[0])
        sizes = [int(v) for v in _clean_header(lines[2])[:nb]]
        bvals = _clean_header(lines[3]) if m else []
        b = np.array([float(v) for v in bvals[:m]])
        if any(s < 0 for s in sizes):
            raise ParseFailure("diagonal (negative-size) blocks are not supported")
        mats = [[np.zeros((n, n)) for n in sizes] for _ in range(m + 1)]
        for ln in lines[4 if m else 3:]:
            f = ln.split()
            if len(f) < 5:
                continue
            matno, blk, i, j = (int(v) for v in f[:4])
            v = float(f[4])
            M = mats[matno][blk - 1]
            M[i - 1, j - 1] = v
            M[j - 1, i - 1] = v
    except (IndexError, ValueError) as exc:
        raise ParseFailure(f"malformed SDPA data: {exc}") from exc
    C = [-M for M in mats[0]]
    A = [np.array([mats[k + 1][blk] for k in range(m)]).reshape(m, n, n) for blk, n in enumerate(sizes)]
    return SdpProblem(sizes, C, A, b)


def parse_csdp_solution(text: str, p: SdpProblem) -> tuple:
    """Parse a CSDP-style solution: y on the first line, then 'matno blk i j v'.

    matno 1 is the dual slack, matno 2 the primal matrix. ``y`` is returned as
    written, i.e. for the file's maximization form.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines and p.n_constraints:
        raise ParseFailure("empty solution file")
    try:
        y = np.array([float(v) for v in lines[0].split()]) if lines else np.zeros(0)
        if y.size != p.n_constraints:
            raise ParseFailure(f"expected {p.n_constraints} multipliers, got {y.size}")
        S = [np.zeros((n, n)) for n in p.block_sizes]
        X = [np.zeros((n, n)) for n in p.block_sizes]
        for ln in lines[1:]:
            f = ln.split()
            matno, blk, i, j = (int(v) for v in f[:4])
            v = float(f[4])
            M = (S if matno == 1 else X)[blk - 1]
            M[i - 1, j - 1] = v
            M[j - 1, i - 1] = v
    except (IndexError, ValueError) as exc:
        raise ParseFailure(f"malformed solution: {exc}") from exc
    return X, y, S


def solve_external(
    p: SdpProblem,
    command: str,
    opts: Optional[SolverOptions] = None,
    timeout: Optional[float] = None,
) -> SdpSolution:
    """Run an SDPA-compatible solver as a child process.

    ``command`` is a template with ``{input}`` and ``{output}`` placeholders,
    e.g. ``"csdp {input} {output}"``. The solver must write a CSDP-style
    solution file to ``{output}``.
    """
    opts = opts or SolverOptions()
    argv0 = shlex.split(command)[0] if command.strip() else ""
    if not argv0 or (shutil.which(argv0) is None and not os.path.exists(argv0)):
        raise BackendUnavailable(f"solver command not found: {argv0!r}")
    with tempfile.TemporaryDirectory(prefix="weylsos-") as tmp:
        inp = os.path.join(tmp, "problem.dat-s")
        out = os.path.join(tmp, "solution.sol")
        with open(inp, "w") as fh:
            fh.write(export_sdpa(p))
        argv = [a.format(input=inp, output=out) for a in shlex.split(command)]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except FileNotFoundError as exc:
            raise BackendUnavailable(str(exc)) from exc
        if not os.path.exists(out):
            raise ParseFailure(
                f"solver wrote no solution (exit {proc.returncode}): {proc.stderr.strip()[:200]}"
            )
        with open(out) as fh:
            X, y, S = parse_csdp_solution(fh.read(), p)
    # the file's multipliers belong to the maximization of tr(-C X)
    y = -y
    pobj = p.objective(X)
    dobj = float(p.b @ y)
    rp = p.b - p.apply(X)
    pinf = float(np.linalg.norm(rp)) / (1.0 + float(np.linalg.norm(p.b)))
    Rd = [c - a - s for c, a, s in zip(p.C, p.adjoint(y), S)]
    normC = 1.0 + math.sqrt(sum(float(np.vdot(c, c)) for c in p.C))
    dinf = math.sqrt(sum(float(np.vdot(r, r)) for r in Rd)) / normC
    relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    codes = {1: Status.INFEASIBLE, 2: Status.UNBOUNDED}
    if proc.returncode in codes:
        status = codes[proc.returncode]
    elif proc.returncode == 0 and pinf <= 1e3 * opts.feas_tol and relgap <= 1e3 * opts.gap_tol:
        status = Status.OPTIMAL
    else:
        status = Status.NUMERICAL_TROUBLE
    return SdpSolution(X, y, S, pobj, dobj, pobj - dobj, status, 0, pinf, dinf)
