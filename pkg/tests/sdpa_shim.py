"""Stand-in for an SDPA-format solver binary: ``sdpa_shim.py IN OUT``.

Reads SDPA sparse input, solves the CSDP-convention pair

    max tr(F0 X)  s.t. tr(Fi X) = c_i, X >= 0
    min c^T y     s.t. sum y_i Fi - F0 = Z >= 0

with cvxpy, and writes y, Z (matno 1) and X (matno 2) like CSDP does.
Exit codes follow CSDP: 0 solved, 1 primal infeasible, 2 dual infeasible.
"""

import sys

import cvxpy as cp
import numpy as np


def read(path):
    rows = [ln.split() for ln in open(path) if ln.strip() and ln.lstrip()[0] not in '"*']
    m, nb = int(rows[0][0]), int(rows[1][0])
    sizes = [int(v) for v in rows[2][:nb]]
    c = np.array([float(v) for v in rows[3][:m]]) if m else np.zeros(0)
    F = [[np.zeros((n, n)) for n in sizes] for _ in range(m + 1)]
    for f in rows[4 if m else 3:]:
        k, b, i, j, v = int(f[0]), int(f[1]) - 1, int(f[2]) - 1, int(f[3]) - 1, float(f[4])
        F[k][b][i, j] = F[k][b][j, i] = v
    return m, sizes, c, F


def main(inp, out):
    m, sizes, c, F = read(inp)
    X = [cp.Variable((n, n), symmetric=True) for n in sizes]
    cons = [x >> 0 for x in X]
    cons += [sum(cp.trace(F[k + 1][b] @ X[b]) for b in range(len(sizes))) == c[k] for k in range(m)]
    primal = cp.Problem(cp.Maximize(sum(cp.trace(F[0][b] @ X[b]) for b in range(len(sizes)))), cons)
    primal.solve(solver=cp.CLARABEL)
    if primal.status in ("infeasible", "infeasible_inaccurate"):
        return 1
    if primal.status in ("unbounded", "unbounded_inaccurate"):
        return 2
    y = cp.Variable(m)
    Z = [sum((y[k] * F[k + 1][b] for k in range(m)), -F[0][b]) for b in range(len(sizes))]
    dual = cp.Problem(cp.Minimize(c @ y), [(z + z.T) / 2 >> 0 for z in Z])
    dual.solve(solver=cp.CLARABEL)
    yv = np.atleast_1d(y.value) if m else np.zeros(0)
    with open(out, "w") as fh:
        fh.write(" ".join(repr(float(v)) for v in yv) + "\n")
        for matno, mats in ((1, [sum((yv[k] * F[k + 1][b] for k in range(m)), -F[0][b]) for b in range(len(sizes))]),
                            (2, [x.value for x in X])):
            for b, M in enumerate(mats, start=1):
                for i in range(M.shape[0]):
                    for j in range(i, M.shape[0]):
                        if M[i, j] != 0:
                            fh.write(f"{matno} {b} {i + 1} {j + 1} {float(M[i, j])!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2]))
