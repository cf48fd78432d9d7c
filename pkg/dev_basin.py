import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from tteig.models import heisenberg_mpo
from tteig.solver import (SolverConfig, block_stationarity, oblique_trace,
                          riemannian_lobpcg, _normalized)
from tteig.ttcore import TTVector, tt_add, tt_inner, tt_round, tt_scale

d, b, r = 20, 10, 15
h = heisenberg_mpo(d)
cores = h.cores
dim = 2 ** d


def matvec(v):
    cur = np.asarray(v, dtype=np.float64).reshape(1, dim)
    for k in range(d):
        r0 = cur.shape[0]
        cur = cur.reshape(r0, 2, -1)
        cur = np.tensordot(cores[k], cur, axes=([0, 2], [0, 1]))
        cur = cur.transpose(1, 2, 0).reshape(cur.shape[1], -1)
    return cur.reshape(dim)


op = LinearOperator((dim, dim), matvec=matvec, dtype=np.float64)
vals, vecs = eigsh(op, k=10, which="SA", tol=1e-10)
print("exact sum", vals.sum())


def tt_from_dense(v, rank):
    w = v.reshape((2,) * d)
    out = []
    rr = 1
    mat = w.reshape(rr * 2, -1)
    for k in range(d - 1):
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
        keep = min(rank, int((s > 1e-14 * s[0]).sum()))
        out.append(u[:, :keep].reshape(rr, 2, keep))
        rr = keep
        mat = (s[:keep, None] * vt[:keep]).reshape(rr * 2, -1)
    out.append(mat.reshape(rr, 2, 1))
    return TTVector(out)


ideal = []
for i in range(b):
    x = tt_from_dense(vecs[:, i], r)
    for y in ideal:  # TT Gram-Schmidt at fixed rank
        x = tt_add(x, tt_scale(y, -tt_inner(y, x)))
        x = tt_round(x, r)
    ideal.append(_normalized(x))

res, thetas, lam = block_stationarity(h, ideal)
print("ideal oblique trace", oblique_trace(h, ideal))
print("ideal own res", np.array2string(res, precision=3))
print("ideal thetas", np.array2string(thetas, precision=6))

cfg = SolverConfig(b=b, rank=r, tol=1e-12, max_iters=100, seed=0,
                   schedule="argmax", phase1=False)
out = riemannian_lobpcg(h, cfg, x0=ideal)
rows = out.trace
for k in (0, 10, 20, 30, 40, len(rows) - 1):
    row = rows[k]
    resid = np.asarray(row["residual"])
    print(f"it {row['iter']:3d} t {row['t_index']:2d} "
          f"trace {sum(row['rayleigh']):+.9f} "
          f"max {resid.max():.3e} min {resid.min():.3e}")
print("final ray", np.array2string(out.eigenvalues, precision=6))
print("exact    ", np.array2string(vals, precision=6))
