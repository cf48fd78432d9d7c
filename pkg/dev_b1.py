import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from tteig.models import heisenberg_mpo
from tteig.solver import SolverConfig, riemannian_lobpcg
from tteig.ttcore import tt_from_dense

d, r = 20, 15
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
vals, vecs = eigsh(op, k=1, which="SA", tol=1e-10)
x0 = tt_from_dense(vecs[:, 0], (2,) * d, max_rank=r)

cfg = SolverConfig(b=1, rank=r, tol=1e-9, max_iters=60, seed=0, phase1=False)
out = riemannian_lobpcg(h, cfg, x0=[x0])
for k in (0, 5, 10, 20, 30, len(out.trace) - 1):
    if k < len(out.trace):
        row = out.trace[k]
        print(f"it {row['iter']:3d} ray {row['rayleigh'][0]:+.12f} "
              f"res {row['residual'][0]:.3e}")
print("converged", out.converged, "iters", out.iterations,
      "final", out.eigenvalues[0], "exact", vals[0])
