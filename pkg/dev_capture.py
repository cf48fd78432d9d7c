import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from tteig.coeffs import assemble_grams, find_coefficients
from tteig.models import heisenberg_mpo
from tteig.solver import (SolverConfig, TangentSpace, assemble_and_retract,
                          block_stationarity, oblique_trace,
                          projected_residual_block, rayleigh, ritz_rotate,
                          _normalized)
from tteig.tangent import combine, inner_matrix, project_many, regauge
from tteig.ttcore import tt_from_dense

d, r, b = 20, 15, 10
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
vals, vecs = eigsh(op, k=12, which="SA", tol=1e-10)
print("exact:", vals[:10])
xs = [_normalized(tt_from_dense(vecs[:, i], (2,) * d, max_rank=r))
      for i in range(b)]

res, th, lam = block_stationarity(h, xs)
print("ideal block residuals:", np.array2string(res, precision=2))
print("ideal thetas offset:", np.array2string(th - vals[:10], precision=2))
tr0 = oblique_trace(h, xs)
print("ideal trace", tr0, "vs sum exact", vals[:10].sum())

rot = ritz_rotate(h, xs, r)
rres, rth, _ = block_stationarity(h, rot)
print("rotated residuals:", np.array2string(rres, precision=2))
print("rot trace", oblique_trace(h, rot))
