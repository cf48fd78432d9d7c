import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from tteig.models import heisenberg_mpo
from tteig.ttcore import TTVector, tt_bilinear, tt_inner, tt_round, tt_norm

d = 20
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
vals, vecs = eigsh(op, k=12, which="SA", tol=1e-9)
print("lowest 12:", np.array2string(vals, precision=8))
print("sum lowest 10:", vals[:10].sum())


def tt_from_dense(v, rank):
    w = v.reshape((2,) * d)
    cores_out = []
    r = 1
    mat = w.reshape(r * 2, -1)
    for k in range(d - 1):
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
        keep = min(rank, int((s > 1e-14 * s[0]).sum()))
        cores_out.append(u[:, :keep].reshape(r, 2, keep))
        r = keep
        mat = (s[:keep, None] * vt[:keep]).reshape(r * 2, -1)
    cores_out.append(mat.reshape(r, 2, 1))
    return TTVector(cores_out)


tr15 = 0.0
for i in range(10):
    xt = tt_from_dense(vecs[:, i], 15)
    nrm = tt_norm(xt)
    ray = tt_bilinear(h, xt, xt) / nrm**2
    # full residual norm of the truncated vector
    hx = matvec((xt and None) or vecs[:, i])  # placeholder, replaced below
    tr15 += ray
    print(f"i={i} exact {vals[i]:+.8f} rank15-ray {ray:+.8f} "
          f"dtheta {ray - vals[i]:+.3e}")
print("rank-15 truncated trace:", tr15)
