import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from tteig.coeffs import assemble_grams, find_coefficients
from tteig.models import heisenberg_mpo
from tteig.solver import (SolverConfig, TangentSpace, assemble_and_retract,
                          projected_residual_block, rayleigh,
                          riemannian_lobpcg, _normalized)
from tteig.tangent import combine, inner_matrix, project_many, regauge
from tteig.ttcore import tt_from_dense, tt_norm

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

cfg = SolverConfig(b=1, rank=r, tol=1e-9, max_iters=30, seed=0, phase1=False)
out = riemannian_lobpcg(h, cfg, x0=[x0])
xs, ps = out.state.xs, out.state.ps
ray = out.state.rayleigh
print("state ray", ray[0], "ps norm", tt_norm(ps[0]))

space = TangentSpace(xs[0])
proj_x, proj_hx, resid, prec = projected_residual_block(space, h, xs, ray)
print("res norm", regauge(resid[0]).norm(),
      "prec norm", regauge(prec[0]).norm())
proj_p = project_many(space, ps)
aux_in = [regauge(tv) for tv in list(prec) + list(proj_p)]
g_aux = inner_matrix(aux_in, aux_in)
w = np.linalg.eigvalsh(0.5 * (g_aux + g_aux.T))
print("aux gram eigs", w)


def whiten(aux, drop=1e-12):
    g = inner_matrix(aux, aux)
    w, u = np.linalg.eigh(0.5 * (g + g.T))
    wmax = float(w.max(initial=0.0))
    return [regauge(combine(aux, u[:, j] / np.sqrt(w[j])))
            for j in range(len(w)) if w[j] > drop * wmax]


aux = whiten(aux_in)
print("aux kept", len(aux))
members = list(proj_x) + aux
grams = assemble_grams(xs, members, h, proj_x=proj_x, proj_hx=proj_hx)
co = find_coefficients(grams, sweeps=3, init="identity")
print("c", co.c, "C", co.C[:, 0])
print("promise", co.trace - ray[0])
for alpha in (1.0, 0.5):
    cd = assemble_and_retract(xs, members, co, 0, r, h=h, step=alpha)
    th = rayleigh(h, cd[0])
    print(f"alpha {alpha}: realized {th - ray[0]:+.3e}")
