import numpy as np
from tteig.coeffs import (GramSet, assemble_grams, block_rayleigh_ritz,
                          constraint_residual, find_coefficients,
                          nullspace_basis, solve_reduced_geig,
                          _coupling_column, _objective)
from tteig.models import HeisenbergSpec, heisenberg_mpo, product_state_block
from tteig.solver import (SolverConfig, TangentSpace, choose_tangent_index,
                          projected_residual_block, riemannian_lobpcg,
                          rayleigh)
from tteig.tangent import combine, inner_matrix, project_many, regauge

d, b, r = 20, 10, 15
h = heisenberg_mpo(d)
spec = HeisenbergSpec(d)
cfg = SolverConfig(b=b, rank=r, tol=1e-12, max_iters=40, seed=0)
out = riemannian_lobpcg(h, cfg, x0=product_state_block(spec, b))
xs, ps, ray = out.state.xs, out.state.ps, out.state.rayleigh
print("rayleigh:", np.array2string(np.sort(ray), precision=6))

t = int(np.argmax(out.trace[-1]["residual"]))
space = TangentSpace(xs[t])
proj_x, proj_hx, resid, prec = projected_residual_block(space, h, xs, ray)
proj_p = project_many(space, ps)
aux_in = [regauge(tv) for tv in list(prec) + list(proj_p)]
g_aux = inner_matrix(aux_in, aux_in)
w, u = np.linalg.eigh(0.5 * (g_aux + g_aux.T))
aux = [regauge(combine(aux_in, u[:, j] / np.sqrt(w[j])))
       for j in range(len(w)) if w[j] > 1e-12 * w.max()]
members = list(proj_x) + aux
grams = assemble_grams(xs, members, h, proj_x=proj_x, proj_hx=proj_hx)
m = grams.m
print(f"t={t} members={m}")

id_c = np.ones(b); id_C = np.zeros((m, b))
print("identity trace", _objective(grams, id_c, id_C),
      "feas", constraint_residual(grams, id_c, id_C))
c_init, vals = block_rayleigh_ritz(grams.vt_hv, grams.vtv, b)
rz = [np.concatenate(([0.0], c_init[:, a])) for a in range(b)]
rc = np.array([sa[0] for sa in rz]); rC = np.stack([sa[1:] for sa in rz], 1)
print("ritz trace    ", _objective(grams, rc, rC),
      "feas", constraint_residual(grams, rc, rC))

# manual GS sweeps from ritz init, tracing trace+feas each sweep
s = [sa.copy() for sa in rz]
vc = [grams.vtv @ sa[1:] for sa in s]
def a_mat(alpha):
    full = np.empty((1 + m, 1 + m))
    full[0, 0] = grams.diag_xhx[alpha]
    full[0, 1:] = grams.vt_hx[:, alpha]
    full[1:, 0] = grams.vt_hx[:, alpha]
    full[1:, 1:] = grams.vt_hv
    return full
def g_diag(alpha):
    out_ = np.empty((1 + m, 1 + m))
    out_[0, 0] = grams.xtx[alpha, alpha]
    out_[0, 1:] = grams.vt_x[:, alpha]
    out_[1:, 0] = grams.vt_x[:, alpha]
    out_[1:, 1:] = grams.vtv
    return out_
for sweep in range(1, 6):
    for alpha in range(b):
        cols = [_coupling_column(grams, alpha, s[beta], beta, vc[beta])
                for beta in range(b) if beta != alpha]
        basis = nullspace_basis(np.stack(cols, axis=1))
        a_red = basis.T @ a_mat(alpha) @ basis
        g_red = basis.T @ g_diag(alpha) @ basis
        _, z = solve_reduced_geig(a_red, g_red)
        new = basis @ z
        if new @ s[alpha] < 0.0:
            new = -new
        s[alpha] = new
        vc[alpha] = grams.vtv @ new[1:]
    c = np.array([sa[0] for sa in s]); C = np.stack([sa[1:] for sa in s], 1)
    print(f"sweep {sweep}: trace {_objective(grams, c, C):.9f} "
          f"feas {constraint_residual(grams, c, C):.2e} "
          f"|c| {np.abs(c).round(2)}")
co = find_coefficients(grams, sweeps=3)
print("find_coefficients: trace", co.trace, "feas", co.constraint_residual)
