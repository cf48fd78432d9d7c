import numpy as np

from tteig.coeffs import assemble_grams, find_coefficients
from tteig.models import HeisenbergSpec, heisenberg_mpo, product_state_block
from tteig.solver import (SolverConfig, TangentSpace, assemble_and_retract,
                          block_stationarity, oblique_trace,
                          projected_residual_block, rayleigh,
                          riemannian_lobpcg)
from tteig.tangent import combine, inner_matrix, project_many, regauge
from tteig.ttcore import tt_norm

d, b, r = 20, 10, 15
h = heisenberg_mpo(d)
x0 = product_state_block(HeisenbergSpec(d), b)
cfg = SolverConfig(b=b, rank=r, tol=1e-12, max_iters=110, seed=0,
                   schedule="argmax")
res = riemannian_lobpcg(h, cfg, x0=x0)
xs = res.state.xs
ps = res.state.ps
ray = res.state.rayleigh

spaces = [TangentSpace(x) for x in xs]
res_norms, thetas, lam = block_stationarity(h, xs, spaces=spaces)
cur_trace = oblique_trace(h, xs)
cur_max = float(res_norms.max())
print("cur oblique trace", cur_trace, "max res", cur_max)
print("own res", np.array2string(res_norms, precision=3))
print("ps norms", np.array2string(np.array([tt_norm(p) for p in ps]),
                                  precision=2))


def whiten(aux, drop=1e-12):
    g = inner_matrix(aux, aux)
    w, u = np.linalg.eigh(0.5 * (g + g.T))
    wmax = float(w.max(initial=0.0))
    return [regauge(combine(aux, u[:, j] / np.sqrt(w[j])))
            for j in range(len(w)) if w[j] > drop * wmax]


for t in range(b):
    space = spaces[t]
    proj_x, proj_hx, resid, prec = projected_residual_block(space, h, xs, ray)
    proj_p = project_many(space, ps)
    aux = whiten([regauge(tv) for tv in list(prec) + list(proj_p)])
    members = list(proj_x) + aux
    grams = assemble_grams(xs, members, h, proj_x=proj_x, proj_hx=proj_hx)
    line = f"t={t}"
    for init in ("ritz", "identity"):
        try:
            co = find_coefficients(grams, sweeps=3, init=init)
        except Exception as exc:
            line += f"  {init}: FAIL {exc}"
            continue
        cd = assemble_and_retract(xs, members, co, t, r, h=h)
        tr = oblique_trace(h, cd)
        cres, _, _ = block_stationarity(h, cd)
        cut = float(cres.max()) / cur_max
        line += (f"  {init}: dtr {tr - cur_trace:+.2e}"
                 f" promi {co.trace - float(np.sum(ray)):+.2e}"
                 f" maxres {cres.max():.3e} cut {cut:.3f}")
    print(line)
