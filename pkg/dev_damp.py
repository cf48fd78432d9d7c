import numpy as np

from tteig.coeffs import assemble_grams, find_coefficients
from tteig.models import HeisenbergSpec, heisenberg_mpo, product_state_block
from tteig.solver import (SolverConfig, TangentSpace, block_stationarity,
                          oblique_trace, projected_residual_block, rayleigh,
                          riemannian_lobpcg, _normalized)
from tteig.tangent import combine, embed, inner_matrix, project_many, regauge
from tteig.ttcore import tt_add, tt_round, tt_scale

d, b, r = 20, 10, 15
h = heisenberg_mpo(d)
x0 = product_state_block(HeisenbergSpec(d), b)
cfg = SolverConfig(b=b, rank=r, tol=1e-12, max_iters=110, seed=0,
                   schedule="argmax")
res = riemannian_lobpcg(h, cfg, x0=x0)
xs, ps, ray = res.state.xs, res.state.ps, res.state.rayleigh

spaces = [TangentSpace(x) for x in xs]
res_norms, _, _ = block_stationarity(h, xs, spaces=spaces)
cur_trace = oblique_trace(h, xs)
cur_max = float(res_norms.max())
print("cur trace", cur_trace, "max res", cur_max)


def whiten(aux, drop=1e-12):
    g = inner_matrix(aux, aux)
    w, u = np.linalg.eigh(0.5 * (g + g.T))
    wmax = float(w.max(initial=0.0))
    return [regauge(combine(aux, u[:, j] / np.sqrt(w[j])))
            for j in range(len(w)) if w[j] > drop * wmax]


def retract(co, members, t, alpha):
    out = []
    for i in range(b):
        weights = alpha * co.C[:, i]
        if i == t:
            weights[i] += co.c[i]
            y = embed(combine(members, weights))
        else:
            y = tt_add(tt_scale(xs[i], co.c[i]),
                       embed(combine(members, weights)))
        out.append(_normalized(tt_round(y, r)))
    return out


for t in (9, 3, 0):
    space = spaces[t]
    proj_x, proj_hx, resid, prec = projected_residual_block(space, h, xs, ray)
    aux = whiten([regauge(tv) for tv in list(prec) + list(project_many(space, ps))])
    members = list(proj_x) + aux
    grams = assemble_grams(xs, members, h, proj_x=proj_x, proj_hx=proj_hx)
    co = find_coefficients(grams, sweeps=3, init="identity")
    print(f"t={t} promised {co.trace - float(np.sum(ray)):+.3e}")
    for alpha in (1.0, 0.5, 0.25, 0.125, 0.0625):
        cd = retract(co, members, t, alpha)
        tr = oblique_trace(h, cd)
        cres, _, _ = block_stationarity(h, cd)
        print(f"  a={alpha:<7} dtr {tr - cur_trace:+.3e} "
              f"maxres {cres.max():.3e} cut {cres.max() / cur_max:.3f}")
