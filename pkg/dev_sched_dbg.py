import numpy as np

from tteig.models import HeisenbergSpec, heisenberg_mpo, product_state_block
from tteig.solver import SolverConfig, riemannian_lobpcg

d, b, r = 20, 10, 15
h = heisenberg_mpo(d)
x0 = product_state_block(HeisenbergSpec(d), b)
cfg = SolverConfig(b=b, rank=r, tol=1e-12, max_iters=150, seed=0,
                   schedule="argmax")
res = riemannian_lobpcg(h, cfg, x0=x0)
rows = res.trace
prev_ray = None
n_frozen = 0
for k, row in enumerate(rows):
    ray = row["rayleigh"]
    frozen = prev_ray is not None and ray == prev_ray
    n_frozen += frozen
    if k % 10 == 0 or k == len(rows) - 1:
        resid = np.asarray(row["residual"])
        print(f"it {row['iter']:3d} t {row['t_index']:2d} "
              f"trace {sum(ray):+.9f} max_res {resid.max():.2e} "
              f"min_res {resid.min():.2e} frozen {frozen}")
    prev_ray = ray
print(f"frozen iterations: {n_frozen}/{len(rows) - 1}")
