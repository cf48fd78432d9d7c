import numpy as np
from tteig.models import HeisenbergSpec, heisenberg_mpo, product_state_block, dense_operator
from tteig.oracle import dense_eigs
from tteig.solver import SolverConfig, riemannian_lobpcg, rayleigh, _normalized
from tteig.ttcore import tt_from_dense

d, b, r = 10, 3, 16
h = heisenberg_mpo(d)
spec = HeisenbergSpec(d)
dense = dense_operator(spec)
vals, vecs = np.linalg.eigh(dense)
print("exact lowest 5:", vals[:5])
for i in range(4):
    tx = _normalized(tt_from_dense(vecs[:, i], (2,) * d, max_rank=r))
    print(f"col {i}: trunc rayleigh offset {rayleigh(h, tx) - vals[i]:.3e}")

cfg = SolverConfig(b=b, rank=r, tol=1e-9, max_iters=300, seed=0)
res = riemannian_lobpcg(h, cfg, x0=product_state_block(spec, b))
for row in res.trace[::30]:
    ray = np.sort(row["rayleigh"])
    err = np.abs(ray - vals[:b])
    print(f"it {row['iter']:3d} t {row['t_index']} err {err} res {np.array(row['residual'])}")
row = res.trace[-1]
ray = np.sort(row["rayleigh"])
print("final err", np.abs(ray - vals[:b]), "res", np.array(row["residual"]))
