import time
import numpy as np
from tteig.models import HeisenbergSpec, heisenberg_mpo, product_state_block
from tteig.solver import SolverConfig, riemannian_lobpcg

d, b, r = 20, 10, 15
h = heisenberg_mpo(d)
spec = HeisenbergSpec(d)
for schedule in ("argmax", "first_only"):
    x0 = product_state_block(spec, b)
    cfg = SolverConfig(b=b, rank=r, tol=1e-7, max_iters=150, seed=0,
                       schedule=schedule)
    t0 = time.perf_counter()
    res = riemannian_lobpcg(h, cfg, x0=x0)
    wall = time.perf_counter() - t0
    final = np.array(res.trace[-1]["residual"])
    print(f"{schedule}: iters {res.iterations} conv {res.converged} wall {wall:.0f}s")
    print("  final residuals:", np.array2string(final, precision=2))
    print("  max", final.max(), "eigs", np.array2string(np.sort(res.trace[-1]['rayleigh']), precision=6))
    for row in res.trace[::15]:
        rr = np.array(row["residual"])
        print(f"  it {row['iter']:3d} t {row['t_index']:2d} max_res {rr.max():.3e}")
