import time
import numpy as np
from tteig.models import HeisenbergSpec, heisenberg_mpo, product_state_block, dense_operator
from tteig.oracle import dense_eigs
from tteig.solver import SolverConfig, riemannian_lobpcg

d, b, r = 10, 3, 16
h = heisenberg_mpo(d)
spec = HeisenbergSpec(d)
ref = dense_eigs(dense_operator(spec), b)[0]
for label, x0, noise, sweeps in (
    ("product noise 1e-2", product_state_block(spec, b), 1e-2, 3),
    ("product noise 1e-3", product_state_block(spec, b), 1e-3, 3),
    ("product noise 1e-4", product_state_block(spec, b), 1e-4, 3),
    ("random", None, 1e-2, 3),
    ("product noise 1e-3 K5", product_state_block(spec, b), 1e-3, 5),
):
    cfg = SolverConfig(b=b, rank=r, tol=1e-9, max_iters=300, seed=0,
                       coeff_sweeps=sweeps, init_noise=noise)
    t0 = time.perf_counter()
    res = riemannian_lobpcg(h, cfg, x0=x0)
    wall = time.perf_counter() - t0
    mae = float(np.abs(np.asarray(res.eigenvalues) - ref).mean())
    print(f"{label:24s} mae {mae:.3e} iters {res.iterations} conv {res.converged} wall {wall:.1f}s")
