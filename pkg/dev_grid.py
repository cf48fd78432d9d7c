import sys
import time

import numpy as np

from tteig.models import HeisenbergSpec, heisenberg_mpo, product_state_block, dense_operator
from tteig.oracle import dense_eigs
from tteig.solver import SolverConfig, riemannian_lobpcg

cases = []
for d in range(2, 11):
    for b in (1, 3, 5):
        if 2 ** d < b:
            continue
        if len(sys.argv) > 1 and f"{d},{b}" not in sys.argv[1:]:
            continue
        cases.append((d, b))

npass = 0
for d, b in cases:
    r = 2 ** min((d + 1) // 2, 4) * 2
    h = heisenberg_mpo(d)
    spec = HeisenbergSpec(d)
    x0 = product_state_block(spec, b)
    cfg = SolverConfig(b=b, rank=r, tol=1e-9, max_iters=300, seed=0)
    t0 = time.perf_counter()
    res = riemannian_lobpcg(h, cfg, x0=x0)
    wall = time.perf_counter() - t0
    ref = dense_eigs(dense_operator(spec), b)[0]
    mae = float(np.abs(np.asarray(res.eigenvalues) - ref).mean())
    ok = mae <= 1e-7 and res.iterations <= 300 and wall < 60.0
    npass += ok
    print(f"{'PASS' if ok else 'FAIL'} d={d} b={b} r={r}: mae {mae:.3e} "
          f"iters {res.iterations} wall {wall:.2f}s conv {res.converged}")
print(f"{npass}/{len(cases)} pass")
