import time

import numpy as np

from tteig import coeffs
from tteig.models import heisenberg_mpo

# 1. MPO interior rank anchor
t0 = time.perf_counter()
worst = 0
for d in range(2, 41):
    h = heisenberg_mpo(d)
    interior = h.ranks[1:-1]
    worst = max(worst, max(interior, default=1))
print(f"max interior MPO rank over d in 2..40: {worst} "
      f"({time.perf_counter() - t0:.2f}s)")

# 2. coefficient solve cost growth over b
rng = np.random.default_rng(3)
counts = []
for b in (4, 8, 16, 32):
    m = 3 * b
    q = rng.standard_normal((b + m, b + m))
    q, _ = np.linalg.qr(q)
    lam = rng.uniform(0.5, 2.0, b + m)
    hmat = (q * lam) @ q.T
    g = np.eye(b + m) + 0.05 * (lambda s: 0.5 * (s + s.T))(
        rng.standard_normal((b + m, b + m)))
    grams = coeffs.GramSet(
        diag_xhx=np.diag(hmat)[:b].copy(),
        xtx=g[:b, :b].copy(),
        vt_x=g[b:, :b].copy(),
        vt_hx=hmat[b:, :b].copy(),
        vtv=g[b:, b:].copy(),
        vt_hv=hmat[b:, b:].copy(),
    )
    coeffs.reset_opcount()
    t0 = time.perf_counter()
    sol = coeffs.find_coefficients(grams, sweeps=3)
    wall = time.perf_counter() - t0
    ops = coeffs.get_opcount()
    counts.append((b, ops, wall, sol.constraint_residual))
    print(f"b={b:3d}: ops {ops:.3e} ops/b^4 {ops / b**4:.1f} wall {wall:.3f}s "
          f"feas {sol.constraint_residual:.2e}")
ratios = [counts[i + 1][1] / counts[i][1] for i in range(len(counts) - 1)]
print("ops growth ratios per b doubling:", [f"{r:.1f}" for r in ratios],
      "(<= 16 means <= b^4)")
c0 = counts[0][1] / counts[0][0] ** 4
ok = all(ops <= 4.0 * c0 * b**4 for b, ops, _, _ in counts)
print("ops <= c*b^4 with c = 4x the b=4 constant:", ok)
