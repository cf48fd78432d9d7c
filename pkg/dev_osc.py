import time

import numpy as np

from tteig.models import (OscillatorSpec, dense_operator, harmonic_part_mpo,
                          harmonic_preconditioner, oscillator_mpo,
                          product_state_block)
from tteig.oracle import dense_eigs
from tteig.solver import SolverConfig, riemannian_lobpcg
from tteig.ttcore import tt_matvec, tt_norm, tt_random, tt_add, tt_scale

# 1. dense equivalence of the anharmonic MPO, d=3 levels=4
spec = OscillatorSpec(frequencies=(1.0, 1.3, 0.7), levels=4,
                      cubic=(((0, 1, 2), 0.1), ((0, 0, 1), -0.05)),
                      quartic=(((0, 1, 2, 2), 0.02), ((1, 1, 1, 1), 0.01)))
h = oscillator_mpo(spec)
print("mpo ranks", h.ranks)
a = dense_operator(spec)
print("dense symm err", np.abs(a - a.T).max())
v = tt_random(spec.dims, 3, 7)
hv = tt_matvec(h, v)
vd = np.zeros(64)
idx = 0
from tteig.ttcore import tt_to_dense as tt_dense
vd = tt_dense(v).ravel()
hvd = tt_dense(hv).ravel()
print("mpo vs dense matvec", np.abs(a @ vd - hvd).max() / np.abs(hvd).max())

# 2. harmonic part exact ground energy 0.5*sum(w) and ladder
harm_spec = OscillatorSpec(frequencies=(1.0, 1.3, 0.7), levels=5)
hh = harmonic_part_mpo(harm_spec)
vals, _ = dense_eigs(dense_operator(harm_spec), 4)
print("harmonic ground", vals[0], "expected", 0.5 * sum(harm_spec.frequencies))

# 3. preconditioner probe error
prec = harmonic_preconditioner(harm_spec, rho=8)
print("probe error rho=8", prec.probe_error)
prec16 = harmonic_preconditioner(harm_spec, rho=16, eta=1e-3)
print("probe error rho=16", prec16.probe_error)

# 4. solve the anharmonic problem with and without the preconditioner
b = 3
x0 = product_state_block(spec, b)
ref = dense_eigs(a, b)[0]
for label, p in (("plain", None), ("harmonic", harmonic_preconditioner(spec, rho=12, eta=1e-2))):
    cfg = SolverConfig(b=b, rank=4, tol=1e-9, max_iters=200, seed=0)
    t0 = time.perf_counter()
    res = riemannian_lobpcg(h, cfg, x0=x0, precond=p)
    wall = time.perf_counter() - t0
    mae = float(np.abs(np.asarray(res.eigenvalues) - ref).mean())
    print(f"{label}: mae {mae:.3e} iters {res.iterations} conv {res.converged} "
          f"wall {wall:.2f}s")
