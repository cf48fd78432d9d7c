"""Dense brute-force references: small eigenproblems, tangent projectors, error metrics."""

from __future__ import annotations

import math

import numpy as np

from .ttcore import TTVector, tt_to_dense

DENSE_CAP = 4096


def dense_eigs(a: np.ndarray, b: int, cap: int = DENSE_CAP):
    """The b algebraically smallest eigenpairs of a symmetric matrix.

    Refuses matrices larger than ``cap`` on a side; this is a reference
    implementation, not a solver.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    n = a.shape[0]
    if n > cap:
        raise ValueError(f"matrix size {n} exceeds the dense cap {cap}")
    scale = max(1.0, float(np.abs(a).max()))
    if float(np.abs(a - a.T).max()) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    if not 1 <= b <= n:
        raise ValueError("requested number of eigenpairs out of range")
    vals, vecs = np.linalg.eigh(a)
    return vals[:b].copy(), vecs[:, :b].copy()


def mae(approx, reference) -> float:
    """Mean absolute error between two equally long value lists."""
    approx = np.asarray(approx, dtype=np.float64).reshape(-1)
    reference = np.asarray(reference, dtype=np.float64).reshape(-1)
    if approx.shape != reference.shape:
        raise ValueError("length mismatch")
    return float(np.mean(np.abs(approx - reference)))


def dense_tangent_projector(x: TTVector, tol: float = 1e-10) -> np.ndarray:
    """Orthogonal projector onto the tangent space of the fixed-rank manifold
    at x, built column by column from the parametrization Jacobian.

    Each column is the dense image of a unit perturbation of one core entry;
    the projector is U U^T for an orthonormal basis U of the column span.
    Only meant for tiny instances.
    """
    size = math.prod(x.dims)
    if size > DENSE_CAP:
        raise ValueError(f"dense size {size} exceeds the cap {DENSE_CAP}")
    columns = []
    for k, core in enumerate(x.cores):
        cores = list(x.cores)
        for idx in range(core.size):
            unit = np.zeros(core.size)
            unit[idx] = 1.0
            cores[k] = unit.reshape(core.shape)
            columns.append(tt_to_dense(TTVector(cores)))
    jac = np.stack(columns, axis=1)
    u, s, _ = np.linalg.svd(jac, full_matrices=False)
    rank = int(np.count_nonzero(s > tol * s[0])) if s[0] > 0 else 0
    basis = u[:, :rank]
    return basis @ basis.T
