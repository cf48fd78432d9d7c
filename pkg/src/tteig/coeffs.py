"""Coefficient subproblem of the block eigensolver.

Each iteration combines the current block X with a batch V of tangent-space
members.  The mixing coefficients minimize the trace of the combined block's
Rayleigh quotient subject to orthonormality, with the X part restricted to a
diagonal coefficient matrix.  That restriction rules out a plain generalized
eigensolve, so the problem is solved column by column: every column solves a
small generalized eigenproblem on the null space of its coupling constraints,
Gauss-Seidel style.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# rough operation counter for the dense kernels in this module; used to pin
# the asymptotic cost of find_coefficients in tests
_OPCOUNT = 0


def reset_opcount() -> None:
    global _OPCOUNT
    _OPCOUNT = 0


def get_opcount() -> int:
    return _OPCOUNT


def _count(n: float) -> None:
    global _OPCOUNT
    _OPCOUNT += int(n)


class CoefficientSolveError(RuntimeError):
    """The coefficient subproblem is numerically unsolvable."""


@dataclass(frozen=True)
class GramSet:
    """All inner products the coefficient problem needs.

    With b block columns and m tangent members:
    ``diag_xhx`` (b,), ``xtx`` (b, b), ``vt_x`` (m, b), ``vt_hx`` (m, b),
    ``vtv`` (m, m), ``vt_hv`` (m, m).  Only the diagonal of X^T H X enters
    the objective, so the full matrix is never assembled.
    """

    diag_xhx: np.ndarray
    xtx: np.ndarray
    vt_x: np.ndarray
    vt_hx: np.ndarray
    vtv: np.ndarray
    vt_hv: np.ndarray

    def __post_init__(self):
        b = self.diag_xhx.shape[0]
        m = self.vtv.shape[0]
        if self.xtx.shape != (b, b) or self.vt_x.shape != (m, b) \
                or self.vt_hx.shape != (m, b) or self.vt_hv.shape != (m, m):
            raise ValueError("inconsistent Gram shapes")
        for name in ("xtx", "vtv", "vt_hv"):
            mat = getattr(self, name)
            if mat.size and float(np.abs(mat - mat.T).max()) > 1e-10 * max(1.0, float(np.abs(mat).max())):
                raise ValueError(f"{name} is not symmetric")

    @property
    def b(self) -> int:
        return self.diag_xhx.shape[0]

    @property
    def m(self) -> int:
        return self.vtv.shape[0]


@dataclass(frozen=True)
class Coefficients:
    """Solution of the coefficient problem plus solve diagnostics."""

    c: np.ndarray           # (b,) diagonal coefficients of the X block
    C: np.ndarray           # (m, b) coefficients of the tangent members
    trace: float            # objective value at the solution
    constraint_residual: float
    increment: float        # last Gauss-Seidel update size, a stationarity proxy
    sweeps_used: int


def assemble_grams(xs, members, h, proj_x=None, proj_hx=None,
                   fused: bool = True) -> GramSet:
    """Compute every inner product the coefficient problem needs.

    ``xs`` are the block columns, ``members`` the tangent-space batch; the
    projections of ``xs`` and of ``H xs`` can be passed in when the caller
    already has them.  Tangent members enter through their embeddings, so all
    products are plain Euclidean ones.
    """
    from .tangent import embed, inner_matrix, project_many, project_matvec_many
    from .ttcore import tt_bilinear, tt_inner

    space = members[0].space
    b = len(xs)
    diag_xhx = np.array([tt_bilinear(h, x, x) for x in xs])
    xtx = np.empty((b, b))
    for i in range(b):
        for j in range(i, b):
            xtx[i, j] = xtx[j, i] = tt_inner(xs[i], xs[j])
    if proj_x is None:
        proj_x = project_many(space, xs)
    if proj_hx is None:
        proj_hx = project_matvec_many(space, h, xs, fused=fused)
    vt_x = inner_matrix(members, proj_x)
    vt_hx = inner_matrix(members, proj_hx)
    vtv = inner_matrix(members, members)
    vtv = 0.5 * (vtv + vtv.T)
    ph_members = project_matvec_many(space, h, [embed(t) for t in members],
                                     fused=fused)
    vt_hv = inner_matrix(members, ph_members)
    vt_hv = 0.5 * (vt_hv + vt_hv.T)
    return GramSet(diag_xhx=diag_xhx, xtx=xtx, vt_x=vt_x, vt_hx=vt_hx,
                   vtv=vtv, vt_hv=vt_hv)


def nullspace_basis(columns: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the space orthogonal to the given columns."""
    columns = np.atleast_2d(np.asarray(columns, dtype=np.float64))
    n = columns.shape[0]
    if columns.shape[1] == 0:
        return np.eye(n)
    u, s, _ = np.linalg.svd(columns, full_matrices=True)
    _count(4 * n * columns.shape[1] ** 2 + n**2 * columns.shape[1])
    tol = max(columns.shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    rank = int(np.count_nonzero(s > tol))
    return u[:, rank:]


def _pencil_whitener(g: np.ndarray):
    """Filtered whitening basis W of a PSD metric: W^T g W = I.

    Members spanning different scales are equalized by their diagonal first
    (residual and direction members shrink toward zero together near
    convergence, and a flat spectral cut on the raw metric would silently
    drop exactly the directions the iteration still needs); the spectral
    pseudo-inverse threshold then removes only genuinely dependent or zero
    directions.
    """
    n = g.shape[0]
    eps = np.finfo(np.float64).eps
    diag = np.diag(g).copy()
    dmax = float(diag.max(initial=0.0))
    if dmax <= 0.0:
        raise CoefficientSolveError("reduced metric is numerically zero")
    # members are assembled by cancellation of O(largest member) quantities,
    # so anything more than ~1e4*eps smaller than the largest member is
    # rounding residue rather than a direction; equalizing it would promote
    # noise to a unit vector
    alive = diag > (1e4 * eps) ** 2 * dmax
    d = np.where(alive, 1.0 / np.sqrt(np.where(alive, diag, 1.0)), 0.0)
    scaled = d[:, None] * g * d[None, :]
    w, u = np.linalg.eigh(0.5 * (scaled + scaled.T))
    _count(9 * n**3)
    wmax = float(w.max(initial=0.0))
    if wmax <= 0.0:
        raise CoefficientSolveError("reduced metric is numerically zero")
    keep = w > n * eps * wmax
    return d[:, None] * u[:, keep] / np.sqrt(w[keep])


def solve_reduced_geig(a_red: np.ndarray, g_red: np.ndarray):
    """Smallest eigenpair of a symmetric pencil with possibly singular G.

    G is whitened through its spectral decomposition; directions below the
    pseudo-inverse threshold are dropped.  The returned vector satisfies
    z^T G z = 1.
    """
    g_red = 0.5 * (g_red + g_red.T)
    a_red = 0.5 * (a_red + a_red.T)
    n = g_red.shape[0]
    basis = _pencil_whitener(g_red)
    m = basis.T @ a_red @ basis
    _count(4 * n**2 * basis.shape[1] + 9 * n**3)
    m = 0.5 * (m + m.T)
    vals, vecs = np.linalg.eigh(m)
    _count(9 * basis.shape[1] ** 3)
    z = basis @ vecs[:, 0]
    scale = float(z @ g_red @ z)
    if scale <= 0.0:
        raise CoefficientSolveError("degenerate eigenvector normalization")
    return float(vals[0]), z / np.sqrt(scale)


def block_rayleigh_ritz(vt_hv: np.ndarray, vtv: np.ndarray, b: int):
    """Lowest-b Ritz coefficients of the pencil (V^T H V, V^T V).

    Rank deficiency of V^T V is handled by spectral filtering.  Returns the
    coefficient matrix C (m, b) with C^T (V^T V) C = I and the Ritz values.
    """
    vtv = 0.5 * (vtv + vtv.T)
    vt_hv = 0.5 * (vt_hv + vt_hv.T)
    m = vtv.shape[0]
    basis = _pencil_whitener(vtv)
    _count(9 * m**3)
    if basis.shape[1] < b:
        raise CoefficientSolveError(
            f"only {basis.shape[1]} admissible directions for {b} Ritz pairs")
    red = basis.T @ vt_hv @ basis
    _count(4 * m**2 * basis.shape[1])
    red = 0.5 * (red + red.T)
    vals, vecs = np.linalg.eigh(red)
    _count(9 * basis.shape[1] ** 3)
    return basis @ vecs[:, :b], vals[:b].copy()


def _coupling_column(grams: GramSet, alpha: int, s_beta: np.ndarray,
                     beta: int, vc_beta: np.ndarray) -> np.ndarray:
    # G_{alpha,beta} s_beta without assembling the matrix
    zeta = s_beta[0]
    col = np.empty(1 + grams.m)
    col[0] = grams.xtx[alpha, beta] * zeta + grams.vt_x[:, alpha] @ s_beta[1:]
    col[1:] = zeta * grams.vt_x[:, beta] + vc_beta
    _count(4 * grams.m)
    return col


def _objective(grams: GramSet, c: np.ndarray, C: np.ndarray) -> float:
    cross = np.einsum("ia,ia->a", grams.vt_hx, C)
    quad = C.T @ grams.vt_hv @ C
    _count(2 * grams.m**2 * grams.b)
    return float(np.sum(c**2 * grams.diag_xhx) + 2.0 * np.sum(c * cross)
                 + np.trace(quad))


def _constraint_matrix(grams: GramSet, c: np.ndarray, C: np.ndarray) -> np.ndarray:
    xv = grams.vt_x.T @ C  # (b, b)
    out = np.outer(c, c) * grams.xtx + c[:, None] * xv + (c[:, None] * xv).T \
        + C.T @ grams.vtv @ C
    _count(2 * grams.m**2 * grams.b + 2 * grams.m * grams.b**2)
    return out


def constraint_residual(grams: GramSet, c: np.ndarray, C: np.ndarray) -> float:
    """Frobenius distance of the combined block's Gram matrix from identity."""
    m = _constraint_matrix(grams, c, C)
    return float(np.linalg.norm(m - np.eye(grams.b)))


def find_coefficients(grams: GramSet, sweeps: int = 3, feas_tol: float = 1e-8,
                      early_tol: float = 1e-8, init=None) -> Coefficients:
    """Solve the trace minimization with the diagonal-X restriction.

    The Gauss-Seidel sweeps start from the Ritz solution of the member-only
    pencil (retained-column weight zero), a feasible point by construction;
    ``init`` can replace it with an explicit list of b coordinate vectors of
    length 1+m, each ordered (retained-column weight, member weights).  A
    guard keeps the best feasible iterate seen, so the reported trace never
    exceeds the trace of the initialization.
    """
    b, m = grams.b, grams.m
    full = np.empty((1 + m, 1 + m))

    def a_mat(alpha):
        full[0, 0] = grams.diag_xhx[alpha]
        full[0, 1:] = grams.vt_hx[:, alpha]
        full[1:, 0] = grams.vt_hx[:, alpha]
        full[1:, 1:] = grams.vt_hv
        return full

    def g_diag(alpha):
        out = np.empty((1 + m, 1 + m))
        out[0, 0] = grams.xtx[alpha, alpha]
        out[0, 1:] = grams.vt_x[:, alpha]
        out[1:, 0] = grams.vt_x[:, alpha]
        out[1:, 1:] = grams.vtv
        return out

    if init is None:
        c_init, _ = block_rayleigh_ritz(grams.vt_hv, grams.vtv, b)
        s = [np.concatenate(([0.0], c_init[:, alpha])) for alpha in range(b)]
    else:
        if len(init) != b or any(len(sa) != 1 + m for sa in init):
            raise ValueError("warm start shape does not match the Gram data")
        s = [np.asarray(sa, dtype=np.float64).copy() for sa in init]
    for alpha in range(b):
        scale = float(s[alpha] @ g_diag(alpha) @ s[alpha])
        if scale <= 0.0:
            raise CoefficientSolveError("infeasible initialization column")
        s[alpha] = s[alpha] / np.sqrt(scale)

    def unpack():
        c = np.array([sa[0] for sa in s])
        C = np.stack([sa[1:] for sa in s], axis=1)
        return c, C

    c, C = unpack()
    best = Coefficients(c, C, _objective(grams, c, C),
                        constraint_residual(grams, c, C), np.inf, 0)

    vc = [grams.vtv @ sa[1:] for sa in s]
    _count(2 * m**2 * b)
    for sweep in range(1, sweeps + 1):
        increment = 0.0
        for alpha in range(b):
            cols = [
                _coupling_column(grams, alpha, s[beta], beta, vc[beta])
                for beta in range(b) if beta != alpha
            ]
            basis = nullspace_basis(np.stack(cols, axis=1) if cols
                                    else np.empty((1 + m, 0)))
            a_full = a_mat(alpha)
            g_full = g_diag(alpha)
            a_red = basis.T @ a_full @ basis
            g_red = basis.T @ g_full @ basis
            _count(8 * (1 + m) ** 2 * basis.shape[1])
            _, z = solve_reduced_geig(a_red, g_red)
            new = basis @ z
            # the pencil fixes the sign arbitrarily; align with the previous
            # iterate so the sweep measures genuine movement
            if new @ s[alpha] < 0.0:
                new = -new
            increment = max(increment, float(np.linalg.norm(new - s[alpha])))
            s[alpha] = new
            vc[alpha] = grams.vtv @ new[1:]
            _count(2 * m**2)
        c, C = unpack()
        feas = constraint_residual(grams, c, C)
        trace = _objective(grams, c, C)
        if feas <= feas_tol and trace < best.trace:
            best = Coefficients(c, C, trace, feas, increment, sweep)
        if feas <= early_tol and increment <= early_tol:
            break
    return best


def kkt_residual(grams: GramSet, c: np.ndarray, C: np.ndarray) -> dict:
    """First-order optimality of a coefficient solution.

    Recovers a symmetric multiplier matrix by least squares from the
    stationarity equations, then reports the stationarity residual relative
    to the gradient scale, the constraint residual, and their combination.
    """
    b, m = grams.b, grams.m
    n = 1 + m
    s = [np.concatenate(([c[alpha]], C[:, alpha])) for alpha in range(b)]

    def a_mat(alpha):
        full = np.empty((n, n))
        full[0, 0] = grams.diag_xhx[alpha]
        full[0, 1:] = grams.vt_hx[:, alpha]
        full[1:, 0] = grams.vt_hx[:, alpha]
        full[1:, 1:] = grams.vt_hv
        return full

    def g_mat(alpha, beta):
        full = np.empty((n, n))
        full[0, 0] = grams.xtx[alpha, beta]
        full[0, 1:] = grams.vt_x[:, alpha]
        full[1:, 0] = grams.vt_x[:, beta]
        full[1:, 1:] = grams.vtv
        return full

    rhs = np.concatenate([a_mat(alpha) @ s[alpha] for alpha in range(b)])
    pairs = [(g, d) for g in range(b) for d in range(g, b)]
    design = np.zeros((b * n, len(pairs)))
    for j, (g, d) in enumerate(pairs):
        design[g * n:(g + 1) * n, j] += g_mat(g, d) @ s[d]
        if g != d:
            design[d * n:(d + 1) * n, j] += g_mat(d, g) @ s[g]
    lam, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    stationarity = float(np.linalg.norm(rhs - design @ lam))
    scale = max(1.0, float(np.linalg.norm(rhs)))
    feas = constraint_residual(grams, np.asarray(c, dtype=np.float64),
                               np.asarray(C, dtype=np.float64))
    rel = stationarity / scale
    return {
        "stationarity": rel,
        "constraint": feas,
        "total": float(np.hypot(rel, feas)),
    }
