"""Tensor-train vectors and operators: storage, orthogonalization, arithmetic, rounding."""

from __future__ import annotations

import enum
import math
from typing import Sequence

import numpy as np

# Relative cutoff below which trailing singular values are dropped while
# orthogonalizing; keeps frames well conditioned without changing the value
# beyond ~1e-14 * norm.
TRIM_TOL = 1e-14


class Orthogonality(enum.Enum):
    """Which canonical form a tensor train is known to be in."""

    NONE = "none"
    LEFT = "left"
    RIGHT = "right"


def _freeze(core: np.ndarray) -> np.ndarray:
    core = np.ascontiguousarray(core, dtype=np.float64)
    core.setflags(write=False)
    return core


class TTVector:
    """Vector in tensor-train format.

    The k-th core has shape ``(r[k-1], n[k], r[k])`` with boundary ranks
    ``r[0] = r[d] = 1``.  Instances are immutable; every operation returns a
    new vector.

    Attributes
    ----------
    cores : tuple of ndarray
        The 3-way cores, left-rank x mode x right-rank.
    orth : Orthogonality
        Canonical form established by the constructor that produced this
        vector; purely a cached hint.
    """

    __slots__ = ("cores", "orth")

    def __init__(self, cores: Sequence[np.ndarray], orth: Orthogonality = Orthogonality.NONE):
        cores = tuple(_freeze(c) for c in cores)
        if not cores:
            raise ValueError("a tensor train needs at least one core")
        for k, c in enumerate(cores):
            if c.ndim != 3:
                raise ValueError(f"core {k} is not 3-way")
        if cores[0].shape[0] != 1 or cores[-1].shape[2] != 1:
            raise ValueError("boundary ranks must be 1")
        for k in range(len(cores) - 1):
            if cores[k].shape[2] != cores[k + 1].shape[0]:
                raise ValueError(f"rank mismatch between cores {k} and {k + 1}")
        self.cores = cores
        self.orth = orth

    @property
    def d(self) -> int:
        return len(self.cores)

    @property
    def dims(self) -> tuple:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple:
        """All d+1 bond ranks, including the unit boundary ranks."""
        return (1,) + tuple(c.shape[2] for c in self.cores)

    def __repr__(self) -> str:
        return f"TTVector(dims={self.dims}, ranks={self.ranks[1:-1]}, orth={self.orth.value})"


class TTOperator:
    """Linear operator in tensor-train (matrix-product operator) format.

    The k-th core has shape ``(R[k-1], n[k], n[k], R[k])``; the two middle
    axes are the output and input mode indices.
    """

    __slots__ = ("cores",)

    def __init__(self, cores: Sequence[np.ndarray]):
        cores = tuple(_freeze(c) for c in cores)
        if not cores:
            raise ValueError("an operator needs at least one core")
        for k, c in enumerate(cores):
            if c.ndim != 4:
                raise ValueError(f"operator core {k} is not 4-way")
            if c.shape[1] != c.shape[2]:
                raise ValueError(f"operator core {k} is not square in the mode axes")
        if cores[0].shape[0] != 1 or cores[-1].shape[3] != 1:
            raise ValueError("boundary ranks must be 1")
        for k in range(len(cores) - 1):
            if cores[k].shape[3] != cores[k + 1].shape[0]:
                raise ValueError(f"rank mismatch between operator cores {k} and {k + 1}")
        self.cores = cores

    @property
    def d(self) -> int:
        return len(self.cores)

    @property
    def dims(self) -> tuple:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple:
        return (1,) + tuple(c.shape[3] for c in self.cores)

    def __repr__(self) -> str:
        return f"TTOperator(dims={self.dims}, ranks={self.ranks[1:-1]})"


# ---------------------------------------------------------------------------
# matricizations

def matricize_left(core: np.ndarray) -> np.ndarray:
    """Reshape a core (r0, n, r1) into the (r0*n) x r1 matrix."""
    r0, n, r1 = core.shape
    return core.reshape(r0 * n, r1)


def matricize_right(core: np.ndarray) -> np.ndarray:
    """Reshape a core (r0, n, r1) into the r0 x (n*r1) matrix."""
    r0, n, r1 = core.shape
    return core.reshape(r0, n * r1)


def _svd(mat: np.ndarray):
    """SVD with a divide-and-conquer failure fallback.

    LAPACK's gesdd occasionally fails to converge on badly scaled
    matricizations (large concatenated bonds); gesvd is slower but does not
    share the failure mode.
    """
    try:
        return np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        import scipy.linalg
        return scipy.linalg.svd(mat, full_matrices=False,
                                lapack_driver="gesvd")


def _select_rank(s: np.ndarray, max_rank: int | None, delta: float) -> int:
    """Number of singular values to keep: at least one, at most max_rank,
    tail energy below delta, and nothing under the machine floor."""
    keep = int(np.count_nonzero(s > TRIM_TOL * s[0])) if s[0] > 0 else 1
    if delta > 0:
        tail = np.cumsum(s[::-1] ** 2)[::-1]  # tail[t] = sum of s[t:]**2
        below = np.nonzero(tail <= delta**2)[0]
        t_eps = int(below[0]) if below.size else s.size
        keep = min(keep, t_eps)
    if max_rank is not None:
        keep = min(keep, int(max_rank))
    return max(keep, 1)


# ---------------------------------------------------------------------------
# orthogonalization

def orthogonalize_left(x: TTVector) -> TTVector:
    """Return an equal vector whose cores 1..d-1 have orthonormal columns."""
    if x.orth is Orthogonality.LEFT:
        return x
    cores = [np.array(c) for c in x.cores]
    for k in range(x.d - 1):
        q, rm = np.linalg.qr(matricize_left(cores[k]))
        u, s, vt = _svd(rm)
        t = _select_rank(s, None, 0.0)
        q = q @ u[:, :t]
        r0, n, _ = cores[k].shape
        cores[k] = q.reshape(r0, n, t)
        carry = s[:t, None] * vt[:t]
        cores[k + 1] = np.tensordot(carry, cores[k + 1], axes=(1, 0))
    return TTVector(cores, orth=Orthogonality.LEFT)


def orthogonalize_right(x: TTVector) -> TTVector:
    """Return an equal vector whose cores 2..d have orthonormal rows."""
    if x.orth is Orthogonality.RIGHT:
        return x
    cores = [np.array(c) for c in x.cores]
    for k in range(x.d - 1, 0, -1):
        q, rm = np.linalg.qr(matricize_right(cores[k]).T)
        u, s, vt = _svd(rm)
        t = _select_rank(s, None, 0.0)
        q = q @ u[:, :t]
        _, n, r1 = cores[k].shape
        cores[k] = q.T.reshape(t, n, r1)
        carry = (s[:t, None] * vt[:t]).T  # (r0, t)
        cores[k - 1] = np.tensordot(cores[k - 1], carry, axes=(2, 0))
    return TTVector(cores, orth=Orthogonality.RIGHT)


def classify_orthogonality(x: TTVector, tol: float = 1e-12) -> Orthogonality:
    """Inspect the cores and report which canonical form actually holds."""
    left = all(
        np.allclose(matricize_left(c).T @ matricize_left(c), np.eye(c.shape[2]), atol=tol)
        for c in x.cores[:-1]
    )
    if left and x.d > 1:
        return Orthogonality.LEFT
    right = all(
        np.allclose(matricize_right(c) @ matricize_right(c).T, np.eye(c.shape[0]), atol=tol)
        for c in x.cores[1:]
    )
    if right and x.d > 1:
        return Orthogonality.RIGHT
    return Orthogonality.NONE


# ---------------------------------------------------------------------------
# dense conversions

def tt_to_dense(x: TTVector) -> np.ndarray:
    """Contract all cores into the full vector of length prod(dims)."""
    m = x.cores[0].reshape(x.dims[0], x.ranks[1])
    for core in x.cores[1:]:
        r0, n, r1 = core.shape
        m = (m @ core.reshape(r0, n * r1)).reshape(-1, r1)
    return m.reshape(-1)


def tt_from_dense(vec: np.ndarray, dims: Sequence[int],
                  max_rank: int | None = None, eps: float = 0.0) -> TTVector:
    """Decompose a dense vector by successive SVDs of the sequential unfoldings.

    With ``eps > 0`` the relative Frobenius error of the result is at most
    ``eps``; ``max_rank`` caps every bond rank.
    """
    dims = tuple(int(n) for n in dims)
    vec = np.asarray(vec, dtype=np.float64).reshape(-1)
    if vec.size != math.prod(dims):
        raise ValueError("vector length does not match mode sizes")
    d = len(dims)
    delta = eps * np.linalg.norm(vec) / math.sqrt(max(d - 1, 1)) if eps > 0 else 0.0
    cores = []
    m = vec.reshape(1, -1)
    r = 1
    for k in range(d - 1):
        u, s, vt = _svd(m.reshape(r * dims[k], -1))
        t = _select_rank(s, max_rank, delta)
        cores.append(u[:, :t].reshape(r, dims[k], t))
        m = s[:t, None] * vt[:t]
        r = t
    cores.append(m.reshape(r, dims[-1], 1))
    return TTVector(cores, orth=Orthogonality.LEFT if d > 1 else Orthogonality.NONE)


def op_to_dense(h: TTOperator) -> np.ndarray:
    """Contract an operator into its full prod(dims) x prod(dims) matrix."""
    m = np.ones((1, 1, 1))
    for core in h.cores:
        rows, cols, _ = m.shape
        _, n, _, r1 = core.shape
        tmp = np.tensordot(m, core, axes=(2, 0))  # (rows, cols, n, n, r1)
        m = tmp.transpose(0, 2, 1, 3, 4).reshape(rows * n, cols * n, r1)
    return m[:, :, 0]


# ---------------------------------------------------------------------------
# arithmetic

def tt_add(a: TTVector, b: TTVector) -> TTVector:
    """Exact sum; bond ranks add (no rounding happens here)."""
    if a.dims != b.dims:
        raise ValueError("mode sizes differ")
    if a.d == 1:
        return TTVector([a.cores[0] + b.cores[0]])
    cores = []
    for k in range(a.d):
        ca, cb = a.cores[k], b.cores[k]
        if k == 0:
            cores.append(np.concatenate([ca, cb], axis=2))
        elif k == a.d - 1:
            cores.append(np.concatenate([ca, cb], axis=0))
        else:
            ra0, n, ra1 = ca.shape
            rb0, _, rb1 = cb.shape
            block = np.zeros((ra0 + rb0, n, ra1 + rb1))
            block[:ra0, :, :ra1] = ca
            block[ra0:, :, ra1:] = cb
            cores.append(block)
    return TTVector(cores)


def tt_scale(x: TTVector, alpha: float) -> TTVector:
    """Scale by alpha; implemented by scaling exactly the first core."""
    cores = list(x.cores)
    cores[0] = cores[0] * float(alpha)
    orth = x.orth if x.orth is Orthogonality.RIGHT else Orthogonality.NONE
    return TTVector(cores, orth=orth)


def tt_inner(a: TTVector, b: TTVector) -> float:
    """Inner product <a, b> by a single left-to-right contraction."""
    if a.dims != b.dims:
        raise ValueError("mode sizes differ")
    m = np.ones((1, 1))
    for ca, cb in zip(a.cores, b.cores):
        tmp = np.tensordot(m, ca, axes=(0, 0))  # (rb, n, ra1)
        m = np.tensordot(tmp, cb, axes=([0, 1], [0, 1]))  # (ra1, rb1)
    return float(m[0, 0])


def tt_norm(x: TTVector) -> float:
    return math.sqrt(max(tt_inner(x, x), 0.0))


def tt_bilinear(h: TTOperator, x: TTVector, y: TTVector) -> float:
    """Quadratic form <x, H y> without materializing H y."""
    m = np.ones((1, 1, 1))  # (r_x, R, r_y)
    for cx, ch, cy in zip(x.cores, h.cores, y.cores):
        tmp = np.tensordot(m, cx, axes=(0, 0))  # (R, r_y, n, r_x')
        tmp = np.tensordot(tmp, ch, axes=([0, 2], [0, 1]))  # (r_y, r_x', n_in, R')
        m = np.tensordot(tmp, cy, axes=([0, 2], [0, 1]))  # (r_x', R', r_y')
        m = m.transpose(0, 1, 2)
    return float(m[0, 0, 0])


def tt_round(x: TTVector, max_rank: int | None = None, eps: float = 0.0,
             return_discarded: bool = False):
    """Truncate bond ranks by a right-to-left orthogonalization followed by a
    left-to-right SVD sweep.

    Parameters
    ----------
    max_rank : int, optional
        Hard cap on every bond rank.
    eps : float, optional
        Relative Frobenius-norm error budget, split evenly over the bonds.
    return_discarded : bool, optional
        Also return the summed squares of all discarded singular values.
    """
    y = orthogonalize_right(x)
    cores = [np.array(c) for c in y.cores]
    norm = np.linalg.norm(cores[0])
    delta = eps * norm / math.sqrt(max(y.d - 1, 1)) if eps > 0 else 0.0
    discarded = 0.0
    for k in range(y.d - 1):
        u, s, vt = _svd(matricize_left(cores[k]))
        t = _select_rank(s, max_rank, delta)
        discarded += float(np.sum(s[t:] ** 2))
        r0, n, _ = cores[k].shape
        cores[k] = u[:, :t].reshape(r0, n, t)
        cores[k + 1] = np.tensordot(s[:t, None] * vt[:t], cores[k + 1], axes=(1, 0))
    out = TTVector(cores, orth=Orthogonality.LEFT if y.d > 1 else Orthogonality.NONE)
    if return_discarded:
        return out, discarded
    return out


# ---------------------------------------------------------------------------
# operator application and construction

def tt_matvec(h: TTOperator, x: TTVector) -> TTVector:
    """Apply an operator core-wise; bond ranks multiply (R[k] * r[k])."""
    if h.dims != x.dims:
        raise ValueError("mode sizes differ")
    cores = []
    for ch, cx in zip(h.cores, x.cores):
        R0, n, _, R1 = ch.shape
        r0, _, r1 = cx.shape
        z = np.einsum("aijb,cjd->acibd", ch, cx)
        cores.append(z.reshape(R0 * r0, n, R1 * r1))
    return TTVector(cores)


def rank1_operator(mats: Sequence[np.ndarray]) -> TTOperator:
    """Kronecker product of per-mode matrices as a rank-1 operator."""
    cores = []
    for m in mats:
        m = np.asarray(m, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("factors must be square matrices")
        cores.append(m.reshape(1, *m.shape, 1))
    return TTOperator(cores)


def identity_operator(dims: Sequence[int]) -> TTOperator:
    return rank1_operator([np.eye(n) for n in dims])


def op_matmul(a: TTOperator, b: TTOperator) -> TTOperator:
    """Operator product A @ B, core-wise; bond ranks multiply."""
    if a.dims != b.dims:
        raise ValueError("mode sizes differ")
    cores = []
    for ca, cb in zip(a.cores, b.cores):
        Ra0, n, _, Ra1 = ca.shape
        Rb0, _, _, Rb1 = cb.shape
        z = np.einsum("ailb,cljd->acijbd", ca, cb)
        cores.append(z.reshape(Ra0 * Rb0, n, n, Ra1 * Rb1))
    return TTOperator(cores)


def _op_as_vector(h: TTOperator) -> TTVector:
    # view the (R0, n, n, R1) cores as (R0, n*n, R1) vector cores
    return TTVector([c.reshape(c.shape[0], c.shape[1] * c.shape[2], c.shape[3])
                     for c in h.cores])


def _vector_as_op(x: TTVector, dims: Sequence[int]) -> TTOperator:
    return TTOperator([c.reshape(c.shape[0], n, n, c.shape[2])
                       for c, n in zip(x.cores, dims)])


def op_add(a: TTOperator, b: TTOperator) -> TTOperator:
    """Exact sum; operator bond ranks add (no rounding happens here)."""
    if a.dims != b.dims:
        raise ValueError("mode sizes differ")
    if a.d == 1:
        return TTOperator([a.cores[0] + b.cores[0]])
    cores = []
    for k in range(a.d):
        ca, cb = a.cores[k], b.cores[k]
        if k == 0:
            cores.append(np.concatenate([ca, cb], axis=3))
        elif k == a.d - 1:
            cores.append(np.concatenate([ca, cb], axis=0))
        else:
            Ra0, n, _, Ra1 = ca.shape
            Rb0 = cb.shape[0]
            Rb1 = cb.shape[3]
            block = np.zeros((Ra0 + Rb0, n, n, Ra1 + Rb1))
            block[:Ra0, :, :, :Ra1] = ca
            block[Ra0:, :, :, Ra1:] = cb
            cores.append(block)
    return TTOperator(cores)


def op_scale(a: TTOperator, alpha: float) -> TTOperator:
    return _vector_as_op(tt_scale(_op_as_vector(a), alpha), a.dims)


def op_round(a: TTOperator, max_rank: int | None = None, eps: float = 0.0) -> TTOperator:
    """Round an operator in the Frobenius norm of its vectorization."""
    return _vector_as_op(tt_round(_op_as_vector(a), max_rank, eps), a.dims)


# ---------------------------------------------------------------------------
# constructors

def _bond_caps(dims: Sequence[int], ceiling: int) -> list:
    """Attainable bond ranks min(prod left, prod right), clipped at ceiling."""
    d = len(dims)
    left = [1] * (d + 1)
    for k in range(d):
        left[k + 1] = min(left[k] * dims[k], ceiling)
    right = [1] * (d + 1)
    for k in range(d - 1, -1, -1):
        right[k] = min(right[k + 1] * dims[k], ceiling)
    return [min(left[k], right[k]) for k in range(d + 1)]


def tt_zero(dims: Sequence[int]) -> TTVector:
    return TTVector([np.zeros((1, n, 1)) for n in dims])


def tt_random(dims: Sequence[int], rank: int, seed) -> TTVector:
    """Random unit-norm vector with i.i.d. normal cores at the given rank.

    ``seed`` may be an int or a numpy Generator.  Requested ranks above the
    attainable maximum are clipped.
    """
    rng = np.random.default_rng(seed)
    dims = tuple(int(n) for n in dims)
    caps = _bond_caps(dims, int(rank))
    ranks = [min(int(rank), caps[k]) for k in range(len(dims) + 1)]
    ranks[0] = ranks[-1] = 1
    cores = []
    for k, n in enumerate(dims):
        c = rng.standard_normal((ranks[k], n, ranks[k + 1]))
        cores.append(c / math.sqrt(n * ranks[k + 1]))  # keep the norm O(1)
    x = TTVector(cores)
    nrm = tt_norm(x)
    if nrm == 0.0:
        raise ValueError("degenerate random draw")
    return tt_scale(x, 1.0 / nrm)
