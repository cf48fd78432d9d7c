"""Tangent-space geometry of the fixed-rank tensor-train manifold.

A tangent vector at a rank-r point x is parametrized by one delta core per
site; all but the last delta core satisfy a gauge condition against the left
orthogonal frames of x, which makes the parametrization unique and turns the
tangent inner product into a plain sum of Frobenius products.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .ttcore import (Orthogonality, TTOperator, TTVector, matricize_left,
                     orthogonalize_left, orthogonalize_right, tt_matvec)

GAUGE_TOL = 1e-10


class TangentSpace:
    """Frames and ranks of the tangent space at one tensor-train point.

    Attributes
    ----------
    point : TTVector
        The base point in left-canonical form.
    left : tuple of ndarray
        Left-orthogonal frames U_1..U_d (cores of ``point``).
    right : tuple of ndarray
        Right-orthogonal frames V_1..V_d of the same vector.
    """

    __slots__ = ("point", "left", "right", "dims", "ranks")

    def __init__(self, x: TTVector):
        xr = orthogonalize_right(orthogonalize_left(x))
        xl = orthogonalize_left(xr)
        # a second pass can shave ranks on degenerate inputs; iterate to a
        # fixed point so both frame families share one rank profile
        while xl.ranks != xr.ranks:
            xr = orthogonalize_right(xl)
            xl = orthogonalize_left(xr)
        self.point = xl
        self.left = xl.cores
        self.right = xr.cores
        self.dims = xl.dims
        self.ranks = xl.ranks

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        """Dimension of the tangent space (equals the manifold dimension)."""
        total = sum(self.ranks[k] * self.dims[k] * self.ranks[k + 1]
                    for k in range(self.d))
        return total - sum(r * r for r in self.ranks[1:-1])

    def __repr__(self) -> str:
        return f"TangentSpace(dims={self.dims}, ranks={self.ranks[1:-1]})"


class TangentVector:
    """Element of a TangentSpace, stored as one delta core per site."""

    __slots__ = ("space", "deltas")

    def __init__(self, space: TangentSpace, deltas: Sequence[np.ndarray]):
        deltas = tuple(np.asarray(c, dtype=np.float64) for c in deltas)
        if len(deltas) != space.d:
            raise ValueError("one delta core per site is required")
        for k, c in enumerate(deltas):
            expect = space.left[k].shape
            if c.shape != expect:
                raise ValueError(f"delta core {k} has shape {c.shape}, expected {expect}")
        self.space = space
        self.deltas = deltas

    def norm(self) -> float:
        return float(np.sqrt(max(tangent_inner(self, self), 0.0)))


def zero_tangent(space: TangentSpace) -> TangentVector:
    return TangentVector(space, [np.zeros(c.shape) for c in space.left])


def tangent_inner(a: TangentVector, b: TangentVector) -> float:
    """Riemannian inner product: the gauge makes the delta cores additive."""
    if a.space is not b.space:
        raise ValueError("tangent vectors live at different base points")
    return float(sum(np.vdot(x, y) for x, y in zip(a.deltas, b.deltas)))


def inner_matrix(rows: Sequence[TangentVector], cols: Sequence[TangentVector]) -> np.ndarray:
    """All pairwise tangent inner products as a dense matrix."""
    if not rows or not cols:
        return np.zeros((len(rows), len(cols)))
    space = rows[0].space
    for t in list(rows) + list(cols):
        if t.space is not space:
            raise ValueError("tangent vectors live at different base points")
    gram = np.zeros((len(rows), len(cols)))
    for k in range(space.d):
        a = np.stack([t.deltas[k].reshape(-1) for t in rows])
        b = np.stack([t.deltas[k].reshape(-1) for t in cols])
        gram += a @ b.T
    return gram


def axpy(alpha: float, a: TangentVector, b: TangentVector) -> TangentVector:
    """alpha * a + b inside one tangent space."""
    if a.space is not b.space:
        raise ValueError("tangent vectors live at different base points")
    return TangentVector(a.space, [alpha * x + y for x, y in zip(a.deltas, b.deltas)])


def combine(vectors: Sequence[TangentVector], weights: Sequence[float]) -> TangentVector:
    """Weighted sum of tangent vectors sharing one base."""
    if len(vectors) != len(weights):
        raise ValueError("one weight per vector is required")
    if not vectors:
        raise ValueError("nothing to combine")
    space = vectors[0].space
    for t in vectors:
        if t.space is not space:
            raise ValueError("tangent vectors live at different base points")
    deltas = [np.zeros(c.shape) for c in space.left]
    for w, t in zip(weights, vectors):
        if w == 0.0:
            continue
        for k in range(space.d):
            deltas[k] += w * t.deltas[k]
    return TangentVector(space, deltas)


def regauge(t: TangentVector) -> TangentVector:
    """Re-impose the gauge by moving frame components into the next core.

    Linear combinations that cancel to a norm far below their inputs keep
    the gauge conditions only at the scale of the inputs; rescaled to unit
    size, the leftover frame components break the core-wise inner product
    formulas.  Each component is transported exactly one site to the right,
    so the embedded vector does not change.
    """
    space = t.space
    if space.d == 1:
        return t
    deltas = [np.array(c) for c in t.deltas]
    for k in range(space.d - 1):
        u = matricize_left(space.left[k])
        dk = matricize_left(deltas[k])
        g = u.T @ dk
        deltas[k] = (dk - u @ g).reshape(deltas[k].shape)
        deltas[k + 1] += np.einsum("ab,bnc->anc", g, space.right[k + 1])
    return TangentVector(space, deltas)


def _gauge_defect(space: TangentSpace, deltas) -> float:
    worst = 0.0
    for k in range(space.d - 1):
        overlap = matricize_left(space.left[k]).T @ matricize_left(deltas[k])
        scale = max(1.0, float(np.linalg.norm(deltas[k])))
        worst = max(worst, float(np.abs(overlap).max()) / scale)
    return worst


# ---------------------------------------------------------------------------
# projection sweeps (batched over vectors sharing the base)

def _stack(zs: Sequence[TTVector]) -> list:
    return [np.stack([z.cores[k] for z in zs]) for k in range(zs[0].d)]


def _project_group(space: TangentSpace, zs: Sequence[TTVector]) -> list:
    d = space.d
    z = _stack(zs)
    s = len(zs)
    rhs = [None] * (d + 1)
    rhs[d] = np.ones((s, 1, 1))
    for k in range(d - 1, 0, -1):
        # smjq,ajr,sqr->sma
        m, j = z[k].shape[1:3]
        r = rhs[k + 1].shape[2]
        zt = _bmm(z[k], (m, j), rhs[k + 1], (r,))                       # smjr
        rhs[k] = np.tensordot(zt, space.right[k], axes=([2, 3], [1, 2]))
    lhs = [None] * d
    lhs[0] = np.ones((s, 1, 1))
    for k in range(d - 1):
        # sam,aiA,smiM->sAM
        u = np.tensordot(lhs[k], space.left[k], axes=([1], [0]))        # smiA
        a2 = u.shape[3]
        u = np.ascontiguousarray(u.transpose(0, 3, 1, 2))               # sAmi
        lhs[k + 1] = _bmm(u, (a2,), z[k], (z[k].shape[3],))             # sAM
    out = []
    for k in range(d):
        # sam,smiq->saiq
        a1 = lhs[k].shape[1]
        i1, q1 = z[k].shape[2], z[k].shape[3]
        p = _bmm(lhs[k], (a1,), z[k], (i1, q1))
        if k < d - 1:
            p -= np.tensordot(space.left[k], lhs[k + 1],
                              axes=([2], [1])).transpose(2, 0, 1, 3)
            p = _bmm(p, (a1, i1), rhs[k + 1], (rhs[k + 1].shape[2],))   # sair
        out.append(p)
    return _unstack_tangent(space, out, s)


def _bmm(a, lead, b, trail):
    """Batched matmul over the first axis with flattened middle groups."""
    s = a.shape[0]
    inner = int(np.prod(a.shape[1 + len(lead):]))
    left = a.reshape(s, int(np.prod(lead)) if lead else 1, inner)
    right = b.reshape(s, inner, int(np.prod(trail)) if trail else 1)
    return np.matmul(left, right).reshape((s, *lead, *trail))


def _project_matvec_group(space: TangentSpace, h: TTOperator,
                          ys: Sequence[TTVector]) -> list:
    # Fixed pairwise contraction orders; every step is a tensordot or a
    # batched matmul so the work lands in BLAS with predictable cost.
    d = space.d
    y = _stack(ys)
    s = len(ys)
    rhs = [None] * (d + 1)
    rhs[d] = np.ones((s, 1, 1, 1))
    for k in range(d - 1, 0, -1):
        # smjq,bijc,air,sqcr->smba
        hr = np.tensordot(h.cores[k], space.right[k], axes=([1], [1]))  # bjcar
        m, j, q = y[k].shape[1:]
        c, r = rhs[k + 1].shape[2:]
        zt = _bmm(y[k], (m, j), rhs[k + 1], (c, r))                     # smjcr
        rhs[k] = np.tensordot(zt, hr, axes=([2, 3, 4], [1, 2, 4]))      # smba
    lhs = [None] * d
    lhs[0] = np.ones((s, 1, 1, 1))
    for k in range(d - 1):
        # sabm,aiA,bijB,smjM->sABM
        lh = np.tensordot(space.left[k], h.cores[k], axes=([1], [1]))   # aAbjB
        u = np.tensordot(lhs[k], lh, axes=([1, 2], [0, 2]))             # smAjB
        sm, a2, j2, b2 = u.shape[1], u.shape[2], u.shape[3], u.shape[4]
        u = np.ascontiguousarray(u.transpose(0, 2, 4, 1, 3))            # sABmj
        mm = y[k].shape[3]
        lhs[k + 1] = _bmm(u, (a2, b2), y[k], (mm,))                     # sABM
    out = []
    for k in range(d):
        # sabm,bijB,smjM->saiBM
        v = np.tensordot(lhs[k], h.cores[k], axes=([2], [0]))           # samijB
        a1, m1 = lhs[k].shape[1], lhs[k].shape[3]
        i1, b1 = h.cores[k].shape[1], h.cores[k].shape[3]
        v = np.ascontiguousarray(v.transpose(0, 1, 3, 5, 2, 4))         # saiBmj
        mm = y[k].shape[3]
        p = _bmm(v, (a1, i1, b1), y[k], (mm,))                          # saiBM
        if k < d - 1:
            p -= np.tensordot(space.left[k], lhs[k + 1],
                              axes=([2], [1])).transpose(2, 0, 1, 3, 4)
            q = np.ascontiguousarray(
                rhs[k + 1].transpose(0, 2, 1, 3))                       # sBMr
            rr = rhs[k + 1].shape[3]
            p = _bmm(p, (a1, i1), q.reshape(s, -1, rr), (rr,))          # sair
        else:
            p = p[:, :, :, 0, :]  # trailing operator and vector ranks are 1
        out.append(p)
    return _unstack_tangent(space, out, s)


def _unstack_tangent(space: TangentSpace, stacked: list, s: int) -> list:
    result = []
    for i in range(s):
        deltas = [stacked[k][i] for k in range(space.d)]
        assert _gauge_defect(space, deltas) < GAUGE_TOL
        result.append(TangentVector(space, deltas))
    return result


def _grouped(items: Sequence[TTVector]):
    groups = {}
    for i, z in enumerate(items):
        groups.setdefault(z.ranks, []).append(i)
    return groups


def project(space: TangentSpace, z: TTVector) -> TangentVector:
    """Orthogonal projection of a tensor train onto the tangent space."""
    if z.dims != space.dims:
        raise ValueError("mode sizes differ from the base point")
    return _project_group(space, [z])[0]


def project_many(space: TangentSpace, zs: Sequence[TTVector]) -> list:
    """Project several vectors at once, batching those with equal ranks."""
    out = [None] * len(zs)
    for _, idxs in _grouped(zs).items():
        for i, t in zip(idxs, _project_group(space, [zs[i] for i in idxs])):
            out[i] = t
    return out


def project_matvec(space: TangentSpace, h: TTOperator, y: TTVector,
                   fused: bool = True) -> TangentVector:
    """Projection of H y onto the tangent space.

    The fused path contracts the operator into the projection sweeps and
    never materializes the rank R*r cores of H y; the reference path applies
    the operator first and projects the result.
    """
    if y.dims != space.dims or h.dims != space.dims:
        raise ValueError("mode sizes differ from the base point")
    if not fused:
        return project(space, tt_matvec(h, y))
    return _project_matvec_group(space, h, [y])[0]


def project_matvec_many(space: TangentSpace, h: TTOperator, ys: Sequence[TTVector],
                        fused: bool = True) -> list:
    if not fused:
        return [project(space, tt_matvec(h, y)) for y in ys]
    out = [None] * len(ys)
    for _, idxs in _grouped(ys).items():
        group = _project_matvec_group(space, h, [ys[i] for i in idxs])
        for i, t in zip(idxs, group):
            out[i] = t
    return out


# ---------------------------------------------------------------------------
# embedding back into the tensor-train format

def embed(t: TangentVector) -> TTVector:
    """Represent a tangent vector as a tensor train of bond rank at most 2r."""
    space = t.space
    d = space.d
    if d == 1:
        return TTVector([t.deltas[0]])
    cores = []
    for k in range(d):
        delta, left, right = t.deltas[k], space.left[k], space.right[k]
        if k == 0:
            cores.append(np.concatenate([delta, left], axis=2))
        elif k == d - 1:
            cores.append(np.concatenate([right, delta], axis=0))
        else:
            r0, n, r1 = delta.shape
            block = np.zeros((2 * r0, n, 2 * r1))
            block[:r0, :, :r1] = right
            block[r0:, :, :r1] = delta
            block[r0:, :, r1:] = left
            cores.append(block)
    return TTVector(cores, orth=Orthogonality.NONE)
