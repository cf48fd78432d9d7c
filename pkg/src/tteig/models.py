"""Model operators: spin chains and coupled anharmonic oscillators.

Both models are assembled as sums of Kronecker-product terms and compressed
into operator tensor-train form by rounding.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ttcore import (TTOperator, TTVector, op_add, op_round, rank1_operator,
                     tt_add, tt_matvec, tt_norm, tt_random, tt_round, tt_scale)


@dataclass(frozen=True)
class SopTerm:
    """One Kronecker-product term: coefficient times per-site factors.

    ``factors`` maps strictly increasing site indices to square matrices;
    all other sites carry the identity.
    """

    coefficient: float
    factors: tuple

    def __post_init__(self):
        sites = [s for s, _ in self.factors]
        if sites != sorted(set(sites)):
            raise ValueError("factor sites must be strictly increasing")


@dataclass(frozen=True)
class HeisenbergSpec:
    """Open spin-1/2 exchange chain with d sites."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("at least one site is required")

    @property
    def dims(self) -> tuple:
        return (2,) * self.d


@dataclass(frozen=True)
class OscillatorSpec:
    """Coupled oscillators in the product Hermite eigenbasis.

    ``frequencies`` holds one harmonic frequency per mode, ``levels`` the
    basis size per mode.  Cubic and quartic couplings are sparse lists of
    ``(site_tuple, value)`` with nondecreasing site tuples; a value stands
    for the fully symmetric coupling tensor entry, so every distinct
    permutation of the tuple contributes.
    """

    frequencies: tuple
    levels: int
    cubic: tuple = ()
    quartic: tuple = ()

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError("at least two basis levels per mode are required")
        if any(w <= 0 for w in self.frequencies):
            raise ValueError("frequencies must be positive")
        for sites, _ in tuple(self.cubic) + tuple(self.quartic):
            if list(sites) != sorted(sites):
                raise ValueError("coupling sites must be nondecreasing")
            if min(sites) < 0 or max(sites) >= self.d:
                raise ValueError("coupling site out of range")

    @property
    def d(self) -> int:
        return len(self.frequencies)

    @property
    def dims(self) -> tuple:
        return (self.levels,) * self.d


# ---------------------------------------------------------------------------
# sum-of-products assembly

def sop_to_mpo(terms: Sequence[SopTerm], dims: Sequence[int],
               eps: float = 1e-12) -> TTOperator:
    """Compress a sum of Kronecker-product terms into one operator.

    Terms are accumulated exactly (ranks add) and recompressed whenever the
    running rank passes a threshold.  The interim compressions are
    rank-revealing only: rounding them at ``eps`` would inject noise of that
    size, which the final rounding then cannot tell apart from structure and
    the output ranks inflate.  Only the final pass rounds at ``eps``.
    """
    dims = tuple(int(n) for n in dims)
    if not terms:
        raise ValueError("no terms to assemble")
    eyes = {n: np.eye(n) for n in set(dims)}
    acc = None
    for term in terms:
        mats = [eyes[n] for n in dims]
        for site, mat in term.factors:
            mat = np.asarray(mat, dtype=np.float64)
            if mat.shape != (dims[site], dims[site]):
                raise ValueError(f"factor at site {site} has the wrong shape")
            mats[site] = mat
        anchor = term.factors[0][0] if term.factors else 0
        mats[anchor] = mats[anchor] * term.coefficient
        one = rank1_operator(mats)
        acc = one if acc is None else op_add(acc, one)
        if max(acc.ranks) > 24:
            acc = op_round(acc)
    return op_round(acc, eps=eps)


# ---------------------------------------------------------------------------
# spin chain

def _spin_matrices():
    sx = 0.5 * np.array([[1.0, 0.0], [0.0, -1.0]])
    sz = 0.5 * np.array([[0.0, 1.0], [1.0, 0.0]])
    # the y-coupling is (i/2 K)(i/2 K) = -1/4 K (x) K for the real matrix K
    k = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return sx, sz, k


def heisenberg_terms(d: int) -> list:
    sx, sz, k = _spin_matrices()
    terms = []
    for i in range(d - 1):
        terms.append(SopTerm(1.0, ((i, sx), (i + 1, sx))))
        terms.append(SopTerm(-0.25, ((i, k), (i + 1, k))))
        terms.append(SopTerm(1.0, ((i, sz), (i + 1, sz))))
    return terms


def heisenberg_mpo(d: int, eps: float = 1e-12) -> TTOperator:
    """Nearest-neighbour exchange chain; interior operator ranks come out
    at 5 after rounding."""
    if d < 2:
        raise ValueError("the chain needs at least two sites")
    return sop_to_mpo(heisenberg_terms(d), (2,) * d, eps=eps)


# ---------------------------------------------------------------------------
# oscillators

def position_matrix(n: int) -> np.ndarray:
    """Position operator in the Hermite eigenbasis (truncated tridiagonal)."""
    q = np.zeros((n, n))
    for i in range(n - 1):
        q[i, i + 1] = q[i + 1, i] = math.sqrt((i + 1) / 2.0)
    return q


def harmonic_matrix(n: int, omega: float) -> np.ndarray:
    """Kinetic plus harmonic potential of one mode: omega * (N + 1/2)."""
    return omega * np.diag(np.arange(n) + 0.5)


def _coupling_terms(entries, order_factor, levels):
    q = position_matrix(levels)
    powers = {1: q, 2: q @ q, 3: q @ q @ q, 4: q @ q @ q @ q}
    terms = []
    for sites, value in entries:
        counts = Counter(sites)
        multiplicity = math.factorial(len(sites))
        for rep in counts.values():
            multiplicity //= math.factorial(rep)
        coeff = value * multiplicity / order_factor
        factors = tuple((site, powers[rep]) for site, rep in sorted(counts.items()))
        terms.append(SopTerm(coeff, factors))
    return terms


def oscillator_terms(spec: OscillatorSpec) -> list:
    terms = [
        SopTerm(1.0, ((i, harmonic_matrix(spec.levels, w)),))
        for i, w in enumerate(spec.frequencies)
    ]
    terms += _coupling_terms(spec.cubic, 6.0, spec.levels)
    terms += _coupling_terms(spec.quartic, 24.0, spec.levels)
    return terms


def oscillator_mpo(spec: OscillatorSpec, eps: float = 1e-12) -> TTOperator:
    return sop_to_mpo(oscillator_terms(spec), spec.dims, eps=eps)


def harmonic_part_mpo(spec: OscillatorSpec) -> TTOperator:
    terms = [
        SopTerm(1.0, ((i, harmonic_matrix(spec.levels, w)),))
        for i, w in enumerate(spec.frequencies)
    ]
    return sop_to_mpo(terms, spec.dims)


# ---------------------------------------------------------------------------
# preconditioner: exponential-sum approximation of the inverse harmonic part

def _sinc_nodes(lmin: float, lmax: float, rho: int):
    """Quadrature of 1/x = int exp(-x e^s + s) ds over [lmin, lmax].

    The upper truncation kills the double-exponential tail; the lower one is
    balanced against the trapezoid discretization error iteratively.
    """
    hi = math.log(36.0 / lmin)
    delta = 1e-2
    for _ in range(4):
        lo = math.log(delta / lmax)
        h = (hi - lo) / max(rho - 1, 1)
        delta = max(math.exp(-8.8 / h), 1e-16)
    lo = math.log(delta / lmax)
    h = (hi - lo) / max(rho - 1, 1)
    s = lo + h * np.arange(rho)
    return np.exp(s), h * np.exp(s)  # nodes t_j and weights w_j


def harmonic_preconditioner(spec: OscillatorSpec, rho: int = 8,
                            bounds: tuple | None = None,
                            eta: float | None = 0.1, seed: int = 0):
    """Rank-1-term approximation of the inverse of the harmonic part.

    The inverse of the Kronecker sum of the per-mode harmonic matrices is
    approximated by ``rho`` exponential terms; each term factorizes into a
    Kronecker product of per-mode matrix exponentials and therefore has all
    operator ranks equal to one.

    When ``eta`` is given, the construction is validated on a random probe
    vector and fails if the relative inversion error exceeds it.
    """
    from .solver import Preconditioner

    if rho < 1:
        raise ValueError("at least one quadrature term is required")
    mats = [harmonic_matrix(spec.levels, w) for w in spec.frequencies]
    diag_min = sum(float(np.diag(m).min()) for m in mats)
    diag_max = sum(float(np.diag(m).max()) for m in mats)
    if bounds is not None:
        lmin, lmax = map(float, bounds)
    else:
        lmin, lmax = diag_min, diag_max
    if lmin <= 0:
        raise ValueError("harmonic part must be positive definite")
    nodes, weights = _sinc_nodes(lmin, lmax, rho)
    terms = []
    for t, w in zip(nodes, weights):
        factors = [np.diag(np.exp(-t * np.diag(m))) for m in mats]
        factors[0] = factors[0] * w
        terms.append(rank1_operator(factors))
    probe_error = _probe_inverse_error(terms, harmonic_part_mpo(spec), spec, seed)
    if eta is not None and probe_error > eta:
        raise ValueError(
            f"inversion error {probe_error:.3e} exceeds eta={eta:.3e}; "
            f"increase the number of terms")
    return Preconditioner(terms=tuple(terms), probe_error=probe_error)


def _probe_inverse_error(terms, harm: TTOperator, spec: OscillatorSpec,
                         seed: int) -> float:
    v = tt_random(spec.dims, 3, seed)
    av = tt_matvec(harm, v)
    acc = None
    for term in terms:
        piece = tt_matvec(term, av)
        acc = piece if acc is None else tt_round(tt_add(acc, piece), eps=1e-13)
    diff = tt_add(acc, tt_scale(v, -1.0))
    return tt_norm(diff) / tt_norm(v)


# ---------------------------------------------------------------------------
# dense reference assembly (bypasses the tensor-train machinery on purpose)

def dense_from_terms(terms: Sequence[SopTerm], dims: Sequence[int]) -> np.ndarray:
    """Sum of Kronecker products as one dense matrix; reference only."""
    dims = tuple(int(n) for n in dims)
    size = math.prod(dims)
    if size > 4096:
        raise ValueError(f"dense size {size} is too large for the reference path")
    out = np.zeros((size, size))
    for term in terms:
        mats = {site: np.asarray(m, dtype=np.float64) for site, m in term.factors}
        acc = np.array([[term.coefficient]])
        for site, n in enumerate(dims):
            acc = np.kron(acc, mats.get(site, np.eye(n)))
        out += acc
    return out


def dense_operator(spec) -> np.ndarray:
    if isinstance(spec, HeisenbergSpec):
        return dense_from_terms(heisenberg_terms(spec.d), spec.dims)
    if isinstance(spec, OscillatorSpec):
        return dense_from_terms(oscillator_terms(spec), spec.dims)
    raise TypeError(f"unsupported model spec {type(spec).__name__}")


# ---------------------------------------------------------------------------
# initial product states

def _spin_configurations(d: int, b: int):
    """The b lowest product states of the diagonal exchange part, i.e. spin
    strings ordered by the number of equal neighbouring pairs."""
    out = []
    for same in range(d):
        positions = itertools.combinations(range(d - 1), same) if d > 1 else [()]
        for combo in positions:
            for first in (0, 1):
                config = [first]
                for bond in range(d - 1):
                    keep = bond in combo
                    config.append(config[-1] if keep else 1 - config[-1])
                out.append(tuple(config))
                if len(out) == b:
                    return out
    raise ValueError(f"only {len(out)} product states exist, {b} requested")


def _oscillator_occupations(spec: OscillatorSpec, b: int):
    """The b lowest harmonic product states by energy sum(omega * (n + 1/2));
    ties resolve lexicographically."""
    w = np.asarray(spec.frequencies)
    start = (0,) * spec.d
    heap = [(0.0, start)]
    seen = {start}
    out = []
    while heap and len(out) < b:
        energy, occ = heapq.heappop(heap)
        out.append(occ)
        for i in range(spec.d):
            if occ[i] + 1 >= spec.levels:
                continue
            nxt = occ[:i] + (occ[i] + 1,) + occ[i + 1:]
            if nxt not in seen:
                seen.add(nxt)
                heapq.heappush(heap, (energy + float(w[i]), nxt))
    if len(out) < b:
        raise ValueError(f"only {len(out)} product states exist, {b} requested")
    return out


def _basis_state(dims: Sequence[int], index: Sequence[int]) -> TTVector:
    cores = []
    for n, i in zip(dims, index):
        core = np.zeros((1, n, 1))
        core[0, i, 0] = 1.0
        cores.append(core)
    return TTVector(cores)


def product_state_block(spec, b: int) -> list:
    """b orthonormal rank-1 starting vectors appropriate for the model."""
    if b < 1:
        raise ValueError("at least one column is required")
    if isinstance(spec, OscillatorSpec):
        occs = _oscillator_occupations(spec, b)
        return [_basis_state(spec.dims, occ) for occ in occs]
    if isinstance(spec, HeisenbergSpec):
        configs = _spin_configurations(spec.d, b)
        return [_basis_state(spec.dims, cfg) for cfg in configs]
    raise TypeError(f"unsupported model spec {type(spec).__name__}")
