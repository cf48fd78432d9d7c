"""Block eigensolver for symmetric operators in tensor-train format.

Submodules are imported lazily so that command-line thread pinning can take
effect before any numerical library loads.
"""

from __future__ import annotations

import importlib

__version__ = "0.1.0"

_SUBMODULES = ("ttcore", "tangent", "coeffs", "solver", "models", "oracle",
               "container", "config", "cli")

_EXPORTS = {
    "ttcore": (
        "TTVector", "TTOperator", "Orthogonality", "matricize_left",
        "matricize_right", "orthogonalize_left", "orthogonalize_right",
        "classify_orthogonality", "tt_to_dense", "tt_from_dense",
        "op_to_dense", "tt_add", "tt_scale", "tt_inner", "tt_norm",
        "tt_bilinear", "tt_round", "tt_matvec", "rank1_operator",
        "identity_operator", "op_matmul", "op_add", "op_scale", "op_round",
        "tt_zero", "tt_random",
    ),
    "tangent": (
        "TangentSpace", "TangentVector", "zero_tangent", "tangent_inner",
        "inner_matrix", "axpy", "combine", "project", "project_many",
        "project_matvec", "project_matvec_many", "embed",
    ),
    "coeffs": (
        "GramSet", "Coefficients", "CoefficientSolveError", "assemble_grams",
        "nullspace_basis", "solve_reduced_geig", "block_rayleigh_ritz",
        "find_coefficients", "kkt_residual", "constraint_residual",
    ),
    "solver": (
        "Preconditioner", "SolverConfig", "SolverState", "SolverResult",
        "SolverError", "rayleigh", "choose_tangent_index",
        "projected_residual_block", "assemble_and_retract", "random_block",
        "riemannian_lobpcg",
    ),
    "models": (
        "SopTerm", "HeisenbergSpec", "OscillatorSpec", "sop_to_mpo",
        "heisenberg_mpo", "oscillator_mpo", "harmonic_preconditioner",
        "product_state_block", "dense_operator",
    ),
    "oracle": ("dense_eigs", "mae", "dense_tangent_projector"),
    "container": ("save_tt", "load_tt", "tt_to_bytes", "tt_from_bytes",
                  "save_checkpoint", "load_checkpoint"),
}

_ATTR_TO_MODULE = {name: mod for mod, names in _EXPORTS.items() for name in names}

__all__ = ["__version__", *_SUBMODULES, *_ATTR_TO_MODULE]


def __getattr__(name):
    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    mod = _ATTR_TO_MODULE.get(name)
    if mod is not None:
        return getattr(importlib.import_module(f".{mod}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
