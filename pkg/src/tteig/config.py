"""Run configuration: structured text files with model, solver, preconditioner
and output sections, plus helpers to build the configured objects."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

from .models import HeisenbergSpec, OscillatorSpec
from .solver import SCHEDULES, SolverConfig

ENV_OUT_DIR = "TTEIG_OUT_DIR"


class ConfigError(ValueError):
    """The configuration file is missing or inconsistent."""


@dataclass(frozen=True)
class RunConfig:
    model: object           # HeisenbergSpec or OscillatorSpec
    solver: SolverConfig
    precond_kind: str       # "none" or "harmonic"
    precond_terms: int
    precond_eta: float | None
    out_dir: str


def _get(parser, section, key, default=None, required=False):
    if parser.has_option(section, key):
        return parser.get(section, key)
    if required:
        raise ConfigError(f"missing required key {section}.{key}")
    return default


def _parse_couplings(text: str | None, arity: int, d: int):
    if not text:
        return ()
    out = []
    for line in text.strip().splitlines():
        fields = line.split()
        if len(fields) != arity + 1:
            raise ConfigError(
                f"coupling line {line!r} needs {arity} site indices and one value")
        sites = tuple(int(f) for f in fields[:arity])
        if any(s < 0 or s >= d for s in sites):
            raise ConfigError(f"coupling site out of range in line {line!r}")
        out.append((tuple(sorted(sites)), float(fields[arity])))
    return tuple(out)


def _parse_model(parser) -> object:
    kind = _get(parser, "model", "kind", required=True).strip().lower()
    d = int(_get(parser, "model", "d", required=True))
    if kind == "heisenberg":
        return HeisenbergSpec(d=d)
    if kind == "oscillator":
        levels = int(_get(parser, "model", "levels", required=True))
        freq_text = _get(parser, "model", "frequencies", required=True).split()
        freqs = tuple(float(f) for f in freq_text)
        if len(freqs) == 1:
            freqs = freqs * d
        if len(freqs) != d:
            raise ConfigError(f"{len(freqs)} frequencies given for d = {d}")
        cubic = _parse_couplings(_get(parser, "model", "cubic"), 3, d)
        quartic = _parse_couplings(_get(parser, "model", "quartic"), 4, d)
        return OscillatorSpec(frequencies=freqs, levels=levels,
                              cubic=cubic, quartic=quartic)
    raise ConfigError(f"unknown model kind {kind!r}")


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def load_config(path, seed=None, tol=None, out=None) -> RunConfig:
    """Read a run configuration; optional arguments override file keys."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    try:
        model = _parse_model(parser)
        solver = SolverConfig(
            b=int(_get(parser, "solver", "b", required=True)),
            rank=int(_get(parser, "solver", "rank", required=True)),
            tol=float(tol if tol is not None
                      else _get(parser, "solver", "tol", "1e-8")),
            max_iters=int(_get(parser, "solver", "max_iters", "300")),
            schedule=_get(parser, "solver", "schedule", "argmax").strip(),
            seed=int(seed if seed is not None
                     else _get(parser, "solver", "seed", "0")),
            coeff_sweeps=int(_get(parser, "solver", "coeff_sweeps", "3")),
            phase1=_parse_bool(_get(parser, "solver", "phase1", "true")),
            phase1_tol=(float(_get(parser, "solver", "phase1_tol"))
                        if parser.has_option("solver", "phase1_tol") else None),
            phase1_cap=int(_get(parser, "solver", "phase1_cap", "20")),
            fused=_parse_bool(_get(parser, "solver", "fused", "true")),
            line_search=_parse_bool(_get(parser, "solver", "line_search", "false")),
        )
    except ConfigError:
        raise
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(str(exc)) from exc
    if solver.schedule not in SCHEDULES:
        raise ConfigError(f"unknown schedule {solver.schedule!r}")
    precond_kind = _get(parser, "precond", "kind", "none").strip().lower()
    if precond_kind not in ("none", "harmonic"):
        raise ConfigError(f"unknown preconditioner kind {precond_kind!r}")
    if precond_kind == "harmonic" and not isinstance(model, OscillatorSpec):
        raise ConfigError("the harmonic preconditioner needs an oscillator model")
    precond_terms = int(_get(parser, "precond", "terms", "8"))
    eta_text = _get(parser, "precond", "eta")
    precond_eta = float(eta_text) if eta_text is not None else None
    out_dir = out or _get(parser, "output", "dir") \
        or os.environ.get(ENV_OUT_DIR) or "tteig-out"
    return RunConfig(model=model, solver=solver, precond_kind=precond_kind,
                     precond_terms=precond_terms, precond_eta=precond_eta,
                     out_dir=str(out_dir))


def build_operator(run: RunConfig):
    from .models import heisenberg_mpo, oscillator_mpo
    if isinstance(run.model, HeisenbergSpec):
        return heisenberg_mpo(run.model.d)
    return oscillator_mpo(run.model)


def build_preconditioner(run: RunConfig):
    from .models import harmonic_preconditioner
    from .solver import Preconditioner
    if run.precond_kind == "none":
        return Preconditioner.identity()
    kwargs = {"rho": run.precond_terms}
    if run.precond_eta is not None:
        kwargs["eta"] = run.precond_eta
    return harmonic_preconditioner(run.model, **kwargs)
