"""Experiment configuration: TOML files parsed strictly into dataclasses.

A config names one experiment from the registry and may override the
physical parameters, the ensemble, the grid resolution, tolerances and the
experiment's own options.  Unknown keys are errors everywhere.
"""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..params import PhysParams, nu_from


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class ParamSpec:
    m: float = 1.0
    hbar: float | None = None  # defaults to 1 unless nu is given
    nu: float | None = None
    osmotic_coupling: float | None = None  # defaults to m
    hbar_convention: str = "implemented"

    def build(self) -> PhysParams:
        b = self.m if self.osmotic_coupling is None else self.osmotic_coupling
        if self.nu is not None:
            return PhysParams(self.m, self.nu, b, self.hbar_convention)
        hbar = 1.0 if self.hbar is None else self.hbar
        return PhysParams(self.m, nu_from(hbar, self.m, b, self.hbar_convention), b,
                          self.hbar_convention)


@dataclass(frozen=True)
class EnsembleSpec:
    N: int = 100_000
    dt: float = 1e-3
    T: float | None = None  # duration; None picks the experiment's characteristic time
    seed: int = 1


@dataclass(frozen=True)
class GridSpec:
    n_nodes: int = 512


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    output_dir: str = ""
    params: ParamSpec = field(default_factory=ParamSpec)
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    tolerances: dict[str, float] = field(default_factory=dict)
    options: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> ExperimentConfig:
        problems = validate(raw)
        if problems:
            raise ConfigError(problems)
        from .experiments import REGISTRY

        exp = REGISTRY[raw["experiment"]]
        ens = {**exp.ensemble, **raw.get("ensemble", {})}
        return cls(
            experiment=exp.name,
            output_dir=raw.get("output_dir") or f"runs/{exp.name}",
            params=ParamSpec(**raw.get("params", {})),
            ensemble=EnsembleSpec(**ens),
            grid=GridSpec(**{**exp.grid, **raw.get("grid", {})}),
            tolerances={**exp.tolerances, **raw.get("tolerances", {})},
            options={**exp.options, **raw.get("options", {})},
        )

    @classmethod
    def default(cls, experiment: str, **overrides: Any) -> ExperimentConfig:
        return cls.from_dict({"experiment": experiment, **overrides})

    def echo(self) -> dict:
        return asdict(self)


def load_raw(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(load_raw(path))


# ---------------------------------------------------------------- validation

_TOP = {"experiment", "output_dir", "params", "ensemble", "grid", "tolerances", "options"}
_SECTIONS = {"params": ParamSpec, "ensemble": EnsembleSpec, "grid": GridSpec}


def _is_num(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check_params(p: Mapping[str, Any], out: list[str]) -> None:
    for key in ("m", "hbar"):
        if key in p and not (_is_num(p[key]) and p[key] > 0):
            out.append(f"params.{key} must be a positive number")
    for key in ("nu", "osmotic_coupling"):
        if key in p and not (_is_num(p[key]) and p[key] >= 0):
            out.append(f"params.{key} must be a non-negative number")
    if "nu" in p and "hbar" in p:
        out.append("give params.hbar or params.nu, not both")
    if p.get("osmotic_coupling", 1) == 0 and "nu" not in p:
        out.append("params.osmotic_coupling = 0 needs an explicit params.nu")
    if p.get("hbar_convention", "implemented") not in ("implemented", "half"):
        out.append("params.hbar_convention must be 'implemented' or 'half'")


def _check_ensemble(e: Mapping[str, Any], out: list[str]) -> None:
    if "N" in e and not (isinstance(e["N"], int) and not isinstance(e["N"], bool) and e["N"] >= 1):
        out.append(f"ensemble.N must be a positive integer, got {e['N']!r}")
    for key in ("dt", "T"):
        if key in e and not (_is_num(e[key]) and e[key] > 0):
            out.append(f"ensemble.{key} must be a positive number, got {e[key]!r}")
    if "seed" in e and not (isinstance(e["seed"], int) and e["seed"] >= 0):
        out.append("ensemble.seed must be a non-negative integer")


def _check_grid(g: Mapping[str, Any], out: list[str]) -> None:
    n = g.get("n_nodes", 512)
    if not (isinstance(n, int) and not isinstance(n, bool) and n >= 8):
        out.append(f"grid.n_nodes must be an integer >= 8, got {n!r}")


def _same_kind(value: Any, default: Any) -> bool:
    if isinstance(default, bool):
        return isinstance(value, bool)
    if _is_num(default):
        return _is_num(value)
    if isinstance(default, (list, tuple)):
        if not isinstance(value, list):
            return False
        return all(_same_kind(v, default[0]) for v in value) if default else True
    return isinstance(value, type(default))


def validate(raw: Mapping[str, Any] | ExperimentConfig) -> list[str]:
    """All problems with a raw config mapping; an empty list means it is valid."""
    from .experiments import REGISTRY

    if isinstance(raw, ExperimentConfig):
        raw = {k: v for k, v in raw.echo().items()}
        raw["params"] = {k: v for k, v in raw["params"].items() if v is not None}
        raw["ensemble"] = {k: v for k, v in raw["ensemble"].items() if v is not None}
    out: list[str] = []
    for key in raw:
        if key not in _TOP:
            out.append(f"unknown key {key!r}")
    name = raw.get("experiment")
    if name not in REGISTRY:
        out.append(f"unknown experiment {name!r}; choose from {sorted(REGISTRY)}")
        return out
    exp = REGISTRY[name]
    if "output_dir" in raw and not isinstance(raw["output_dir"], str):
        out.append("output_dir must be a string")
    for section, cls in _SECTIONS.items():
        body = raw.get(section, {})
        if not isinstance(body, Mapping):
            out.append(f"[{section}] must be a table")
            continue
        allowed = set(cls.__dataclass_fields__)
        for key in body:
            if key not in allowed:
                out.append(f"unknown key {section}.{key!r}")
    _check_params(raw.get("params", {}), out)
    _check_ensemble(raw.get("ensemble", {}), out)
    _check_grid(raw.get("grid", {}), out)
    for key, value in raw.get("tolerances", {}).items():
        if key not in exp.tolerances:
            out.append(f"unknown key tolerances.{key!r} for {name}")
        elif not (_is_num(value) and value > 0):
            out.append(f"tolerances.{key} must be a positive number")
    options = raw.get("options", {})
    for key, value in options.items():
        if key not in exp.options:
            out.append(f"unknown key options.{key!r} for {name}")
        elif not _same_kind(value, exp.options[key]):
            out.append(f"options.{key} has the wrong type: {value!r}")
    if exp.check_options is not None and not any(o.startswith("options.") for o in out):
        out.extend(exp.check_options({**exp.options, **options}))
    return out
