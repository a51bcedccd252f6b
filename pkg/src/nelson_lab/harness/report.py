"""Metrics with verdicts, run reports and the artifact manifest."""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


@dataclass(frozen=True)
class Metric:
    name: str
    value: Any
    tolerance: str
    passed: bool

    @classmethod
    def at_most(cls, name: str, value: float, tol: float) -> Metric:
        return cls(name, float(value), f"<= {tol:g}", bool(value <= tol))

    @classmethod
    def at_least(cls, name: str, value: float, tol: float) -> Metric:
        return cls(name, float(value), f">= {tol:g}", bool(value >= tol))

    @classmethod
    def near(cls, name: str, value: float, target: float, tol: float) -> Metric:
        return cls(name, float(value), f"{target:g} +/- {tol:g}",
                   bool(abs(value - target) <= tol))

    @classmethod
    def flag(cls, name: str, value: bool, expected: bool = True) -> Metric:
        return cls(name, bool(value), f"== {expected}", bool(value) == expected)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        value = f"{self.value:.6g}" if isinstance(self.value, float) else str(self.value)
        return f"{verdict}  {self.name} = {value}  (tolerance {self.tolerance})"


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dump_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


class Artifacts:
    """Collects output files under one directory and writes the manifest."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        if name not in self.files:
            self.files.append(name)
        return self.root / name

    def json(self, name: str, obj: Any) -> None:
        dump_json(self.path(name), obj)

    def manifest(self, experiment: str) -> dict:
        entries = []
        for name in self.files:
            data = (self.root / name).read_bytes()
            entries.append({"path": name, "bytes": len(data),
                            "sha256": hashlib.sha256(data).hexdigest()})
        return {"experiment": experiment, "files": entries}


@dataclass
class RunReport:
    experiment: str
    config: dict
    metrics: list[Metric]
    details: dict = field(default_factory=dict)
    duration_s: float = 0.0
    artifacts: list[str] = field(default_factory=list)
    started: str = ""

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.metrics)

    def numeric(self) -> dict:
        """Everything that must be reproducible: metrics and details, no timing."""
        metrics = [asdict(m) for m in self.metrics if not m.name.endswith("runtime_s")]
        return _jsonable({"metrics": metrics, "details": self.details})

    def to_dict(self) -> dict:
        return _jsonable({
            "experiment": self.experiment,
            "config": self.config,
            "passed": self.passed,
            "metrics": [asdict(m) for m in self.metrics],
            "details": self.details,
            "duration_s": self.duration_s,
            "started": self.started,
            "artifacts": self.artifacts,
        })


def now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")
