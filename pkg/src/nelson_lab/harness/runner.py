"""Run one configured experiment and write its report and manifest."""

from __future__ import annotations

import time

from .config import ExperimentConfig
from .experiments import REGISTRY
from .report import Artifacts, RunReport, dump_json, now


def run(cfg: ExperimentConfig) -> RunReport:
    if cfg.experiment not in REGISTRY:
        raise KeyError(f"unknown experiment {cfg.experiment!r}")
    art = Artifacts(cfg.output_dir)
    started, t0 = now(), time.perf_counter()
    metrics, details = REGISTRY[cfg.experiment].func(cfg, art)
    report = RunReport(cfg.experiment, cfg.echo(), metrics, details,
                       time.perf_counter() - t0, [], started)
    art.json("report.json", report.to_dict())
    report.artifacts = list(art.files)
    manifest = art.manifest(cfg.experiment)
    manifest.update(started=started, passed=report.passed)
    dump_json(art.root / "manifest.json", manifest)
    report.artifacts.append("manifest.json")
    return report
