"""Run every config in configs/ and print one verdict line per experiment.

Usage: python scripts/run_all.py [config ...]
"""

import sys
from pathlib import Path

from nelson_lab.estimators import UnderpoweredError
from nelson_lab.harness import ConfigError, load_config, run


def main(paths: list[str]) -> int:
    root = Path(__file__).resolve().parents[1]
    configs = [Path(p) for p in paths] or sorted((root / "configs").glob("*.toml"))
    worst = 0
    for path in configs:
        try:
            report = run(load_config(path))
        except (ConfigError, UnderpoweredError) as exc:
            print(f"ERROR {path.name}: {exc}")
            worst = 2
            continue
        verdict = "PASS" if report.passed else "FAIL"
        print(f"{verdict}  {report.experiment:<24} {report.duration_s:7.1f} s")
        for m in report.metrics:
            if not m.passed:
                print("      " + m.line())
        if not report.passed:
            worst = max(worst, 1)
    return worst


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
