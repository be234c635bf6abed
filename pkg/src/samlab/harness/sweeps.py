"""Parameter sweeps: one training run per (value, seed) pair.

Supported sweep axes: the initial radius (rho0), the generalization
metric (metric-kind), and the label corruption rate (noise-rate).  Each
run lands in its own subdirectory; the summary table reports mean and
population std of clean-test accuracy per value.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..lets import METRICS
from .config import ExperimentConfig
from .runner import RunResult, run_experiment

PARAMETERS = ("rho0", "metric-kind", "noise-rate")

SWEEP_HEADER = "parameter,value,mean_test_accuracy,std_test_accuracy,num_seeds"


@dataclass(frozen=True)
class SweepRow:
    value: str
    accuracies: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    seeds: tuple[int, ...]
    rows: tuple[SweepRow, ...]
    runs: tuple[RunResult, ...]
    csv_path: Path | None

    def to_text(self) -> str:
        lines = [f"sweep over {self.parameter} ({len(self.seeds)} seed(s))"]
        for row in self.rows:
            lines.append(f"  {self.parameter}={row.value}: "
                         f"test accuracy {row.mean:.4f} +/- {row.std:.4f}")
        return "\n".join(lines) + "\n"


def _apply_value(config: ExperimentConfig, parameter: str, raw: str) -> tuple[ExperimentConfig, str]:
    if parameter == "rho0":
        value = float(raw)
        if not config.optimizer.variant.startswith("lets-"):
            raise ConfigError(f"rho0 sweep needs a radius-learning variant, "
                              f"got {config.optimizer.variant!r}")
        cfg = replace(config, optimizer=replace(config.optimizer, rho0=value))
        return cfg, repr(value)
    if parameter == "metric-kind":
        if raw not in METRICS:
            raise ConfigError(f"unknown metric {raw!r}; choose from {METRICS}")
        if not config.optimizer.variant.startswith("lets-"):
            raise ConfigError(f"metric-kind sweep needs a radius-learning variant, "
                              f"got {config.optimizer.variant!r}")
        cfg = replace(config, optimizer=replace(config.optimizer, metric=raw))
        return cfg, raw
    if parameter == "noise-rate":
        value = float(raw)
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"noise-rate must lie in [0, 1], got {value}")
        cfg = replace(config, dataset=replace(config.dataset, label_noise=value))
        return cfg, repr(value)
    raise ConfigError(f"unknown sweep parameter {parameter!r}; choose from {PARAMETERS}")


def sweep(config: ExperimentConfig, parameter: str, values, seeds=None,
          out_dir=None) -> SweepResult:
    """Run the sweep and write <out>/sweep.csv; returns the table plus
    every underlying RunResult."""
    if parameter not in PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {parameter!r}; choose from {PARAMETERS}")
    values = [str(v) for v in values]
    if not values:
        raise ConfigError("sweep needs at least one value")
    seeds = tuple(int(s) for s in (seeds if seeds is not None else (config.seed,)))
    root = Path(out_dir if out_dir is not None else config.out)
    root.mkdir(parents=True, exist_ok=True)

    rows = []
    runs = []
    for raw in values:
        base_cfg, label = _apply_value(config, parameter, raw)
        accs = []
        for seed in seeds:
            run_out = root / f"{parameter}={label}" / f"seed={seed}"
            cfg = replace(base_cfg, seed=seed, out=str(run_out))
            result = run_experiment(cfg, run_out)
            runs.append(result)
            accs.append(result.summary["final_test_accuracy"])
        rows.append(SweepRow(value=label, accuracies=tuple(accs)))

    csv_path = root / "sweep.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(SWEEP_HEADER + "\n")
        for row in rows:
            fh.write(f"{parameter},{row.value},{row.mean!r},{row.std!r},{len(seeds)}\n")
    return SweepResult(parameter=parameter, seeds=seeds, rows=tuple(rows),
                       runs=tuple(runs), csv_path=csv_path)
