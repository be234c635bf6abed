"""Min-gradient-norm statistics across training horizons.

For each metrics file the statistic is min over logged steps of the
squared batch-gradient norm; the report fits log(statistic) against
log(horizon) by least squares and quotes the slope as the empirical
decay exponent.  The exponent is undefined (and said so) when all
horizons coincide or a statistic is nonpositive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, FormatError


@dataclass(frozen=True)
class ConvergenceEntry:
    path: str
    horizon: int            # last step number in the file
    min_grad_sq: float


@dataclass(frozen=True)
class ConvergenceReport:
    entries: tuple[ConvergenceEntry, ...]
    exponent: float | None
    note: str = ""

    def to_text(self) -> str:
        lines = [f"  T={e.horizon:>8d}  min ||grad||^2 = {e.min_grad_sq!r}  ({e.path})"
                 for e in self.entries]
        if self.exponent is None:
            lines.append(f"  decay exponent: undefined ({self.note})")
        else:
            lines.append(f"  decay exponent: {self.exponent:.4f} "
                         f"(slope of log statistic vs log T)")
        return "\n".join(lines) + "\n"


def _resolve(path) -> Path:
    p = Path(path)
    if p.is_dir():
        p = p / "metrics.csv"
    if not p.exists():
        raise FormatError(f"no metrics file at {p}")
    return p


def _read_entry(path: Path) -> ConvergenceEntry:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: empty metrics file")
    header = lines[0].split(",")
    try:
        step_col = header.index("step")
        grad_col = header.index("grad_norm")
    except ValueError as exc:
        raise FormatError(f"{path}: header lacks step/grad_norm columns: {lines[0]!r}") from exc
    if len(lines) < 2:
        raise FormatError(f"{path}: metrics file has no data rows")
    horizon = 0
    best = float("inf")
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise FormatError(f"{path} line {lineno}: {len(parts)} fields, "
                              f"header has {len(header)}")
        step = int(parts[step_col])
        if step <= horizon:
            raise FormatError(f"{path} line {lineno}: step numbers must increase")
        horizon = step
        g = float(parts[grad_col])
        if math.isfinite(g):
            best = min(best, g * g)
    return ConvergenceEntry(path=str(path), horizon=horizon, min_grad_sq=best)


def convergence_summary(paths) -> ConvergenceReport:
    """Summarize two or more metrics files (or run directories holding
    metrics.csv)."""
    paths = list(paths)
    if len(paths) < 2:
        raise ConfigError(f"convergence summary needs at least 2 metrics files, got {len(paths)}")
    entries = tuple(_read_entry(_resolve(p)) for p in paths)

    horizons = {e.horizon for e in entries}
    if len(horizons) < 2:
        return ConvergenceReport(entries=entries, exponent=None,
                                 note="all inputs share one horizon")
    if any(e.min_grad_sq <= 0 or not math.isfinite(e.min_grad_sq) for e in entries):
        return ConvergenceReport(entries=entries, exponent=None,
                                 note="nonpositive or non-finite statistic; log fit impossible")
    log_t = np.log([e.horizon for e in entries])
    log_s = np.log([e.min_grad_sq for e in entries])
    slope = float(np.polyfit(log_t, log_s, 1)[0])
    return ConvergenceReport(entries=entries, exponent=slope)
