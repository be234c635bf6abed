"""Learning-rate schedules.

Kinds: constant; cosine (half-cosine from base to 0 at the horizon);
exponential (base * gamma^t); linear-warmup (linear climb to base over
the warmup steps, then linear decay to 0 at the horizon).  All kinds
emit a strictly positive rate for t < T; only t = T may reach 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

KINDS = ("constant", "cosine", "exponential", "linear-warmup")


@dataclass(frozen=True)
class Schedule:
    kind: str = "constant"
    base: float = 0.1
    horizon: int | None = None
    gamma: float = 0.99
    warmup_steps: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown schedule kind {self.kind!r}; choose from {KINDS}")
        if self.base <= 0:
            raise ConfigError(f"schedule base rate must be > 0, got {self.base}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"schedule gamma must lie in (0, 1], got {self.gamma}")
        if self.kind == "linear-warmup" and self.warmup_steps < 1:
            raise ConfigError("linear-warmup needs warmup_steps >= 1")


def schedule_rate(s: Schedule, t: int, T: int | None = None) -> float:
    """Rate at step t of horizon T (T falls back to s.horizon)."""
    if T is None:
        T = s.horizon
    if s.kind == "constant":
        return s.base
    if s.kind == "exponential":
        if t < 0:
            raise ConfigError(f"schedule step must be >= 0, got {t}")
        return s.base * s.gamma ** t
    if T is None:
        raise ConfigError(f"{s.kind} schedule needs a horizon T")
    if not 0 <= t <= T:
        raise ConfigError(f"schedule step {t} outside [0, {T}]")
    if s.kind == "cosine":
        return s.base * (1.0 + math.cos(math.pi * t / T)) / 2.0
    # linear-warmup: (t+1)/W keeps the very first steps positive.
    w = s.warmup_steps
    if w >= T:
        raise ConfigError(f"warmup_steps {w} must be < horizon {T}")
    if t < w:
        return s.base * (t + 1) / w
    return s.base * (T - t) / (T - w)
