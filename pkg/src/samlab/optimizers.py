"""Single-step optimizers: SGD with momentum, SAM, ASAM.

The sharpness-aware steps follow the two-pass scheme: compute the batch
gradient, climb to the worst-case point inside the perturbation ball,
take the descent step from the original parameters using the gradient
measured at the perturbed point.  The perturbed gradient is returned so
the radius learner can reuse it.

Weight decay is coupled (added into the gradient before the momentum
buffer), matching classic SGD-with-weight-decay.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import vectors
from .errors import ConfigError, NoDescentDirection
from .layouts import ParameterLayout
from .models import DifferentiableModel
from .schedules import Schedule, schedule_rate
from .vectors import DTYPE


@dataclass
class SgdConfig:
    learning_rate: float
    momentum: float = 0.0
    weight_decay: float = 0.0
    schedule: str = "constant"      # constant | cosine | exponential | linear-warmup
    gamma: float = 0.99             # exponential decay per step
    warmup_steps: int = 0
    horizon: int | None = None      # T for horizon-dependent schedules

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight decay must be >= 0, got {self.weight_decay}")
        self._sched = Schedule(kind=self.schedule, base=self.learning_rate,
                               horizon=self.horizon, gamma=self.gamma,
                               warmup_steps=self.warmup_steps)

    def rate_at(self, t: int) -> float:
        return schedule_rate(self._sched, t, self.horizon)


@dataclass
class SgdState:
    m: np.ndarray               # momentum buffer
    t: int = 0                  # step counter (drives the schedule)

    @classmethod
    def fresh(cls, d: int) -> "SgdState":
        return cls(m=vectors.zeros(d))


def sgd_step(theta, g, state: SgdState, cfg: SgdConfig) -> np.ndarray:
    """m' = mu*m + (g + lam*theta); theta' = theta - eta_t * m'."""
    eta = cfg.rate_at(state.t)
    m_next, theta_next = vectors.momentum_update(
        cfg.momentum, cfg.weight_decay, eta, state.m, theta, g)
    state.m = m_next
    state.t += 1
    return theta_next


@dataclass(frozen=True)
class NormalizationOperator:
    """Positive per-coordinate scale t representing the diagonal operator
    diag(t); every entry is >= xi so the operator is invertible."""
    scale: np.ndarray
    xi: float

    def __post_init__(self):
        scale = vectors.as_vector(self.scale, "normalization scale")
        if self.xi <= 0:
            raise ConfigError(f"xi must be > 0, got {self.xi}")
        if scale.min() < self.xi:
            raise ConfigError(f"normalization entries must be >= xi={self.xi}, min is {scale.min()}")
        object.__setattr__(self, "scale", scale)


def build_normalization(layout: ParameterLayout, theta, xi: float) -> NormalizationOperator:
    """Magnitude scaling |theta_i| + xi coordinate-wise, except inside a
    conv filter group where every coordinate of filter c_i gets
    ||c_i|| + xi."""
    if xi <= 0:
        raise ConfigError(f"xi must be > 0, got {xi}")
    theta = np.ascontiguousarray(theta, dtype=DTYPE)
    if theta.shape != (layout.total,):
        raise ConfigError(f"theta has shape {theta.shape}, layout covers {layout.total}")
    scale = np.empty_like(theta)
    for seg in layout.segments:
        if seg.kind == "conv-filter-group":
            offset = seg.start
            for size in seg.filter_sizes:
                norm = vectors.l2_norm(theta[offset:offset + size])
                scale[offset:offset + size] = norm + xi
                offset += size
        else:
            scale[seg.start:seg.stop] = vectors.absval(theta[seg.start:seg.stop]) + xi
    return NormalizationOperator(scale=scale, xi=xi)


def sam_perturbation(g, rho: float) -> np.ndarray:
    """eps = rho * g / ||g||; the climb to the ball boundary."""
    if rho < 0:
        raise ConfigError(f"perturbation radius must be >= 0, got {rho}")
    norm = vectors.l2_norm(g)
    if norm == 0.0:
        raise NoDescentDirection("gradient norm is 0; the perturbation direction is undefined")
    return vectors.scale(rho / norm, g)


def asam_perturbation(g, rho: float, operator: NormalizationOperator) -> np.ndarray:
    """eps = rho * T^2 g / ||T g|| for the diagonal operator T."""
    if rho < 0:
        raise ConfigError(f"perturbation radius must be >= 0, got {rho}")
    tg = vectors.multiply(operator.scale, g)
    norm = vectors.l2_norm(tg)
    if norm == 0.0:
        raise NoDescentDirection("rescaled gradient norm is 0; the perturbation direction is undefined")
    return vectors.scale(rho / norm, vectors.multiply(operator.scale, tg))


def perturbed_gradient(variant: str, model: DifferentiableModel, theta, batch,
                       rho: float, xi: float = 0.01,
                       operator: NormalizationOperator | None = None):
    """Shared two-pass core: returns (g, eps, g_hat, operator).

    g is the batch gradient at theta, eps the perturbation, g_hat the
    gradient at theta+eps.  For the sam variant operator is None; for
    asam it is built from the current theta unless one is supplied.
    """
    g = model.grad(theta, batch)
    if variant == "sam":
        operator = None
        eps = sam_perturbation(g, rho)
    elif variant == "asam":
        if operator is None:
            operator = build_normalization(model.layout, theta, xi)
        eps = asam_perturbation(g, rho, operator)
    else:
        raise ConfigError(f"unknown sharpness variant {variant!r}; choose sam or asam")
    theta_adv = vectors.axpy(1.0, eps, theta)
    g_hat = model.grad(theta_adv, batch)
    return g, eps, g_hat, operator


def sam_step(model: DifferentiableModel, theta, batch, rho: float,
             state: SgdState, cfg: SgdConfig):
    """One SAM step; returns (theta', g_hat) with g_hat the gradient at
    the perturbed point (reused by the radius learner)."""
    _, _, g_hat, _ = perturbed_gradient("sam", model, theta, batch, rho)
    return sgd_step(theta, g_hat, state, cfg), g_hat


def asam_step(model: DifferentiableModel, theta, batch, rho: float, xi: float,
              state: SgdState, cfg: SgdConfig,
              operator: NormalizationOperator | None = None):
    """One ASAM step; the normalization operator is rebuilt from the
    current theta unless an override is supplied (tests use the identity
    operator to check the reduction to SAM)."""
    _, _, g_hat, _ = perturbed_gradient("asam", model, theta, batch, rho, xi=xi, operator=operator)
    return sgd_step(theta, g_hat, state, cfg), g_hat
