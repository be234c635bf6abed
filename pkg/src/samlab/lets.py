"""Bilevel learning of the perturbation radius.

Each training step runs the usual sharpness-aware update for the model
parameters, then takes one hypergradient step on the radius rho.  The
upper-level objective compares validation and training loss at the new
parameters (default: half the squared gap); its gradient with respect
to rho chains through the one-step parameter update, with the Hessian
either approximated by the squared perturbed gradient (diagonal form)
or evaluated exactly as a finite-difference Hessian-vector product.

The radius itself can be optimized directly or through rho = exp(nu)
(always positive), with a plain step or Adam, and a schedule that
scales the upper-level rate beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import vectors
from .errors import ConfigError, NoDescentDirection, NonFiniteError
from .models import DifferentiableModel, fd_hvp
from .optimizers import (NormalizationOperator, SgdConfig, SgdState,
                         perturbed_gradient, sgd_step)
from .schedules import Schedule, schedule_rate

METRICS = ("val-loss", "gap", "squared-gap")
HESSIAN_MODES = ("diag-approx", "exact-fd-hvp")
DIRECTION_SOURCES = ("post-step", "pre-step")
PARAMETERIZATIONS = ("exp", "direct")
RADIUS_OPTIMIZERS = ("plain", "adam")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
RHO_MIN_DIRECT = 1e-8


def generalization_metric(kind: str, loss_vl: float, loss_tr: float) -> float:
    """Upper-level objective J."""
    if kind not in METRICS:
        raise ConfigError(f"unknown metric {kind!r}; choose from {METRICS}")
    if not (math.isfinite(loss_vl) and math.isfinite(loss_tr)):
        raise NonFiniteError("metric inputs must be finite")
    if kind == "val-loss":
        return loss_vl
    if kind == "gap":
        return loss_vl - loss_tr
    gap = loss_vl - loss_tr
    return 0.5 * gap * gap


def metric_grad_factor(kind: str, loss_vl: float, loss_tr: float,
                       gbar_vl, gbar_tr) -> np.ndarray:
    """dJ/dtheta' for the chosen metric, from batch losses and gradients
    at the post-step parameters."""
    if kind not in METRICS:
        raise ConfigError(f"unknown metric {kind!r}; choose from {METRICS}")
    if kind == "val-loss":
        return np.array(gbar_vl, dtype=vectors.DTYPE, copy=True)
    if kind == "gap":
        return vectors.subtract(gbar_vl, gbar_tr)
    return vectors.scale(loss_vl - loss_tr, vectors.subtract(gbar_vl, gbar_tr))


def hessian_diag_approx(g_hat) -> np.ndarray:
    """Diagonal Hessian stand-in: elementwise square of the perturbed
    gradient (stored as its diagonal vector)."""
    return vectors.square(g_hat)


def rho_hypergradient(g_a, h_diag, direction) -> float:
    """g_rho = -, with g_b = H (x) direction."""
    if vectors.l2_norm(direction) == 0.0:
        raise NoDescentDirection("hypergradient direction has zero norm")
    return -vectors.dot(g_a, vectors.multiply(h_diag, direction))


@dataclass
class RadiusState:
    """Learnable radius with its optimizer and schedule state.

    beta is the upper-level base step size; the radius schedule scales
    it (beta_t).  beta = 0 freezes the radius entirely.
    """

    rho: float
    beta: float = 1e-4
    parameterization: str = "exp"        # exp | direct
    optimizer: str = "adam"              # plain | adam
    schedule: str = "exponential"        # any schedules.KINDS entry
    gamma: float = 0.999                 # decay of the beta schedule
    rho_max: float | None = None
    nu: float = field(init=False, default=0.0)
    m: float = 0.0                       # adam first moment
    v: float = 0.0                       # adam second moment
    steps: int = 0                       # radius updates taken

    def __post_init__(self):
        if self.parameterization not in PARAMETERIZATIONS:
            raise ConfigError(f"unknown parameterization {self.parameterization!r}; "
                              f"choose from {PARAMETERIZATIONS}")
        if self.optimizer not in RADIUS_OPTIMIZERS:
            raise ConfigError(f"unknown radius optimizer {self.optimizer!r}; "
                              f"choose from {RADIUS_OPTIMIZERS}")
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if self.rho_max is not None and self.rho_max <= 0:
            raise ConfigError(f"rho_max must be > 0, got {self.rho_max}")
        if self.parameterization == "exp":
            if self.rho <= 0:
                raise ConfigError(f"exp parameterization needs rho > 0, got {self.rho}")
            self.nu = math.log(self.rho)
        else:
            if self.rho < 0:
                raise ConfigError(f"rho must be >= 0, got {self.rho}")
            self.nu = self.rho

    def beta_at(self, t: int, T: int | None = None) -> float:
        if self.beta == 0.0:
            return 0.0
        sched = Schedule(kind=self.schedule, base=self.beta, gamma=self.gamma)
        return schedule_rate(sched, t, T)


def update_radius(state: RadiusState, g_rho: float, eta: float,
                  t: int | None = None, T: int | None = None) -> RadiusState:
    """One upper-level step: rho <- rho - beta_t * eta * g_rho, taken on
    nu = log(rho) in exp parameterization (chain rule g_nu = g_rho*rho)
    and fed through plain descent or bias-corrected Adam.  Mutates and
    returns the state."""
    if not math.isfinite(g_rho):
        raise NonFiniteError(f"hypergradient is not finite: {g_rho}")
    if t is None:
        t = state.steps
    beta_t = state.beta_at(t, T)
    if state.parameterization == "exp":
        g_param = g_rho * state.rho
        param = state.nu
    else:
        g_param = g_rho
        param = state.rho
    scaled = eta * g_param
    state.steps += 1
    if state.optimizer == "plain":
        delta = beta_t * scaled
    else:
        state.m = ADAM_BETA1 * state.m + (1.0 - ADAM_BETA1) * scaled
        state.v = ADAM_BETA2 * state.v + (1.0 - ADAM_BETA2) * scaled * scaled
        m_hat = state.m / (1.0 - ADAM_BETA1 ** state.steps)
        v_hat = state.v / (1.0 - ADAM_BETA2 ** state.steps)
        delta = beta_t * m_hat / (math.sqrt(v_hat) + ADAM_EPS)
    if delta == 0.0:
        return state
    param = param - delta
    if not math.isfinite(param):
        raise NonFiniteError(f"radius update produced a non-finite value: {param}")
    if state.parameterization == "exp":
        rho = math.exp(param)
        if state.rho_max is not None and rho > state.rho_max:
            rho = state.rho_max
            param = math.log(rho)
        if rho <= 0.0 or not math.isfinite(rho):
            raise NonFiniteError(f"radius left the positive range: exp({param}) = {rho}")
        state.nu = param
        state.rho = rho
    else:
        rho = param
        if state.rho_max is not None and rho > state.rho_max:
            rho = state.rho_max
        if rho < RHO_MIN_DIRECT:
            rho = RHO_MIN_DIRECT
        state.rho = rho
        state.nu = rho
    return state


@dataclass(frozen=True)
class LetsConfig:
    metric: str = "squared-gap"
    hessian: str = "diag-approx"         # diag-approx | exact-fd-hvp
    direction_source: str = "post-step"  # post-step | pre-step
    xi: float = 0.01                     # adaptive normalization floor
    hvp_step: float = 1e-5               # fd step for exact-fd-hvp

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}; choose from {METRICS}")
        if self.hessian not in HESSIAN_MODES:
            raise ConfigError(f"unknown hessian mode {self.hessian!r}; choose from {HESSIAN_MODES}")
        if self.direction_source not in DIRECTION_SOURCES:
            raise ConfigError(f"unknown direction source {self.direction_source!r}; "
                              f"choose from {DIRECTION_SOURCES}")
        if self.xi <= 0:
            raise ConfigError(f"xi must be > 0, got {self.xi}")
        if self.hvp_step <= 0:
            raise ConfigError(f"hvp_step must be > 0, got {self.hvp_step}")


@dataclass(frozen=True)
class StepDiagnostics:
    """Every intermediate of one radius-learning step.  Post-step
    gradient norms are nan when beta = 0 (the hypergradient machinery
    is skipped entirely)."""
    variant: str
    loss_tr: float          # L(B_tr; theta')
    loss_vl: float          # L(B_vl; theta')
    gap: float              # loss_vl - loss_tr
    metric_value: float     # J
    g_rho: float
    rho_before: float
    rho_after: float
    beta_t: float
    eta_t: float
    grad_norm: float        # ||g|| at theta
    grad_norm_hat: float    # ||g_hat|| at theta + eps
    grad_norm_tr_post: float
    grad_norm_vl_post: float

    def csv_row(self) -> str:
        return ",".join(repr(float(v)) for v in (
            self.loss_tr, self.loss_vl, self.gap, self.metric_value, self.g_rho,
            self.rho_before, self.rho_after, self.beta_t, self.eta_t,
            self.grad_norm, self.grad_norm_hat,
            self.grad_norm_tr_post, self.grad_norm_vl_post))


_BASE_VARIANTS = {"lets-sam": "sam", "lets-asam": "asam", "sam": "sam", "asam": "asam"}


def hyper_direction(base: str, source_grad, operator: NormalizationOperator | None):
    """Direction the Hessian acts on: g/||g|| for sam, T^2 g/||T g|| for
    asam (operator built at the pre-step parameters)."""
    if base == "sam":
        norm = vectors.l2_norm(source_grad)
        if norm == 0.0:
            raise NoDescentDirection("hypergradient direction has zero norm")
        return vectors.scale(1.0 / norm, source_grad)
    tg = vectors.multiply(operator.scale, source_grad)
    norm = vectors.l2_norm(tg)
    if norm == 0.0:
        raise NoDescentDirection("rescaled hypergradient direction has zero norm")
    return vectors.scale(1.0 / norm, vectors.multiply(operator.scale, tg))


def lets_step(variant: str, model: DifferentiableModel, theta,
              radius: RadiusState, batch_tr, batch_vl,
              state: SgdState, cfg: SgdConfig,
              lets_cfg: LetsConfig = LetsConfig(),
              operator: NormalizationOperator | None = None,
              sched_t: int | None = None, horizon: int | None = None):
    """One full bilevel step; returns (theta', radius, diagnostics).

    The model update is byte-identical to sam_step/asam_step at the
    current radius (it is the same code path); with beta = 0 the radius
    machinery is skipped and the trajectory reduces to the fixed-radius
    optimizer exactly.  sched_t clocks the beta schedule (the harness
    passes the epoch index; standalone callers default to the update
    counter).
    """
    if variant not in _BASE_VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; choose from {sorted(_BASE_VARIANTS)}")
    base = _BASE_VARIANTS[variant]
    rho_before = radius.rho
    g, eps, g_hat, operator = perturbed_gradient(
        base, model, theta, batch_tr, rho_before, xi=lets_cfg.xi, operator=operator)
    eta_t = cfg.rate_at(state.t)
    theta_next = sgd_step(theta, g_hat, state, cfg)

    if radius.beta == 0.0:
        loss_tr = model.loss(theta_next, batch_tr)
        loss_vl = model.loss(theta_next, batch_vl)
        gap = loss_vl - loss_tr
        diag = StepDiagnostics(
            variant=variant, loss_tr=loss_tr, loss_vl=loss_vl, gap=gap,
            metric_value=generalization_metric(lets_cfg.metric, loss_vl, loss_tr),
            g_rho=0.0, rho_before=rho_before, rho_after=radius.rho,
            beta_t=0.0, eta_t=eta_t,
            grad_norm=vectors.l2_norm(g), grad_norm_hat=vectors.l2_norm(g_hat),
            grad_norm_tr_post=float("nan"), grad_norm_vl_post=float("nan"))
        return theta_next, radius, diag

    loss_tr, gbar_tr = model.value_and_grad(theta_next, batch_tr)
    loss_vl, gbar_vl = model.value_and_grad(theta_next, batch_vl)
    g_a = metric_grad_factor(lets_cfg.metric, loss_vl, loss_tr, gbar_vl, gbar_tr)
    source = gbar_tr if lets_cfg.direction_source == "post-step" else g
    direction = hyper_direction(base, source, operator)
    if lets_cfg.hessian == "diag-approx":
        h_diag = hessian_diag_approx(g_hat)
        g_rho = rho_hypergradient(g_a, h_diag, direction)
    else:
        pert_point = vectors.axpy(rho_before, direction, theta)
        hv = fd_hvp(model, pert_point, batch_tr, direction, h=lets_cfg.hvp_step)
        g_rho = -vectors.dot(g_a, hv)
    clock = radius.steps if sched_t is None else sched_t
    beta_t = radius.beta_at(clock, horizon)
    update_radius(radius, g_rho, eta_t, t=clock, T=horizon)
    gap = loss_vl - loss_tr
    diag = StepDiagnostics(
        variant=variant, loss_tr=loss_tr, loss_vl=loss_vl, gap=gap,
        metric_value=generalization_metric(lets_cfg.metric, loss_vl, loss_tr),
        g_rho=g_rho, rho_before=rho_before, rho_after=radius.rho,
        beta_t=beta_t, eta_t=eta_t,
        grad_norm=vectors.l2_norm(g), grad_norm_hat=vectors.l2_norm(g_hat),
        grad_norm_tr_post=vectors.l2_norm(gbar_tr),
        grad_norm_vl_post=vectors.l2_norm(gbar_vl))
    return theta_next, radius, diag
