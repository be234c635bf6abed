"""Brute-force verification of the radius hypergradient.

The analytic hypergradient chains the upper-level metric through one
lower-level gradient step along a fixed perturbation direction.  The
oracle here differentiates that same one-step map by central finite
differences in rho (theta held fixed, batches identical, direction
frozen), giving an independent dJ/drho to compare against:

  * pre-step direction: the frozen map IS the true one-step update
    (the perturbation direction never depends on rho), so the exact
    Hessian-vector path must match the oracle tightly;
  * post-step direction: the direction is recomputed from the post-step
    gradient, so the oracle freezes that direction and both sides are
    checked under the same convention.

The diagonal approximation gets recorded statistics (errors and sign
agreement), not a hard tolerance: it is a heuristic with no accuracy
guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import vectors
from .errors import ConfigError
from .lets import (LetsConfig, generalization_metric, hessian_diag_approx,
                   hyper_direction, metric_grad_factor, rho_hypergradient)
from .models import DifferentiableModel, fd_hvp
from .optimizers import build_normalization

_BASE = {"lets-sam": "sam", "lets-asam": "asam", "sam": "sam", "asam": "asam"}
_REL_FLOOR = 1e-12


@dataclass(frozen=True)
class HypergradReport:
    descriptor: str
    variant: str
    metric: str
    direction_source: str
    rho: float
    eta: float
    h: float
    g_rho_diag: float
    g_rho_exact: float
    fd_value: float          # dJ/drho by central differences
    rel_err_diag: float      # |eta*g_rho_diag - fd| / max(|fd|, floor)
    rel_err_exact: float
    sign_agree_diag: bool
    sign_agree_exact: bool

    @property
    def scaled_diag(self) -> float:
        return self.eta * self.g_rho_diag

    @property
    def scaled_exact(self) -> float:
        return self.eta * self.g_rho_exact

    def to_text(self) -> str:
        lines = [
            f"hypergradient check: {self.descriptor}",
            f"  variant={self.variant} metric={self.metric} direction={self.direction_source}",
            f"  rho={self.rho!r} eta={self.eta!r} fd step h={self.h!r}",
            f"  fd dJ/drho          = {self.fd_value!r}",
            f"  eta*g_rho (exact)   = {self.scaled_exact!r}  rel err {self.rel_err_exact:.3e}  "
            f"sign {'ok' if self.sign_agree_exact else 'FLIP'}",
            f"  eta*g_rho (diag)    = {self.scaled_diag!r}  rel err {self.rel_err_diag:.3e}  "
            f"sign {'ok' if self.sign_agree_diag else 'FLIP'}",
        ]
        return "\n".join(lines) + "\n"

    CSV_HEADER = ("descriptor,variant,metric,direction,rho,eta,h,"
                  "g_rho_diag,g_rho_exact,fd_dJ_drho,rel_err_diag,rel_err_exact,"
                  "sign_agree_diag,sign_agree_exact")

    def csv_row(self) -> str:
        return ",".join([
            self.descriptor.replace(",", ";"), self.variant, self.metric,
            self.direction_source, repr(self.rho), repr(self.eta), repr(self.h),
            repr(self.g_rho_diag), repr(self.g_rho_exact), repr(self.fd_value),
            repr(self.rel_err_diag), repr(self.rel_err_exact),
            str(int(self.sign_agree_diag)), str(int(self.sign_agree_exact))])


def _rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), _REL_FLOOR)


def _signs_agree(a: float, b: float) -> bool:
    if a == 0.0 and b == 0.0:
        return True
    return a * b > 0.0


def _frozen_direction(model, theta, rho, batch_tr, eta, base, direction_source, xi):
    """Direction per convention, built once at the base radius."""
    g = model.grad(theta, batch_tr)
    operator = build_normalization(model.layout, theta, xi) if base == "asam" else None
    if direction_source == "pre-step":
        return hyper_direction(base, g, operator)
    d_pre = hyper_direction(base, g, operator)
    g_hat = model.grad(vectors.axpy(rho, d_pre, theta), batch_tr)
    theta_next = vectors.axpy(-eta, g_hat, theta)
    gbar_tr = model.grad(theta_next, batch_tr)
    return hyper_direction(base, gbar_tr, operator)


def _one_step_metric(model, theta, direction, rho_eval, batch_tr, batch_vl, eta, metric):
    """J(rho_eval) of the frozen-direction one-step map."""
    g_hat = model.grad(vectors.axpy(rho_eval, direction, theta), batch_tr)
    theta_next = vectors.axpy(-eta, g_hat, theta)
    return generalization_metric(metric, model.loss(theta_next, batch_vl),
                                 model.loss(theta_next, batch_tr))


def oracle_dJ_drho_fd(model: DifferentiableModel, theta, rho: float,
                      batch_tr, batch_vl, eta: float,
                      metric: str = "squared-gap", variant: str = "sam",
                      h: float = 1e-4, direction_source: str = "pre-step",
                      xi: float = 0.01) -> float:
    """Central difference (J(rho+h) - J(rho-h)) / 2h through the full
    perturbation -> lower-step -> metric pipeline, same batches and
    direction convention."""
    if variant not in _BASE:
        raise ConfigError(f"unknown variant {variant!r}; choose from {sorted(_BASE)}")
    if h <= 0:
        raise ConfigError(f"fd step h must be > 0, got {h}")
    if rho - h <= 0:
        raise ConfigError(f"need rho - h > 0 to difference around rho={rho} with h={h}")
    theta = vectors.as_vector(theta, "theta")
    direction = _frozen_direction(model, theta, rho, batch_tr, eta,
                                  _BASE[variant], direction_source, xi)
    up = _one_step_metric(model, theta, direction, rho + h, batch_tr, batch_vl, eta, metric)
    down = _one_step_metric(model, theta, direction, rho - h, batch_tr, batch_vl, eta, metric)
    return (up - down) / (2.0 * h)


def verify_hypergradient(model: DifferentiableModel, theta, rho: float,
                         batch_tr, batch_vl, eta: float,
                         metric: str = "squared-gap", variant: str = "sam",
                         direction_source: str = "pre-step", xi: float = 0.01,
                         h: float = 1e-4, hvp_step: float = 1e-5) -> HypergradReport:
    """Run the analytic hypergradient in both Hessian modes and the FD
    oracle on identical inputs; eta*g_rho is compared against dJ/drho
    (the update consumes the beta*eta product, so eta converts g_rho to
    a plain derivative)."""
    if variant not in _BASE:
        raise ConfigError(f"unknown variant {variant!r}; choose from {sorted(_BASE)}")
    base = _BASE[variant]
    theta = vectors.as_vector(theta, "theta")
    direction = _frozen_direction(model, theta, rho, batch_tr, eta, base, direction_source, xi)

    # analytic values of the frozen-direction map
    pert_point = vectors.axpy(rho, direction, theta)
    g_hat = model.grad(pert_point, batch_tr)
    theta_next = vectors.axpy(-eta, g_hat, theta)
    loss_tr, gbar_tr = model.value_and_grad(theta_next, batch_tr)
    loss_vl, gbar_vl = model.value_and_grad(theta_next, batch_vl)
    g_a = metric_grad_factor(metric, loss_vl, loss_tr, gbar_vl, gbar_tr)
    g_rho_diag = rho_hypergradient(g_a, hessian_diag_approx(g_hat), direction)
    hv = fd_hvp(model, pert_point, batch_tr, direction, h=hvp_step)
    g_rho_exact = -vectors.dot(g_a, hv)

    fd = oracle_dJ_drho_fd(model, theta, rho, batch_tr, batch_vl, eta,
                           metric=metric, variant=variant, h=h,
                           direction_source=direction_source, xi=xi)
    return HypergradReport(
        descriptor=model.descriptor, variant=variant, metric=metric,
        direction_source=direction_source, rho=rho, eta=eta, h=h,
        g_rho_diag=g_rho_diag, g_rho_exact=g_rho_exact, fd_value=fd,
        rel_err_diag=_rel_err(eta * g_rho_diag, fd),
        rel_err_exact=_rel_err(eta * g_rho_exact, fd),
        sign_agree_diag=_signs_agree(eta * g_rho_diag, fd),
        sign_agree_exact=_signs_agree(eta * g_rho_exact, fd))


def hessian_diag_error(model: DifferentiableModel, theta, rho: float, batch,
                       variant: str = "sam", xi: float = 0.01,
                       h: float = 1e-5) -> float:
    """Relative norm error of the diagonal approximation along the
    perturbation direction: ||H (x) d - H_true d|| / ||H_true d|| with
    both evaluated at the perturbed point."""
    if variant not in _BASE:
        raise ConfigError(f"unknown variant {variant!r}; choose from {sorted(_BASE)}")
    base = _BASE[variant]
    theta = vectors.as_vector(theta, "theta")
    g = model.grad(theta, batch)
    operator = build_normalization(model.layout, theta, xi) if base == "asam" else None
    direction = hyper_direction(base, g, operator)
    pert_point = vectors.axpy(rho, direction, theta)
    g_hat = model.grad(pert_point, batch)
    approx = vectors.multiply(hessian_diag_approx(g_hat), direction)
    true = fd_hvp(model, pert_point, batch, direction, h=h)
    denom = vectors.l2_norm(true)
    return vectors.l2_norm(vectors.subtract(approx, true)) / max(denom, _REL_FLOOR)
