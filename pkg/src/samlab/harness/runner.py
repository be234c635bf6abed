"""Config-driven training runs.

One run owns one output directory and writes four artifacts: the
resolved config (config.txt), the metrics CSV, the final checkpoint,
and a summary.json.  Every stochastic choice flows through the named
substreams of the master seed, so a repeated run is byte-identical.

All sharpness variants (sam, asam, lets-sam, lets-asam) execute through
the same step function; fixed-radius runs carry a frozen radius state
(beta = 0), which is what makes the reduction identities hold at the
bit level rather than approximately.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..checkpoints import save_checkpoint
from ..datasets import BatchSampler, LabeledDataset, corrupt_labels, make_blobs, make_two_moons, split
from ..errors import ConfigError, NoDescentDirection, NonFiniteError
from ..idx import load_idx
from ..lets import LetsConfig, RadiusState, lets_step
from ..models import (DifferentiableModel, make_conv1d, make_logreg, make_mlp,
                      make_quadratic)
from ..optimizers import SgdConfig, SgdState, sgd_step
from ..rng import child_seed, derive, stream
from ..vectors import l2_norm
from .config import ExperimentConfig, validate_config

GOLDEN_HEADER = ("step,epoch,train_loss,val_loss,test_loss,test_accuracy,"
                 "gap_test,gap_val,rho,g_rho,grad_norm,eta,beta")

# purpose tags under the dataset seed (distinct from the named master
# substreams, which rng.STREAMS owns)
_GEN_TAG = 10
_TEST_TAG = 11
_VAL_TAG = 12

# per-step rows up to this many total steps, per-epoch rows beyond
LOG_EVERY_STEP_LIMIT = 5000


@dataclass(frozen=True)
class RunResult:
    config: ExperimentConfig
    out_dir: Path
    metrics_path: Path
    checkpoint_path: Path
    theta: np.ndarray
    summary: dict


def assemble_dataset(config: ExperimentConfig):
    """Build (train, val, test) per the config.

    The test split is taken before label corruption, so test labels stay
    clean; corruption then applies to the whole remaining pool, and the
    validation source is carved from that corrupted pool.
    """
    ds = config.dataset
    data_seed = ds.seed if ds.seed is not None else config.seed
    gen_seed = derive(data_seed, _GEN_TAG)
    if ds.kind == "blobs":
        base = make_blobs(ds.n, ds.classes, ds.spread, gen_seed)
    elif ds.kind == "two-moons":
        base = make_two_moons(ds.n, ds.noise, gen_seed)
    elif ds.kind == "idx":
        base = load_idx(ds.images, ds.labels)
    else:
        raise ConfigError(f"unknown dataset kind {ds.kind!r}")

    if ds.test_fraction > 0:
        pool, test = split(base, ds.test_fraction, derive(data_seed, _TEST_TAG))
    else:
        pool, test = base, None
    if ds.label_noise > 0:
        pool = corrupt_labels(pool, ds.label_noise, child_seed(config.seed, "noise"))
    train, val = split(pool, ds.val_fraction, derive(data_seed, _VAL_TAG), mode=ds.val_mode)
    return train, val, test


def build_model(config: ExperimentConfig, dataset: LabeledDataset) -> DifferentiableModel:
    m = config.model
    if m.kind == "quadratic":
        center = m.center if m.center is not None else (0.0,) * len(m.curvature)
        if len(center) != len(m.curvature):
            raise ConfigError(f"model.center has {len(center)} entries, "
                              f"model.curvature has {len(m.curvature)}")
        return make_quadratic(m.curvature, center)
    if m.kind == "logreg":
        return make_logreg(dataset.p, dataset.num_classes)
    if m.kind == "mlp":
        dims = [dataset.p, *m.hidden, dataset.num_classes]
        return make_mlp(dims, activation=m.activation, loss_kind=m.loss)
    if m.kind == "conv1d":
        return make_conv1d(dataset.p, m.filters, m.kernel_size,
                           dataset.num_classes, activation=m.activation)
    raise ConfigError(f"unknown model kind {m.kind!r}")


def _accuracy(model, theta, ds: LabeledDataset | None) -> float:
    if ds is None or model.num_classes is None or not hasattr(model, "logits"):
        return float("nan")
    logits = model.logits(theta, ds.features)
    pred = np.argmax(logits, axis=1)          # ties resolve to the lowest class
    return float(np.mean(pred == ds.labels))


def _fmt_row(step: int, epoch: int, floats) -> str:
    return f"{step},{epoch}," + ",".join(repr(float(v)) for v in floats)


def run_experiment(config: ExperimentConfig, out_dir=None) -> RunResult:
    """Train per the config; returns the result after writing config.txt,
    metrics.csv, final.ckpt (+ layout sidecar), and summary.json.

    NoDescentDirection during a step either falls back to a plain SGD
    step on the unperturbed gradient or aborts, per optimizer.fallback.
    Non-finite parameters abort the run after writing the rows so far
    and a last_good.ckpt holding the final finite iterate.
    """
    validate_config(config)
    out = Path(out_dir if out_dir is not None else config.out)
    out.mkdir(parents=True, exist_ok=True)

    train, val, test = assemble_dataset(config)
    model = build_model(config, train)
    theta = model.init_theta(stream(config.seed, "init"))

    steps_per_epoch = max(1, math.ceil(train.n / config.batch_size))
    if config.steps is not None:
        total_steps = config.steps
    else:
        total_steps = config.epochs * steps_per_epoch
    total_epochs = math.ceil(total_steps / steps_per_epoch)
    log_every_step = total_steps <= LOG_EVERY_STEP_LIMIT

    opt = config.optimizer
    sgd_cfg = SgdConfig(learning_rate=opt.eta, momentum=opt.momentum,
                        weight_decay=opt.weight_decay, schedule=opt.schedule,
                        gamma=opt.gamma, warmup_steps=opt.warmup_steps,
                        horizon=total_steps)
    sgd_state = SgdState.fresh(model.dim)

    variant = opt.variant
    radius = None
    lets_cfg = None
    if variant in ("sam", "asam"):
        radius = RadiusState(rho=opt.rho, beta=0.0, parameterization="direct")
        lets_cfg = LetsConfig(xi=opt.xi)
    elif variant.startswith("lets-"):
        radius = RadiusState(rho=opt.rho0, beta=opt.beta,
                             parameterization=opt.parameterization,
                             optimizer=opt.radius_optimizer,
                             schedule=opt.radius_schedule, gamma=opt.radius_gamma,
                             rho_max=opt.rho_max)
        lets_cfg = LetsConfig(metric=opt.metric, hessian=opt.hessian,
                              direction_source=opt.direction, xi=opt.xi)

    train_sampler = BatchSampler(train, config.batch_size, stream(config.seed, "train"))
    val_sampler = BatchSampler(val, config.batch_size, stream(config.seed, "val"),
                               mode="with-replacement")

    metrics_path = out / "metrics.csv"
    checkpoint_path = out / "final.ckpt"
    (out / "config.txt").write_text(config.to_text(), encoding="utf-8")

    rows: list[str] = []
    fallback_steps = 0
    min_grad_sq = float("inf")
    last_row_floats = None
    epoch = 0

    def flush_rows():
        metrics_path.write_text(GOLDEN_HEADER + "\n" + "".join(r + "\n" for r in rows),
                                encoding="utf-8")

    try:
        for t in range(total_steps):
            batch_tr = train_sampler.next_batch()
            epoch = train_sampler.epoch
            batch_vl = val_sampler.next_batch()

            try:
                if variant == "erm":
                    g = model.grad(theta, batch_tr)
                    eta_t = sgd_cfg.rate_at(sgd_state.t)
                    theta_next = sgd_step(theta, g, sgd_state, sgd_cfg)
                    rho_col, g_rho, beta_t, grad_norm = 0.0, 0.0, 0.0, l2_norm(g)
                else:
                    theta_next, radius, diag = lets_step(
                        variant, model, theta, radius, batch_tr, batch_vl,
                        sgd_state, sgd_cfg, lets_cfg=lets_cfg,
                        sched_t=epoch, horizon=total_epochs)
                    rho_col, g_rho = diag.rho_after, diag.g_rho
                    beta_t, eta_t, grad_norm = diag.beta_t, diag.eta_t, diag.grad_norm
            except NoDescentDirection:
                if opt.fallback == "abort":
                    raise
                fallback_steps += 1
                g = model.grad(theta, batch_tr)
                eta_t = sgd_cfg.rate_at(sgd_state.t)
                theta_next = sgd_step(theta, g, sgd_state, sgd_cfg)
                rho_col = radius.rho if radius is not None else 0.0
                g_rho, beta_t, grad_norm = 0.0, 0.0, l2_norm(g)

            if not np.isfinite(theta_next).all():
                raise NonFiniteError(f"parameters left the finite range at step {t + 1}")
            theta = theta_next

            min_grad_sq = min(min_grad_sq, grad_norm * grad_norm)
            step = t + 1
            end_of_epoch = (step % steps_per_epoch == 0) or step == total_steps
            if log_every_step or end_of_epoch:
                train_loss = model.loss(theta, train.full_batch())
                val_loss = model.loss(theta, val.full_batch())
                if test is not None:
                    test_loss = model.loss(theta, test.full_batch())
                else:
                    test_loss = float("nan")
                test_acc = _accuracy(model, theta, test)
                gap_val = val_loss - train_loss
                gap_test = test_loss - train_loss
                last_row_floats = (train_loss, val_loss, test_loss, test_acc,
                                   gap_test, gap_val, rho_col, g_rho, grad_norm,
                                   eta_t, beta_t)
                rows.append(_fmt_row(step, epoch, last_row_floats))
    except NonFiniteError:
        # theta passed the finite check after the previous step, so it
        # is the last good iterate
        save_checkpoint(out / "last_good.ckpt", theta, model.layout)
        flush_rows()
        raise

    flush_rows()
    save_checkpoint(checkpoint_path, theta, model.layout)

    (train_loss, val_loss, test_loss, test_acc, gap_test, gap_val,
     rho_col, g_rho, grad_norm, eta_t, beta_t) = last_row_floats
    summary = {
        "variant": variant,
        "seed": config.seed,
        "total_steps": total_steps,
        "final_epoch": epoch,
        "final_train_loss": train_loss,
        "final_val_loss": val_loss,
        "final_test_loss": test_loss,
        "final_test_accuracy": test_acc,
        "final_gap_val": gap_val,
        "final_gap_test": gap_test,
        "final_rho": rho_col,
        "min_grad_norm_sq": min_grad_sq,
        "fallback_steps": fallback_steps,
        "rows_logged": len(rows),
    }
    (out / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return RunResult(config=config, out_dir=out, metrics_path=metrics_path,
                     checkpoint_path=checkpoint_path, theta=theta, summary=summary)
