"""Acceptance suite: the eleven headline guarantees, one test each.

`pytest tests/test_acceptance.py -v` prints one pass/fail line per
criterion.  The two study-sized criteria (convergence, label noise)
carry explicit wall-clock budgets; everything else is sub-second math.
"""

import json
import math
import time

import numpy as np
import pytest

from samlab.harness.cli import main as cli_main
from samlab.harness.config import config_from_text
from samlab.harness.convergence import convergence_summary
from samlab.harness.landscape import landscape_grid
from samlab.harness.runner import run_experiment
from samlab.harness.sweeps import sweep
from samlab.lets import LetsConfig, RadiusState, lets_step
from samlab.models import make_anchored_quadratic, make_mlp, make_quadratic
from samlab.optimizers import (NormalizationOperator, SgdConfig, SgdState,
                               asam_step, build_normalization,
                               sam_perturbation, sam_step)
from samlab.layouts import ParameterLayout, Segment, dense_layout
from samlab.oracle import verify_hypergradient
from samlab.rng import generator
from samlab.vectors import l2_norm


def run_cfg(text: str, out_dir):
    return run_experiment(config_from_text(text), out_dir)


# ---------------------------------------------------------------- 1


def test_criterion_01_exact_hypergradient_matches_fd_oracle():
    t0 = time.monotonic()

    # 1-D quadratic pair: closed form gives dJ/drho = eta*g_rho = 0.044
    model = make_anchored_quadratic([1.0])
    report = verify_hypergradient(
        model, np.array([1.0]), 0.1,
        (np.array([[0.0]]), None), (np.array([[2.0]]), None), 0.1,
        metric="squared-gap", variant="sam", direction_source="pre-step")
    assert report.scaled_exact == pytest.approx(0.044, rel=1e-6)
    assert report.rel_err_exact <= 1e-6

    # 20 random quadratic pairs, d <= 50
    rng = generator(2026)
    metrics = ("squared-gap", "gap", "val-loss")
    for i in range(20):
        d = int(rng.integers(1, 51))
        model = make_anchored_quadratic(rng.uniform(0.2, 3.0, size=d))
        theta = rng.standard_normal(d)
        batch_tr = (rng.standard_normal((3, d)), None)
        batch_vl = (rng.standard_normal((3, d)) + 1.0, None)
        report = verify_hypergradient(
            model, theta, float(rng.uniform(0.05, 0.5)), batch_tr, batch_vl,
            float(rng.uniform(0.02, 0.3)), metric=metrics[i % 3],
            variant="asam" if i % 5 == 0 else "sam",
            direction_source="pre-step")
        assert report.rel_err_exact <= 1e-3, report.to_text()
        assert report.sign_agree_exact, report.to_text()

    # 5 random MLP fixtures, d <= 50
    for k in range(5):
        rng_k = generator(300 + k)
        model = make_mlp([2, 3, 2])          # 17 parameters
        theta = model.init_theta(rng_k)
        batch_tr = (rng_k.standard_normal((6, 2)), rng_k.integers(0, 2, size=6))
        batch_vl = (rng_k.standard_normal((6, 2)), rng_k.integers(0, 2, size=6))
        report = verify_hypergradient(
            model, theta, 0.1, batch_tr, batch_vl, 0.1,
            metric=metrics[k % 3], variant="sam" if k % 2 == 0 else "asam",
            direction_source="pre-step" if k < 3 else "post-step")
        assert report.rel_err_exact <= 1e-3, report.to_text()
        assert report.sign_agree_exact, report.to_text()

    assert time.monotonic() - t0 < 10.0


# ---------------------------------------------------------------- 2


def test_criterion_02_one_step_radius_trace():
    model = make_anchored_quadratic([1.0])
    radius = RadiusState(rho=0.1, beta=1.0, parameterization="direct",
                         optimizer="plain", schedule="constant")
    theta, radius, diag = lets_step(
        "lets-sam", model, np.array([1.0]), radius,
        (np.array([[0.0]]), None), (np.array([[2.0]]), None),
        SgdState.fresh(1), SgdConfig(learning_rate=0.1),
        LetsConfig(metric="squared-gap", hessian="diag-approx"))
    assert theta[0] == pytest.approx(0.89, rel=1e-9)
    assert radius.rho == pytest.approx(0.04676, rel=1e-9)
    assert diag.g_rho == pytest.approx(0.5324, rel=1e-9)


# ---------------------------------------------------------------- 3

REDUCTION_BASE = """
dataset.kind=two-moons
dataset.n=120
dataset.noise=0.15
dataset.test_fraction=0.25
model.kind=mlp
model.hidden=8
optimizer.eta=0.2
train.steps=500
train.batch_size=16
run.seed=3
"""


def test_criterion_03_reduction_identities_over_500_steps(tmp_path):
    def metrics_bytes(extra, out):
        return run_cfg(REDUCTION_BASE + extra, tmp_path / out).metrics_path.read_bytes()

    # zero-radius sharpness-aware training is plain SGD
    erm = metrics_bytes("optimizer.variant=erm\n", "erm")
    sam0 = metrics_bytes("optimizer.variant=sam\noptimizer.rho=0.0\n", "sam0")
    assert sam0 == erm

    # frozen radius (beta=0) reproduces the fixed-radius counterpart
    lets_keys = "optimizer.rho0=0.05\noptimizer.beta=0.0\noptimizer.metric=squared-gap\n"
    sam = metrics_bytes("optimizer.variant=sam\noptimizer.rho=0.05\n", "sam")
    lets_sam = metrics_bytes("optimizer.variant=lets-sam\n" + lets_keys, "lets-sam")
    assert lets_sam == sam
    asam = metrics_bytes("optimizer.variant=asam\noptimizer.rho=0.05\n", "asam")
    lets_asam = metrics_bytes("optimizer.variant=lets-asam\n" + lets_keys, "lets-asam")
    assert lets_asam == asam

    # an all-ones normalization operator turns ASAM into SAM
    model = make_mlp([2, 8, 2])
    rng = generator(17)
    theta_s = theta_a = model.init_theta(rng)
    ones = NormalizationOperator(scale=np.ones(model.dim), xi=0.01)
    cfg = SgdConfig(learning_rate=0.05)
    state_s, state_a = SgdState.fresh(model.dim), SgdState.fresh(model.dim)
    for _ in range(500):
        X = rng.standard_normal((8, 2))
        y = rng.integers(0, 2, size=8)
        theta_s, _ = sam_step(model, theta_s, (X, y), 0.1, state_s, cfg)
        theta_a, _ = asam_step(model, theta_a, (X, y), 0.1, 0.01, state_a, cfg,
                               operator=ones)
        assert theta_a.tobytes() == theta_s.tobytes()


# ---------------------------------------------------------------- 4


def test_criterion_04_normalization_operator_fixtures_and_floor():
    fc = build_normalization(dense_layout([("w", "dense-weight", 1), ("b", "bias", 1)]),
                             np.array([0.5, -2.0]), xi=0.01)
    assert fc.scale.tolist() == [0.51, 2.01]

    conv = build_normalization(
        ParameterLayout((Segment("conv", "conv-filter-group", 0, 2, filter_sizes=(2,)),
                         Segment("b", "bias", 2, 1))),
        np.array([3.0, 4.0, 1.0]), xi=0.01)
    assert conv.scale.tolist() == [5.01, 5.01, 1.01]

    rng = generator(44)
    for _ in range(100):
        segments, offset = [], 0
        for i in range(int(rng.integers(1, 5))):
            size = int(rng.integers(1, 6))
            kind = "bias" if rng.random() < 0.3 else "dense-weight"
            segments.append(Segment(f"s{i}", kind, offset, size))
            offset += size
        filter_sizes = tuple(int(rng.integers(1, 4))
                             for _ in range(int(rng.integers(1, 4))))
        segments.append(Segment("c", "conv-filter-group", offset, sum(filter_sizes),
                                filter_sizes=filter_sizes))
        offset += sum(filter_sizes)
        layout = ParameterLayout(tuple(segments))
        op = build_normalization(layout, 3.0 * rng.standard_normal(layout.total),
                                 xi=0.01)
        assert op.scale.min() >= 0.01


# ---------------------------------------------------------------- 5


def test_criterion_05_perturbation_norm_sits_on_the_radius():
    rng = generator(5)
    for _ in range(1000):
        d = int(rng.integers(1, 30))
        g = rng.standard_normal(d) * 10.0 ** rng.uniform(-3, 3)
        rho = float(rng.uniform(1e-3, 5.0))
        eps = sam_perturbation(g, rho)
        assert abs(l2_norm(eps) - rho) <= 1e-12


# ---------------------------------------------------------------- 6

CONVERGENCE_BASE = """
dataset.kind=two-moons
dataset.n=200
dataset.noise=0.15
dataset.test_fraction=0.25
model.kind=mlp
model.hidden=16
optimizer.variant=lets-sam
optimizer.eta=0.2
optimizer.rho0=0.05
optimizer.beta=1e-4
optimizer.metric=squared-gap
train.batch_size=32
"""


def test_criterion_06_min_grad_norm_shrinks_with_horizon(tmp_path):
    t0 = time.monotonic()
    stats = {}
    long_runs = []
    for seed in (0, 1, 2):
        for steps in (100, 1600):
            text = CONVERGENCE_BASE + f"train.steps={steps}\nrun.seed={seed}\n"
            result = run_cfg(text, tmp_path / f"seed{seed}-T{steps}")
            stats[(seed, steps)] = result.summary["min_grad_norm_sq"]
            if steps == 1600:
                long_runs.append(result.out_dir)
    for seed in (0, 1, 2):
        assert stats[(seed, 1600)] <= stats[(seed, 100)], (
            f"seed {seed}: min grad^2 grew from T=100 to T=1600")
    # the cross-horizon report quotes a decay exponent for these runs
    report = convergence_summary([tmp_path / "seed0-T100", tmp_path / "seed0-T1600"])
    assert report.exponent is not None
    assert report.exponent < 0.0
    assert time.monotonic() - t0 < 120.0


# ---------------------------------------------------------------- 7

NOISE_BASE = """
dataset.kind=blobs
dataset.n=1000
dataset.classes=4
dataset.spread=2.5
dataset.label_noise=0.4
dataset.test_fraction=0.25
model.kind=mlp
model.hidden=32,32
optimizer.eta=0.15
train.epochs=100
train.batch_size=32
"""

LETS_KEYS = ("optimizer.variant=lets-sam\noptimizer.rho0=0.4\n"
             "optimizer.beta=1e-4\noptimizer.metric=squared-gap\n")


def test_criterion_07_radius_learning_beats_erm_under_label_noise(tmp_path):
    t0 = time.monotonic()
    wins = 0
    pairs = []
    for seed in range(5):
        lets = run_cfg(NOISE_BASE + LETS_KEYS + f"run.seed={seed}\n",
                       tmp_path / f"lets-{seed}")
        erm = run_cfg(NOISE_BASE + "optimizer.variant=erm\n" + f"run.seed={seed}\n",
                      tmp_path / f"erm-{seed}")
        a, b = lets.summary["final_test_accuracy"], erm.summary["final_test_accuracy"]
        pairs.append((a, b))
        wins += a >= b
    assert wins >= 4, f"radius learning won only {wins}/5 seeds: {pairs}"
    # sanity: 40% symmetric noise still leaves both far above chance (0.25)
    assert min(min(p) for p in pairs) > 0.5
    assert time.monotonic() - t0 < 300.0


# ---------------------------------------------------------------- 8

SWEEP_BASE = """
dataset.kind=two-moons
dataset.n=160
dataset.noise=0.15
dataset.test_fraction=0.25
model.kind=mlp
model.hidden=8
optimizer.variant=lets-sam
optimizer.eta=0.2
optimizer.rho0=0.1
optimizer.beta=1e-4
optimizer.metric=squared-gap
train.epochs=8
train.batch_size=32
run.seed=0
"""


def test_criterion_08_metric_ablation_emits_all_three_variants(tmp_path):
    result = sweep(config_from_text(SWEEP_BASE), "metric-kind",
                   ["val-loss", "gap", "squared-gap"], seeds=[0],
                   out_dir=tmp_path / "metrics")
    assert [row.value for row in result.rows] == ["val-loss", "gap", "squared-gap"]
    assert len(result.runs) == 3
    for run in result.runs:
        assert run.summary["rows_logged"] > 0          # trained to completion
        assert math.isfinite(run.summary["final_gap_val"])
    # the squared-gap run logs the gap in its metrics file
    sq = result.runs[-1]
    header, *rows = sq.metrics_path.read_text().splitlines()
    gap_col = header.split(",").index("gap_val")
    final_gap = float(rows[-1].split(",")[gap_col])
    assert math.isfinite(final_gap)
    assert final_gap == sq.summary["final_gap_val"]


# ---------------------------------------------------------------- 9


def test_criterion_09_rho0_grid_trains_without_blowup(tmp_path):
    values = ["0.01", "0.05", "0.1", "0.5", "1", "1.5", "2"]
    result = sweep(config_from_text(SWEEP_BASE), "rho0", values, seeds=[0],
                   out_dir=tmp_path / "rho0")
    assert len(result.runs) == 7                        # none aborted
    for run in result.runs:
        final_rho = run.summary["final_rho"]
        assert 1e-6 < final_rho < 10.0, (
            f"rho0={run.config.optimizer.rho0}: final rho {final_rho} left (1e-6, 10)")


# ---------------------------------------------------------------- 10

DETERMINISM_CFG = """
dataset.kind=two-moons
dataset.n=64
dataset.noise=0.15
dataset.test_fraction=0.25
model.kind=mlp
model.hidden=6
optimizer.variant=lets-asam
optimizer.eta=0.2
optimizer.rho0=0.05
optimizer.beta=1e-2
optimizer.metric=squared-gap
optimizer.xi=0.02
train.steps=60
train.batch_size=8
run.seed=11
"""


def test_criterion_10_metrics_csv_is_byte_stable_across_reruns(tmp_path):
    cfg = tmp_path / "config.txt"
    cfg.write_text(DETERMINISM_CFG, encoding="utf-8")
    for out in ("first", "second"):
        code = cli_main(["train", "--config", str(cfg), "--out", str(tmp_path / out)])
        assert code == 0
    first = (tmp_path / "first" / "metrics.csv").read_bytes()
    second = (tmp_path / "second" / "metrics.csv").read_bytes()
    assert first == second
    assert ((tmp_path / "first" / "final.ckpt").read_bytes()
            == (tmp_path / "second" / "final.ckpt").read_bytes())


# ---------------------------------------------------------------- 11


def test_criterion_11_landscape_grid_geometry_and_quadratic_fit():
    model = make_quadratic([1.0, 2.0, 0.5], [0.0, 0.0, 0.0])
    theta = np.array([0.5, -0.5, 1.0])
    grid = landscape_grid(model, theta, (None, None), 2.0, 41, seed=7)

    k = 20
    assert abs(grid.values[k, k] - model.loss(theta)) <= 1e-6
    assert abs(np.dot(grid.u, grid.u) - 1.0) <= 1e-10
    assert abs(np.dot(grid.v, grid.v) - 1.0) <= 1e-10
    assert abs(np.dot(grid.u, grid.v)) <= 1e-10

    # on a quadratic model the surface is an exact paraboloid in (a, b)
    a = np.repeat(grid.offsets, grid.resolution)
    b = np.tile(grid.offsets, grid.resolution)
    design = np.stack([np.ones_like(a), a, b, a * a, a * b, b * b], axis=1)
    coef, *_ = np.linalg.lstsq(design, grid.values.ravel(), rcond=None)
    residual = np.max(np.abs(design @ coef - grid.values.ravel()))
    assert residual <= 1e-9
