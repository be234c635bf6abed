"""Parameter sweeps over rho0, metric kind, and label-noise rate."""

import pytest

from samlab.errors import ConfigError
from samlab.harness.config import config_from_text
from samlab.harness.runner import run_experiment
from samlab.harness.sweeps import SWEEP_HEADER, sweep


def base_config(variant="lets-sam", extra="optimizer.rho0=0.05\noptimizer.beta=1e-4\n"
                                          "optimizer.metric=squared-gap"):
    return config_from_text(f"""
dataset.kind=two-moons
dataset.n=32
dataset.noise=0.15
dataset.test_fraction=0.25
model.kind=mlp
model.hidden=4
optimizer.variant={variant}
optimizer.eta=0.2
{extra}
train.steps=8
train.batch_size=8
run.seed=0
""")


def test_degenerate_sweep_matches_single_run(tmp_path):
    config = base_config()
    single = run_experiment(config, tmp_path / "single")
    result = sweep(config, "rho0", ["0.05"], seeds=[0], out_dir=tmp_path / "sweep")
    assert len(result.rows) == 1
    row = result.rows[0]
    assert row.accuracies == (single.summary["final_test_accuracy"],)
    assert row.mean == single.summary["final_test_accuracy"]
    assert row.std == 0.0
    # the underlying run reproduced the standalone run bit for bit
    sub = result.runs[0]
    assert sub.metrics_path.read_bytes() == single.metrics_path.read_bytes()


def test_metric_kind_sweep_has_three_rows(tmp_path):
    result = sweep(base_config(), "metric-kind", ["val-loss", "gap", "squared-gap"],
                   seeds=[0], out_dir=tmp_path / "sweep")
    assert [row.value for row in result.rows] == ["val-loss", "gap", "squared-gap"]
    assert len(result.runs) == 3
    for run in result.runs:
        assert run.summary["final_gap_val"] == run.summary["final_val_loss"] - run.summary["final_train_loss"]
    csv = (tmp_path / "sweep" / "sweep.csv").read_text().splitlines()
    assert csv[0] == SWEEP_HEADER
    assert len(csv) == 4
    assert all(ln.startswith("metric-kind,") for ln in csv[1:])


def test_sweep_runs_land_in_value_seed_directories(tmp_path):
    result = sweep(base_config(), "rho0", ["0.01", "0.1"], seeds=[0, 1],
                   out_dir=tmp_path / "sweep")
    assert len(result.runs) == 4
    for value in ("0.01", "0.1"):
        for seed in (0, 1):
            run_dir = tmp_path / "sweep" / f"rho0={value}" / f"seed={seed}"
            assert (run_dir / "metrics.csv").exists()
            assert (run_dir / "summary.json").exists()
    assert result.rows[0].value == "0.01"
    assert len(result.rows[0].accuracies) == 2


def test_noise_rate_sweep_applies_to_dataset(tmp_path):
    result = sweep(base_config("erm", extra=""), "noise-rate", ["0.0", "0.4"],
                   seeds=[0], out_dir=tmp_path / "sweep")
    assert len(result.rows) == 2
    noisy_text = (tmp_path / "sweep" / "noise-rate=0.4" / "seed=0" / "config.txt").read_text()
    assert "dataset.label_noise=0.4" in noisy_text
    clean_text = (tmp_path / "sweep" / "noise-rate=0.0" / "seed=0" / "config.txt").read_text()
    assert "dataset.label_noise=0.0" in clean_text


def test_sweep_validation(tmp_path):
    with pytest.raises(ConfigError, match="radius-learning"):
        sweep(base_config("erm", extra=""), "rho0", ["0.1"], out_dir=tmp_path / "a")
    with pytest.raises(ConfigError, match="radius-learning"):
        sweep(base_config("sam", extra="optimizer.rho=0.1"), "metric-kind",
              ["gap"], out_dir=tmp_path / "b")
    with pytest.raises(ConfigError, match=r"lie in \[0, 1\]"):
        sweep(base_config("erm", extra=""), "noise-rate", ["1.5"], out_dir=tmp_path / "c")
    with pytest.raises(ConfigError, match="unknown sweep parameter"):
        sweep(base_config(), "eta", ["0.1"], out_dir=tmp_path / "d")
    with pytest.raises(ConfigError, match="at least one value"):
        sweep(base_config(), "rho0", [], out_dir=tmp_path / "e")
    with pytest.raises(ConfigError, match="unknown metric"):
        sweep(base_config(), "metric-kind", ["auc"], out_dir=tmp_path / "f")
