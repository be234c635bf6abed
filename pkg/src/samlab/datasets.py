"""Synthetic datasets, label corruption, splits, and batch sampling.

All randomness flows through explicit Philox generators (see `rng`), so
every dataset and batch sequence is reproducible bit-for-bit from its
seed.  Datasets are immutable after construction; samplers own their
mutable cursor state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, NonFiniteError
from .rng import generator
from .vectors import DTYPE


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    provenance: str = "unspecified"

    def __post_init__(self):
        features = np.array(self.features, dtype=DTYPE, copy=True, order="C")
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if features.ndim != 2:
            raise DimensionError(f"features must be (n, p), got shape {features.shape}")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise DimensionError(
                f"labels shape {labels.shape} does not match {features.shape[0]} feature rows")
        if features.shape[0] < 1:
            raise ConfigError("a dataset needs at least one example")
        if self.num_classes < 1:
            raise ConfigError(f"num_classes must be >= 1, got {self.num_classes}")
        if labels.min(initial=0) < 0 or (labels.size and labels.max() >= self.num_classes):
            raise ConfigError(f"labels must lie in [0, {self.num_classes})")
        if not np.isfinite(features).all():
            raise NonFiniteError("features contain NaN or Inf")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, indices, provenance: str) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.features[idx], self.labels[idx], self.num_classes, provenance)

    def full_batch(self):
        return self.features, self.labels


def make_blobs(n: int, classes: int, spread: float, seed: int) -> LabeledDataset:
    """Gaussian blobs: class centroids evenly spaced on a circle of
    radius `spread`, unit-variance noise, labels assigned round-robin
    (balanced within one)."""
    if classes < 2 or n < classes:
        raise ConfigError(f"blobs need n >= classes >= 2, got n={n}, classes={classes}")
    rng = generator(seed)
    angles = 2.0 * np.pi * np.arange(classes) / classes
    centroids = spread * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    labels = np.arange(n, dtype=np.int64) % classes
    features = centroids[labels] + rng.standard_normal((n, 2))
    return LabeledDataset(features, labels, classes,
                          f"blobs(n={n},classes={classes},spread={spread},seed={seed})")


def make_two_moons(n: int, noise: float, seed: int) -> LabeledDataset:
    """Two interleaving half-circles; noise=0 puts every point exactly
    on the canonical curves."""
    if n < 2:
        raise ConfigError(f"two-moons needs n >= 2, got {n}")
    if noise < 0:
        raise ConfigError(f"two-moons noise must be >= 0, got {noise}")
    n_outer = (n + 1) // 2
    n_inner = n - n_outer
    t_outer = np.linspace(0.0, np.pi, n_outer)
    t_inner = np.linspace(0.0, np.pi, n_inner)
    outer = np.stack([np.cos(t_outer), np.sin(t_outer)], axis=1)
    inner = np.stack([1.0 - np.cos(t_inner), 1.0 - np.sin(t_inner) - 0.5], axis=1)
    features = np.concatenate([outer, inner], axis=0)
    labels = np.concatenate([np.zeros(n_outer, dtype=np.int64), np.ones(n_inner, dtype=np.int64)])
    if noise > 0:
        features = features + generator(seed).normal(scale=noise, size=features.shape)
    return LabeledDataset(features, labels, 2, f"two-moons(n={n},noise={noise},seed={seed})")


def corrupt_labels(ds: LabeledDataset, rate: float, seed: int) -> LabeledDataset:
    """Flip exactly round(rate*n) uniformly chosen labels, each to a
    uniformly drawn label different from the original."""
    if not 0.0 <= rate <= 1.0:
        raise ConfigError(f"corruption rate must lie in [0, 1], got {rate}")
    count = _round_half_up(rate * ds.n)
    if count == 0:
        return LabeledDataset(ds.features, ds.labels, ds.num_classes, ds.provenance)
    if ds.num_classes < 2:
        raise ConfigError("cannot flip labels of a single-class dataset")
    rng = generator(seed)
    chosen = rng.choice(ds.n, size=count, replace=False)
    labels = ds.labels.copy()
    old = labels[chosen]
    draw = rng.integers(0, ds.num_classes - 1, size=count)
    labels[chosen] = draw + (draw >= old)
    return LabeledDataset(ds.features, labels, ds.num_classes,
                          f"{ds.provenance}+noise(rate={rate},seed={seed})")


def split(ds: LabeledDataset, val_fraction: float, seed: int,
          mode: str = "held-out") -> tuple[LabeledDataset, LabeledDataset]:
    """Produce (train, validation) sources.

    held-out: disjoint index partition of size ~val_fraction.
    sample-from-train: validation batches are drawn from the training
    set itself (by an independent sampler stream), so both returned
    datasets are the full input; val_fraction must be 0.
    """
    if mode == "sample-from-train":
        if val_fraction != 0:
            raise ConfigError("sample-from-train draws validation batches from the training set; "
                              f"val_fraction must be 0, got {val_fraction}")
        return ds, ds
    if mode != "held-out":
        raise ConfigError(f"unknown validation mode {mode!r}")
    if not 0.0 <= val_fraction < 1.0:
        raise ConfigError(f"val_fraction must lie in [0, 1), got {val_fraction}")
    n_val = _round_half_up(val_fraction * ds.n)
    if n_val < 1 or ds.n - n_val < 1:
        raise ConfigError(f"held-out split of {ds.n} examples at fraction {val_fraction} "
                          f"leaves an empty side ({ds.n - n_val}/{n_val})")
    perm = generator(seed).permutation(ds.n)
    val_idx = np.sort(perm[:n_val])
    train_idx = np.sort(perm[n_val:])
    return (ds.subset(train_idx, f"{ds.provenance}[split:train]"),
            ds.subset(val_idx, f"{ds.provenance}[split:val]"))


class BatchSampler:
    """Seeded mini-batch stream over a dataset.

    shuffle-epoch visits every index exactly once per epoch (final
    partial batch included); with-replacement draws each batch iid.
    """

    MODES = ("shuffle-epoch", "with-replacement")

    def __init__(self, ds: LabeledDataset, batch_size: int,
                 rng: np.random.Generator, mode: str = "shuffle-epoch"):
        if mode not in self.MODES:
            raise ConfigError(f"unknown sampling mode {mode!r}; choose from {self.MODES}")
        if batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
        self.ds = ds
        self.batch_size = batch_size
        self.rng = rng
        self.mode = mode
        self._perm: np.ndarray | None = None
        self._pos = 0
        self._epoch = 0

    @property
    def epoch(self) -> int:
        """Epoch index of the most recently drawn batch (shuffle mode)."""
        return self._epoch

    def next_batch(self):
        n = self.ds.n
        if self.mode == "with-replacement":
            idx = self.rng.integers(0, n, size=self.batch_size)
        else:
            if self._perm is None:
                self._perm = self.rng.permutation(n)
                self._pos = 0
            elif self._pos >= n:
                self._perm = self.rng.permutation(n)
                self._pos = 0
                self._epoch += 1
            idx = self._perm[self._pos:self._pos + self.batch_size]
            self._pos += self.batch_size
        return self.ds.features[idx], self.ds.labels[idx]


def to_csv(ds: LabeledDataset, path) -> None:
    """Write `f0..f{p-1},label` rows; floats use shortest round-trip form."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join([f"f{j}" for j in range(ds.p)] + ["label"]) + "\n")
        for row, label in zip(ds.features, ds.labels):
            fh.write(",".join([repr(float(v)) for v in row] + [str(int(label))]) + "\n")
