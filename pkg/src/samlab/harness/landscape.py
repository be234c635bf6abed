"""Loss surfaces over a random 2-plane through a parameter point.

Two directions are drawn from the landscape substream of the seed and
orthonormalized (Gram-Schmidt, applied twice so the residual inner
product sits at rounding level, not at the 1e-10 tolerance).  Offsets
are (i - k) * (r / k) for resolution 2k+1, which makes the center
offset exactly 0.0 and the center cell exactly loss(theta).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..datasets import LabeledDataset
from ..errors import ConfigError, DimensionError
from ..models import DifferentiableModel
from ..rng import stream
from ..vectors import as_vector


@dataclass(frozen=True)
class LandscapeGrid:
    resolution: int
    radius: float
    seed: int
    u: np.ndarray              # unit direction
    v: np.ndarray              # unit direction, orthogonal to u
    offsets: np.ndarray        # shared axis of both directions
    values: np.ndarray         # values[i, j] = loss(theta + offsets[i]*u + offsets[j]*v)
    center_loss: float

    def __post_init__(self):
        n = self.resolution
        if self.values.shape != (n, n) or self.offsets.shape != (n,):
            raise DimensionError(f"grid shapes {self.values.shape}/{self.offsets.shape} "
                                 f"do not match resolution {n}")


def _orthonormal_pair(rng: np.random.Generator, d: int):
    u = rng.standard_normal(d)
    v = rng.standard_normal(d)
    u = u / np.linalg.norm(u)
    v = v - np.dot(u, v) * u
    v = v - np.dot(u, v) * u
    v = v / np.linalg.norm(v)
    return u, v


def landscape_grid(model: DifferentiableModel, theta, dataset, r: float,
                   resolution: int, seed: int) -> LandscapeGrid:
    """Evaluate the loss on a (2k+1)^2 grid spanning [-r, r] along two
    seeded orthonormal directions.  `dataset` is a LabeledDataset or a
    (features, labels) batch."""
    if resolution < 3 or resolution % 2 == 0:
        raise ConfigError(f"resolution must be odd and >= 3, got {resolution}")
    if r <= 0:
        raise ConfigError(f"radius must be > 0, got {r}")
    theta = as_vector(theta, "theta")
    d = theta.shape[0]
    if d < 2:
        raise DimensionError(f"a 2-plane needs at least 2 parameters, got {d}")
    batch = dataset.full_batch() if isinstance(dataset, LabeledDataset) else dataset

    u, v = _orthonormal_pair(stream(seed, "landscape"), d)
    k = (resolution - 1) // 2
    offsets = (np.arange(resolution) - k) * (r / k)
    values = np.empty((resolution, resolution), dtype=float)
    for i, a in enumerate(offsets):
        base = theta + a * u
        for j, b in enumerate(offsets):
            values[i, j] = model.loss(base + b * v, batch)
    return LandscapeGrid(resolution=resolution, radius=float(r), seed=int(seed),
                         u=u, v=v, offsets=offsets, values=values,
                         center_loss=float(values[k, k]))


def save_landscape(grid: LandscapeGrid, path) -> Path:
    """Write the value matrix as bare CSV rows plus a JSON sidecar with
    the grid geometry and sha256 checksums of the direction vectors."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in grid.values:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    sidecar = {
        "radius": grid.radius,
        "resolution": grid.resolution,
        "seed": grid.seed,
        "center_loss": grid.center_loss,
        "u_sha256": hashlib.sha256(grid.u.astype("<f8").tobytes()).hexdigest(),
        "v_sha256": hashlib.sha256(grid.v.astype("<f8").tobytes()).hexdigest(),
    }
    side_path = path.with_suffix(path.suffix + ".json")
    side_path.write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n",
                         encoding="utf-8")
    return path
