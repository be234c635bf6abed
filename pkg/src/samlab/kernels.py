"""Backend selection for the hot vector kernels.

Two interchangeable implementations exist: a compiled Cython extension
(`samlab._fastkernels`) and a pure-Python fallback (`samlab._purekernels`).
They are bitwise-equivalent by construction; the compiled one is just
faster.  Selection happens once at import time:

  * default: compiled if the extension built, else pure;
  * the environment variable SAMLAB_KERNELS=compiled|pure forces one.

`load_backend` gives direct access to either module for benchmarks and
equivalence tests regardless of what was selected.
"""

from __future__ import annotations

import importlib
import os

from .errors import ConfigError

_NAMES = {"compiled": "samlab._fastkernels", "pure": "samlab._purekernels"}


def load_backend(name: str):
    """Import and return one kernel backend module by name."""
    if name not in _NAMES:
        raise ConfigError(f"unknown kernel backend {name!r}; choose from {sorted(_NAMES)}")
    return importlib.import_module(_NAMES[name])


def _select():
    forced = os.environ.get("SAMLAB_KERNELS", "").strip().lower()
    if forced in ("", "auto"):
        try:
            return load_backend("compiled")
        except ImportError:
            return load_backend("pure")
    return load_backend(forced)


_impl = _select()

BACKEND: str = _impl.BACKEND
dot = _impl.dot
l2_norm = _impl.l2_norm
axpy = _impl.axpy
scale = _impl.scale
square = _impl.square
absval = _impl.absval
multiply = _impl.multiply
subtract = _impl.subtract
momentum_update = _impl.momentum_update
