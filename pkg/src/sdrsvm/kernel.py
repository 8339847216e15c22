"""Kernel functions and Gram matrices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .exceptions import InvalidConfigError, ShapeError

__all__ = ["KernelSpec", "eval_kernel", "gram_matrix", "cross_kernel"]

_FAMILIES = {"gaussian": _backend.GAUSSIAN, "linear": _backend.LINEAR}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and width.

    ``gaussian`` is ``exp(-gamma * ||x - y||^2)``; ``linear`` is the dot
    product and ignores ``gamma``.
    """

    family: str = "gaussian"
    gamma: float = 1.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise InvalidConfigError(f"unknown kernel family {self.family!r}")
        if self.family == "gaussian" and not (np.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidConfigError(f"gaussian kernel needs gamma > 0, got {self.gamma!r}")

    @property
    def code(self) -> int:
        return _FAMILIES[self.family]


def _as_matrix(data, name="data"):
    X = np.ascontiguousarray(data, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ShapeError(f"{name} must be a nonempty 2-D array, got shape {X.shape}")
    return X


def eval_kernel(spec: KernelSpec, x, y, core=None) -> float:
    """Kernel value for a single pair of feature vectors."""
    x = np.ascontiguousarray(x, dtype=float).ravel()
    y = np.ascontiguousarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ShapeError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    core = core or _backend.core
    return float(core.cross_kernel(x[None, :], y[None, :], spec.code, float(spec.gamma))[0, 0])


def gram_matrix(spec: KernelSpec, data, core=None) -> np.ndarray:
    """Dense N x N Gram matrix, exactly symmetric.

    Entry ``[i, j]`` equals ``eval_kernel(spec, data[i], data[j])`` bit for
    bit under the same backend.
    """
    X = _as_matrix(data)
    core = core or _backend.core
    return core.gram(X, spec.code, float(spec.gamma))


def cross_kernel(spec: KernelSpec, X, Z, core=None) -> np.ndarray:
    """Rectangular kernel matrix between rows of ``X`` and rows of ``Z``."""
    X = _as_matrix(X, "X")
    Z = _as_matrix(Z, "Z")
    if X.shape[1] != Z.shape[1]:
        raise ShapeError(f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
    core = core or _backend.core
    return core.cross_kernel(X, Z, spec.code, float(spec.gamma))
