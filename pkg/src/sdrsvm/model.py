"""Trained models: prediction, sparsity accounting and persistence.

Models are stored as UTF-8 JSON tagged ``"format": "sdr-svm/1"``. Floats
are written with Python's shortest round-trip repr, so a reloaded model
evaluates bit for bit like the original. The README lists every field.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import Standardizer
from .exceptions import CorruptModelError, ShapeError, VersionMismatchError
from .kernel import KernelSpec, cross_kernel
from .loss import LossConfig

__all__ = [
    "FORMAT",
    "SV_THRESHOLD",
    "SavedModel",
    "from_params",
    "decision_value",
    "predict",
    "support_count",
    "save",
    "load",
    "save_file",
    "load_file",
    "config_digest",
]

FORMAT = "sdr-svm/1"
SV_THRESHOLD = 1e-6


@dataclass(frozen=True)
class SavedModel:
    """A pruned kernel expansion ``f(x) = sum_j y_j alpha_j K(x_j, x) + b``.

    ``sv_x`` holds support vectors in model space (after ``standardizer``
    when one is attached). :func:`decision_value` takes raw features and
    applies the standardizer itself.
    """

    kernel: KernelSpec
    loss: LossConfig
    sv_x: np.ndarray
    sv_y: np.ndarray
    sv_alpha: np.ndarray
    b: float
    rho: float
    standardizer: Standardizer | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_support(self):
        return int(self.sv_alpha.size)

    @property
    def n_features(self):
        if self.standardizer is not None:
            return self.standardizer.n_raw
        return int(self.sv_x.shape[1])


def support_count(alpha_or_model, threshold=SV_THRESHOLD) -> int:
    """Number of coefficients with ``alpha >= threshold`` (inclusive)."""
    if isinstance(alpha_or_model, SavedModel):
        alpha = alpha_or_model.sv_alpha
    else:
        alpha = np.asarray(alpha_or_model, dtype=float)
    return int(np.count_nonzero(alpha >= threshold))


def config_digest(cfg) -> str:
    """SHA-256 of the canonical JSON form of a (nested) dataclass config."""
    obj = asdict(cfg) if hasattr(cfg, "__dataclass_fields__") else cfg
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def from_params(params, kernel: KernelSpec, cfg, standardizer=None, threshold=SV_THRESHOLD,
                extra=None) -> SavedModel:
    """Prune ``alpha < threshold`` and package a trained model."""
    alpha = np.asarray(params.alpha, dtype=float)
    keep = np.flatnonzero(alpha >= threshold)
    meta = {
        "config_digest": config_digest(cfg),
        "train_config": asdict(cfg),
        "n_train": int(alpha.size),
        "sv_threshold": threshold,
    }
    if extra:
        meta.update(extra)
    return SavedModel(
        kernel=kernel,
        loss=cfg.loss,
        sv_x=np.ascontiguousarray(np.asarray(params.X, dtype=float)[keep]),
        sv_y=np.asarray(params.y, dtype=float)[keep].copy(),
        sv_alpha=alpha[keep].copy(),
        b=float(params.b),
        rho=float(params.rho),
        standardizer=standardizer,
        metadata=meta,
    )


def _features(m: SavedModel, X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != m.n_features:
        raise ShapeError(f"model expects {m.n_features} features, got shape {X.shape}")
    if m.standardizer is not None:
        X = m.standardizer.transform(X)
    return np.ascontiguousarray(X)


def decision_value(m: SavedModel, X, core=None):
    """``f(x)`` for one raw feature vector (scalar) or a matrix of them."""
    scalar = np.ndim(X) == 1
    Z = _features(m, X)
    if m.n_support == 0:
        f = np.full(Z.shape[0], m.b)
    else:
        K = cross_kernel(m.kernel, Z, m.sv_x, core=core)
        f = K @ (m.sv_alpha * m.sv_y) + m.b
    return float(f[0]) if scalar else f


def predict(m: SavedModel, X, core=None):
    """Three-way output: +1 if f > rho, -1 if f < -rho, 0 (reject) otherwise."""
    f = decision_value(m, X, core=core)
    out = np.where(f > m.rho, 1, np.where(f < -m.rho, -1, 0))
    return int(out) if np.ndim(f) == 0 else out


def _floats(a):
    return [float(v) for v in np.asarray(a).ravel()]


def save(m: SavedModel) -> bytes:
    """Serialize to the ``sdr-svm/1`` JSON payload."""
    obj = {
        "format": FORMAT,
        "kernel": {"family": m.kernel.family, "gamma": float(m.kernel.gamma)},
        "loss": {"d": float(m.loss.d), "mu": float(m.loss.mu)},
        "b": float(m.b),
        "rho": float(m.rho),
        "support_vectors": {
            "dim": int(m.sv_x.shape[1]),
            "x": [_floats(row) for row in m.sv_x],
            "y": _floats(m.sv_y),
            "alpha": _floats(m.sv_alpha),
        },
        "standardizer": m.standardizer.to_dict() if m.standardizer is not None else None,
        "metadata": m.metadata,
    }
    return (json.dumps(obj, indent=1, allow_nan=False) + "\n").encode("utf-8")


def load(payload) -> SavedModel:
    """Inverse of :func:`save`.

    Raises
    ------
    VersionMismatchError
        The payload's ``format`` is not ``sdr-svm/1``.
    CorruptModelError
        Anything else wrong with the payload.
    """
    if isinstance(payload, (bytes, bytearray)):
        try:
            payload = payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptModelError("model payload is not UTF-8") from exc
    try:
        obj = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise CorruptModelError(f"model payload is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "format" not in obj:
        raise CorruptModelError("model payload has no format tag")
    if obj["format"] != FORMAT:
        raise VersionMismatchError(f"unsupported model format {obj['format']!r}, expected {FORMAT!r}")
    try:
        sv = obj["support_vectors"]
        dim = int(sv["dim"])
        x = np.asarray(sv["x"], dtype=float).reshape(-1, dim)
        y = np.asarray(sv["y"], dtype=float)
        alpha = np.asarray(sv["alpha"], dtype=float)
        if not (x.shape[0] == y.size == alpha.size):
            raise CorruptModelError("support vector arrays have different lengths")
        std = obj["standardizer"]
        return SavedModel(
            kernel=KernelSpec(obj["kernel"]["family"], float(obj["kernel"]["gamma"])),
            loss=LossConfig(float(obj["loss"]["d"]), float(obj["loss"]["mu"])),
            sv_x=np.ascontiguousarray(x),
            sv_y=y,
            sv_alpha=alpha,
            b=float(obj["b"]),
            rho=float(obj["rho"]),
            standardizer=Standardizer.from_dict(std) if std is not None else None,
            metadata=dict(obj.get("metadata") or {}),
        )
    except CorruptModelError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModelError(f"malformed model payload: {exc!r}") from exc


def save_file(m: SavedModel, path):
    with open(path, "wb") as fh:
        fh.write(save(m))


def load_file(path) -> SavedModel:
    with open(path, "rb") as fh:
        return load(fh.read())
