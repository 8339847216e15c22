"""Reject-option losses and the pointwise conditional risk.

All functions accept scalars or numpy arrays and broadcast like ufuncs.
``t`` is always the signed margin ``y * f(x)``; ``z`` is a raw score
``f(x)`` (the margin of a positive example).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, InvalidConfigError

__all__ = [
    "LossConfig",
    "rho_lower_bound",
    "l_d",
    "l_dr",
    "ld_raw",
    "ldr_raw",
    "bayes_discriminant",
    "conditional_risk",
    "conditional_risk_piecewise",
    "optimal_conditional_risk",
]


@dataclass(frozen=True)
class LossConfig:
    """Rejection cost ``d`` in (0, 0.5) and ramp slope ``mu`` in (0, 1]."""

    d: float = 0.2
    mu: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.d < 0.5):
            raise InvalidConfigError(f"rejection cost d must lie in (0, 0.5), got {self.d!r}")
        if not (0.0 < self.mu <= 1.0):
            raise InvalidConfigError(f"ramp slope mu must lie in (0, 1], got {self.mu!r}")

    @property
    def rho_min(self) -> float:
        return rho_lower_bound(self.mu)


def rho_lower_bound(mu: float) -> float:
    """Smallest admissible band half-width, ``mu * (1 + mu) / 2``."""
    return 0.5 * mu * (1.0 + mu)


def _plus(a):
    return np.maximum(a, 0.0)


def _check_rho(rho, cfg: LossConfig):
    if np.any(np.asarray(rho) < cfg.rho_min):
        raise InvalidConfigError(
            f"rho must be >= mu(1+mu)/2 = {cfg.rho_min!r} for mu={cfg.mu!r}"
        )


def _check_eta(eta):
    eta = np.asarray(eta, dtype=float)
    if np.any(~np.isfinite(eta)) or np.any(eta < 0.0) or np.any(eta > 1.0):
        raise DomainError("eta must lie in [0, 1]")
    return eta


def _scalarize(out):
    out = np.asarray(out)
    return out.item() if out.ndim == 0 else out


def l_d(t, rho, cfg: LossConfig):
    """0-d-1 loss: 1 if ``t < -rho``, ``d`` if ``|t| <= rho``, else 0.

    The band boundary ``|t| == rho`` counts as a rejection.
    """
    return _scalarize(ld_raw(t, rho, cfg.d))


def l_dr(t, rho, cfg: LossConfig):
    """Double ramp loss.

    Two ramps of slope ``1/mu`` (scaled by ``d`` and ``1 - d``) joined by a
    plateau of height ``d (1 + mu)`` over the reject band. Requires
    ``rho >= mu (1 + mu) / 2``; values lie in ``[0, 1 + mu]``.
    """
    _check_rho(rho, cfg)
    return _scalarize(ldr_raw(t, rho, cfg.d, cfg.mu))


def ld_raw(t, rho, d):
    """Unchecked :func:`l_d`; every argument may be an array."""
    t = np.asarray(t, dtype=float)
    return np.where(t < -rho, 1.0, np.where(np.abs(t) <= rho, d, 0.0))


def ldr_raw(t, rho, d, mu):
    """Unchecked :func:`l_dr`; every argument may be an array."""
    t = np.asarray(t, dtype=float)
    # band offsets first, then divide by mu: keeps L_dr(rho) == d exactly
    s_in = rho - t
    s_out = -rho - t
    inner = (_plus(mu + s_in) - _plus(s_in - mu * mu)) / mu
    outer = (_plus(mu + s_out) - _plus(s_out - mu * mu)) / mu
    return d * inner + (1.0 - d) * outer


def bayes_discriminant(eta, cfg: LossConfig):
    """Generalized Bayes rule: +1 if eta > 1-d, -1 if eta < d, else 0."""
    eta = _check_eta(eta)
    d = cfg.d
    out = np.where(eta > 1.0 - d, 1, np.where(eta < d, -1, 0))
    return _scalarize(out)


def conditional_risk(eta, z, rho, cfg: LossConfig):
    """Expected double ramp loss of score ``z`` when ``P(y=1|x) = eta``."""
    eta = _check_eta(eta)
    return _scalarize(eta * l_dr(z, rho, cfg) + (1.0 - eta) * l_dr(-np.asarray(z, dtype=float), rho, cfg))


def conditional_risk_piecewise(eta, z, rho, cfg: LossConfig):
    """Nine-piece closed form of :func:`conditional_risk`.

    Kept separate from the two-term definition so each can check the other.
    The pieces are only ordered correctly when ``rho >= mu``; for
    ``mu(1+mu)/2 <= rho < mu`` the outer ramps overlap and this table does
    not describe the risk.
    """
    eta = _check_eta(eta)
    d, mu = cfg.d, cfg.mu
    if np.any(np.asarray(rho) < mu):
        raise DomainError("piecewise conditional risk requires rho >= mu")
    z = np.asarray(z, dtype=float)
    mu2 = mu * mu
    a = (1.0 - eta) * (mu + z + rho) * d / mu
    b = eta * (mu - z - rho) * (1.0 - d) / mu
    c = (1.0 - eta) * (z - rho + mu) * (1.0 - d) / mu
    e = eta * (rho + mu - z) * d / mu
    conds = [
        z <= -rho - mu,
        z <= -rho - mu2,
        z <= -rho + mu2,
        z <= -rho + mu,
        z <= rho - mu,
        z <= rho - mu2,
        z <= rho + mu2,
        z <= rho + mu,
    ]
    choices = [
        eta * (1.0 + mu) + 0.0 * z,
        eta * (1.0 + mu) + a,
        eta * d * (1.0 + mu) + b + a,
        eta * d * (1.0 + mu) + b + (1.0 - eta) * (1.0 + mu) * d,
        d * (1.0 + mu) + 0.0 * z + 0.0 * eta,
        eta * d * (1.0 + mu) + (1.0 - eta) * (1.0 + mu) * d + c,
        e + (1.0 - eta) * (1.0 + mu) * d + c,
        e + (1.0 - eta) * (1.0 + mu),
    ]
    default = (1.0 - eta) * (1.0 + mu) + 0.0 * z
    return _scalarize(np.select(conds, choices, default=default))


def optimal_conditional_risk(eta, cfg: LossConfig):
    """Minimum of the conditional risk over scores, and where it is attained.

    Returns
    -------
    value : float or ndarray
        ``eta(1+mu)`` if ``eta < d``, ``d(1+mu)`` if ``d <= eta <= 1-d``,
        ``(1-eta)(1+mu)`` otherwise.
    region : int or ndarray
        -1 for ``z <= -rho-mu``, 0 for the plateau ``|z| <= rho-mu``, +1 for
        ``z >= rho+mu``. Ties at ``eta in {d, 1-d}`` resolve to 0.
    """
    eta = _check_eta(eta)
    d, mu = cfg.d, cfg.mu
    value = np.where(
        eta < d, eta * (1.0 + mu), np.where(eta > 1.0 - d, (1.0 - eta) * (1.0 + mu), d * (1.0 + mu))
    )
    region = np.where(eta < d, -1, np.where(eta > 1.0 - d, 1, 0))
    return _scalarize(value), _scalarize(region)
