"""Sparse double-ramp SVM training by DC programming.

The l1-regularized double-ramp risk ``J = Q1 - Q2`` is minimized by
repeatedly linearizing the concave part ``-Q2`` at the current iterate and
solving the resulting convex majorizer exactly as a linear program.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, InvalidConfigError, LpIterationLimit, ShapeError, TrainingError
from .kernel import KernelSpec, gram_matrix
from .loss import LossConfig, ld_raw, ldr_raw
from .lp import RawLp, canonicalize, solve_lp

logger = logging.getLogger(__name__)

__all__ = [
    "TrainConfig",
    "ModelParams",
    "TrainReport",
    "DcSubproblem",
    "initial_params",
    "margins",
    "objective_j",
    "q1",
    "q2",
    "grad_q2",
    "majorizer",
    "compute_indicators",
    "build_subproblem",
    "train",
]


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters.

    ``lam`` is the l1 weight (``lambda`` is a Python keyword). Training stops
    once one DC step lowers the objective by at most ``epsilon`` or after
    ``max_dc_iters`` LP solves.

    ``init`` picks the DC start point. ``"hinge"`` starts from the minimizer
    of the convex part ``Q1`` (one extra LP); ``"zero"`` starts from
    ``alpha = 0, b = 0, rho = rho_min``. From the zero start every margin
    sits on a kink or plateau of the loss and DC stops at the model that
    rejects everything, so ``"hinge"`` is the default.
    """

    lam: float = 0.1
    loss: LossConfig = field(default_factory=LossConfig)
    epsilon: float = 1e-5
    max_dc_iters: int = 50
    lp_iter_cap: int | None = None
    init: str = "hinge"

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidConfigError(f"lambda must be positive, got {self.lam!r}")
        if not self.epsilon > 0:
            raise InvalidConfigError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.max_dc_iters < 1:
            raise InvalidConfigError("max_dc_iters must be at least 1")
        if self.lp_iter_cap is not None and self.lp_iter_cap < 1:
            raise InvalidConfigError("lp_iter_cap must be positive")
        if self.init not in ("hinge", "zero"):
            raise InvalidConfigError(f"init must be 'hinge' or 'zero', got {self.init!r}")


@dataclass
class ModelParams:
    """Dual coefficients ``alpha >= 0``, offset ``b`` and band half-width ``rho``.

    ``X`` and ``y`` are the training inputs the expansion
    ``f(x) = sum_j y_j alpha_j K(x_j, x) + b`` refers to.
    """

    alpha: np.ndarray
    b: float
    rho: float
    X: np.ndarray | None = None
    y: np.ndarray | None = None


@dataclass
class TrainReport:
    objective_trace: list
    iterations: int
    termination: str
    wall_time: float
    lp_iterations: list = field(default_factory=list)
    train_risk_d: float = float("nan")
    init_lp_iterations: int = 0

    def to_dict(self):
        return {
            "init_lp_iterations": self.init_lp_iterations,
            "objective_trace": [float(v) for v in self.objective_trace],
            "iterations": self.iterations,
            "termination": self.termination,
            "wall_time": self.wall_time,
            "lp_iterations": list(self.lp_iterations),
            "train_risk_d": float(self.train_risk_d),
        }


def initial_params(n, cfg: TrainConfig, X=None, y=None) -> ModelParams:
    """Start point ``alpha = 0, b = 0, rho = mu(1+mu)/2``."""
    return ModelParams(np.zeros(n), 0.0, cfg.loss.rho_min, X, y)


def _check(theta, gram, y):
    gram = np.asarray(gram)
    y = np.asarray(y, dtype=float)
    n = y.size
    if gram.shape != (n, n) or np.asarray(theta.alpha).shape != (n,):
        raise ShapeError(f"gram {gram.shape}, alpha {np.shape(theta.alpha)}, labels {n}")
    return gram, y


def margins(theta: ModelParams, gram, y):
    """``y_i f(x_i)`` computed from Gram rows."""
    gram, y = _check(theta, gram, y)
    return y * (gram @ (theta.alpha * y) + theta.b)


def objective_j(theta: ModelParams, gram, y, cfg: TrainConfig) -> float:
    """``lam * sum(alpha) + mean double-ramp loss`` over the training set."""
    t = margins(theta, gram, y)
    loss = ldr_raw(t, theta.rho, cfg.loss.d, cfg.loss.mu)
    return float(cfg.lam * np.sum(theta.alpha) + np.mean(loss))


def q1(theta, gram, y, cfg: TrainConfig) -> float:
    """Convex part of the objective."""
    d, mu = cfg.loss.d, cfg.loss.mu
    t = margins(theta, gram, y)
    n = t.size
    hinge = d * np.maximum(mu - t + theta.rho, 0.0) + (1 - d) * np.maximum(mu - t - theta.rho, 0.0)
    return float(cfg.lam * np.sum(theta.alpha) + hinge.sum() / (n * mu))


def q2(theta, gram, y, cfg: TrainConfig) -> float:
    """Convex part subtracted from :func:`q1`."""
    d, mu = cfg.loss.d, cfg.loss.mu
    t = margins(theta, gram, y)
    n = t.size
    hinge = d * np.maximum(-mu * mu - t + theta.rho, 0.0) + (1 - d) * np.maximum(
        -mu * mu - t - theta.rho, 0.0
    )
    return float(hinge.sum() / (n * mu))


def grad_q2(theta, gram, y, cfg: TrainConfig):
    """Subgradient of :func:`q2` as ``(g_alpha, g_b, g_rho)``."""
    gram, y = _check(theta, gram, y)
    d, mu = cfg.loss.d, cfg.loss.mu
    n = y.size
    beta1, beta2 = compute_indicators(theta, gram, y, cfg)
    w = d * beta1 + (1 - d) * beta2
    g_alpha = -(y * (gram @ (w * y))) / (n * mu)
    g_b = -float(np.sum(w * y)) / (n * mu)
    g_rho = float(np.sum(d * beta1 - (1 - d) * beta2)) / (n * mu)
    return g_alpha, g_b, g_rho


def majorizer(theta, theta_l, gram, y, cfg: TrainConfig) -> float:
    """Convex upper bound on ``J`` built at ``theta_l``; tight there."""
    g_alpha, g_b, g_rho = grad_q2(theta_l, gram, y, cfg)
    step = (
        float(np.dot(theta.alpha - theta_l.alpha, g_alpha))
        + (theta.b - theta_l.b) * g_b
        + (theta.rho - theta_l.rho) * g_rho
    )
    return q1(theta, gram, y, cfg) - q2(theta_l, gram, y, cfg) - step


def compute_indicators(theta: ModelParams, gram, y, cfg: TrainConfig):
    """Active-set indicators of the two concave hinge terms.

    ``beta1[i] = 1`` iff ``y_i f(x_i) <= rho - mu^2``; ``beta2[i] = 1`` iff
    ``y_i f(x_i) <= -rho - mu^2``. Comparisons are exact.
    """
    mu2 = cfg.loss.mu * cfg.loss.mu
    t = margins(theta, gram, y)
    beta1 = (t <= theta.rho - mu2).astype(float)
    beta2 = (t <= -theta.rho - mu2).astype(float)
    return beta1, beta2


@dataclass
class DcSubproblem:
    """One linearized subproblem, in raw and canonical form.

    Raw variable order is ``[alpha (n), b, rho, xi1 (n), xi2 (n)]``.
    """

    raw: RawLp
    problem: object
    varmap: object
    n: int

    def unpack(self, x_canonical):
        v = self.varmap.reconstruct(x_canonical, clip=True)
        n = self.n
        return v[:n], float(v[n]), float(v[n + 1]), v[n + 2:2 * n + 2], v[2 * n + 2:]


def build_subproblem(beta1, beta2, gram, y, cfg: TrainConfig) -> DcSubproblem:
    """Linear program minimizing the majorizer at the given indicators.

    Objective: ``lam sum(alpha) + (d xi1 + (1-d) xi2).sum()/(N mu)`` plus the
    beta-weighted linear terms. Constraints, for each ``i``::

        y_i f(x_i) - rho + xi1_i >= mu
        y_i f(x_i) + rho + xi2_i >= mu

    with ``alpha, xi1, xi2 >= 0`` and ``rho >= mu(1+mu)/2``.
    """
    gram = np.asarray(gram, dtype=float)
    y = np.asarray(y, dtype=float)
    beta1 = np.asarray(beta1, dtype=float)
    beta2 = np.asarray(beta2, dtype=float)
    n = y.size
    if gram.shape != (n, n) or beta1.shape != (n,) or beta2.shape != (n,):
        raise ShapeError("indicator, label and Gram dimensions disagree")
    d, mu, lam = cfg.loss.d, cfg.loss.mu, cfg.lam
    scale = 1.0 / (n * mu)
    w = d * beta1 + (1 - d) * beta2

    nv = 3 * n + 2
    c = np.zeros(nv)
    c[:n] = lam + scale * y * (gram @ (w * y))
    c[n] = scale * np.sum(w * y)
    c[n + 1] = scale * (-d * beta1.sum() + (1 - d) * beta2.sum())
    c[n + 2:2 * n + 2] = scale * d
    c[2 * n + 2:] = scale * (1 - d)

    M = (y[:, None] * y[None, :]) * gram  # row i: y_i y_j K(x_j, x_i)
    A = np.zeros((2 * n, nv))
    A[:n, :n] = M
    A[n:, :n] = M
    A[:n, n] = y
    A[n:, n] = y
    A[:n, n + 1] = -1.0
    A[n:, n + 1] = 1.0
    idx = np.arange(n)
    A[idx, n + 2 + idx] = 1.0
    A[n + idx, 2 * n + 2 + idx] = 1.0
    rhs = np.full(2 * n, mu)

    lower = np.zeros(nv)
    lower[n] = -np.inf
    lower[n + 1] = cfg.loss.rho_min
    raw = RawLp(c=c, A=A, rhs=rhs, senses=(">=",) * (2 * n), lower=lower)

    # alpha = 0, b = 0, rho at its bound, xi at the constraint slack is feasible
    x0 = np.zeros(nv)
    x0[n + 1] = cfg.loss.rho_min
    x0[n + 2:2 * n + 2] = max(0.0, mu + cfg.loss.rho_min)
    x0[2 * n + 2:] = max(0.0, mu - cfg.loss.rho_min)
    assert np.all(A @ x0 >= rhs - 1e-12), "reference point must be feasible"

    problem, varmap = canonicalize(raw)
    return DcSubproblem(raw=raw, problem=problem, varmap=varmap, n=n)


def _validate_labels(y):
    y = np.asarray(y, dtype=float).ravel()
    if y.size < 2:
        raise DomainError("at least two training points are required")
    if not np.all((y == 1.0) | (y == -1.0)):
        raise DomainError("labels must be +1 or -1")
    if np.all(y == y[0]):
        raise DomainError("training data must contain both classes")
    return y


def _solve(sub, it, cfg, core, state):
    try:
        sol = solve_lp(sub.problem, cfg.lp_iter_cap, core=core)
    except LpIterationLimit as exc:
        raise TrainingError(
            f"LP subproblem at DC iteration {it} exceeded its pivot budget",
            it,
            state("lp_iter_cap"),
        ) from exc
    if sol.status != "optimal":
        raise TrainingError(
            f"LP subproblem at DC iteration {it} is {sol.status}; increase lambda",
            it,
            state("lp_unbounded"),
        )
    return sol


def train(X, y, kernel: KernelSpec, cfg: TrainConfig, gram=None, core=None):
    """Fit a sparse reject-option classifier.

    Parameters
    ----------
    X : array_like, shape (N, D)
    y : array_like of {+1, -1}, shape (N,)
    kernel : KernelSpec
    cfg : TrainConfig
    gram : ndarray, optional
        Precomputed Gram matrix of ``X`` under ``kernel``.

    Returns
    -------
    params : ModelParams
    report : TrainReport
        ``objective_trace[0]`` is ``J`` at the start point and each later
        entry follows one DC iteration (one LP solve).

    Raises
    ------
    TrainingError
        If an LP subproblem is unbounded or exhausts its pivot budget.
    """
    y = _validate_labels(y)
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ShapeError(f"X has shape {X.shape} but there are {y.size} labels")
    start = time.perf_counter()
    if gram is None:
        gram = gram_matrix(kernel, X, core=core)
    n = y.size
    trace = []
    lp_iters = []
    init_pivots = 0

    def state(reason):
        return TrainReport(list(trace), max(len(trace) - 1, 0), reason,
                           time.perf_counter() - start, list(lp_iters),
                           init_lp_iterations=init_pivots)

    if cfg.init == "hinge":
        zeros = np.zeros(n)
        sub = build_subproblem(zeros, zeros, gram, y, cfg)
        sol = _solve(sub, 0, cfg, core, state)
        init_pivots = sol.iterations
        alpha, b, rho, _, _ = sub.unpack(sol.x)
        theta = ModelParams(alpha, b, rho, X, y)
    else:
        theta = initial_params(n, cfg, X, y)
    j_cur = objective_j(theta, gram, y, cfg)
    trace.append(j_cur)
    termination = "iter_cap"
    for it in range(1, cfg.max_dc_iters + 1):
        beta1, beta2 = compute_indicators(theta, gram, y, cfg)
        sub = build_subproblem(beta1, beta2, gram, y, cfg)
        sol = _solve(sub, it, cfg, core, state)
        lp_iters.append(sol.iterations)
        alpha, b, rho, _, _ = sub.unpack(sol.x)
        theta = ModelParams(alpha, b, rho, X, y)
        j_new = objective_j(theta, gram, y, cfg)
        trace.append(j_new)
        logger.debug("DC iteration %d: J=%.12g (%d pivots)", it, j_new, sol.iterations)
        if j_cur - j_new <= cfg.epsilon:
            termination = "converged"
            break
        j_cur = j_new
    t = margins(theta, gram, y)
    report = TrainReport(
        objective_trace=trace,
        iterations=len(trace) - 1,
        termination=termination,
        wall_time=time.perf_counter() - start,
        lp_iterations=lp_iters,
        train_risk_d=float(np.mean(ld_raw(t, theta.rho, cfg.loss.d))),
        init_lp_iterations=init_pivots,
    )
    return theta, report
