"""Risk metrics, stratified cross-validation, label noise and excess risk.

Every random draw is made from a generator seeded by a tuple that starts
with the caller's seed, so results are a pure function of the inputs.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, InvalidConfigError, TrainingError
from .kernel import KernelSpec, gram_matrix
from .loss import LossConfig, bayes_discriminant, ld_raw, ldr_raw
from .model import SV_THRESHOLD, SavedModel, predict, support_count
from .trainer import ModelParams, TrainConfig, train

logger = logging.getLogger(__name__)

__all__ = [
    "EvalMetrics",
    "metrics_from_predictions",
    "evaluate",
    "CvPlan",
    "CvRecord",
    "CvResult",
    "stratified_folds",
    "cross_validate",
    "write_metrics_csv",
    "write_summary_csv",
    "METRICS_HEADER",
    "inject_label_noise",
    "GaussianMixture1D",
    "ExcessRisk",
    "bayes_pair",
    "excess_risk_check",
]

METRICS_HEADER = (
    "d", "lambda", "gamma", "fold", "repeat",
    "risk", "rejection_rate", "accuracy_unrejected", "support_count",
)
DEFAULT_LAMBDAS = tuple(float(v) for v in np.logspace(-3, 1, 9))
DEFAULT_GAMMAS = tuple(float(v) for v in np.logspace(-4, 2, 7, base=2.0))


@dataclass(frozen=True)
class EvalMetrics:
    """Test-set metrics of a reject-option classifier.

    ``accuracy_unrejected`` is 1.0 when every point is rejected and
    ``all_rejected`` is then set. With that convention
    ``risk = (1 - rr) * (1 - acc) + d * rr`` holds exactly.
    """

    empirical_risk_d: float
    rejection_rate: float
    accuracy_unrejected: float
    support_count: int
    n_test: int
    all_rejected: bool = False


def metrics_from_predictions(pred, y, d, n_support=0) -> EvalMetrics:
    pred = np.asarray(pred)
    y = np.asarray(y, dtype=float)
    n = y.size
    if n == 0:
        raise DomainError("cannot evaluate on an empty test set")
    if pred.shape != y.shape:
        raise DomainError(f"{pred.size} predictions for {n} labels")
    rejected = int(np.count_nonzero(pred == 0))
    wrong = int(np.count_nonzero((pred != 0) & (pred != y)))
    accepted = n - rejected
    rr = rejected / n
    acc = 1.0 if accepted == 0 else (accepted - wrong) / accepted
    # per-point losses summed in closed form: each error costs 1, each reject d
    risk = (wrong + d * rejected) / n
    return EvalMetrics(risk, rr, acc, int(n_support), n, accepted == 0)


def evaluate(m: SavedModel, X, y, core=None) -> EvalMetrics:
    """Empirical ``L_d`` risk, rejection rate and accuracy on accepted points."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise DomainError("cannot evaluate on an empty test set")
    pred = predict(m, np.asarray(X, dtype=float).reshape(y.size, -1), core=core)
    return metrics_from_predictions(pred, y, m.loss.d, support_count(m))


def inject_label_noise(y, rate, seed):
    """Flip each label independently with probability ``rate``.

    Returns a new array; ``y`` itself is untouched.
    """
    if not (0.0 <= rate < 0.5):
        raise DomainError(f"noise rate must lie in [0, 0.5), got {rate!r}")
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    flip = rng.random(y.size) < rate
    return np.where(flip, -y, y)


@dataclass(frozen=True)
class CvPlan:
    """Grid and fold layout for repeated stratified k-fold CV."""

    k: int = 10
    repeats: int = 10
    seed: int = 0
    d_grid: tuple = (0.2,)
    lambda_grid: tuple = DEFAULT_LAMBDAS
    gamma_grid: tuple = DEFAULT_GAMMAS
    mu: float = 1.0
    family: str = "gaussian"
    noise_rate: float = 0.0
    epsilon: float = 1e-5
    max_dc_iters: int = 50

    def __post_init__(self):
        if self.k < 2:
            raise InvalidConfigError("need at least 2 folds")
        if self.repeats < 1:
            raise InvalidConfigError("need at least one repeat")
        if not (self.d_grid and self.lambda_grid and self.gamma_grid):
            raise InvalidConfigError("d, lambda and gamma grids must be nonempty")
        for d in self.d_grid:
            LossConfig(d, self.mu)
        if any(not lam > 0 for lam in self.lambda_grid):
            raise InvalidConfigError("lambda values must be positive")
        for g in self.gamma_grid:
            KernelSpec(self.family, g)
        if not (0.0 <= self.noise_rate < 0.5):
            raise InvalidConfigError(f"noise rate must lie in [0, 0.5), got {self.noise_rate!r}")


@dataclass(frozen=True)
class CvRecord:
    d: float
    lam: float
    gamma: float
    fold: int
    repeat: int
    risk: float
    rejection_rate: float
    accuracy_unrejected: float
    support_count: int

    def row(self):
        return (self.d, self.lam, self.gamma, self.fold, self.repeat, self.risk,
                self.rejection_rate, self.accuracy_unrejected, self.support_count)


@dataclass
class CvResult:
    records: list
    summary: list
    best: dict
    skipped: list = field(default_factory=list)


def stratified_folds(y, k, seed, repeat=0):
    """Test-index arrays of ``k`` stratified folds.

    Each class is shuffled with a generator seeded by ``(seed, repeat)`` and
    dealt round-robin, continuing the deal across classes so fold sizes
    differ by at most one.
    """
    y = np.asarray(y)
    if k > y.size:
        raise DomainError(f"cannot split {y.size} points into {k} folds")
    rng = np.random.default_rng([seed, repeat])
    assign = np.empty(y.size, dtype=np.int64)
    start = 0
    for c in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == c))
        assign[idx] = (start + np.arange(idx.size)) % k
        start += idx.size
    return [np.flatnonzero(assign == f) for f in range(k)]


def _fit_fold(K_tr, K_te, y_tr, y_te, d, lam, plan: CvPlan, core=None):
    cfg = TrainConfig(lam=lam, loss=LossConfig(d, plan.mu), epsilon=plan.epsilon,
                      max_dc_iters=plan.max_dc_iters)
    params, _ = train(np.zeros((y_tr.size, 0)), y_tr, None, cfg, gram=K_tr, core=core)
    keep = params.alpha >= SV_THRESHOLD
    f = K_te[:, keep] @ (params.alpha[keep] * y_tr[keep]) + params.b
    pred = np.where(f > params.rho, 1, np.where(f < -params.rho, -1, 0))
    return metrics_from_predictions(pred, y_te, d, int(np.count_nonzero(keep)))


def _cv_job(args):
    K_tr, K_te, y_tr, y_te, plan, gamma, repeat, fold = args
    out, skipped = [], []
    for d in plan.d_grid:
        for lam in plan.lambda_grid:
            try:
                m = _fit_fold(K_tr, K_te, y_tr, y_te, d, lam, plan)
            except (TrainingError, DomainError) as exc:
                skipped.append(f"d={d!r} lambda={lam!r} gamma={gamma!r} repeat={repeat} "
                               f"fold={fold}: {exc}")
                continue
            out.append(CvRecord(float(d), float(lam), float(gamma), fold, repeat,
                                m.empirical_risk_d, m.rejection_rate, m.accuracy_unrejected,
                                m.support_count))
    return out, skipped


def _jobs(X, y, plan: CvPlan, skipped):
    folds = [stratified_folds(y, plan.k, plan.seed, r) for r in range(plan.repeats)]
    for gamma in plan.gamma_grid:
        G = gram_matrix(KernelSpec(plan.family, gamma), X)
        for r, tests in enumerate(folds):
            for f, te in enumerate(tests):
                tr = np.setdiff1d(np.arange(y.size), te)
                y_tr = y[tr]
                if plan.noise_rate > 0:
                    # one draw per (repeat, fold), shared by every grid point
                    y_tr = inject_label_noise(y_tr, plan.noise_rate, [plan.seed, r, f, 1])
                if np.unique(y_tr).size < 2:
                    skipped.append(f"gamma={gamma!r} repeat={r} fold={f}: "
                                   "training fold has a single class")
                    continue
                yield (np.ascontiguousarray(G[np.ix_(tr, tr)]),
                       np.ascontiguousarray(G[np.ix_(te, tr)]),
                       y_tr, y[te], plan, gamma, r, f)


def _summarize(records, d_grid):
    groups = {}
    for rec in records:
        groups.setdefault((rec.d, rec.lam, rec.gamma), []).append(rec)
    summary = []
    for (d, lam, gamma), recs in sorted(groups.items()):
        cols = np.array([[r.risk, r.rejection_rate, r.accuracy_unrejected, r.support_count]
                         for r in recs], dtype=float)
        mean = cols.mean(axis=0)
        std = cols.std(axis=0)
        summary.append({
            "d": d, "lambda": lam, "gamma": gamma, "n_runs": len(recs),
            "risk_mean": mean[0], "risk_std": std[0],
            "rejection_rate_mean": mean[1], "rejection_rate_std": std[1],
            "accuracy_unrejected_mean": mean[2], "accuracy_unrejected_std": std[2],
            "support_count_mean": mean[3], "support_count_std": std[3],
        })
    best = {}
    for d in sorted(set(float(v) for v in d_grid)):
        rows = [s for s in summary if s["d"] == d]
        if rows:
            # strict < keeps the first (smallest lambda, then gamma) on ties
            top = rows[0]
            for s in rows[1:]:
                if s["risk_mean"] < top["risk_mean"]:
                    top = s
            best[d] = top
    return summary, best


def cross_validate(X, y, plan: CvPlan, workers=1) -> CvResult:
    """Repeated stratified k-fold CV over the ``d x lambda x gamma`` grid.

    Gram matrices are built once per ``gamma`` on the full data and sliced
    per fold. Label noise (``plan.noise_rate``) corrupts training folds only.
    Grid points whose training fails are skipped and listed in
    ``CvResult.skipped``.

    Returns
    -------
    CvResult
        ``records`` holds one row per ``(d, lambda, gamma, repeat, fold)``
        in sorted order; ``best[d]`` is the summary row with the lowest mean
        risk for that ``d``.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise DomainError(f"{X.shape[0]} rows but {y.size} labels")
    skipped = []
    jobs = _jobs(X, y, plan, skipped)
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cv_job, jobs))
    else:
        results = [_cv_job(job) for job in jobs]
    records = []
    for recs, skip in results:
        records.extend(recs)
        skipped.extend(skip)
    for msg in skipped:
        logger.warning("skipped CV run: %s", msg)
    records.sort(key=lambda r: (r.d, r.lam, r.gamma, r.repeat, r.fold))
    summary, best = _summarize(records, plan.d_grid)
    return CvResult(records, summary, best, skipped)


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def write_metrics_csv(records, path_or_file):
    """One row per record under :data:`METRICS_HEADER`; floats use repr."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for rec in records:
            w.writerow([_fmt(v) for v in rec.row()])
    finally:
        if own:
            fh.close()


SUMMARY_HEADER = (
    "d", "lambda", "gamma", "n_runs", "risk_mean", "risk_std",
    "rejection_rate_mean", "rejection_rate_std", "accuracy_unrejected_mean",
    "accuracy_unrejected_std", "support_count_mean", "support_count_std", "selected",
)


def write_summary_csv(result: CvResult, path):
    chosen = {id(row) for row in result.best.values()}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for row in result.summary:
            vals = [row[h] for h in SUMMARY_HEADER[:-1]]
            w.writerow([_fmt(v) for v in vals] + [int(id(row) in chosen)])


@dataclass(frozen=True)
class GaussianMixture1D:
    """``P(y=+1) = prior``; ``x | y=+1 ~ N(mean_pos, sd_pos^2)``, likewise for -1."""

    prior: float = 0.5
    mean_pos: float = 1.0
    mean_neg: float = -1.0
    sd_pos: float = 1.0
    sd_neg: float = 1.0

    def eta(self, x):
        """``P(y = +1 | x)`` in closed form, computed in log space."""
        x = np.asarray(x, dtype=float)
        lp = math.log(self.prior) - math.log(self.sd_pos) - 0.5 * ((x - self.mean_pos) / self.sd_pos) ** 2
        ln = math.log1p(-self.prior) - math.log(self.sd_neg) - 0.5 * ((x - self.mean_neg) / self.sd_neg) ** 2
        return 1.0 / (1.0 + np.exp(ln - lp))

    def sample(self, n, rng):
        y = np.where(rng.random(n) < self.prior, 1.0, -1.0)
        z = rng.standard_normal(n)
        x = np.where(y > 0, self.mean_pos + self.sd_pos * z, self.mean_neg + self.sd_neg * z)
        return x, y


@dataclass(frozen=True)
class ExcessRisk:
    """Monte Carlo excess risks of ``(f, rho)`` over the Bayes pair.

    ``se_diff`` is the standard error of the paired per-sample difference
    ``excess_d - excess_dr``.
    """

    excess_d: float
    excess_dr: float
    se_d: float
    se_dr: float
    se_diff: float
    risk_d: float
    risk_dr: float
    n: int

    def holds(self, k=3.0):
        return self.excess_d <= self.excess_dr + k * self.se_diff


def bayes_pair(cfg: LossConfig):
    """Band half-width and score scale realizing the Bayes rule.

    Returns ``(rho, scale)`` such that ``scale * bayes_discriminant(eta)``
    lands in the flat surrogate pieces: ``|z| <= rho - mu`` on rejects and
    ``|z| >= rho + mu`` otherwise.
    """
    rho = max(cfg.mu, cfg.rho_min)
    return rho, 2.0 * (rho + cfg.mu)


def excess_risk_check(dist: GaussianMixture1D, f, rho, n_samples, seed, cfg: LossConfig):
    """Estimate both excess risks of ``(f, rho)`` from one shared sample.

    Parameters
    ----------
    dist : GaussianMixture1D
    f : callable
        Vectorized score function of ``x``.
    rho : float
        Band half-width, at least ``cfg.rho_min``.
    n_samples : int
    seed : int or sequence of int
    cfg : LossConfig
    """
    if rho < cfg.rho_min:
        raise InvalidConfigError(f"rho must be >= {cfg.rho_min!r}")
    rng = np.random.default_rng(seed)
    x, y = dist.sample(n_samples, rng)
    rho_b, scale = bayes_pair(cfg)
    fb = scale * bayes_discriminant(dist.eta(x), cfg)
    t = y * np.asarray(f(x), dtype=float)
    tb = y * fb
    ld = ld_raw(t, rho, cfg.d) - ld_raw(tb, rho_b, cfg.d)
    ldr = ldr_raw(t, rho, cfg.d, cfg.mu) - ldr_raw(tb, rho_b, cfg.d, cfg.mu)
    n = x.size
    se = lambda v: float(v.std(ddof=1) / math.sqrt(n))
    return ExcessRisk(
        excess_d=float(ld.mean()),
        excess_dr=float(ldr.mean()),
        se_d=se(ld),
        se_dr=se(ldr),
        se_diff=se(ld - ldr),
        risk_d=float(ld_raw(t, rho, cfg.d).mean()),
        risk_dr=float(ldr_raw(t, rho, cfg.d, cfg.mu).mean()),
        n=n,
    )
