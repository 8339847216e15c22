"""Brute-force numerical checks of the consistency results for L_dr.

Each ``verify_*`` function compares a closed form against an independent
oracle (grid search over scores, or Monte Carlo) and returns a
:class:`Report` listing every violation it found.

Band half-width. The nine-piece conditional risk, its plateau
``|z| <= rho - mu`` and therefore the Bayes-rule minimizers only exist when
``rho >= mu``. Since ``mu(1+mu)/2 < mu`` for ``mu < 1``, the representative
band is ``max(mu(1+mu)/2, mu)`` and a coarse sweep over ``SWEEP_RHOS`` is
added on top.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .evaluation import GaussianMixture1D, bayes_pair, excess_risk_check
from .loss import (
    LossConfig,
    bayes_discriminant,
    conditional_risk,
    ld_raw,
    ldr_raw,
    optimal_conditional_risk,
)

__all__ = [
    "TheoryGrid",
    "Report",
    "theory_rho",
    "xi",
    "big_h",
    "xi_parts",
    "h_parts",
    "verify_fisher_consistency",
    "verify_proposition2",
    "verify_theorem3",
    "verify_surrogate_bound",
    "default_distributions",
    "run_all",
]

SWEEP_RHOS = (1.0, 2.0, 5.0)
NOTE_CLOSED_FORMS = (
    "closed forms for H_r and H_1 use the min{...} expressions with d(1+mu) as the "
    "reject-branch value; the constrained grid search agrees with them"
)


def _eta_values():
    return tuple(round(0.01 * k, 10) for k in range(101))


def _d_values():
    return tuple(round(0.05 * k, 10) for k in range(1, 10))


@dataclass(frozen=True)
class TheoryGrid:
    """Verification domain.

    ``z_step`` is the score grid spacing; the score grid always spans
    ``[-(rho + mu + z_margin), rho + mu + z_margin]`` and contains every
    breakpoint of the conditional risk exactly.
    """

    eta_values: tuple = field(default_factory=_eta_values)
    d_values: tuple = field(default_factory=_d_values)
    mu_values: tuple = (0.25, 0.5, 1.0)
    z_step: float = 1e-3
    z_margin: float = 1.0
    rhos: tuple | None = None  # None: representative band plus SWEEP_RHOS

    def __post_init__(self):
        if any(not (0.0 <= e <= 1.0) for e in self.eta_values):
            raise ValueError("eta values must lie in [0, 1]")
        for d in self.d_values:
            for mu in self.mu_values:
                LossConfig(d, mu)
        if not (self.z_step > 0 and self.z_margin >= 1.0):
            raise ValueError("z_step must be positive and z_margin at least 1")

    def rho_list(self, mu):
        if self.rhos is not None:
            return tuple(r for r in self.rhos if r >= theory_rho(mu))
        base = theory_rho(mu)
        return tuple(sorted({base, *[r for r in SWEEP_RHOS if r >= base]}))


@dataclass
class Report:
    name: str
    checks: int = 0
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.violations

    def add(self, msg, limit=200):
        if len(self.violations) < limit:
            self.violations.append(msg)
        else:
            self.stats["truncated"] = self.stats.get("truncated", 0) + 1

    def text(self):
        head = f"[{'PASS' if self.ok else 'FAIL'}] {self.name}: {self.checks} checks, "
        n = len(self.violations) + self.stats.get("truncated", 0)
        lines = [head + f"{n} violations"]
        lines += [f"  note: {s}" for s in self.notes]
        for k, v in sorted(self.stats.items()):
            lines.append(f"  {k}: {v}")
        lines += [f"  violation: {v}" for v in self.violations[:20]]
        return "\n".join(lines)

    def to_dict(self):
        return {
            "name": self.name,
            "ok": self.ok,
            "checks": self.checks,
            "violations": list(self.violations),
            "notes": list(self.notes),
            "stats": dict(self.stats),
        }


def theory_rho(mu):
    """Smallest band half-width for which the plateau ``|z| <= rho - mu`` exists."""
    return max(0.5 * mu * (1.0 + mu), mu)


# closed forms

def xi(eta, d):
    """Bayes ``L_d`` conditional risk."""
    eta = np.asarray(eta, dtype=float)
    return np.where(eta < d, eta, np.where(eta > 1 - d, 1 - eta, d))


def big_h(eta, d, mu):
    """Minimal ``L_dr`` conditional risk over scores and bands."""
    return xi(eta, d) * (1.0 + mu)


def xi_parts(eta, d):
    """``(xi_-1, xi_r, xi_1)``: excess ``L_d`` risk of each decision."""
    eta = np.asarray(eta, dtype=float)
    x = xi(eta, d)
    return eta - x, d - x, (1.0 - eta) - x


def h_parts(eta, d, mu):
    """``(H_-1, H_r, H_1)``: least conditional risk under each decision.

    Each is the smallest value of the conditional risk over the scores
    producing that decision (``z < -rho``, ``|z| <= rho``, ``z > rho``),
    written as a minimum over the two candidate corners.
    """
    eta = np.asarray(eta, dtype=float)
    at_minus_rho = eta * d * (mu - 1.0) + eta + d
    at_plus_rho = d * eta + (1.0 - eta) * d * (1.0 + mu) + (1.0 - eta) * (1.0 - d)
    plateau = d * (1.0 + mu) + 0.0 * eta
    h_neg = np.where(eta < d, eta * (1.0 + mu), np.minimum(eta * (1.0 + mu), at_minus_rho))
    h_rej = np.where(
        eta < d,
        np.minimum(at_minus_rho, plateau),
        np.where(eta > 1.0 - d, np.minimum(plateau, (d * mu + 1.0) * (1.0 - eta) + eta * d), plateau),
    )
    h_pos = np.where(eta <= 1.0 - d, np.minimum(at_plus_rho, (1.0 - eta) * (1.0 + mu)),
                     (1.0 - eta) * (1.0 + mu))
    return h_neg, h_rej, h_pos


# grid helpers

def _breakpoints(rho, mu):
    mu2 = mu * mu
    pts = [0.0]
    for s in (-1.0, 1.0):
        pts += [s * rho, s * (rho + mu), s * (rho - mu), s * (rho + mu2), s * (rho - mu2)]
    return np.array(pts)


def _zgrid(lo, hi, step, rho, mu):
    """Closed interval ``[lo, hi]`` sampled at ``step`` plus all breakpoints."""
    n = max(2, int(math.ceil((hi - lo) / step)) + 1)
    z = np.linspace(lo, hi, n)
    bp = _breakpoints(rho, mu)
    bp = bp[(bp >= lo) & (bp <= hi)]
    return np.unique(np.concatenate([z, bp]))


def _risk_matrix(etas, z, rho, cfg):
    e = np.asarray(etas, dtype=float)[:, None]
    return conditional_risk(e, z[None, :], rho, cfg)


def verify_fisher_consistency(grid: TheoryGrid | None = None, value_tol=1e-6, argmin_tol=1e-9) -> Report:
    """Grid-minimize the conditional risk and compare with the closed form.

    For every ``(eta, d, mu, rho)`` the minimum over the score grid must
    match :func:`optimal_conditional_risk` within ``value_tol``. Away from
    ``eta in {d, 1-d}`` every grid point within ``argmin_tol`` of the minimum
    must lie in the reported region.
    """
    grid = grid or TheoryGrid()
    rep = Report("fisher consistency")
    etas = np.asarray(grid.eta_values, dtype=float)
    worst = 0.0
    for mu in grid.mu_values:
        for rho in grid.rho_list(mu):
            hi = rho + mu + grid.z_margin
            z = _zgrid(-hi, hi, grid.z_step, rho, mu)
            for d in grid.d_values:
                cfg = LossConfig(d, mu)
                R = _risk_matrix(etas, z, rho, cfg)
                best = R.min(axis=1)
                value, region = optimal_conditional_risk(etas, cfg)
                gap = np.abs(best - value)
                worst = max(worst, float(gap.max()))
                rep.checks += etas.size
                for i in np.flatnonzero(gap > value_tol):
                    rep.add(f"value eta={etas[i]!r} d={d!r} mu={mu!r} rho={rho!r}: "
                            f"grid {best[i]!r} vs closed {value[i]!r}")
                boundary = np.isclose(etas, d, rtol=0, atol=1e-12) | np.isclose(etas, 1 - d, rtol=0, atol=1e-12)
                for i in np.flatnonzero(~boundary):
                    zs = z[R[i] <= best[i] + argmin_tol]
                    reg = region[i]
                    if reg < 0:
                        bad = zs > -rho - mu + 1e-12
                    elif reg > 0:
                        bad = zs < rho + mu - 1e-12
                    else:
                        bad = np.abs(zs) > rho - mu + 1e-12
                    rep.checks += 1
                    if np.any(bad):
                        rep.add(f"argmin eta={etas[i]!r} d={d!r} mu={mu!r} rho={rho!r}: "
                                f"z={zs[bad][0]!r} outside region {reg}")
    rep.stats["max_value_gap"] = worst
    return rep


def verify_proposition2(grid: TheoryGrid | None = None, ineq_tol=1e-9, agree_tol=1e-6) -> Report:
    """Check ``xi_k <= H_k - H`` for the three decisions.

    ``H_k`` comes from :func:`h_parts`; each is cross-checked by grid search
    of the conditional risk over the closure of its score range.
    """
    grid = grid or TheoryGrid()
    rep = Report("excess-risk inequalities")
    rep.notes.append(NOTE_CLOSED_FORMS)
    etas = np.asarray(grid.eta_values, dtype=float)
    worst_gap = 0.0
    worst_slack = -np.inf
    labels = ("-1", "r", "1")
    for mu in grid.mu_values:
        for d in grid.d_values:
            cfg = LossConfig(d, mu)
            xs = xi_parts(etas, d)
            hs = h_parts(etas, d, mu)
            H = big_h(etas, d, mu)
            for lab, x_k, h_k in zip(labels, xs, hs):
                slack = x_k - (h_k - H)
                worst_slack = max(worst_slack, float(slack.max()))
                rep.checks += etas.size
                for i in np.flatnonzero(slack > ineq_tol):
                    rep.add(f"xi_{lab} > H_{lab} - H at eta={etas[i]!r} d={d!r} mu={mu!r}: "
                            f"excess {slack[i]!r}")
            for rho in grid.rho_list(mu):
                far = rho + mu + grid.z_margin
                ranges = ((-far, -rho), (-rho, rho), (rho, far))
                for lab, (lo, hi), h_k in zip(labels, ranges, hs):
                    z = _zgrid(lo, hi, grid.z_step, rho, mu)
                    found = _risk_matrix(etas, z, rho, cfg).min(axis=1)
                    gap = np.abs(found - h_k)
                    worst_gap = max(worst_gap, float(gap.max()))
                    rep.checks += etas.size
                    for i in np.flatnonzero(gap > agree_tol):
                        rep.add(f"H_{lab} closed {h_k[i]!r} vs grid {found[i]!r} at "
                                f"eta={etas[i]!r} d={d!r} mu={mu!r} rho={rho!r}")
    rep.stats["max_closed_vs_grid_gap"] = worst_gap
    rep.stats["max_inequality_slack"] = worst_slack
    return rep


def default_distributions():
    """Three 1-D two-Gaussian mixtures with closed-form ``eta``."""
    return (
        GaussianMixture1D(0.5, 1.0, -1.0, 1.0, 1.0),
        GaussianMixture1D(0.3, 0.5, -0.5, 1.0, 1.0),
        GaussianMixture1D(0.6, 2.0, -1.0, 0.7, 1.5),
    )


def verify_theorem3(distributions=None, trials=20, n_samples=100_000, seed=0,
                    cfg: LossConfig | None = None, k_se=3.0) -> Report:
    """Monte Carlo check that the ``L_d`` excess risk is below the ``L_dr`` one.

    Trial ``j`` on distribution ``i`` draws a linear score ``f(x) = a x + c``
    and a band ``rho`` from a generator seeded by ``(seed, i, j)``; every
    fourth trial scales ``a`` and ``c`` up by 10-100x. The first trial of
    each distribution is the Bayes pair itself.
    """
    cfg = cfg or LossConfig(0.2, 1.0)
    dists = default_distributions() if distributions is None else tuple(distributions)
    rep = Report("excess-risk domination (Monte Carlo)")
    worst = -np.inf
    for i, dist in enumerate(dists):
        for j in range(trials):
            rng = np.random.default_rng([seed, i, j])
            if j == 0:
                rho, scale = bayes_pair(cfg)
                f = lambda x, dist=dist, scale=scale: scale * bayes_discriminant(dist.eta(x), cfg)
                label = "bayes"
            else:
                a, c = rng.normal(0.0, 2.0), rng.normal(0.0, 1.0)
                if j % 4 == 0:
                    boost = rng.uniform(10.0, 100.0)
                    a, c = a * boost, c * boost
                rho = rng.uniform(cfg.rho_min, 3.0)
                f = lambda x, a=a, c=c: a * x + c
                label = f"a={a:.4g} c={c:.4g}"
            res = excess_risk_check(dist, f, rho, n_samples, [seed, i, j, 7], cfg)
            margin = res.excess_d - res.excess_dr - k_se * res.se_diff
            worst = max(worst, margin)
            rep.checks += 1
            if not res.holds(k_se):
                rep.add(f"dist {i} trial {j} ({label}, rho={rho:.4g}): excess_d "
                        f"{res.excess_d:.6g} > excess_dr {res.excess_dr:.6g} + {k_se}*{res.se_diff:.3g}")
            if res.risk_d > res.risk_dr:
                rep.add(f"dist {i} trial {j}: estimated R_d {res.risk_d!r} > R_dr {res.risk_dr!r}")
    rep.stats["passed"] = f"{rep.checks - len(rep.violations)}/{rep.checks}"
    rep.stats["worst_margin"] = worst
    return rep


def verify_surrogate_bound(n_points=1_000_000, seed=0) -> Report:
    """Exact check of ``L_d <= L_dr`` at random ``(t, rho, d, mu)``.

    A quarter of the points sit exactly on ``t = +-rho`` and ``t = +-(rho+mu)``,
    the places where the two losses come closest.
    """
    rep = Report("surrogate bound L_d <= L_dr")
    rng = np.random.default_rng(seed)
    d = rng.uniform(0.0, 0.5, n_points)
    d[d == 0.0] = 0.25
    mu = 1.0 - rng.uniform(0.0, 1.0, n_points)  # (0, 1]
    rho = 0.5 * mu * (1.0 + mu) + rng.exponential(1.0, n_points)
    t = rng.normal(0.0, 2.0 + rho)
    q = n_points // 4
    edge = rng.integers(0, 4, q)
    t[:q] = np.choose(edge, [rho[:q], -rho[:q], rho[:q] + mu[:q], -rho[:q] - mu[:q]])
    lo = ld_raw(t, rho, d)
    hi = ldr_raw(t, rho, d, mu)
    bad = np.flatnonzero(lo > hi)
    rep.checks = n_points
    for k in bad[:20]:
        rep.add(f"t={t[k]!r} rho={rho[k]!r} d={d[k]!r} mu={mu[k]!r}: L_d {lo[k]!r} > L_dr {hi[k]!r}")
    if bad.size > 20:
        rep.stats["truncated"] = int(bad.size - 20)
    rep.stats["min_gap"] = float((hi - lo).min())
    return rep


def run_all(grid=None, seed=0, trials=20, n_samples=100_000, surrogate_points=1_000_000):
    """Run every check; returns the list of reports."""
    return [
        verify_fisher_consistency(grid),
        verify_proposition2(grid),
        verify_theorem3(trials=trials, n_samples=n_samples, seed=seed),
        verify_surrogate_bound(surrogate_points, seed),
    ]


def reports_json(reports):
    return json.dumps({"ok": all(r.ok for r in reports), "reports": [r.to_dict() for r in reports]},
                      indent=1, sort_keys=True)
