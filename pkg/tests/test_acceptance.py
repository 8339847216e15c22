"""End-to-end acceptance criteria 1-10.

Each test records one PASS/FAIL line (see ``conftest.criterion``); the
lines are repeated in the terminal summary. Runtime limits are part of
each criterion and are checked alongside the numbers.
"""
import contextlib
import csv
import filecmp
import io
import os
import time

import numpy as np
import pytest

from sdrsvm import cli
from sdrsvm.lp import solve_lp
from sdrsvm.theory import (
    TheoryGrid,
    verify_fisher_consistency,
    verify_proposition2,
    verify_surrogate_bound,
    verify_theorem3,
)

import acceptance_runs as runs
from conftest import IONOSPHERE
from oracles import random_bounded_lp, vertex_optimum

pytestmark = pytest.mark.acceptance


class Timed:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


@pytest.fixture(scope="module")
def first_run(tmp_path_factory):
    """Files of criteria 1, 7 and 9, produced once and shared."""
    out = tmp_path_factory.mktemp("run_a")
    timings = {}
    with Timed() as t:
        c1 = runs.run_c1(out)
    timings[1] = t.seconds
    with Timed() as t:
        c7 = runs.run_c7(out)
    timings[7] = t.seconds
    with Timed() as t:
        c9 = runs.run_c9(out)
    timings[9] = t.seconds
    return {"dir": out, "c1": c1, "c7": c7, "c9": c9, "seconds": timings}


def test_c1_dc_descent(first_run, criterion):
    rows = runs.read_c1(first_run["c1"])
    worst = max(float(np.max(np.diff(r["trace"]), initial=-np.inf)) for r in rows)
    max_iters = max(int(r["iterations"]) for r in rows)
    kernels = {r["kernel"] for r in rows}
    lambdas = {float(r["lambda"]) for r in rows}
    secs = first_run["seconds"][1]
    ok = (len(rows) == 50 and worst <= 1e-9 and max_iters <= 50
          and kernels == {"gaussian", "linear"} and lambdas == {0.01, 0.1, 1.0} and secs < 300)
    criterion(1, ok, f"50 runs, largest J increase {worst:.3g} (<= 1e-9), at most {max_iters} "
                     f"DC iterations (<= 50), {secs:.0f} s (< 300 s)")
    assert ok


def test_c2_fisher_consistency(criterion):
    with Timed() as t:
        rep = verify_fisher_consistency(TheoryGrid())
    ok = rep.ok and t.seconds < 60
    criterion(2, ok, f"{rep.checks} checks, {len(rep.violations)} violations, max value gap "
                     f"{rep.stats['max_value_gap']:.2g} (<= 1e-6), {t.seconds:.1f} s (< 60 s)")
    assert ok, rep.text()


def test_c3_excess_risk_inequalities(criterion):
    with Timed() as t:
        rep = verify_proposition2(TheoryGrid())
    ok = (rep.ok and rep.stats["max_inequality_slack"] <= 1e-9
          and rep.stats["max_closed_vs_grid_gap"] <= 1e-6 and t.seconds < 60)
    criterion(3, ok, f"{rep.checks} checks, {len(rep.violations)} violations, slack "
                     f"{rep.stats['max_inequality_slack']:.2g} (<= 1e-9), closed vs grid "
                     f"{rep.stats['max_closed_vs_grid_gap']:.2g} (<= 1e-6), {t.seconds:.1f} s (< 60 s)")
    assert ok, rep.text()


def test_c4_excess_risk_domination(criterion):
    with Timed() as t:
        rep = verify_theorem3(trials=20, n_samples=100_000, seed=0)
    passed = rep.checks - len(rep.violations)
    ok = rep.ok and rep.checks == 60 and t.seconds < 120
    criterion(4, ok, f"{passed}/{rep.checks} trials within 3 SE, {t.seconds:.1f} s (< 120 s)")
    assert ok, rep.text()


def test_c5_surrogate_bound(criterion):
    rep = verify_surrogate_bound(1_000_000, seed=0)
    ok = rep.ok and rep.checks == 1_000_000
    criterion(5, ok, f"{rep.checks} points, {len(rep.violations)} violations (exact), "
                     f"min L_dr - L_d = {rep.stats['min_gap']!r}")
    assert ok, rep.text()


def test_c6_lp_oracle(criterion):
    rng = np.random.default_rng(2718)
    mismatches = 0
    bland_fail = 0
    worst = 0.0
    for _ in range(50):
        p = random_bounded_lp(rng, max_vars=6, max_cons=6)
        assert p.n_vars <= 6 and p.n_constraints <= 6
        status, val = vertex_optimum(p)
        cap = 50 * (p.n_vars + p.n_constraints)
        for bland in (False, True):
            try:
                sol = solve_lp(p, max_iters=cap, bland=bland)
            except Exception:
                bland_fail += bland
                mismatches += 1
                continue
            if sol.status != status:
                mismatches += 1
            elif status == "optimal":
                gap = abs(sol.objective - val)
                worst = max(worst, gap)
                mismatches += gap > 1e-6
    ok = mismatches == 0 and bland_fail == 0
    criterion(6, ok, f"50 LPs x (Dantzig, Bland): {mismatches} mismatches, worst objective gap "
                     f"{worst:.2g} (<= 1e-6), Bland within 50(vars+cons) pivots: {50 - bland_fail}/50")
    assert ok


def test_c7_sparsity_and_risk(first_run, criterion):
    metrics, summary = first_run["c7"]
    best = runs.best_row(summary)
    n_train = runs.SYN_N * (runs.SYN_FOLDS - 1) / runs.SYN_FOLDS
    sv_frac = best["support_count_mean"] / n_train
    secs = first_run["seconds"][7]
    ok = (best["risk_mean"] <= 0.2 + 0.05 and best["rejection_rate_mean"] > 0
          and sv_frac < 0.5 and secs < 600)
    criterion(7, ok, f"selected lambda={best['lambda']!r} gamma={best['gamma']!r}: CV risk "
                     f"{best['risk_mean']:.4f} (<= 0.25), rejection rate "
                     f"{best['rejection_rate_mean']:.3f} (> 0), SV/N {sv_frac:.3f} (< 0.5), "
                     f"{secs:.0f} s (< 600 s)")
    assert ok


def test_c8_ionosphere(tmp_path, criterion):
    out = tmp_path / "iono_metrics.csv"
    with Timed() as t, contextlib.redirect_stdout(io.StringIO()):
        code = cli.main(["cv", "--data", IONOSPHERE, "--positive-label", "g",
                         "--d-grid", "0.1,0.2,0.3", "--lambda-grid", "0.003,0.01",
                         "--gamma-grid", "0.02,0.05", "--folds", "5", "--repeats", "1",
                         "--seed", str(runs.SEED), "--out", str(out)])
    assert code == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3 * 2 * 2 * 5
    worst_identity = max(
        abs(float(r["risk"]) - ((1 - float(r["rejection_rate"])) * (1 - float(r["accuracy_unrejected"]))
                                + float(r["d"]) * float(r["rejection_rate"])))
        for r in rows
    )
    best = {}
    with open(tmp_path / "iono_metrics_summary.csv") as fh:
        for r in csv.DictReader(fh):
            if r["selected"] == "1":
                best[float(r["d"])] = float(r["risk_mean"])
    risk_ok = all(best[d] <= d + 0.05 for d in (0.1, 0.2, 0.3))
    ok = worst_identity <= 1e-12 and risk_ok and t.seconds < 900
    shown = ", ".join(f"d={d}: {best[d]:.4f}" for d in sorted(best))
    criterion(8, ok, f"{len(rows)} metric rows, identity gap {worst_identity:.2g} (<= 1e-12), "
                     f"CV risk {shown} (each <= d + 0.05), {t.seconds:.0f} s (< 900 s)")
    assert ok


def test_c9_noise_robustness(first_run, criterion):
    clean = runs.best_row(first_run["c7"][1])
    noisy_summary = [p for p in first_run["c9"] if os.path.basename(p).startswith("summary_")]
    noisy = runs.best_row(noisy_summary[0])
    delta = noisy["risk_mean"] - clean["risk_mean"]
    secs = first_run["seconds"][9]
    ok = delta < 0.1 and secs < 900
    criterion(9, ok, f"CV risk clean {clean['risk_mean']:.4f}, 10% noise {noisy['risk_mean']:.4f}, "
                     f"increase {delta:+.4f} (< 0.1), {secs:.0f} s (< 900 s)")
    assert ok


def test_c10_determinism(first_run, tmp_path, criterion):
    c1 = runs.run_c1(tmp_path)
    c7 = runs.run_c7(tmp_path)
    c9 = runs.run_c9(tmp_path)
    pairs = [(first_run["c1"], c1)] + list(zip(first_run["c7"], c7)) + list(zip(first_run["c9"], c9))
    same = [filecmp.cmp(a, b, shallow=False) for a, b in pairs]
    names = [os.path.basename(b) for _, b in pairs]
    ok = all(same) and len(pairs) == 6
    differing = [n for n, s in zip(names, same) if not s]
    criterion(10, ok, f"{sum(same)}/{len(pairs)} metric files byte-identical across two runs of "
                      f"criteria 1, 7, 9" + (f" (differ: {', '.join(differing)})" if differing else ""))
    assert ok
