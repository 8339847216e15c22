"""Compare the compiled core against the numpy fallback.

Times the Gram matrix, one DC subproblem LP (the hinge start point) and a
full training run on the two-Gaussian toy problem for a few sample sizes.
Both backends must agree on the LP objective; the script says so when they
do not.

    python benchmarks/bench_backends.py --sizes 50 100 200 --repeats 3
"""
import argparse
import time

import numpy as np

from sdrsvm import _backend
from sdrsvm.data import two_gaussians
from sdrsvm.kernel import KernelSpec, gram_matrix
from sdrsvm.loss import LossConfig
from sdrsvm.lp import solve_lp
from sdrsvm.trainer import TrainConfig, build_subproblem, train


def best_of(fn, repeats):
    times = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_size(n, repeats, backends, lam=0.01, gamma=0.5):
    X, y = two_gaussians(n, seed=n)
    spec = KernelSpec("gaussian", gamma)
    cfg = TrainConfig(lam=lam, loss=LossConfig(0.2, 1.0))
    rows = []
    objectives = {}
    for name in backends:
        core = _backend.get(name)
        t_gram, K = best_of(lambda: gram_matrix(spec, X, core=core), repeats)
        zeros = np.zeros(n)
        sub = build_subproblem(zeros, zeros, K, y, cfg)
        t_lp, sol = best_of(lambda: solve_lp(sub.problem, core=core), repeats)
        t_train, (_, rep) = best_of(lambda: train(X, y, spec, cfg, gram=K, core=core), 1)
        objectives[name] = sol.objective
        rows.append((n, name, t_gram, t_lp, sol.iterations, t_train, rep.iterations))
    if len(objectives) > 1:
        vals = list(objectives.values())
        gap = max(vals) - min(vals)
        if gap > 1e-8 * max(1.0, abs(vals[0])):
            print(f"  warning: n={n} LP objectives differ by {gap:.3g}")
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    backends = _backend.available()
    print(f"backends: {', '.join(backends)}")
    header = f"{'n':>5} {'backend':>8} {'gram s':>10} {'lp s':>10} {'pivots':>7} {'train s':>9} {'dc its':>6}"
    print(header)
    results = {}
    for n in args.sizes:
        for row in bench_size(n, args.repeats, backends):
            n_, name, tg, tl, piv, tt, its = row
            results[(n_, name)] = row
            print(f"{n_:>5} {name:>8} {tg:>10.5f} {tl:>10.4f} {piv:>7d} {tt:>9.3f} {its:>6d}")
    if "cython" in backends:
        print("speedup (python / cython):")
        for n in args.sizes:
            py, cy = results[(n, "python")], results[(n, "cython")]
            print(f"{n:>5} gram x{py[2] / cy[2]:.1f}  lp x{py[3] / cy[3]:.1f}  train x{py[5] / cy[5]:.1f}")


if __name__ == "__main__":
    main()
