"""Command-line front end: ``sdr-svm <subcommand> [options]``.

Options may also come from a flat ``key = value`` file given with
``--config``; flags on the command line win. Exit codes: 0 success, 1 usage
error, 2 data error, 3 training error, 4 theory-check violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import warnings

import numpy as np

from . import __version__, theory
from .data import load_csv, map_labels, read_csv
from .evaluation import (
    DEFAULT_GAMMAS,
    DEFAULT_LAMBDAS,
    CvPlan,
    cross_validate,
    evaluate,
    write_metrics_csv,
    write_summary_csv,
)
from .exceptions import DataError, InvalidConfigError, ModelFormatError, SdrSvmError, TrainingError
from .kernel import KernelSpec
from .loss import LossConfig
from .model import decision_value, from_params, load_file, predict, save_file
from .trainer import TrainConfig, train

logger = logging.getLogger("sdrsvm")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRAIN, EXIT_THEORY = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


# option tables: dest -> (default, parser); flags are derived from dest
_DATA_OPTS = {
    "data": (None, str),
    "label_column": ("-1", str),
    "positive_label": (None, str),
}
_LOSS_OPTS = {
    "mu": (1.0, float),
    "kernel": ("gaussian", str),
}
_TRAIN_OPTS = {
    **_DATA_OPTS,
    **_LOSS_OPTS,
    "d": (0.2, float),
    "lambda": (0.1, float),
    "gamma": (1.0, float),
    "epsilon": (1e-5, float),
    "max_dc_iters": (50, int),
    "lp_iter_cap": (None, int),
    "init": ("hinge", str),
    "out": (None, str),
    "report": (None, str),
}
_CV_OPTS = {
    **_DATA_OPTS,
    **_LOSS_OPTS,
    "d_grid": ("0.2", str),
    "lambda_grid": (",".join(repr(v) for v in DEFAULT_LAMBDAS), str),
    "gamma_grid": (",".join(repr(v) for v in DEFAULT_GAMMAS), str),
    "folds": (10, int),
    "repeats": (10, int),
    "seed": (0, int),
    "noise_rate": (0.0, float),
    "epsilon": (1e-5, float),
    "max_dc_iters": (50, int),
    "workers": (1, int),
    "out": ("metrics.csv", str),
    "summary": (None, str),
}
_NOISE_OPTS = {**_CV_OPTS, "noise_rates": ("0,0.1,0.2,0.3", str), "out": ("noise_sweep", str)}
_NOISE_OPTS.pop("noise_rate")
_MODEL_OPTS = {
    "model": (None, str),
    "data": (None, str),
    "label_column": ("-1", str),
    "no_labels": (False, bool),
    "out": (None, str),
}
_THEORY_OPTS = {
    "seed": (0, int),
    "trials": (20, int),
    "samples": (100_000, int),
    "surrogate_points": (1_000_000, int),
    "out": (None, str),
}
_OPTS = {
    "train": _TRAIN_OPTS,
    "predict": _MODEL_OPTS,
    "evaluate": _MODEL_OPTS,
    "cv": _CV_OPTS,
    "noise-sweep": _NOISE_OPTS,
    "theory-check": _THEORY_OPTS,
}
_HELP = {
    "train": "fit a model on a CSV file and save it",
    "predict": "write decision values and three-way predictions",
    "evaluate": "report risk, rejection rate and accuracy of a saved model",
    "cv": "repeated stratified k-fold CV over d x lambda x gamma",
    "noise-sweep": "repeat cv with label noise injected into training folds",
    "theory-check": "run the numerical consistency checks",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="sdr-svm", description="Sparse reject-option SVM with the double ramp loss.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, opts in _OPTS.items():
        sp = sub.add_parser(name, help=_HELP[name], description=_HELP[name])
        sp.add_argument("--config", default=argparse.SUPPRESS, help="key = value file")
        sp.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
        for dest, (default, kind) in opts.items():
            flag = "--" + dest.replace("_", "-")
            shown = "" if default is None else f" (default: {default})"
            if kind is bool:
                sp.add_argument(flag, dest=dest, action="store_true", default=argparse.SUPPRESS)
            else:
                sp.add_argument(flag, dest=dest, default=argparse.SUPPRESS, help=shown.strip() or None)
    return p


def read_config(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve(command, ns):
    """Merge defaults, config file and flags into one typed option dict."""
    opts = _OPTS[command]
    merged = {k: v for k, (v, _) in opts.items()}
    given = vars(ns)
    if "config" in given:
        for key, value in read_config(given["config"]).items():
            if key not in opts:
                raise UsageError(f"unknown config key {key!r} for {command}")
            merged[key] = value
    for key in opts:
        if key in given:
            merged[key] = given[key]
    out = {}
    for key, (_, kind) in opts.items():
        value = merged[key]
        if value is None or kind is str:
            out[key] = value
            continue
        try:
            if kind is bool:
                out[key] = value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
            else:
                out[key] = kind(value)
        except ValueError as exc:
            raise UsageError(f"--{key.replace('_', '-')}: cannot parse {value!r}") from exc
    out["verbose"] = given.get("verbose", 0)
    return out


def parse_range(text, name="grid"):
    """``start:stop:step`` (inclusive), ``log:lo:hi:n`` or a comma list."""
    text = str(text).strip()
    try:
        if text.startswith("log:"):
            lo, hi, n = text[4:].split(":")
            vals = np.logspace(math.log10(float(lo)), math.log10(float(hi)), int(n))
            return [float(v) for v in vals]
        if ":" in text:
            start, stop, step = (float(s) for s in text.split(":"))
            if not step > 0 or stop < start:
                raise UsageError(f"{name}: need start <= stop and step > 0")
            n = int(math.floor((stop - start) / step + 1e-9))
            return [round(start + k * step, 12) for k in range(n + 1)]
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"{name}: cannot parse {text!r}") from exc


def d_grid(text):
    vals = parse_range(text, "--d-grid")
    kept = [v for v in vals if v < 0.5]
    if len(kept) < len(vals):
        dropped = ", ".join(repr(v) for v in vals if v >= 0.5)
        warnings.warn(f"--d-grid: dropped {dropped} (rejection cost must be < 0.5)", stacklevel=2)
    if not kept or any(v <= 0 for v in kept):
        raise UsageError("--d-grid needs values in (0, 0.5)")
    return kept


def _label_col(text):
    return int(text) if str(text).lstrip("-").isdigit() else text


def _need(o, *keys):
    for k in keys:
        if o.get(k) in (None, ""):
            raise UsageError(f"--{k.replace('_', '-')} is required")


def _cv_plan(o, noise_rate):
    return CvPlan(
        k=o["folds"],
        repeats=o["repeats"],
        seed=o["seed"],
        d_grid=tuple(d_grid(o["d_grid"])),
        lambda_grid=tuple(parse_range(o["lambda_grid"], "--lambda-grid")),
        gamma_grid=tuple(parse_range(o["gamma_grid"], "--gamma-grid")),
        mu=o["mu"],
        family=o["kernel"],
        noise_rate=noise_rate,
        epsilon=o["epsilon"],
        max_dc_iters=o["max_dc_iters"],
    )


def _summary_path(out):
    root, ext = os.path.splitext(out)
    return f"{root}_summary{ext or '.csv'}"


def _print_best(result, stream):
    print("d,lambda,gamma,risk_mean,risk_std,rejection_rate_mean,accuracy_unrejected_mean,"
          "support_count_mean", file=stream)
    for d, row in sorted(result.best.items()):
        print(",".join(repr(float(row[k])) for k in (
            "d", "lambda", "gamma", "risk_mean", "risk_std", "rejection_rate_mean",
            "accuracy_unrejected_mean", "support_count_mean")), file=stream)


def cmd_train(o):
    _need(o, "data", "out")
    cfg = TrainConfig(lam=o["lambda"], loss=LossConfig(o["d"], o["mu"]), epsilon=o["epsilon"],
                      max_dc_iters=o["max_dc_iters"], lp_iter_cap=o["lp_iter_cap"], init=o["init"])
    kernel = KernelSpec(o["kernel"], o["gamma"])
    ds = load_csv(o["data"], _label_col(o["label_column"]), o["positive_label"])
    params, report = train(ds.X, ds.y, kernel, cfg)
    model = from_params(params, kernel, cfg, ds.standardizer,
                        extra={"labels": {"positive": ds.label_tokens[0], "negative": ds.label_tokens[1]}})
    save_file(model, o["out"])
    X_raw, tokens, _ = read_csv(o["data"], _label_col(o["label_column"]))
    m = evaluate(model, X_raw, ds.y)
    info = report.to_dict()
    info.update({
        "train_metrics": {
            "risk": m.empirical_risk_d,
            "rejection_rate": m.rejection_rate,
            "accuracy_unrejected": m.accuracy_unrejected,
            "support_count": m.support_count,
            "n": m.n_test,
        },
        "model": o["out"],
    })
    path = o["report"] or o["out"] + ".report.json"
    with open(path, "w") as fh:
        json.dump(info, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"trained on {ds.n} points: {report.iterations} DC iterations ({report.termination}), "
          f"J={report.objective_trace[-1]!r}, support vectors={m.support_count}, "
          f"train risk={m.empirical_risk_d!r}")
    return EXIT_OK


def _model_inputs(o):
    _need(o, "model", "data")
    model = load_file(o["model"])
    if o["no_labels"]:
        X, _, _ = read_csv(o["data"], None)
        return model, X, None
    X, tokens, _ = read_csv(o["data"], _label_col(o["label_column"]))
    pos = model.metadata.get("labels", {}).get("positive")
    y, _ = map_labels(tokens, pos)
    return model, X, y


def cmd_predict(o):
    model, X, y = _model_inputs(o)
    f = decision_value(model, X)
    pred = predict(model, X)
    lines = ["index,decision_value,prediction" + (",label" if y is not None else "")]
    for i in range(f.size):
        row = f"{i},{float(f[i])!r},{int(pred[i])}"
        if y is not None:
            row += f",{int(y[i])}"
        lines.append(row)
    text = "\n".join(lines) + "\n"
    if o["out"]:
        with open(o["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_evaluate(o):
    model, X, y = _model_inputs(o)
    if y is None:
        raise UsageError("evaluate needs labels; drop --no-labels")
    m = evaluate(model, X, y)
    info = {
        "risk": m.empirical_risk_d,
        "rejection_rate": m.rejection_rate,
        "accuracy_unrejected": m.accuracy_unrejected,
        "all_rejected": m.all_rejected,
        "support_count": m.support_count,
        "n": m.n_test,
        "d": model.loss.d,
    }
    text = json.dumps(info, indent=1, sort_keys=True) + "\n"
    if o["out"]:
        with open(o["out"], "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_cv(o):
    _need(o, "data")
    plan = _cv_plan(o, o["noise_rate"])
    if o["workers"] < 1:
        raise UsageError("--workers must be at least 1")
    ds = load_csv(o["data"], _label_col(o["label_column"]), o["positive_label"])
    result = cross_validate(ds.X, ds.y, plan, workers=o["workers"])
    write_metrics_csv(result.records, o["out"])
    write_summary_csv(result, o["summary"] or _summary_path(o["out"]))
    _print_best(result, sys.stdout)
    for msg in result.skipped:
        print(f"skipped: {msg}", file=sys.stderr)
    return EXIT_OK


def cmd_noise_sweep(o):
    _need(o, "data")
    rates = parse_range(o["noise_rates"], "--noise-rates")
    plans = [(r, _cv_plan(o, r)) for r in rates]
    if o["workers"] < 1:
        raise UsageError("--workers must be at least 1")
    ds = load_csv(o["data"], _label_col(o["label_column"]), o["positive_label"])
    os.makedirs(o["out"], exist_ok=True)
    rows = []
    for rate, plan in plans:
        result = cross_validate(ds.X, ds.y, plan, workers=o["workers"])
        tag = f"noise{rate!r}"
        write_metrics_csv(result.records, os.path.join(o["out"], f"metrics_{tag}.csv"))
        write_summary_csv(result, os.path.join(o["out"], f"summary_{tag}.csv"))
        for d, best in sorted(result.best.items()):
            rows.append((rate, d, best))
    with open(os.path.join(o["out"], "noise_sweep.csv"), "w") as fh:
        fh.write("noise_rate,d,lambda,gamma,risk_mean,risk_std,rejection_rate_mean,"
                 "accuracy_unrejected_mean,support_count_mean\n")
        for rate, d, b in rows:
            vals = [rate, d, b["lambda"], b["gamma"], b["risk_mean"], b["risk_std"],
                    b["rejection_rate_mean"], b["accuracy_unrejected_mean"], b["support_count_mean"]]
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")
    for rate, d, b in rows:
        print(f"noise={rate!r} d={d!r}: risk {b['risk_mean']:.4f} +- {b['risk_std']:.4f} "
              f"(lambda={b['lambda']!r}, gamma={b['gamma']!r})")
    return EXIT_OK


def cmd_theory_check(o):
    if o["trials"] < 1 or o["samples"] < 2 or o["surrogate_points"] < 1:
        raise UsageError("--trials, --samples and --surrogate-points must be positive")
    reports = theory.run_all(seed=o["seed"], trials=o["trials"], n_samples=o["samples"],
                      surrogate_points=o["surrogate_points"])
    for r in reports:
        print(r.text())
    if o["out"]:
        with open(o["out"], "w") as fh:
            fh.write(theory.reports_json(reports) + "\n")
    return EXIT_OK if all(r.ok for r in reports) else EXIT_THEORY


_COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "cv": cmd_cv,
    "noise-sweep": cmd_noise_sweep,
    "theory-check": cmd_theory_check,
}


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        opts = resolve(ns.command, ns)
    except UsageError as exc:
        print(f"sdr-svm: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(opts.get("verbose") or 0, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[ns.command](opts)
    except (UsageError, InvalidConfigError) as exc:
        print(f"sdr-svm: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ModelFormatError, OSError) as exc:
        print(f"sdr-svm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"sdr-svm: training error: {exc}", file=sys.stderr)
        return EXIT_TRAIN
    except SdrSvmError as exc:
        # remaining domain/shape errors come from the data (e.g. one class)
        print(f"sdr-svm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
