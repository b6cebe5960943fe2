"""Command-line front end.

Commands: ``fit``, ``predict``, ``diagnose``, ``simulate`` and ``gen``.

Exit codes: 0 on success, 2 when a fit finished without converging, 1 on any
usage, validation or I/O error.  Every file written is accompanied by a run
manifest: model files embed it, CSV outputs get a ``<file>.manifest.json``
sidecar.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import PLACEMENTS, boundedness_scan
from .estimation import FitOptions, FitStatus, classify, fit
from .exceptions import BinRobustError
from .links import LINK_NAMES, get_link
from .losses import LossSpec
from .model import Dataset, conditional_prob
from .simulation import (T_KINDS, CaseAConfig, CaseBConfig, Scenario1Config,
                         config_dict, run_monte_carlo)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2

MODEL_FORMAT = "binrobust-model/1"


class UsageError(Exception):
    pass


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for non-convergence
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# files


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_dataset(path, data: Dataset) -> None:
    """CSV with header ``y,x1,...,xd``; 17 significant digits round-trip."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y"] + [f"x{j + 1}" for j in range(data.d)])
        for x, y in zip(data.X, data.y):
            w.writerow([int(y)] + [_fmt(v) for v in x])


def _open_text(path):
    try:
        return open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise CliError(f"file not found: {path}") from None
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _parse_header(header, path, labels_required):
    names = [h.strip() for h in header]
    has_y = bool(names) and names[0] == "y"
    if labels_required and not has_y:
        raise CliError(f"{path}:1: header must start with 'y'")
    feats = names[1:] if has_y else names
    expected = [f"x{j + 1}" for j in range(len(feats))]
    if not feats or feats != expected:
        raise CliError(f"{path}:1: header must be y,x1,...,xd")
    return has_y, len(feats)


def read_dataset(path, labels_required: bool = True):
    """Read a dataset CSV; returns ``(X, y)`` with ``y`` None if absent."""
    with _open_text(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CliError(f"{path}: file is empty") from None
        has_y, d = _parse_header(header, path, labels_required)
        rows, labels = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != d + has_y:
                raise CliError(
                    f"{path}:{line}: expected {d + has_y} fields, got {len(row)}")
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise CliError(f"{path}:{line}: non-numeric field") from None
            if not all(math.isfinite(v) for v in values):
                raise CliError(f"{path}:{line}: non-finite value")
            if has_y:
                if values[0] not in (0.0, 1.0):
                    raise CliError(f"{path}:{line}: label must be 0 or 1")
                labels.append(int(values[0]))
                values = values[1:]
            rows.append(values)
    if not rows:
        raise CliError(f"{path}: no data rows")
    X = np.array(rows, dtype=float)
    return X, (np.array(labels) if has_y else None)


def load_dataset(path) -> Dataset:
    X, y = read_dataset(path)
    return Dataset(X, y)


def make_manifest(command, config, seed) -> dict:
    now = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return {
        "command": command,
        "config": config,
        "seed": seed,
        "artifact_version": __version__,
        "created": now,
    }


def _write_text(path, text):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from None


def _write_with_manifest(path, text, manifest):
    _write_text(path, text)
    _write_text(f"{path}.manifest.json", json.dumps(manifest, indent=2) + "\n")


def _finite_or_none(v):
    v = float(v)
    return v if math.isfinite(v) else None


def save_model(path, link, spec, result, manifest) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "link": link,
        "loss": str(spec),
        "d": int(result.theta_hat.size - 1),
        "theta": [float(t) for t in result.theta_hat],
        "final_risk": _finite_or_none(result.final_risk),
        "gradient_norm": _finite_or_none(result.gradient_norm),
        "iterations": int(result.iterations),
        "status": str(result.status),
        "initializer_used": int(result.initializer_used),
        "manifest": manifest,
    }
    _write_text(path, json.dumps(doc, indent=2) + "\n")


def load_model(path) -> dict:
    with _open_text(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}:{exc.lineno}: not a model file ({exc.msg})") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise CliError(f"{path}: not a {MODEL_FORMAT} file")
    try:
        theta = np.array(doc["theta"], dtype=float)
        link = get_link(doc["link"]).name
        d = int(doc["d"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"{path}: malformed model file ({exc})") from None
    if theta.ndim != 1 or theta.size != d + 1 or not np.all(np.isfinite(theta)):
        raise CliError(f"{path}: theta must hold d + 1 finite values")
    return {"link": link, "theta": theta, "d": d, "loss": doc.get("loss")}


# ---------------------------------------------------------------------------
# argument types


def _loss_type(text):
    try:
        return LossSpec.parse(text)
    except BinRobustError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _methods_type(text):
    specs = [_loss_type(t) for t in text.split(",") if t.strip()]
    if not specs:
        raise argparse.ArgumentTypeError("need at least one method")
    return specs


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _finite_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite, got {text}")
    return v


def _probability(text):
    v = _finite_float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {v}")
    return v


def _label(text):
    if text not in ("0", "1"):
        raise argparse.ArgumentTypeError("y must be 0 or 1")
    return int(text)


# ---------------------------------------------------------------------------
# commands


def cmd_fit(args) -> int:
    data = load_dataset(args.data)
    options = FitOptions(max_iterations=args.max_iter,
                         gradient_tolerance=args.tol)
    result = fit(args.loss, args.link, data, options)
    config = {"data": str(args.data), "data_sha256": data.digest(),
              "link": args.link, "loss": str(args.loss),
              "max_iter": args.max_iter, "tol": args.tol}
    save_model(args.out, args.link, args.loss, result,
               make_manifest("fit", config, args.seed))
    theta = " ".join(_fmt(t) for t in result.theta_hat)
    print(f"status: {result.status}")
    print(f"theta: {theta}")
    print(f"risk: {_fmt(result.final_risk)}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_predict(args) -> int:
    model = load_model(args.model)
    X, _ = read_dataset(args.data, labels_required=False)
    if X.shape[1] != model["d"]:
        raise CliError(f"model expects {model['d']} features, data have {X.shape[1]}")
    q1 = conditional_prob(model["link"], model["theta"], X, 1)
    labels = classify(model["link"], model["theta"], X, args.threshold)
    lines = ["q1,label"] + [f"{_fmt(q)},{int(b)}" for q, b in zip(q1, labels)]
    config = {"model": str(args.model), "data": str(args.data),
              "threshold": args.threshold}
    _write_with_manifest(args.out, "\n".join(lines) + "\n",
                         make_manifest("predict", config, args.seed))
    return EXIT_OK


def cmd_diagnose(args) -> int:
    if args.points < 3:
        raise UsageError("--points must be at least 3")
    if not args.zmin < args.zmax:
        raise UsageError("--zmin must be below --zmax")
    grid = np.linspace(args.zmin, args.zmax, args.points)
    report = boundedness_scan(args.loss, args.link, args.y, args.z_prime, grid)
    config = {"link": args.link, "loss": str(args.loss), "y": args.y,
              "z_prime": args.z_prime, "zmin": args.zmin, "zmax": args.zmax,
              "points": args.points}
    if args.out:
        _write_with_manifest(args.out, report.to_csv(),
                             make_manifest("diagnose", config, args.seed))
    print(report.tail_classification)
    return EXIT_OK


def _scenario_config(args):
    common = {"n": args.n, "test_n": args.test_n}
    if args.scenario == "scenario1":
        return Scenario1Config(a=args.a, p_out=args.pout, **common)
    if args.scenario == "caseA":
        return CaseAConfig(r=args.r, D=args.D, s=args.s,
                           placement=args.placement, **common)
    return CaseBConfig(r=args.r, D=args.D, nu1=args.nu1, nu0=args.nu0,
                       placement=args.placement, t_kind=args.t_kind, **common)


def cmd_simulate(args) -> int:
    config = _scenario_config(args)
    report = run_monte_carlo(config, args.methods, args.replicates,
                             failure_threshold=args.failure_threshold,
                             base_seed=args.seed, link=args.link,
                             n_jobs=args.jobs)
    text = report.to_csv()
    manifest = make_manifest("simulate", {
        **config_dict(config), "methods": [str(m) for m in args.methods],
        "replicates": args.replicates, "link": args.link,
        "failure_threshold": report.failure_threshold}, args.seed)
    if args.out:
        _write_with_manifest(args.out, text, manifest)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_gen(args) -> int:
    config = _scenario_config(args)
    train, test = config.generate(args.seed)
    manifest = make_manifest("gen", config_dict(config), args.seed)
    write_dataset(args.out, train)
    _write_text(f"{args.out}.manifest.json", json.dumps(manifest, indent=2) + "\n")
    if args.test_out:
        write_dataset(args.test_out, test)
        _write_text(f"{args.test_out}.manifest.json",
                    json.dumps(manifest, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_scenario_flags(p):
    p.add_argument("scenario", choices=("scenario1", "caseA", "caseB"))
    p.add_argument("--n", type=_positive_int, default=400, help="training size")
    p.add_argument("--test-n", type=_positive_int, default=50_000,
                   help="test set size")
    p.add_argument("--a", type=_finite_float, default=1.0,
                   help="scenario1 slope: theta = (0, a, -a)")
    p.add_argument("--pout", type=_finite_float, default=0.0,
                   help="scenario1 contamination rate")
    p.add_argument("--r", type=_finite_float, default=0.5, help="P(Y = 1)")
    p.add_argument("--D", type=_finite_float, default=2.0, help="mean offset")
    p.add_argument("--s", type=_finite_float, default=1.0,
                   help="caseA class-0 variance")
    p.add_argument("--nu1", type=_finite_float, default=7.0)
    p.add_argument("--nu0", type=_finite_float, default=7.0)
    p.add_argument("--placement", choices=PLACEMENTS, default="diagonal",
                   help="class-1 mean (D, D) or (D, 0)")
    p.add_argument("--t-kind", choices=T_KINDS, default="multivariate",
                   help="caseB: bivariate t or independent t coordinates")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="binrobust",
                     description="Robust estimation for binary regression.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a model to a dataset CSV")
    p.add_argument("data", help="CSV with header y,x1,...,xd")
    p.add_argument("--link", choices=LINK_NAMES, default="logit")
    p.add_argument("--loss", type=_loss_type, default=LossSpec("ml"),
                   help="ml, beta:<b> or gamma:<g>")
    p.add_argument("--max-iter", type=_positive_int, default=500)
    p.add_argument("--tol", type=_finite_float, default=1e-8,
                   help="gradient tolerance")
    p.add_argument("--seed", type=int, default=0, help="recorded in the manifest")
    p.add_argument("-o", "--out", default="model.json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict labels with a fitted model")
    p.add_argument("model")
    p.add_argument("data", help="CSV with header [y,]x1,...,xd")
    p.add_argument("--threshold", type=_probability, default=0.5)
    p.add_argument("--seed", type=int, default=0, help="recorded in the manifest")
    p.add_argument("-o", "--out", default="predictions.csv")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("diagnose", help="scan the contamination effect b(y, z, z')")
    p.add_argument("--link", choices=LINK_NAMES, default="logit")
    p.add_argument("--loss", type=_loss_type, default=LossSpec("ml"))
    p.add_argument("--y", type=_label, default=1)
    p.add_argument("--z-prime", type=_finite_float, default=0.0)
    p.add_argument("--zmin", type=_finite_float, default=None)
    p.add_argument("--zmax", type=_finite_float, default=None)
    p.add_argument("--points", type=int, default=1201)
    p.add_argument("--seed", type=int, default=0, help="recorded in the manifest")
    p.add_argument("-o", "--out", default=None, help="write the (z, b) CSV here")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("simulate", help="run a Monte Carlo campaign")
    _add_scenario_flags(p)
    p.add_argument("--methods", type=_methods_type, default=[LossSpec("ml")],
                   help="comma-separated loss specs")
    p.add_argument("--replicates", type=_positive_int, default=1000)
    p.add_argument("--failure-threshold", type=_positive_int, default=None,
                   help="failures needed for the dash marker (default 10%%)")
    p.add_argument("--link", choices=LINK_NAMES, default="logit")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("-o", "--out", default=None, help="write the report CSV here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen", help="generate a training (and test) dataset CSV")
    _add_scenario_flags(p)
    p.add_argument("-o", "--out", default="train.csv")
    p.add_argument("--test-out", default=None)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "diagnose":
            half = 100.0 if args.link == "cauchit" else 30.0
            args.zmin = -half if args.zmin is None else args.zmin
            args.zmax = half if args.zmax is None else args.zmax
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
    except (CliError, BinRobustError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
