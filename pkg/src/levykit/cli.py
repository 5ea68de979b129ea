"""Command line entry point: ``levykit <verb> ...``.

Exit codes: 0 success, 2 validation failure (bad model, failed hypothesis,
failed verification), 3 numerical failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, _config
from .errors import LevyKitError, NumericalError, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_USAGE = 0, 2, 3, 64
REPORT_SCHEMA = "levykit.report/1"
MANIFEST_SCHEMA = "levykit.manifest/1"
CSV_LEVEL = 1e-8  # default CSV window: values down to this fraction of the peak


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _load(path):
    from .levy_model import load_model

    try:
        return load_model(path)
    except OSError as exc:
        raise ValidationError(f"cannot read model file: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValidationError(f"malformed model file {path}: {exc}") from exc


def _write_manifest(out, verb, args, model=None, outputs=(), started=None, extra=None):
    if out is None or out == "-":
        return
    params = {k: v for k, v in vars(args).items() if k not in ("func",)}
    man = {
        "schema_version": MANIFEST_SCHEMA,
        "verb": verb,
        "tool_version": __version__,
        "model_hash": model.model_hash if model is not None else None,
        "parameters": params,
        "outputs": [os.path.abspath(p) for p in outputs],
        "wall_time_s": None if started is None else time.perf_counter() - started,
    }
    if extra:
        man.update(extra)
    with open(f"{out}.manifest.json", "w") as fh:
        json.dump(man, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _parse_xi(tokens, d):
    pts = []
    for tok in tokens:
        vals = [float(v) for v in tok.split(",") if v.strip()]
        if len(vals) != d:
            raise ValidationError(f"frequency {tok!r} has {len(vals)} components, model has d = {d}")
        pts.append(vals)
    return np.array(pts)


def _parse_params(text):
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise UsageError(f"--params entries must look like key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# --------------------------------------------------------------------------
# verbs
# --------------------------------------------------------------------------

def cmd_exponent(args):
    from .exponent import exponent_values, stable_exponent_closed_form, stable_reference_drift

    started = time.perf_counter()
    model = _load(args.model)
    xi = _parse_xi(args.xi, model.d)
    if args.closed_form:
        if not model.is_stable:
            raise ValidationError("--closed-form needs a stable model (q = phi = 1)")
        vals = np.array([stable_exponent_closed_form(model.mu, model.alpha, x) for x in xi])
        # the closed form carries the reference drift; swap in the model's own
        vals = vals - 1j * (xi @ (model.drift - stable_reference_drift(model.mu, model.alpha)))
    else:
        vals = exponent_values(model, xi, part=args.part, r=args.r)
    rows = [[repr(float(c)) for c in x] + [repr(float(v.real)), repr(float(v.imag))]
            for x, v in zip(xi, np.atleast_1d(vals))]
    header = [f"xi{k + 1}" for k in range(model.d)] + ["re", "im"]
    if args.out == "-":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    else:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    _write_manifest(args.out, "exponent", args, model, [args.out], started)
    return EXIT_OK


def cmd_density(args):
    from .density import invert

    started = time.perf_counter()
    model = _load(args.model)
    grid = invert(model, args.t, tol=args.tol)
    if args.format == "binary":
        grid.to_binary(args.out)
        window = None
    else:
        window = args.window if args.window is not None else grid.support_window(max(args.tol, CSV_LEVEL))
        grid.to_csv(args.out, window=window)
    _write_manifest(args.out, "density", args, model, [args.out], started,
                    {"grid": {"n": grid.n, "dx": grid.dx, "xi_max": grid.xi_max, "mass": grid.mass,
                              "edge_modulus": grid.edge_modulus, "imag_residual": grid.imag_residual,
                              "window": window}})
    return EXIT_OK


def cmd_simulate(args):
    from .simulate import SimConfig, sample_increment

    started = time.perf_counter()
    model = _load(args.model)
    cfg = SimConfig(n=args.n, seed=args.seed, scheme=args.scheme, r=args.r, rho=args.rho)
    batch = sample_increment(model, args.t, cfg)
    batch.to_csv(args.out)
    _write_manifest(args.out, "simulate", args, model, [args.out], started,
                    {"batch": batch.summary()})
    return EXIT_OK


def _suite_theorem1(model):
    from .bounds import fit_constants

    _, rep = fit_constants(model)
    return rep.to_dict()


def _suite_tails(model):
    from .bounds import fit_truncated_density, g_decay_check

    c1, rows = fit_truncated_density(model)
    mono, g_const = g_decay_check(gamma=model.gamma)
    ratio = max(float(np.max(r["p"][r["ok"]] / (c1 * r["shape"][r["ok"]]))) for r in rows)
    passed = bool(math.isfinite(c1) and c1 > 0 and all(r["dominated"] for r in rows) and mono)
    return {
        "suite": "tails",
        "grid": {"t": [r["t"] for r in rows], "reach_in_h": 30.0,
                 "points": [r["points"] for r in rows], "reliable": [r["reliable"] for r in rows]},
        "fitted_constants": {"c1": c1, "g_power_constant": g_const},
        "sup_ratio": ratio,
        "pass": passed,
        "notes": [] if mono else ["decay profile g is not monotone on the grid"],
    }


def _suite_convpow(model):
    from .bounds import fit_convolution_constant

    if model.d != 1:
        return {"suite": "convpow", "grid": {}, "fitted_constants": {}, "sup_ratio": None,
                "pass": None, "notes": ["lattice convolution oracle is one-dimensional; skipped"]}
    c, per_n, orc = fit_convolution_constant(model)
    c_fine, per_fine, _ = fit_convolution_constant(model, cells=2 * orc.cells)
    stable = bool(max(c, c_fine) <= 2.0 * min(c, c_fine))
    return {
        "suite": "convpow",
        "grid": {"r": 1.0, "n_max": orc.n_max, "cells": orc.cells, "annuli": orc.radii.tolist()},
        "fitted_constants": {"c": c, "c_refined": c_fine, "per_n": per_n, "per_n_refined": per_fine},
        "sup_ratio": 1.0,
        "pass": bool(math.isfinite(c) and c > 0 and stable),
        "notes": [],
    }


SUITES = {"theorem1": _suite_theorem1, "tails": _suite_tails, "convpow": _suite_convpow}


def cmd_verify(args):
    from .exponent import require_lower_bound

    started = time.perf_counter()
    model = _load(args.model)
    require_lower_bound(model)
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = {}
    for name in names:
        print(f"running suite {name}", file=sys.stderr)
        results[name] = SUITES[name](model)
    flags = [r["pass"] for r in results.values() if r["pass"] is not None]
    passed = bool(flags) and all(flags)
    if len(names) == 1:
        report = dict(results[names[0]])
    else:
        report = {"suite": "all", "grid": {k: v["grid"] for k, v in results.items()},
                  "fitted_constants": {k: v["fitted_constants"] for k, v in results.items()},
                  "sup_ratio": {k: v["sup_ratio"] for k, v in results.items()},
                  "pass": passed, "suites": results}
    report = {"schema_version": REPORT_SCHEMA, "model_hash": model.model_hash, **report}
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=2, default=_json_default)
        fh.write("\n")
    _write_manifest(args.out, "verify", args, model, [args.out], started)
    for name, r in results.items():
        print(f"{name}: {'skipped' if r['pass'] is None else ('pass' if r['pass'] else 'FAIL')}",
              file=sys.stderr)
    return EXIT_OK if passed else EXIT_INVALID


def cmd_preset(args):
    from .levy_model import save_model
    from .presets import build

    started = time.perf_counter()
    model = build(args.name, **_parse_params(args.params))
    save_model(model, args.emit)
    _write_manifest(args.emit, "preset", args, model, [args.emit], started)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="levykit", description="Transition densities of jump processes with "
                "power-law-like Lévy measures.")
    p.add_argument("--version", action="version", version=f"levykit {__version__}")
    p.add_argument("--threads", type=int, default=None,
                   help="cap internal parallelism (default: all cores)")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    e = sub.add_parser("exponent", help="characteristic exponent at given frequencies")
    e.add_argument("--model", required=True)
    e.add_argument("--xi", nargs="+", required=True,
                   help="frequencies; each is a comma-separated vector, e.g. --xi 1 2.5 or --xi 1,0 0,1")
    e.add_argument("--part", choices=("full", "truncated", "large"), default="full")
    e.add_argument("--r", type=float, default=None, help="truncation radius for --part")
    e.add_argument("--closed-form", action="store_true", help="use the stable closed form")
    e.add_argument("--out", default="exponent.csv", help="CSV path, '-' for standard output")
    e.set_defaults(func=cmd_exponent)

    d = sub.add_parser("density", help="transition density on a lattice")
    d.add_argument("--model", required=True)
    d.add_argument("--t", type=float, required=True)
    d.add_argument("--tol", type=float, default=1e-10)
    d.add_argument("--out", default="density.csv")
    d.add_argument("--format", choices=("csv", "binary"), default="csv")
    d.add_argument("--window", type=float, default=None,
                   help="CSV half-width (default: where p >= max(tol, 1e-8) * max p)")
    d.set_defaults(func=cmd_density)

    s = sub.add_parser("simulate", help="sample increments")
    s.add_argument("--model", required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--scheme", choices=("gaussian", "moment-matched-normal", "discard"), default="gaussian")
    s.add_argument("--r", type=float, default=None, help="large-jump threshold (default h(t))")
    s.add_argument("--rho", type=float, default=None, help="inner cutoff for the discard scheme")
    s.add_argument("--out", default="samples.csv")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="fit and check the density bounds")
    v.add_argument("--model", required=True)
    v.add_argument("--suite", choices=("theorem1", "tails", "convpow", "all"), default="all")
    v.add_argument("--out", default="report.json")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("preset", help="write a ready-made model file")
    r.add_argument("--name", required=True,
                   help="stable, layered, tempered, relativistic or a reference name such as cauchy_1d")
    r.add_argument("--params", default="", help="comma-separated key=value pairs")
    r.add_argument("--emit", required=True, help="output model JSON path")
    r.set_defaults(func=cmd_preset)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    _config.set_threads(args.threads)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"levykit: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"levykit: validation error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"levykit: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LevyKitError as exc:
        print(f"levykit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"levykit: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
