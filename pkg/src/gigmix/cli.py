"""
Command-line entry point: ``gigmix {simulate,maxent,fit,select,plotdata}``.

Options come from flags, then an optional ``--config`` file (YAML or JSON,
either flat or with a section per command), then built-in defaults. Every
command writes its resolved options to ``config.json`` in the output
directory next to its results.
"""

import argparse
import csv
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from .data import build_histogram, load_samples, write_histogram_csv, write_samples_csv
from .documents import DEMO_SPEC, dump_json, load_document, model_from_dict, model_to_dict
from .errors import (
    DegenerateRangeError,
    DomainError,
    EmptyDatasetError,
    GigmixError,
    InitializationError,
    InsufficientDataError,
    NoSolutionError,
    NonNormalizableError,
    RangeError,
    ValidationError,
)
from .inference import ChainConfig, PriorBox, log_posterior, map_estimate, run_mcmc
from .maxent import ConstraintSet, PriorSpec, check_feasible, maxent_entropy, maxent_log_pdf, solve_multipliers_detail
from .mixture import PARAM_NAMES, mixture_log_pdf
from .model_select import LadderConfig, Method, posterior_over_k, selection_report
from .pythagorean import FamilyMember, Kind, family_log_pdf
from .quadrature import log_window
from .sampling import sample_mixture

log = logging.getLogger("gigmix")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4, 5
GRID_POINTS = 512
# plotting grids span the region where x * f(x) is within e^-40 of its peak
_PLOT_CUTOFF = 40.0


class UsageError(GigmixError):
    pass


def _int(v):
    if isinstance(v, bool):
        raise ValueError("expected an integer")
    if isinstance(v, float) and not v.is_integer():
        raise ValueError("expected an integer")
    return int(v)


def _float(v):
    if isinstance(v, bool):
        raise ValueError("expected a number")
    return float(v)


def _opt_float(v):
    return None if v is None else _float(v)


def _str(v):
    return None if v is None else str(v)


def _any(v):
    return v


COMMON = {"seed": (_int, 42), "threads": (_int, 1), "out": (str, "out")}

OPTIONS = {
    "simulate": {"spec": (_str, None), "n": (_int, 50000)},
    "maxent": {
        "mu": (_opt_float, None),
        "gamma": (_opt_float, None),
        "eta": (_opt_float, None),
        "prior": (_str, "uniform"),
        "grid": (_int, GRID_POINTS),
    },
    "fit": {
        "data": (_str, None),
        "k": (_int, 3),
        "family": (str, "gig"),
        "bins": (lambda v: None if v is None else _int(v), None),
        "prior": (_any, None),
        "iterations": (_int, 50000),
        "burn_in": (_float, 0.2),
        "thin": (_int, 5),
        "walkers": (_int, 1),
    },
    "select": {
        "data": (_str, None),
        "k": (str, "1..4"),
        "family": (str, "gig"),
        "bins": (lambda v: None if v is None else _int(v), None),
        "prior": (_any, None),
        "k_prior": (_any, None),
        "temperatures": (_int, 32),
        "samples": (_int, 10000),
        "walkers": (_int, 8),
        "burn_in": (_float, 0.5),
        "method": (str, Method.STEPPING_STONE.value),
    },
    "plotdata": {
        "kind": (str, "subclasses"),
        "alpha": (_float, 1.0),
        "beta": (_float, 1.0),
        "grid": (_int, GRID_POINTS),
        "overlay": (_str, None),
    },
}


def _build_parser():
    parser = argparse.ArgumentParser(prog="gigmix", description="Pythagorean-family mixtures: simulate, fit, select.")
    parser.add_argument("--version", action="version", version=f"gigmix {__version__}")
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="RNG seed (default 42)")
    common.add_argument("--threads", type=int, help="worker threads for independent chains (default 1)")
    common.add_argument("--config", help="YAML or JSON options file")
    common.add_argument("--out", help="output directory (default ./out)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="draw samples from a mixture spec",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--spec", help="model spec file; the built-in demo spec when omitted")
    p.add_argument("-n", "--n", type=int, help="number of draws (default 50000)")

    p = sub.add_parser("maxent", parents=[common], help="solve a maximum-entropy problem",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--mu", type=float, help="arithmetic mean target")
    p.add_argument("--gamma", type=float, help="geometric mean target")
    p.add_argument("--eta", type=float, help="harmonic mean target")
    p.add_argument("--prior", help="'uniform' or a CSV of x,q knots")
    p.add_argument("--grid", type=int, help="density table size (default 512)")

    for name, what in (("fit", "fit a k-component mixture"), ("select", "compare numbers of components")):
        p = sub.add_parser(name, parents=[common], help=what, argument_default=argparse.SUPPRESS)
        p.add_argument("--data", help="CSV of positive samples (first column)")
        p.add_argument("--family", choices=[k.value for k in Kind])
        p.add_argument("--bins", type=int, help="histogram bins (Freedman-Diaconis when omitted)")
        p.add_argument("--prior", help="prior box file (bounds, fixed, concentration)")
        p.add_argument("--burn-in", dest="burn_in", type=float, help="burn-in fraction")
        p.add_argument("--walkers", type=int)
        if name == "fit":
            p.add_argument("-k", "--k", type=int, help="number of components (default 3)")
            p.add_argument("--iterations", type=int)
            p.add_argument("--thin", type=int)
        else:
            p.add_argument("-k", "--k", help="candidate range, e.g. 1..4 or 1,2,3 (default 1..4)")
            p.add_argument("--temperatures", type=int)
            p.add_argument("--samples", type=int, help="retained draws per temperature")
            p.add_argument("--method", choices=[m.value for m in Method])

    p = sub.add_parser("plotdata", parents=[common], help="plot-ready tables and SVG",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("kind", choices=["subclasses", "mixture-overlay"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--overlay", help="overlay.csv written by 'fit'")
    return parser


def resolve(command, flags, file_doc):
    """Merge flags over the config file over defaults, converting file values."""
    schema = {**COMMON, **OPTIONS[command]}
    merged = {name: default for name, (_, default) in schema.items()}
    section = dict(file_doc or {})
    nested = section.pop(command, None)
    for other in OPTIONS:
        section.pop(other, None)
    if nested is not None:
        if not isinstance(nested, dict):
            raise ValidationError("must be a mapping", command)
        section.update(nested)
    for key, value in section.items():
        key = key.replace("-", "_")
        if key not in schema:
            raise ValidationError("unknown option", key)
        conv = schema[key][0]
        try:
            merged[key] = conv(value) if value is not None else None
        except (TypeError, ValueError) as exc:
            raise ValidationError(str(exc), key) from None
    for key, value in flags.items():
        if key in schema:
            merged[key] = value
    return merged


def parse_k_range(text):
    text = str(text).strip()
    try:
        if ".." in text:
            a, b = (int(p) for p in text.split(".."))
            if a > b:
                raise UsageError(f"empty k range {text!r}")
            values = list(range(a, b + 1))
        else:
            values = [int(p) for p in text.split(",")]
    except ValueError:
        raise UsageError(f"malformed k range {text!r}") from None
    if not values or any(k < 1 for k in values) or len(set(values)) != len(values):
        raise UsageError(f"k range {text!r} must list distinct positive integers")
    return values


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _check_positive(cfg, *names):
    for name in names:
        v = cfg[name]
        if v is None or v <= 0:
            raise ValidationError("must be positive", name)


# ---------------------------------------------------------------- commands


def cmd_simulate(cfg):
    _check_positive(cfg, "n")
    doc = DEMO_SPEC if cfg["spec"] is None else load_document(cfg["spec"])
    model = model_from_dict(doc)
    values, labels = sample_mixture(model, cfg["n"], cfg["seed"])
    write_samples_csv(values, labels, os.path.join(cfg["out"], "samples.csv"))
    counts = np.bincount(labels, minlength=model.k)
    dump_json(
        {
            "model": model_to_dict(model),
            "seed": cfg["seed"],
            "n": cfg["n"],
            "label_counts": [int(c) for c in counts],
            "label_frequencies": [float(c) / cfg["n"] for c in counts],
        },
        os.path.join(cfg["out"], "metadata.json"),
    )
    print(f"wrote {cfg['n']} draws to {os.path.join(cfg['out'], 'samples.csv')}")


def _read_prior_table(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    try:
        float(rows[0][0])
    except (ValueError, IndexError):
        rows = rows[1:]
    try:
        x = [float(r[0]) for r in rows]
        q = [float(r[1]) for r in rows]
    except (ValueError, IndexError):
        raise ValidationError("prior table needs numeric x,q rows", "prior") from None
    try:
        return PriorSpec.tabulated(x, q)
    except DomainError as exc:
        raise ValidationError(str(exc), "prior") from None


def _plot_grid(log_density, n):
    """Log-spaced grid covering where x * f(x) is within e^-40 of its peak."""
    lo, hi, _, _ = log_window(lambda u: log_density(np.exp(u)) + u, cutoff=_PLOT_CUTOFF, step=0.05)
    return np.exp(np.linspace(lo, hi, n))


def cmd_maxent(cfg):
    _check_positive(cfg, "grid")
    if cfg["mu"] is None and cfg["gamma"] is None and cfg["eta"] is None:
        raise ValidationError("give at least one of --mu, --gamma, --eta", "mu")
    for name in ("mu", "gamma", "eta"):
        if cfg[name] is not None and not cfg[name] > 0:
            raise ValidationError("must be positive", name)
    prior = PriorSpec.uniform() if cfg["prior"] in (None, "uniform") else _read_prior_table(cfg["prior"])
    constraints = ConstraintSet.from_means(cfg["mu"], cfg["gamma"], cfg["eta"])
    check_feasible(constraints)
    sol = solve_multipliers_detail(prior, constraints)
    m = sol.multipliers
    doc = {
        "multipliers": {
            "lambda0": float(m.lambda0),
            "lambda1": float(m.lambda1),
            "lambda2": float(m.lambda2),
            "lambda3": float(m.lambda3),
        },
        "iterations": sol.iterations,
        "entropy": float(maxent_entropy(prior, m)),
        "targets": {"mu": cfg["mu"], "gamma": cfg["gamma"], "eta": cfg["eta"]},
        "prior": prior.kind.value,
    }
    if prior.is_uniform:
        if m.lambda1 > 0 and m.lambda2 > 0:
            doc["gig"] = {
                "lam": m.lambda3,
                "alpha": math.sqrt(m.lambda2 / m.lambda1),
                "beta": 2.0 * math.sqrt(m.lambda1 * m.lambda2),
            }
        elif m.lambda1 > 0 and m.lambda2 == 0:
            doc["gamma"] = {"shape": m.lambda3, "rate": m.lambda1}
        elif m.lambda2 > 0 and m.lambda1 == 0:
            doc["inverse_gamma"] = {"shape": -m.lambda3, "scale": m.lambda2}
    dump_json(doc, os.path.join(cfg["out"], "multipliers.json"))
    if prior.is_uniform:
        x = _plot_grid(lambda v: maxent_log_pdf(prior, m, v), cfg["grid"])
    else:
        # a knot at zero has no logarithm; start nine decades below the top instead
        lo = prior.x[0] if prior.x[0] > 0 else prior.x[-1] * 1e-9
        x = np.exp(np.linspace(math.log(lo), math.log(prior.x[-1]), cfg["grid"]))
    pdf = np.exp(maxent_log_pdf(prior, m, x))
    _write_csv(os.path.join(cfg["out"], "density.csv"), ["x", "pdf"], zip(x, pdf))
    print(" ".join(f"{k}={v!r}" for k, v in doc["multipliers"].items()))


def _histogram_for(cfg):
    if cfg["data"] is None:
        raise ValidationError("a data file is required", "data")
    loaded = load_samples(cfg["data"])
    return build_histogram(loaded.values, cfg["bins"]), loaded.rejected


def _prior_for(cfg, h):
    spec = cfg["prior"]
    if isinstance(spec, str):
        spec = load_document(spec)
    spec = dict(spec or {})
    kind = spec.pop("kind", cfg["family"])
    unknown = set(spec) - {"bounds", "fixed", "concentration"}
    if unknown:
        raise ValidationError(f"unexpected fields {sorted(unknown)}", "prior")
    try:
        return PriorBox.default(
            h,
            kind,
            bounds=spec.get("bounds"),
            fixed=spec.get("fixed"),
            concentration=spec.get("concentration", 1.0),
        )
    except (DomainError, ValueError, TypeError) as exc:
        raise ValidationError(str(exc), "prior") from None


def _overlay_rows(model, h):
    centers = h.centers
    comps = [w * np.exp(family_log_pdf(c, centers)) for w, c in zip(model.weights, model.components)]
    mix = np.exp(mixture_log_pdf(model, centers))
    return [[c, d, *(col[i] for col in comps), m] for i, (c, d, m) in enumerate(zip(centers, h.density, mix))]


def cmd_fit(cfg):
    _check_positive(cfg, "k", "iterations", "thin", "walkers")
    h, rejected = _histogram_for(cfg)
    prior = _prior_for(cfg, h)
    cfg["prior"] = prior.to_dict()
    try:
        chain_cfg = ChainConfig(cfg["iterations"], cfg["burn_in"], cfg["thin"], cfg["walkers"])
    except DomainError as exc:
        raise ValidationError(str(exc), "iterations") from None
    chain = run_mcmc(h, cfg["k"], prior, chain_cfg, seed=cfg["seed"])
    model = map_estimate(chain, h, prior)
    out = cfg["out"]
    write_histogram_csv(h, os.path.join(out, "histogram.csv"))
    _write_csv(os.path.join(out, "chain.csv"), chain.columns(), chain.table().tolist())
    names = PARAM_NAMES[prior.kind]
    lo, hi = np.percentile(chain.theta, [2.5, 97.5], axis=0)
    wlo, whi = np.percentile(chain.weights, [2.5, 97.5], axis=0)
    intervals = {
        "weights": [[float(a), float(b)] for a, b in zip(wlo, whi)],
        "components": [
            {n: [float(lo[j, i]), float(hi[j, i])] for i, n in enumerate(names)} for j in range(chain.k)
        ],
    }
    dump_json(
        {
            "map": model_to_dict(model),
            "log_posterior": log_posterior(model, h, prior),
            "best_chain_log_posterior": float(chain.log_posterior.max()),
            "acceptance_rate": chain.acceptance_rate,
            "credible_95": intervals,
            "draws": len(chain),
            "rejected_rows": rejected,
        },
        os.path.join(out, "map.json"),
    )
    header = ["center", "empirical_density"] + [f"component_{j + 1}" for j in range(model.k)] + ["mixture"]
    _write_csv(os.path.join(out, "overlay.csv"), header, _overlay_rows(model, h))
    print(f"MAP weights: {', '.join(f'{w:.4f}' for w in model.weights)}")


def cmd_select(cfg):
    k_values = parse_k_range(cfg["k"])
    _check_positive(cfg, "temperatures", "samples", "walkers")
    h, rejected = _histogram_for(cfg)
    prior = _prior_for(cfg, h)
    cfg["prior"] = prior.to_dict()
    try:
        ladder = LadderConfig(
            temperatures=cfg["temperatures"],
            samples=cfg["samples"],
            walkers=cfg["walkers"],
            burn_in=cfg["burn_in"],
            method=cfg["method"],
        )
    except (DomainError, ValueError) as exc:
        raise ValidationError(str(exc), "temperatures") from None
    k_prior = cfg["k_prior"]
    if k_prior is not None:
        if not isinstance(k_prior, list) or len(k_prior) != len(k_values):
            raise ValidationError("need one probability per candidate k", "k_prior")
        try:
            k_prior = [float(p) for p in k_prior]
        except (TypeError, ValueError):
            raise ValidationError("probabilities must be numbers", "k_prior") from None
    results = posterior_over_k(h, k_values, prior, k_prior, ladder, cfg["seed"], cfg["threads"])
    report = selection_report(results)
    report["rejected_rows"] = rejected
    write_histogram_csv(h, os.path.join(cfg["out"], "histogram.csv"))
    dump_json(report, os.path.join(cfg["out"], "report.json"))
    _write_csv(
        os.path.join(cfg["out"], "evidence.csv"),
        ["k", "log_evidence", "standard_error", "posterior_probability"],
        [[k, e.log_evidence, e.standard_error, p] for k, p, e in results],
    )
    for k, p, e in results:
        print(f"k={k}  log evidence {e.log_evidence:.3f} +/- {e.standard_error:.3f}  p={p:.4f}")
    print(f"argmax k = {report['argmax_k']}")


def subclass_table(alpha, beta, n=GRID_POINTS):
    """Grid and densities of the IG, RIG and hyperbolic members at (alpha, beta)."""
    kinds = (Kind.INVERSE_GAUSSIAN, Kind.RECIPROCAL_INVERSE_GAUSSIAN, Kind.HYPERBOLIC)
    members = [FamilyMember.subclass(k, alpha, beta) for k in kinds]
    windows = [
        log_window(lambda u, m=m: family_log_pdf(m, np.exp(u)) + u, cutoff=_PLOT_CUTOFF, step=0.05)
        for m in members
    ]
    lo = min(w[0] for w in windows)
    hi = max(w[1] for w in windows)
    x = np.exp(np.linspace(lo, hi, n))
    return x, [np.exp(family_log_pdf(m, x)) for m in members], kinds


def _svg_overlay(rows, header):
    width, height, pad = 800, 500, 50
    data = np.array(rows, dtype=float)
    x = data[:, 0]
    ymax = float(np.max(data[:, 1:])) * 1.05 or 1.0
    x0, x1 = float(x.min()), float(x.max())
    span = (x1 - x0) or 1.0

    def px(v):
        return pad + (v - x0) / span * (width - 2 * pad)

    def py(v):
        return height - pad - v / ymax * (height - 2 * pad)

    def path(col):
        return " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, col))

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f"<!-- generator: gigmix {__version__} -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" font-size="14">x</text>',
        f'<text x="{pad}" y="{pad - 10}" font-size="12">max density {ymax:.4g}</text>',
    ]
    for a, b in zip(x, data[:, 1]):
        out.append(f'<circle class="empirical" cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5" fill="black"/>')
    for j in range(2, data.shape[1] - 1):
        out.append(
            f'<polyline class="component" data-name="{header[j]}" fill="none" stroke="steelblue" '
            f'stroke-dasharray="6,4" points="{path(data[:, j])}"/>'
        )
    out.append(f'<polyline class="mixture" fill="none" stroke="firebrick" stroke-width="2" points="{path(data[:, -1])}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_plotdata(cfg):
    out = cfg["out"]
    if cfg["kind"] == "subclasses":
        _check_positive(cfg, "alpha", "beta", "grid")
        x, cols, kinds = subclass_table(cfg["alpha"], cfg["beta"], cfg["grid"])
        _write_csv(
            os.path.join(out, "subclasses.csv"),
            ["x"] + [k.value for k in kinds],
            [[xi, *(c[i] for c in cols)] for i, xi in enumerate(x)],
        )
        print(f"wrote {os.path.join(out, 'subclasses.csv')}")
    elif cfg["kind"] == "mixture-overlay":
        if cfg["overlay"] is None:
            raise ValidationError("an overlay table from 'fit' is required", "overlay")
        with open(cfg["overlay"], newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in r] for r in reader if r]
        if len(header) < 4 or not header[-1] == "mixture" or not rows:
            raise ValidationError("not an overlay table", "overlay")
        with open(os.path.join(out, "overlay.svg"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_svg_overlay(rows, header))
        print(f"wrote {os.path.join(out, 'overlay.svg')}")
    else:
        raise UsageError(f"unknown plot kind {cfg['kind']!r}")


COMMANDS = {
    "simulate": cmd_simulate,
    "maxent": cmd_maxent,
    "fit": cmd_fit,
    "select": cmd_select,
    "plotdata": cmd_plotdata,
}


def _exit_code(exc):
    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, (RangeError, NonNormalizableError, InitializationError, ArithmeticError)) and not isinstance(
        exc, NoSolutionError
    ):
        return EXIT_NUMERICAL
    if isinstance(
        exc,
        (ValidationError, DomainError, NoSolutionError, InsufficientDataError, DegenerateRangeError, EmptyDatasetError),
    ):
        return EXIT_VALIDATION
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_NUMERICAL


def main(argv=None):
    parser = _build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    verbose = args.pop("verbose", 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        file_doc = load_document(args.pop("config")) if "config" in args else {}
        cfg = resolve(command, args, file_doc)
        if not 0 <= cfg["seed"] < 2**64:
            raise ValidationError("must be a 64-bit unsigned integer", "seed")
        if cfg["threads"] < 1:
            raise ValidationError("must be at least 1", "threads")
        os.makedirs(cfg["out"], exist_ok=True)
        COMMANDS[command](cfg)
        dump_json({"command": command, **cfg}, os.path.join(cfg["out"], "config.json"))
    except UsageError as exc:
        parser.error(str(exc))
    except (GigmixError, OSError, ArithmeticError, ValueError) as exc:
        if isinstance(exc, OSError) and exc.filename:
            msg = f"{exc.strerror or exc}: {exc.filename}"
        else:
            msg = str(exc)
        print(f"gigmix {command}: error: {msg}", file=sys.stderr)
        return _exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
