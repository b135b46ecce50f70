"""Command-line interface: ``fit``, ``compare``, ``bench`` and ``report``.

Exit codes: 0 on success, 2 when a fit finished with warnings (a component
could not reach ``alpha``), 1 on error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .baseline import comparison_curves, crossing_cardinalities
from .bench import (
    collect_timings,
    fit_complexity,
    gen_random_lowrank,
    read_timings_csv,
    summarize_timings,
    write_timings_csv,
)
from .core import FitConfig, UnreachableAlphaWarning, fit
from .data import RawTable, load_csv, preprocess
from .exceptions import PSPCAError
from .metrics import response_r2

log = logging.getLogger("pspca")

EXIT_OK, EXIT_ERROR, EXIT_WARN = 0, 1, 2

SUMMARY_COLUMNS = ("component", "cum_vexp_pct", "rcvexp_pct", "cardinality", "pc_correlation")
CURVE_COLUMNS = ("method", "cardinality", "norm", "rel_norm", "rcvexp", "pc_correlation")

DEFAULTS = {
    "alpha": 0.95,
    "scaling": "cov",
    "method": "projection",
    "components": 10,
    "vexp_fraction": None,
    "tol": 1e-9,
    "max_iter": None,
    "collinearity_tol": 1e-10,
    "max_card": None,
    "eigen_side": None,
    "delimiter": ",",
    "no_header": False,
    "label_column": None,
    "response": None,
    "log_response": False,
    "sizes": "200,500,1000,2000,4000",
    "reps": 20,
    "n": 200,
    "rank": 20,
    "noise": 0.1,
    "seed": 0,
}
_TYPES = {
    "alpha": float,
    "components": int,
    "vexp_fraction": float,
    "tol": float,
    "max_iter": int,
    "collinearity_tol": float,
    "max_card": int,
    "label_column": int,
    "reps": int,
    "n": int,
    "rank": int,
    "noise": float,
    "seed": int,
    "no_header": lambda s: s.lower() in ("1", "true", "yes"),
    "log_response": lambda s: s.lower() in ("1", "true", "yes"),
}


def fmt(x):
    """Serialize a number with 12 significant digits."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def read_config_file(path):
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        out[key] = _TYPES.get(key, str)(value)
    return out


def effective_config(args):
    """Defaults, overridden by the config file, overridden by explicit flags.

    Only options the subcommand accepts are kept; unknown config-file keys
    are an error.
    """
    keys = [k for k in vars(args) if k not in ("func", "config")]
    cfg = {k: DEFAULTS.get(k) for k in keys}
    if getattr(args, "config", None):
        from_file = read_config_file(args.config)
        unknown = sorted(set(from_file) - set(keys))
        if unknown:
            raise ValueError(f"{args.config}: unknown keys {unknown}")
        cfg.update(from_file)
    for key in keys:
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    return cfg


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_manifest(out, cfg, extra):
    manifest = {"pspca_version": __version__, "config": cfg, **extra}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def _load(cfg):
    opt = {**DEFAULTS, **{k: v for k, v in cfg.items() if v is not None}}
    table = load_csv(
        opt["input"],
        has_header=not opt["no_header"],
        delimiter=opt["delimiter"],
        label_column=opt["label_column"],
    )
    y = None
    if opt["response"] is not None:
        name = opt["response"]
        if name not in table.column_names:
            raise ValueError(f"response column {name!r} not found")
        k = table.column_names.index(name)
        y = table.values[:, k]
        if np.isnan(y).any():
            raise ValueError("response has missing values")
        if opt["log_response"]:
            if (y <= 0).any():
                raise ValueError("log response needs positive values")
            y = np.log(y)
        keep = [j for j in range(table.p) if j != k]
        table = RawTable([table.column_names[j] for j in keep], table.values[:, keep], table.row_labels)
    data = preprocess(table, scaling=opt["scaling"], missing_policy="drop_columns")
    return data, y


def _fit_config(cfg):
    return FitConfig(
        alpha=cfg["alpha"],
        method=cfg["method"],
        n_components=None if cfg["vexp_fraction"] is not None else cfg["components"],
        vexp_fraction=cfg["vexp_fraction"],
        tol=cfg["tol"],
        max_iter=cfg["max_iter"],
        collinearity_tol=cfg["collinearity_tol"],
        max_card=cfg["max_card"],
        eigen_side=cfg["eigen_side"] or "auto",
    )


def cmd_fit(args):
    cfg = effective_config(args)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    data, y = _load(cfg)
    fcfg = _fit_config(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UnreachableAlphaWarning)
        res = fit(data, fcfg)
    for w in caught:
        log.warning("%s", w.message)

    k = res.n_components
    comp_names = [f"comp{j + 1}" for j in range(k)]
    L = res.loadings
    write_csv(out / "loadings.csv", ["variable", *comp_names],
              [[nm, *map(fmt, L[i])] for i, nm in enumerate(data.column_names)])
    S = res.scores
    write_csv(out / "scores.csv", comp_names, [list(map(fmt, row)) for row in S])

    header = list(SUMMARY_COLUMNS) + ["evexp", "vexp_q", "pc_lambda"]
    r2_pc = r2_sp = None
    if y is not None:
        header += ["r2_response_pcs_pct", "r2_response_sparse_pct"]
        U = np.column_stack(res.pc_scores)
        r2_pc = [100 * response_r2(U[:, : j + 1], y) for j in range(k)]
        r2_sp = [100 * response_r2(S[:, : j + 1], y) for j in range(k)]
    rows = []
    for j, c in enumerate(res.components):
        row = [j + 1, fmt(100 * res.cum_vexp[j] / res.total_variance), fmt(100 * res.rcvexp[j]),
               c.cardinality, fmt(c.pc_correlation), fmt(c.evexp), fmt(c.vexp_q), fmt(c.ref_lambda)]
        if y is not None:
            row += [fmt(r2_pc[j]), fmt(r2_sp[j])]
        rows.append(row)
    write_csv(out / "summary.csv", header, rows)

    write_manifest(out, cfg, {
        "command": "fit",
        "n": data.n,
        "p": data.p,
        "dropped_columns": data.dropped_columns,
        "stop_reason": res.stop_reason,
        "unreachable_components": [j + 1 for j in res.unreachable_steps],
        "total_variance": res.total_variance,
        "warnings": [str(w.message) for w in caught],
    })
    print(render_summary(header, rows))
    return EXIT_WARN if res.unreachable_steps else EXIT_OK


def cmd_compare(args):
    cfg = effective_config(args)
    if cfg.get("max_card") is None or cfg["max_card"] < 1:
        raise ValueError("compare needs --max-card >= 1")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    data, _ = _load(cfg)
    points = comparison_curves(data, cfg["max_card"])
    write_csv(out / "curves.csv", CURVE_COLUMNS,
              [[q.method, q.cardinality, fmt(q.norm), fmt(q.rel_norm), fmt(q.rcvexp), fmt(q.pc_correlation)]
               for q in points])
    cross = crossing_cardinalities(points)
    write_csv(out / "crossing.csv", ["method", "min_cardinality"],
              [[m, "not reached" if c is None else c] for m, c in cross.items()])
    write_manifest(out, cfg, {"command": "compare", "n": data.n, "p": data.p,
                              "dropped_columns": data.dropped_columns, "crossing": cross})
    for m, c in cross.items():
        print(f"{m:<12} reaches 99.9% rCvexp at cardinality {'not reached' if c is None else c}")
    return EXIT_OK


def cmd_bench(args):
    cfg = effective_config(args)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    sizes = [int(s) for s in str(cfg["sizes"]).split(",") if s.strip()]
    datasets = [
        (f"synthetic_p{p}", gen_random_lowrank(cfg["n"], p, min(cfg["rank"], cfg["n"], p), cfg["noise"], cfg["seed"] + p))
        for p in sizes
    ]
    for path in cfg.get("inputs") or []:
        data, _ = _load({**cfg, "input": path})
        datasets.append((Path(path).stem, data))
    raw = collect_timings(datasets, components=cfg["components"], repetitions=cfg["reps"],
                          alpha=cfg["alpha"], eigen_side=cfg["eigen_side"] or "variables")
    write_timings_csv(raw, out / "timings.csv")
    failed = sorted({(r.dataset, r.error) for r in raw if r.error})
    write_manifest(out, cfg, {"command": "bench", "datasets": [d for d, _ in datasets],
                              "failures": [f"{d}: {e}" for d, e in failed]})
    print(render_timings(summarize_timings(raw)))
    return EXIT_WARN if failed else EXIT_OK


def render_summary(header, rows):
    """Statistics down, components across; percentages to one decimal."""
    k = len(rows)
    lines = ["".ljust(28) + "".join(f"Comp{j + 1:<6}" for j in range(k))]
    for col, name in enumerate(header[1:], start=1):
        vals = []
        for r in rows:
            v = float(r[col])
            vals.append(f"{v:.1f}" if name.endswith("_pct") else f"{v:.0f}" if name == "cardinality"
                        else f"{v:.2f}" if name == "pc_correlation" else f"{v:.4g}")
        lines.append(name.ljust(28) + "".join(f"{v:<10}" for v in vals))
    return "\n".join(lines)


def render_timings(medians):
    """Median times (seconds) with prefix length down and datasets across."""
    if not medians:
        return "no timings"
    sets = sorted({(r.p, r.dataset) for r in medians})
    cs = sorted({r.c for r in medians})
    cell = {(r.dataset, r.c): r.elapsed for r in medians}
    lines = ["components".ljust(12) + "".join(f"{d[:16]:>18}" for _, d in sets),
             "no. vars".ljust(12) + "".join(f"{p:>18}" for p, _ in sets)]
    for c in cs:
        vals = [cell.get((d, c)) for _, d in sets]
        lines.append(f"{c:<12}" + "".join(f"{v:>18.4g}" if v is not None else f"{'-':>18}" for v in vals))
    return "\n".join(lines)


def render_complexity(cf):
    return "\n".join([
        "regression of log10(T) on log10(c) and log10(p)",
        f"{'coefficient':<14}{'estimate':>10}{'std.err':>10}",
        f"{'log10(k)':<14}{cf.log_k:>10.2f}{cf.std_errors[0]:>10.2f}",
        f"{'alpha':<14}{cf.alpha_exp:>10.2f}{cf.std_errors[1]:>10.2f}",
        f"{'beta':<14}{cf.beta_exp:>10.2f}{cf.std_errors[2]:>10.2f}",
        f"residual standard error {cf.residual_se:.4f} on {cf.n_obs - 3} degrees of freedom",
        f"R-squared {cf.r_squared:.4f}",
    ])


def cmd_report(args):
    src = Path(args.in_dir)
    if not src.is_dir():
        raise FileNotFoundError(f"{src} is not a directory")
    sections = []
    summary = src / "summary.csv"
    if summary.exists():
        with open(summary, newline="") as fh:
            rows = list(csv.reader(fh))
        if len(rows) > 1:
            sections.append("Summary statistics of the sparse components\n" + render_summary(rows[0], rows[1:]))
    timings = src / "timings.csv"
    if timings.exists():
        raw = read_timings_csv(timings)
        if not raw:
            raise ValueError(f"{timings} holds no timing records")
        med = summarize_timings(raw)
        sections.append("Median computation times (s)\n" + render_timings(med))
        try:
            sections.append(render_complexity(fit_complexity(med)))
        except ValueError:
            try:
                cf = fit_complexity(med, min_levels=2)
                sections.append(render_complexity(cf) + "\n(fewer than 3 sizes: indicative only)")
            except ValueError as exc:
                sections.append(f"complexity regression not available: {exc}")
    curves = src / "curves.csv"
    if curves.exists():
        with open(curves, newline="") as fh:
            rows = list(csv.DictReader(fh))
        lines = ["First component versus cardinality",
                 f"{'method':<12}{'card':>6}{'norm':>14}{'rel_norm':>10}{'rCvexp':>10}{'corr':>8}"]
        for r in rows:
            lines.append(f"{r['method']:<12}{int(r['cardinality']):>6}{float(r['norm']):>14.6g}"
                         f"{float(r['rel_norm']):>10.3f}{100 * float(r['rcvexp']):>9.1f}%{float(r['pc_correlation']):>8.3f}")
        sections.append("\n".join(lines))
    crossing = src / "crossing.csv"
    if crossing.exists():
        with open(crossing, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        sections.append("Cardinality needed to reach 99.9% rCvexp\n"
                        + "\n".join(f"{m:<12}{c:>14}" for m, c in rows))
    if not sections:
        raise ValueError(f"{src}: nothing to report")
    text = "\n\n".join(sections) + "\n"
    (src / "report.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


def _add_data_args(p):
    p.add_argument("--input", required=True, help="CSV file")
    p.add_argument("--scaling", choices=["cov", "cor"])
    p.add_argument("--delimiter")
    p.add_argument("--no-header", action="store_true", default=None)
    p.add_argument("--label-column", type=int, help="0-based column of row labels")
    p.add_argument("--out", required=True, help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="pspca", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="compute sparse components")
    _add_data_args(p)
    p.add_argument("--config", help="key=value file; flags take precedence")
    p.add_argument("--alpha", type=float)
    p.add_argument("--method", choices=["projection", "lsspca"])
    p.add_argument("--components", type=int)
    p.add_argument("--vexp-fraction", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--collinearity-tol", type=float)
    p.add_argument("--max-card", type=int)
    p.add_argument("--eigen-side", choices=["auto", "variables", "scores"])
    p.add_argument("--response", help="column regressed on the components, excluded from the analysis")
    p.add_argument("--log-response", action="store_true", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="first-component curves against thresholding")
    _add_data_args(p)
    p.add_argument("--config")
    p.add_argument("--max-card", type=int, required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="timing sweep over synthetic sizes")
    p.add_argument("--config")
    p.add_argument("--sizes", help="comma-separated variable counts")
    p.add_argument("--reps", type=int)
    p.add_argument("--n", type=int, help="observations per synthetic dataset")
    p.add_argument("--components", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--rank", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--eigen-side", choices=["auto", "variables", "scores"])
    p.add_argument("--inputs", nargs="*", help="extra CSV datasets to time")
    p.add_argument("--label-column", type=int, help="0-based label column of the extra datasets")
    p.add_argument("--scaling", choices=["cov", "cor"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="render tables from fit/compare/bench outputs")
    p.add_argument("--in", dest="in_dir", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    verbose = args.verbose
    del args.verbose, args.command
    try:
        return args.func(args)
    except (PSPCAError, ValueError, OSError) as exc:
        if verbose:
            log.exception("failed")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
