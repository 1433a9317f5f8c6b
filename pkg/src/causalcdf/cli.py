"""Command-line front end.

``causalcdf simulate`` runs the Monte Carlo study and writes metrics.csv,
report.json, and tables.md.  ``causalcdf analyze`` runs the full pipeline on
a CSV dataset and writes report.json, graph.json, and tables.md.  Config
precedence: CLI flags > JSON config file > built-in defaults.  Every report
embeds the resolved configuration, its hash, and the library version;
worker-count settings are runtime-only and never change the outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._util import default_threads
from .datamodel import ColumnSpec, load_csv
from .effects import EstimandSpec, ate, dte, qte
from .errors import CausalCdfError, RunError, SchemaError, ValidationError, EmptyDataError
from .inference import bootstrap_se
from .pipeline import PipelineOptions, PointEstimator, estimate_reports, fit_cdf_pipeline
from .simulation import (SCENARIOS, ScenarioConfig, SimOptions, metrics_to_csv,
                         metrics_to_markdown, run_replications)

USAGE_ERROR = 2
RUN_ERROR = 1

SIMULATE_DEFAULTS = {
    "scenario": "independent",
    "n": 500,
    "reps": 1000,
    "seed": 0,
    "p": 12,
    "gamma0": 1.0,
    "rho": 0.3,
    "q": [0.2, 0.25, 0.5, 0.75, 0.8],
    "dte": [-3.0, 0.0, 3.0],
    "methods": ["IPW", "LD", "CDF", "Firpo"],
    "lambda_ratio": 1.0,
    "clip_eps": 1e-3,
    "format": "markdown",
}

ANALYZE_DEFAULTS = {
    "seed": 0,
    "q": [0.2, 0.25, 0.5, 0.75, 0.8],
    "dte": ["mean"],
    "methods": ["IPW", "LD", "CDF", "Firpo"],
    "bootstrap": 10000,
    "missing": "drop_row",
    "lambda_ratio": 1.0,
    "clip_eps": 1e-3,
    "format": "markdown",
}


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in str(text).split(",") if tok != ""]


def _dte_list(text: str) -> list:
    out = []
    for tok in str(text).split(","):
        if tok == "":
            continue
        out.append("mean" if tok.strip() == "mean" else float(tok))
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalcdf",
        description="Treatment-effect estimation via weighted counterfactual CDFs",
    )
    parser.add_argument("--version", action="version", version=f"causalcdf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the Monte Carlo study")
    sim.add_argument("--scenario", choices=SCENARIOS)
    sim.add_argument("--n", type=int)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--p", type=int)
    sim.add_argument("--gamma0", type=float)
    sim.add_argument("--rho", type=float)
    sim.add_argument("--q", type=_float_list, help="comma-separated quantile levels")
    sim.add_argument("--dte", type=_float_list, help="comma-separated CDF-gap points")
    sim.add_argument("--methods", type=lambda s: s.split(","))
    sim.add_argument("--lambda-ratio", dest="lambda_ratio", type=float)
    sim.add_argument("--clip-eps", dest="clip_eps", type=float)
    sim.add_argument("--format", choices=("json", "csv", "markdown"))

    ana = sub.add_parser("analyze", help="analyze a CSV dataset")
    ana.add_argument("--data", required=True, help="CSV file path")
    ana.add_argument("--outcome", required=True)
    ana.add_argument("--treatment", required=True)
    ana.add_argument("--confounders", required=True, type=lambda s: s.split(","))
    ana.add_argument("--missing", choices=("drop_row", "fail"))
    ana.add_argument("--seed", type=int)
    ana.add_argument("--q", type=_float_list)
    ana.add_argument("--dte", type=_dte_list, help="comma-separated points and/or 'mean'")
    ana.add_argument("--methods", type=lambda s: s.split(","))
    ana.add_argument("--bootstrap", type=int,
                     help="bootstrap replications for SEs; 0 uses sandwich SEs")
    ana.add_argument("--lambda-ratio", dest="lambda_ratio", type=float)
    ana.add_argument("--clip-eps", dest="clip_eps", type=float)
    ana.add_argument("--format", choices=("json", "csv", "markdown"))

    for p in (sim, ana):
        p.add_argument("--config", help="JSON config file (flags take precedence)")
        p.add_argument("--out", help="output directory for report files")
        p.add_argument("--threads", type=int, help="worker processes (runtime only)")
    return parser


def _resolve_config(args: argparse.Namespace, defaults: dict) -> dict:
    resolved = dict(defaults)
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        resolved.update(loaded)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def _estimands(config: dict, dte_points) -> list[EstimandSpec]:
    specs = [ate()]
    specs += [qte(q) for q in config["q"]]
    specs += [dte(y) for y in dte_points]
    return specs


def _write(out_dir: str | None, name: str, text: str) -> None:
    if out_dir is None:
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)


def _reports_markdown(reports) -> str:
    lines = ["| estimand | method | EST | S.E. | CI95 | p-value |",
             "|---|---|---|---|---|---|"]
    for r in reports:
        ci = "-" if r.ci95 is None else f"[{r.ci95[0]:.3f}, {r.ci95[1]:.3f}]"
        se = "-" if r.se is None else f"{r.se:.3f}"
        pv = "-" if r.p_value is None else f"{r.p_value:.3f}"
        lines.append(f"| {r.estimand.label} | {r.method} | {r.estimate:.3f} "
                     f"| {se} | {ci} | {pv} |")
    return "\n".join(lines) + "\n"


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _resolve_config(args, SIMULATE_DEFAULTS)
    for point in config["dte"]:
        if not isinstance(point, (int, float)):
            raise ValidationError("simulate requires numeric --dte points")
    threads = args.threads if args.threads is not None else default_threads()
    cfg = ScenarioConfig(scenario=config["scenario"], n=config["n"], p=config["p"],
                         gamma0=config["gamma0"], rho=config["rho"], seed=config["seed"])
    specs = _estimands(config, config["dte"])
    options = SimOptions(lambda_ratio=config["lambda_ratio"], clip_eps=config["clip_eps"])
    print(f"simulate: scenario={cfg.scenario} n={cfg.n} reps={config['reps']}",
          file=sys.stderr)
    rows = run_replications(cfg, tuple(config["methods"]), specs,
                            reps=config["reps"], threads=threads, options=options)
    report = {
        "version": __version__,
        "config_hash": _config_hash(config),
        "config": config,
        "rows": [r.to_json_dict() for r in rows],
    }
    csv_text = metrics_to_csv(rows)
    md_text = metrics_to_markdown(rows)
    json_text = json.dumps(report, indent=2) + "\n"
    _write(args.out, "metrics.csv", csv_text)
    _write(args.out, "tables.md", md_text)
    _write(args.out, "report.json", json_text)
    print({"json": json_text, "csv": csv_text, "markdown": md_text}[config["format"]])
    print("simulate: done", file=sys.stderr)
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    config = _resolve_config(args, ANALYZE_DEFAULTS)
    config["data"] = args.data
    config["outcome"] = args.outcome
    config["treatment"] = args.treatment
    config["confounders"] = list(args.confounders)
    threads = args.threads if args.threads is not None else default_threads()
    spec = ColumnSpec(outcome=config["outcome"], treatment=config["treatment"],
                      confounders=tuple(config["confounders"]))
    dataset, n_dropped = load_csv(config["data"], spec, config["missing"])
    print(f"analyze: {dataset.n} rows ({n_dropped} dropped), p={dataset.p}",
          file=sys.stderr)

    dte_points = [float(np.mean(dataset.y)) if p == "mean" else float(p)
                  for p in config["dte"]]
    specs = _estimands(config, dte_points)
    opts = PipelineOptions(lambda_ratio=config["lambda_ratio"],
                           clip_eps=config["clip_eps"])
    cdf_fit = fit_cdf_pipeline(dataset, opts)
    reports = estimate_reports(dataset, specs, tuple(config["methods"]), opts,
                               cdf_fit=cdf_fit)

    boot = None
    if config["bootstrap"] > 0:
        print(f"analyze: bootstrap with {config['bootstrap']} replications",
              file=sys.stderr)
        estimator = PointEstimator(specs, tuple(config["methods"]), opts)
        boot = bootstrap_se(estimator, dataset, reps=config["bootstrap"],
                            seed=config["seed"], threads=threads)
        reports = [
            _with_bootstrap_se(r, boot) for r in reports
        ]

    sel = cdf_fit.selection
    pair_coefs = sel.pair_coefficients()
    graph = {
        "nodes": list(dataset.col_names),
        "selected_mains": sorted(dataset.col_names[j] for j in sel.v_hat),
        "edges": [
            {
                "source": dataset.col_names[s],
                "target": dataset.col_names[v],
                "coef": pair_coefs[(s, v)],
            }
            for s, v in sorted(sel.e_hat)
        ],
    }
    report = {
        "version": __version__,
        "config_hash": _config_hash(config),
        "config": config,
        "n_rows": dataset.n,
        "n_dropped": n_dropped,
        "selection": sel.to_json_dict(col_names=dataset.col_names),
        "propensity": cdf_fit.fit.to_json_dict(layout=cdf_fit.star.layout),
        "reports": [r.to_json_dict() for r in reports],
    }
    if boot is not None:
        report["bootstrap"] = {"reps": boot.reps, "n_failures": boot.n_failures}
    json_text = json.dumps(report, indent=2) + "\n"
    md_text = _reports_markdown(reports)
    _write(args.out, "report.json", json_text)
    _write(args.out, "graph.json", json.dumps(graph, indent=2) + "\n")
    _write(args.out, "tables.md", md_text)
    print({"json": json_text, "csv": md_text, "markdown": md_text}[config["format"]])
    print("analyze: done", file=sys.stderr)
    return 0


def _with_bootstrap_se(report, boot):
    from .effects import make_report

    key = f"{report.method}:{report.estimand.label}"
    if key not in boot.se:
        return report
    return make_report(report.estimand, report.method, boot.estimates[key], boot.se[key])


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        return cmd_analyze(args)
    except (ValidationError, SchemaError, EmptyDataError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (RunError, CausalCdfError, np.linalg.LinAlgError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return RUN_ERROR


if __name__ == "__main__":
    sys.exit(main())
