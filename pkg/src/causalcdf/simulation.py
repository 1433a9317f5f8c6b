"""Synthetic data-generating processes, replication engine, and metrics.

Covariates are multivariate normal with identity covariance (independent
scenario) or identity plus rho times the adjacency of a hub or lattice graph
over 12 variables.  Treatment follows a logistic model in x1, x3, and the
graph's pairwise products; the outcome adds a constant treatment shift
gamma0 on top of the same confounders, so the true mean and quantile effects
equal gamma0 exactly and CDF-gap effects follow from the outcome law.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from ._util import float_bits, parallel_map, rng_for
from .datamodel import Dataset
from .effects import EstimandSpec, ate_ipw, ate_ld, effect_cdf, qte_firpo
from .errors import DegenerateDensityError, RunError, ValidationError
from .inference import kde_density, sandwich_se
from .propensity import build_star_design, fit_logistic, full_main_star, predict_propensity
from .selection import GraphSelection, build_design, default_lambda_grid, select_lambda
from .weighted_cdf import build_ipw_cdf

log = logging.getLogger(__name__)

SCENARIOS = ("independent", "hub", "lattice")

#: canonical method order per estimand kind, mirroring the comparison tables
METHOD_ORDER = {"ate": ("IPW", "LD", "CDF"), "qte": ("Firpo", "CDF"), "dte": ("CDF",)}

_TRUTH_CACHE: dict = {}


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation setting; the covariance must be positive definite."""

    scenario: str
    n: int
    p: int = 12
    gamma0: float = 1.0
    rho: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValidationError(f"scenario must be one of {SCENARIOS}")
        if self.scenario == "independent":
            if self.p < 3:
                raise ValidationError("independent scenario needs p >= 3 (x1 and x3 are used)")
        elif self.p != 12:
            raise ValidationError(f"{self.scenario} network is defined for p = 12")
        if self.n < 2:
            raise ValidationError("n must be >= 2")
        sigma = covariance_matrix(self)
        try:
            np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            raise ValidationError(
                f"covariance I + rho*Adj is not positive definite at rho={self.rho}"
            ) from None


def scenario_edges(scenario: str, p: int = 12) -> tuple[tuple[int, int], ...]:
    """True dependence edges (0-based): none, two 6-spoke stars, or two triangles."""
    if scenario == "independent":
        return ()
    if scenario == "hub":
        return tuple((0, j) for j in range(1, 6)) + tuple((6, j) for j in range(7, 12))
    if scenario == "lattice":
        return ((0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5))
    raise ValidationError(f"scenario must be one of {SCENARIOS}")


def covariance_matrix(cfg: ScenarioConfig) -> np.ndarray:
    sigma = np.eye(cfg.p)
    for s, v in scenario_edges(cfg.scenario, cfg.p):
        sigma[s, v] = sigma[v, s] = cfg.rho
    return sigma


def gen_covariates(cfg: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw n rows from N(0, I + rho*Adj) via the Cholesky factor."""
    chol = np.linalg.cholesky(covariance_matrix(cfg))
    return rng.standard_normal(size=(cfg.n, cfg.p)) @ chol.T


def true_logit(x: np.ndarray, edges) -> np.ndarray:
    """Log-odds of treatment: 1 + x1 + x3 + sum of products over true edges."""
    lp = 1.0 + x[:, 0] + x[:, 2]
    for s, v in edges:
        lp = lp + x[:, s] * x[:, v]
    return lp


def true_propensity(x: np.ndarray, edges) -> np.ndarray:
    lp = true_logit(x, edges)
    return 1.0 / (1.0 + np.exp(-lp))


def gen_treatment(x: np.ndarray, edges, rng: np.random.Generator) -> np.ndarray:
    return (rng.random(x.shape[0]) < true_propensity(x, edges)).astype(np.int64)


def gen_outcome(x: np.ndarray, a: np.ndarray, edges, gamma0: float,
                rng: np.random.Generator):
    """Potential outcomes share one noise draw; observed y follows consistency."""
    base = 1.0 + x[:, 0] + x[:, 2]
    for s, v in edges:
        base = base + x[:, s] * x[:, v]
    eps = rng.standard_normal(x.shape[0])
    y1 = gamma0 + base + eps
    y0 = base + eps
    y = np.where(a == 1, y1, y0)
    return y, y1, y0


@dataclass(frozen=True)
class TruthRecord:
    """Per-replicate generated data plus everything needed for oracle checks."""

    dataset: Dataset
    y1: np.ndarray
    y0: np.ndarray
    pi_true: np.ndarray
    true_v: frozenset[int]
    true_e: frozenset[tuple[int, int]]


def generate_replicate(cfg: ScenarioConfig, rep_index: int = 0) -> TruthRecord:
    """Fully seeded draw of one replicate: (seed, replicate) fixes the data."""
    rng = rng_for(cfg.seed, rep_index)
    edges = scenario_edges(cfg.scenario, cfg.p)
    x = gen_covariates(cfg, rng)
    a = gen_treatment(x, edges, rng)
    y, y1, y0 = gen_outcome(x, a, edges, cfg.gamma0, rng)
    names = tuple(f"x{j + 1}" for j in range(cfg.p))
    return TruthRecord(
        dataset=Dataset(y=y, a=a, x=x, col_names=names),
        y1=y1,
        y0=y0,
        pi_true=true_propensity(x, edges),
        true_v=frozenset({0, 2}),
        true_e=frozenset(edges),
    )


def true_effect(cfg: ScenarioConfig, spec: EstimandSpec, n_draws: int = 10_000_000) -> float:
    """Exact effect value under the configuration.

    The treatment shift is additive, so mean and quantile effects equal
    gamma0.  CDF-gap effects are closed-form normal values in the independent
    scenario and a cached large-sample Monte Carlo integral otherwise.
    """
    if spec.kind in ("ate", "qte"):
        return float(cfg.gamma0)
    y = float(spec.y)
    if cfg.scenario == "independent":
        sd = math.sqrt(3.0)  # x1, x3 and the noise each contribute variance 1
        return float(ndtr((y - 1.0 - cfg.gamma0) / sd) - ndtr((y - 1.0) / sd))
    key = (cfg.scenario, cfg.p, float_bits(cfg.rho), float_bits(cfg.gamma0),
           float_bits(y), n_draws)
    if key not in _TRUTH_CACHE:
        edges = scenario_edges(cfg.scenario, cfg.p)
        chol = np.linalg.cholesky(covariance_matrix(cfg))
        entropy = (0xD7E17, SCENARIOS.index(cfg.scenario), cfg.p, *key[2:5])
        rng = np.random.default_rng(np.random.SeedSequence(entropy))
        hits_shift = 0
        hits_base = 0
        done = 0
        while done < n_draws:
            block = min(1_000_000, n_draws - done)
            x = rng.standard_normal(size=(block, cfg.p)) @ chol.T
            base = 1.0 + x[:, 0] + x[:, 2]
            for s, v in edges:
                base += x[:, s] * x[:, v]
            y0 = base + rng.standard_normal(block)
            hits_shift += int(np.count_nonzero(y0 <= y - cfg.gamma0))
            hits_base += int(np.count_nonzero(y0 <= y))
            done += block
        _TRUTH_CACHE[key] = (hits_shift - hits_base) / n_draws
    return _TRUTH_CACHE[key]


def compute_sen_spe(sel: GraphSelection, true_v, true_e, p: int):
    """Support-recovery rates over the concatenated main and pair coefficients.

    ``sen`` is the fraction of truly zero coefficients estimated as exactly
    zero; ``spe`` is the fraction of truly nonzero coefficients estimated as
    nonzero.  An empty denominator yields None for that rate.
    """
    true_v = frozenset(true_v)
    true_e = frozenset(tuple(e) for e in true_e)
    all_pairs = [(j, k) for j in range(p) for k in range(j + 1, p)]
    zero_total = zero_hit = nonzero_total = nonzero_hit = 0
    for j in range(p):
        if j in true_v:
            nonzero_total += 1
            nonzero_hit += j in sel.v_hat
        else:
            zero_total += 1
            zero_hit += j not in sel.v_hat
    for pair in all_pairs:
        if pair in true_e:
            nonzero_total += 1
            nonzero_hit += pair in sel.e_hat
        else:
            zero_total += 1
            zero_hit += pair not in sel.e_hat
    sen = zero_hit / zero_total if zero_total else None
    spe = nonzero_hit / nonzero_total if nonzero_total else None
    return sen, spe


@dataclass(frozen=True)
class MetricsRow:
    """Aggregated performance of one (method, estimand) cell."""

    scenario: str
    n: int
    method: str
    estimand: str
    sen: float | None
    spe: float | None
    bias: float
    se: float | None
    mse: float
    cr: float | None
    n_used: int

    def to_json_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "n": self.n,
            "method": self.method,
            "estimand": self.estimand,
            "sen": self.sen,
            "spe": self.spe,
            "bias": self.bias,
            "se": self.se,
            "mse": self.mse,
            "cr": self.cr,
            "n_used": self.n_used,
        }


@dataclass(frozen=True)
class SimOptions:
    """Estimation settings shared by every replicate."""

    n_lambda: int = 20
    lambda_min_frac: float = 0.01
    lambda_ratio: float = 1.0
    clip_eps: float = 1e-3


def _replicate_worker(args):
    """Estimate every requested cell on one generated replicate."""
    cfg, index, specs, methods, opts = args
    try:
        truth = generate_replicate(cfg, index)
        d = truth.dataset
        y, a, x = d.y, d.a, d.x

        design = build_design(x)
        grid = default_lambda_grid(
            design, y, n_points=opts.n_lambda,
            min_frac=opts.lambda_min_frac, ratio=opts.lambda_ratio,
        )
        sel = select_lambda(design, y, grid)
        star = build_star_design(x, sel)
        fit = fit_logistic(star, a)
        pi = predict_propensity(fit, star, opts.clip_eps)
        f1 = build_ipw_cdf(y, a, pi, "treated")
        f0 = build_ipw_cdf(y, a, pi, "control")

        bstar = full_main_star(x)
        bfit = fit_logistic(bstar, a)
        bpi = predict_propensity(bfit, bstar, opts.clip_eps)
        bf1 = build_ipw_cdf(y, a, bpi, "treated")
        bf0 = build_ipw_cdf(y, a, bpi, "control")

        sen, spe = compute_sen_spe(sel, truth.true_v, truth.true_e, d.p)
        efficiency_ok = True
        cells = {}

        def sandwich(spec, use_selected):
            nonlocal efficiency_ok
            s_star, s_fit, s_pi = (star, fit, pi) if use_selected else (bstar, bfit, bpi)
            s_f1, s_f0 = (f1, f0) if use_selected else (bf1, bf0)
            dens1 = dens0 = None
            if spec.kind == "qte":
                dens1, dens0 = kde_density(s_f1), kde_density(s_f0)
            parts = sandwich_se(spec, y, a, s_star, s_fit, s_f1, s_f0,
                                dens1, dens0, pi_hat=s_pi)
            efficiency_ok &= parts.variance <= parts.c_scalar + 1e-12
            return parts.se

        for spec in specs:
            for method in METHOD_ORDER[spec.kind]:
                if method not in methods:
                    continue
                if method == "CDF":
                    est = effect_cdf(f1, f0, spec)
                    try:
                        se = sandwich(spec, use_selected=True)
                    except DegenerateDensityError:
                        se = None
                elif method == "LD":
                    est = ate_ld(y, a, bpi)
                    se = sandwich(spec, use_selected=False)
                elif method == "IPW":
                    est = ate_ipw(y, a, bpi)
                    contrib = a * y / bpi - (1 - a) * y / (1.0 - bpi)
                    se = float(np.std(contrib, ddof=1) / np.sqrt(d.n))
                else:  # Firpo
                    est = qte_firpo(y, a, bpi, spec.q)
                    try:
                        se = sandwich(spec, use_selected=False)
                    except DegenerateDensityError:
                        se = None
                cells[(method, spec.label)] = (float(est), se)
        return {"index": index, "sen": sen, "spe": spe,
                "efficiency_ok": efficiency_ok, "cells": cells}
    except Exception as exc:  # noqa: BLE001 - replicate failures are counted, not fatal
        return {"index": index, "error": f"{type(exc).__name__}: {exc}"}


def simulate_outcomes(cfg: ScenarioConfig, methods, estimands, reps: int,
                      threads: int = 1, options: SimOptions | None = None) -> list[dict]:
    """Run the per-replicate estimation and return the raw outcomes.

    Replicates are embarrassingly parallel and individually seeded from
    (cfg.seed, index); results come back in index order, so the output is
    identical for any thread count.
    """
    if reps < 1:
        raise ValidationError("reps must be >= 1")
    methods = tuple(methods)
    specs = tuple(estimands)
    unknown = [m for m in methods if m not in ("IPW", "LD", "CDF", "Firpo")]
    if unknown:
        raise ValidationError(f"unknown methods: {unknown}")
    opts = options or SimOptions()
    tasks = [(cfg, i, specs, methods, opts) for i in range(reps)]
    return parallel_map(_replicate_worker, tasks, threads)


def aggregate_metrics(cfg: ScenarioConfig, outcomes, methods, estimands) -> list[MetricsRow]:
    """Fold raw replicate outcomes into one MetricsRow per (method, estimand).

    Failed replicates are logged and excluded; more than 5% failures aborts.
    """
    methods = tuple(methods)
    specs = tuple(estimands)
    reps = len(outcomes)
    failures = [o for o in outcomes if "error" in o]
    for o in failures:
        log.warning("replicate %d failed: %s", o["index"], o["error"])
    if len(failures) > 0.05 * reps:
        raise RunError(f"{len(failures)} of {reps} replicates failed (>5%)")
    good = [o for o in outcomes if "error" not in o]

    rows = []
    sens = np.array([o["sen"] for o in good if o["sen"] is not None], dtype=np.float64)
    spes = np.array([o["spe"] for o in good if o["spe"] is not None], dtype=np.float64)
    sen = float(sens.mean()) if sens.size else None
    spe = float(spes.mean()) if spes.size else None
    for spec in specs:
        truth = true_effect(cfg, spec)
        for method in METHOD_ORDER[spec.kind]:
            if method not in methods:
                continue
            key = (method, spec.label)
            ests = np.array([o["cells"][key][0] for o in good])
            ses = [o["cells"][key][1] for o in good]
            bias = float(ests.mean() - truth)
            mse = float(np.mean((ests - truth) ** 2))
            mc_se = float(ests.std(ddof=1)) if len(ests) >= 2 else None
            hits = [abs(e - truth) <= 1.96 * s
                    for e, s in zip(ests, ses) if s is not None]
            cr = float(np.mean(hits)) if hits and len(ests) >= 2 else None
            rows.append(MetricsRow(
                scenario=cfg.scenario, n=cfg.n, method=method, estimand=spec.label,
                sen=sen if method == "CDF" else None,
                spe=spe if method == "CDF" else None,
                bias=bias, se=mc_se, mse=mse, cr=cr, n_used=len(ests),
            ))
    return rows


def run_replications(cfg: ScenarioConfig, methods, estimands, reps: int,
                     threads: int = 1, options: SimOptions | None = None) -> list[MetricsRow]:
    """Monte Carlo study: generate, select, fit, estimate, and aggregate."""
    outcomes = simulate_outcomes(cfg, methods, estimands, reps, threads, options)
    return aggregate_metrics(cfg, outcomes, methods, estimands)


def _fmt(value, digits=3) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def metrics_to_csv(rows) -> str:
    header = "scenario,n,method,estimand,sen,spe,bias,se,mse,cr,n_used"
    lines = [header]
    for r in rows:
        vals = [r.scenario, str(r.n), r.method, r.estimand]
        for v in (r.sen, r.spe, r.bias, r.se, r.mse, r.cr):
            vals.append("" if v is None else repr(float(v)))
        vals.append(str(r.n_used))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def metrics_to_markdown(rows) -> str:
    lines = [
        "| scenario | n | estimand | method | SEN | SPE | BIAS | S.E. | MSE | CR |",
        "|---|---|---|---|---|---|---|---|---|---|",
    ]
    for r in rows:
        lines.append(
            f"| {r.scenario} | {r.n} | {r.estimand} | {r.method} "
            f"| {_fmt(r.sen)} | {_fmt(r.spe)} | {_fmt(r.bias)} "
            f"| {_fmt(r.se)} | {_fmt(r.mse)} | {_fmt(r.cr)} |"
        )
    return "\n".join(lines) + "\n"
