"""End-to-end estimation pipeline shared by the CLI and the bootstrap.

One call runs: interaction design -> penalized selection -> propensity fit on
the selected terms -> clipped scores -> arm-wise weighted CDFs -> effect
estimates with plug-in standard errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import Dataset
from .effects import EffectReport, ate_ipw, ate_ld, effect_cdf, make_report, qte_firpo
from .errors import DegenerateDensityError
from .inference import kde_density, sandwich_se
from .propensity import (PropensityFit, StarDesign, build_star_design, fit_logistic,
                         full_main_star, predict_propensity)
from .selection import (GraphSelection, build_design, default_lambda_grid,
                        mains_only_design, select_lambda)
from .weighted_cdf import WeightedCdf, build_ipw_cdf


@dataclass(frozen=True)
class PipelineOptions:
    """Estimation settings for one analysis run."""

    n_lambda: int = 20
    lambda_min_frac: float = 0.01
    lambda_ratio: float = 1.0
    clip_eps: float = 1e-3
    lasso_tol: float = 1e-7
    lasso_max_iter: int = 10000


@dataclass(frozen=True)
class CdfPipelineFit:
    """Everything fitted along the selected-propensity route."""

    selection: GraphSelection
    star: StarDesign
    fit: PropensityFit
    pi_hat: np.ndarray
    f1: WeightedCdf
    f0: WeightedCdf


@dataclass(frozen=True)
class PlainPropensityFit:
    """Baseline route: all mains, no selection."""

    star: StarDesign
    fit: PropensityFit
    pi_hat: np.ndarray
    f1: WeightedCdf
    f0: WeightedCdf


def fit_cdf_pipeline(d: Dataset, opts: PipelineOptions | None = None) -> CdfPipelineFit:
    opts = opts or PipelineOptions()
    design = build_design(d.x) if d.p >= 2 else mains_only_design(d.x)
    grid = default_lambda_grid(
        design, d.y, n_points=opts.n_lambda,
        min_frac=opts.lambda_min_frac, ratio=opts.lambda_ratio,
    )
    sel = select_lambda(design, d.y, grid)
    star = build_star_design(d.x, sel, col_names=d.col_names)
    fit = fit_logistic(star, d.a)
    pi = predict_propensity(fit, star, opts.clip_eps)
    return CdfPipelineFit(
        selection=sel, star=star, fit=fit, pi_hat=pi,
        f1=build_ipw_cdf(d.y, d.a, pi, "treated"),
        f0=build_ipw_cdf(d.y, d.a, pi, "control"),
    )


def fit_plain_propensity(d: Dataset, opts: PipelineOptions | None = None) -> PlainPropensityFit:
    opts = opts or PipelineOptions()
    star = full_main_star(d.x, col_names=d.col_names)
    fit = fit_logistic(star, d.a)
    pi = predict_propensity(fit, star, opts.clip_eps)
    return PlainPropensityFit(
        star=star, fit=fit, pi_hat=pi,
        f1=build_ipw_cdf(d.y, d.a, pi, "treated"),
        f0=build_ipw_cdf(d.y, d.a, pi, "control"),
    )


def _sandwich_or_none(spec, d, star, fit, pi, f1, f0):
    dens1 = dens0 = None
    try:
        if spec.kind == "qte":
            dens1, dens0 = kde_density(f1), kde_density(f0)
        parts = sandwich_se(spec, d.y, d.a, star, fit, f1, f0, dens1, dens0, pi_hat=pi)
        return parts.se
    except DegenerateDensityError:
        return None


def estimate_reports(d: Dataset, specs, methods=("IPW", "LD", "CDF", "Firpo"),
                     opts: PipelineOptions | None = None,
                     cdf_fit: CdfPipelineFit | None = None,
                     plain_fit: PlainPropensityFit | None = None) -> list[EffectReport]:
    """Point estimates with sandwich SEs for every applicable (method, estimand).

    The CDF method runs on the selected propensity; the IPW, LD, and Firpo
    baselines run on the all-mains propensity.  A quantile cell whose density
    plug-in degenerates gets a report without SE rather than failing.
    """
    opts = opts or PipelineOptions()
    cdf_fit = cdf_fit or fit_cdf_pipeline(d, opts)
    needs_plain = any(m in methods for m in ("IPW", "LD", "Firpo"))
    plain_fit = plain_fit or (fit_plain_propensity(d, opts) if needs_plain else None)
    reports = []
    for spec in specs:
        if "CDF" in methods:
            est = effect_cdf(cdf_fit.f1, cdf_fit.f0, spec)
            se = _sandwich_or_none(spec, d, cdf_fit.star, cdf_fit.fit,
                                   cdf_fit.pi_hat, cdf_fit.f1, cdf_fit.f0)
            reports.append(make_report(spec, "CDF", est, se))
        if spec.kind == "ate" and "IPW" in methods:
            est = ate_ipw(d.y, d.a, plain_fit.pi_hat)
            contrib = d.a * d.y / plain_fit.pi_hat \
                - (1 - d.a) * d.y / (1.0 - plain_fit.pi_hat)
            se = float(np.std(contrib, ddof=1) / np.sqrt(d.n))
            reports.append(make_report(spec, "IPW", est, se))
        if spec.kind == "ate" and "LD" in methods:
            est = ate_ld(d.y, d.a, plain_fit.pi_hat)
            se = _sandwich_or_none(spec, d, plain_fit.star, plain_fit.fit,
                                   plain_fit.pi_hat, plain_fit.f1, plain_fit.f0)
            reports.append(make_report(spec, "LD", est, se))
        if spec.kind == "qte" and "Firpo" in methods:
            est = qte_firpo(d.y, d.a, plain_fit.pi_hat, spec.q)
            se = _sandwich_or_none(spec, d, plain_fit.star, plain_fit.fit,
                                   plain_fit.pi_hat, plain_fit.f1, plain_fit.f0)
            reports.append(make_report(spec, "Firpo", est, se))
    return reports


class PointEstimator:
    """Picklable closure over (specs, methods, options) returning point estimates.

    Bootstrap resampling refits the whole pipeline, selection included, on
    every replicate.  Keys are "METHOD:ESTIMAND" strings.
    """

    def __init__(self, specs, methods=("IPW", "LD", "CDF", "Firpo"),
                 opts: PipelineOptions | None = None):
        self.specs = tuple(specs)
        self.methods = tuple(methods)
        self.opts = opts or PipelineOptions()

    def __call__(self, d: Dataset) -> dict:
        cdf_fit = fit_cdf_pipeline(d, self.opts) if "CDF" in self.methods else None
        needs_plain = any(m in self.methods for m in ("IPW", "LD", "Firpo"))
        plain = fit_plain_propensity(d, self.opts) if needs_plain else None
        out = {}
        for spec in self.specs:
            if "CDF" in self.methods:
                out[f"CDF:{spec.label}"] = effect_cdf(cdf_fit.f1, cdf_fit.f0, spec)
            if spec.kind == "ate" and "IPW" in self.methods:
                out[f"IPW:{spec.label}"] = ate_ipw(d.y, d.a, plain.pi_hat)
            if spec.kind == "ate" and "LD" in self.methods:
                out[f"LD:{spec.label}"] = ate_ld(d.y, d.a, plain.pi_hat)
            if spec.kind == "qte" and "Firpo" in self.methods:
                out[f"Firpo:{spec.label}"] = qte_firpo(d.y, d.a, plain.pi_hat, spec.q)
        return out
