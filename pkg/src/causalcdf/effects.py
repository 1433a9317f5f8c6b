"""Point estimators: the unified CDF-functional estimator and the baselines.

The CDF route evaluates a statistical functional (mean, quantile, or CDF
value) on the weighted counterfactual CDF of each arm and differences the two.
The baselines are the plain inverse-probability-weighted mean difference, its
self-normalized variant, and the weighted check-loss quantile difference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ValidationError
from .weighted_cdf import WeightedCdf, cdf_eval, cdf_mean, cdf_quantile

KINDS = ("ate", "qte", "dte")
METHODS = ("CDF", "IPW", "LD", "Firpo")


@dataclass(frozen=True)
class EstimandSpec:
    """Which treatment effect to estimate: mean shift, quantile shift, or CDF gap."""

    kind: str
    q: float | None = None
    y: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "qte":
            if self.q is None or not 0.0 < self.q < 1.0:
                raise ValidationError(f"quantile level must be in (0, 1), got {self.q}")
        if self.kind == "dte" and self.y is None:
            raise ValidationError("dte requires an evaluation point y")

    @property
    def label(self) -> str:
        if self.kind == "ate":
            return "ATE"
        if self.kind == "qte":
            return f"QTE({self.q:g})"
        return f"DTE({self.y:g})"


def ate() -> EstimandSpec:
    return EstimandSpec(kind="ate")


def qte(q: float) -> EstimandSpec:
    return EstimandSpec(kind="qte", q=float(q))


def dte(y: float) -> EstimandSpec:
    return EstimandSpec(kind="dte", y=float(y))


@dataclass(frozen=True)
class EffectReport:
    """One estimate row: point value plus optional normal-theory uncertainty."""

    estimand: EstimandSpec
    method: str
    estimate: float
    se: float | None = None
    ci95: tuple[float, float] | None = None
    p_value: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "estimand": self.estimand.label,
            "method": self.method,
            "estimate": self.estimate,
            "se": self.se,
            "ci95": list(self.ci95) if self.ci95 is not None else None,
            "p_value": self.p_value,
        }


def make_report(estimand: EstimandSpec, method: str, estimate: float,
                se: float | None) -> EffectReport:
    """Attach the 95% interval and two-sided normal p-value when an SE exists."""
    if method not in METHODS:
        raise ValidationError(f"method must be one of {METHODS}")
    if se is None:
        return EffectReport(estimand, method, float(estimate))
    se = float(se)
    if se < 0:
        raise ValidationError("standard error must be nonnegative")
    ci = (estimate - 1.96 * se, estimate + 1.96 * se)
    if se == 0.0:
        p = 1.0 if estimate == 0.0 else 0.0
    else:
        p = float(2.0 * (1.0 - ndtr(abs(estimate / se))))
    return EffectReport(estimand, method, float(estimate), se, ci, p)


def effect_cdf(f1: WeightedCdf, f0: WeightedCdf, spec: EstimandSpec) -> float:
    """T(F1) - T(F0) for the requested functional."""
    if spec.kind == "ate":
        return cdf_mean(f1) - cdf_mean(f0)
    if spec.kind == "qte":
        return cdf_quantile(f1, spec.q) - cdf_quantile(f0, spec.q)
    return float(cdf_eval(f1, spec.y) - cdf_eval(f0, spec.y))


def _check_ipw_inputs(y, a, pi_hat):
    y = np.asarray(y, dtype=np.float64)
    a = np.asarray(a)
    pi_hat = np.asarray(pi_hat, dtype=np.float64)
    if not (y.shape == a.shape == pi_hat.shape):
        raise ValidationError("y, a, pi_hat must have the same shape")
    if np.any(pi_hat <= 0) or np.any(pi_hat >= 1):
        raise ValidationError("propensity scores must lie strictly inside (0, 1)")
    return y, a, pi_hat


def ate_ipw(y, a, pi_hat) -> float:
    """Plain inverse-probability-weighted mean difference (divides by n)."""
    y, a, pi_hat = _check_ipw_inputs(y, a, pi_hat)
    n = y.shape[0]
    treated = float(np.sum(a * y / pi_hat)) / n
    control = float(np.sum((1 - a) * y / (1.0 - pi_hat))) / n
    return treated - control


def ate_ld(y, a, pi_hat) -> float:
    """Self-normalized weighted mean difference (weights divided by their sums)."""
    y, a, pi_hat = _check_ipw_inputs(y, a, pi_hat)
    w1 = a / pi_hat
    w0 = (1 - a) / (1.0 - pi_hat)
    if w1.sum() <= 0 or w0.sum() <= 0:
        raise ValidationError("both treatment arms must be non-empty")
    return float(np.dot(w1, y) / w1.sum() - np.dot(w0, y) / w0.sum())


def qte_firpo(y, a, pi_hat, q: float) -> float:
    """Difference of arm-wise weighted check-loss quantile minimizers.

    Each arm's quantile minimizes sum_i w_i rho_q(y_i - xi) over xi with
    inverse-propensity weights; the minimizer is the weighted q-quantile, and
    ties break to the smallest minimizing observation.
    """
    if not 0.0 < q < 1.0:
        raise ValidationError(f"quantile level must be in (0, 1), got {q}")
    y, a, pi_hat = _check_ipw_inputs(y, a, pi_hat)
    treated = a == 1
    if not treated.any() or treated.all():
        raise ValidationError("both treatment arms must be non-empty")
    f1 = WeightedCdf.from_atoms(y[treated], 1.0 / pi_hat[treated])
    f0 = WeightedCdf.from_atoms(y[~treated], 1.0 / (1.0 - pi_hat[~treated]))
    return cdf_quantile(f1, q) - cdf_quantile(f0, q)
