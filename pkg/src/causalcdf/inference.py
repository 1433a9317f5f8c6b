"""Standard errors: plug-in sandwich variances, weighted KDE, and bootstrap.

The sandwich form is  var = C - B A^{-1} B^T  with

    A = (1/n) sum_i  pi_i (1-pi_i) x*_i x*_i^T
    C = (1/n) sum_i [a_i phi1(y_i)^2 / pi_i^2
                     + (1-a_i) phi0(y_i)^2 / (1-pi_i)^2]

where phi1/phi0 are the plug-in influence curves of the functional on each
arm's weighted CDF, and B credits the efficiency gained by estimating the
propensity model.  B has two plug-in forms:

    raw     (1/n) sum_i [a_i phi1(y_i) (1-pi_i)/pi_i
                         + (1-a_i) phi0(y_i) pi_i/(1-pi_i)] x*_i
    damped  (1/n) sum_i [a_i phi1(y_i) (1-pi_i) + (1-a_i) phi0(y_i) pi_i] x*_i

The raw form is the empirical cross-moment of the estimating equations and is
the consistent choice, used for the bounded influence curves (quantile, CDF
value).  For the unbounded mean curve the raw plug-in's heavy-tailed moments
make intervals undercover below n ~ 10^4, so the mean uses the damped form,
which is mildly conservative at every sample size (both behaviors verified by
simulation).  With a known propensity the correction is dropped and C alone
is the variance.  The reported standard error is sqrt(var / n).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy.special import ndtr

from ._util import parallel_map, rng_for
from .datamodel import Dataset
from .effects import EstimandSpec
from .errors import DegenerateDensityError, RunError, ValidationError
from .propensity import PropensityFit, StarDesign
from .weighted_cdf import WeightedCdf, cdf_eval, cdf_mean, cdf_quantile

#: density below this level at the target quantile makes the QTE SE unusable
_DENSITY_FLOOR = 1e-6

#: per-replicate retry cap when a bootstrap resample fails validation
_MAX_RESAMPLE_ATTEMPTS = 100


@dataclass(frozen=True)
class SandwichParts:
    """Pieces of the plug-in sandwich variance for one estimand."""

    a_mat: np.ndarray
    b_vec: np.ndarray
    c_scalar: float
    variance: float
    se: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class DensityEstimate:
    """Gaussian-kernel density over weighted atoms."""

    atoms: np.ndarray
    masses: np.ndarray
    bandwidth: float

    def eval(self, y):
        y_arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
        z = (y_arr[:, None] - self.atoms[None, :]) / self.bandwidth
        dens = (np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)) @ self.masses / self.bandwidth
        return float(dens[0]) if np.isscalar(y) or np.asarray(y).ndim == 0 else dens


def kde_density(f: WeightedCdf) -> DensityEstimate:
    """Weighted Gaussian KDE of a step CDF's atoms.

    Bandwidth: 0.9 * min(sd, IQR/1.34) * n_eff^(-1/5) with the effective
    sample size n_eff = (sum w)^2 / sum w^2 of the atom weights.
    """
    if f.support.size < 2:
        raise DegenerateDensityError("need at least 2 distinct atoms for a KDE")
    mu = cdf_mean(f)
    sd = float(np.sqrt(np.dot(f.atom_mass, (f.support - mu) ** 2)))
    iqr = cdf_quantile(f, 0.75) - cdf_quantile(f, 0.25)
    n_eff = 1.0 / float(np.sum(f.atom_mass**2))
    h = 0.9 * min(sd, iqr / 1.34) * n_eff ** (-0.2)
    if not h > 0.0:
        raise DegenerateDensityError(f"degenerate spread (sd={sd:g}, iqr={iqr:g})")
    return DensityEstimate(atoms=f.support, masses=f.atom_mass, bandwidth=h)


def influence_curve(spec: EstimandSpec, f: WeightedCdf,
                    dens: DensityEstimate | None = None) -> Callable:
    """Closed-form influence curve of the functional at the fitted CDF.

    Mean: y - mean(F).  Quantile: (q - 1{y <= xi_q}) / f(xi_q), which needs a
    density estimate.  CDF value at y0: 1{y <= y0} - F(y0).
    """
    if spec.kind == "ate":
        mu = cdf_mean(f)

        def curve(v):
            return np.asarray(v, dtype=np.float64) - mu

        return curve
    if spec.kind == "dte":
        level = float(cdf_eval(f, spec.y))
        point = spec.y

        def curve(v):
            return (np.asarray(v, dtype=np.float64) <= point).astype(np.float64) - level

        return curve
    if dens is None:
        raise ValidationError("quantile influence curve requires a density estimate")
    xi = cdf_quantile(f, spec.q)
    fx = float(dens.eval(xi))
    if fx < _DENSITY_FLOOR:
        raise DegenerateDensityError(
            f"density {fx:.2e} at the {spec.q:g}-quantile is too small for a plug-in SE"
        )
    level_q = spec.q

    def curve(v):
        return (level_q - (np.asarray(v, dtype=np.float64) <= xi)) / fx

    return curve


def sandwich_se(spec: EstimandSpec, y, a, x_star: StarDesign, fit: PropensityFit,
                f1: WeightedCdf, f0: WeightedCdf,
                dens1: DensityEstimate | None = None,
                dens0: DensityEstimate | None = None,
                *, pi_hat=None, estimated_propensity: bool = True,
                b_form: str = "auto") -> SandwichParts:
    """Plug-in sandwich variance of T(F1) - T(F0).

    The C moment reweights each observed arm by its inverse propensity; the B
    correction uses the raw or damped form per the rule in the module
    docstring (``b_form`` "auto"), or an explicitly requested form ("raw" /
    "damped"; the raw form is the one the refit bootstrap reproduces).
    ``estimated_propensity=False`` drops the B correction (propensity treated
    as known).  A singular A matrix falls back to the pseudo-inverse (flag
    "singular_a"); a numerically negative variance falls back to C alone
    (flag "negative_variance").
    """
    y = np.asarray(y, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    pi = np.asarray(fit.pi_hat if pi_hat is None else pi_hat, dtype=np.float64)
    xs = x_star.x_star
    n = y.shape[0]
    if not (a.shape == pi.shape == (n,)) or xs.shape[0] != n:
        raise ValidationError("inconsistent shapes in sandwich inputs")

    phi1 = influence_curve(spec, f1, dens1)(y)
    phi0 = influence_curve(spec, f0, dens0)(y)

    w_info = pi * (1.0 - pi)
    a_mat = xs.T @ (w_info[:, None] * xs) / n
    c_scalar = float(
        np.mean(a * phi1**2 / pi**2 + (1.0 - a) * phi0**2 / (1.0 - pi) ** 2)
    )

    if b_form not in ("auto", "raw", "damped"):
        raise ValidationError("b_form must be 'auto', 'raw', or 'damped'")
    if b_form == "auto":
        # unbounded influence curve (mean) gets the damped form
        b_form = "damped" if spec.kind == "ate" else "raw"

    flags: list[str] = []
    if estimated_propensity:
        if b_form == "damped":
            b_weights = a * phi1 * (1.0 - pi) + (1.0 - a) * phi0 * pi
        else:  # raw estimating-equation cross-moment
            b_weights = a * phi1 * (1.0 - pi) / pi + (1.0 - a) * phi0 * pi / (1.0 - pi)
        b_vec = (b_weights[:, None] * xs).mean(axis=0)
        try:
            solved = np.linalg.solve(a_mat, b_vec)
        except np.linalg.LinAlgError:
            flags.append("singular_a")
            solved = np.linalg.pinv(a_mat) @ b_vec
        correction = float(b_vec @ solved)
        if correction < 0.0:
            # A is PSD, so this can only be roundoff; treat as zero
            correction = 0.0
    else:
        b_vec = np.zeros(xs.shape[1])
        correction = 0.0

    variance = c_scalar - correction
    if variance < 0.0:
        flags.append("negative_variance")
        variance = c_scalar
    return SandwichParts(
        a_mat=a_mat,
        b_vec=b_vec,
        c_scalar=c_scalar,
        variance=variance,
        se=float(np.sqrt(variance / n)),
        flags=tuple(flags),
    )


@dataclass(frozen=True)
class BootstrapSummary:
    """Bootstrap SEs and normal-theory p-values per estimand label."""

    estimates: dict
    se: dict
    p_value: dict
    n_failures: int
    reps: int


def _bootstrap_replicate(args):
    pipeline, d, seed, index = args
    failures = 0
    for attempt in range(_MAX_RESAMPLE_ATTEMPTS):
        rng = rng_for(seed, index, attempt)
        rows = rng.integers(0, d.n, size=d.n)
        try:
            return pipeline(d.take(rows)), failures
        except Exception:
            failures += 1
    raise RunError(f"bootstrap replicate {index} failed {failures} consecutive resamples")


def bootstrap_se(pipeline: Callable[[Dataset], Mapping[str, float]], d: Dataset,
                 reps: int, seed: int, threads: int = 1) -> BootstrapSummary:
    """Nonparametric bootstrap of a full estimation pipeline.

    Rows are resampled with replacement; the pipeline (selection, propensity,
    effects) is refit per replicate.  Failed replicates (for example a
    resample with an empty arm) are redrawn and counted; more than 10%
    failures aborts.  Results depend only on ``seed``, not on scheduling:
    each replicate uses its own generator derived from (seed, index, attempt)
    and aggregation runs in index order.
    """
    if reps < 2:
        raise ValidationError("bootstrap needs reps >= 2")
    point = dict(pipeline(d))
    tasks = [(pipeline, d, seed, i) for i in range(reps)]
    outcomes = parallel_map(_bootstrap_replicate, tasks, threads)
    n_failures = sum(f for _, f in outcomes)
    if n_failures > 0.1 * reps:
        raise RunError(f"{n_failures} failed resamples out of {reps} exceeds the 10% budget")
    draws = {key: np.array([est[key] for est, _ in outcomes]) for key in point}
    se = {key: float(np.std(vals, ddof=1)) for key, vals in draws.items()}
    p_value = {}
    for key, est in point.items():
        if se[key] == 0.0:
            p_value[key] = 1.0 if est == 0.0 else 0.0
        else:
            p_value[key] = float(2.0 * (1.0 - ndtr(abs(est / se[key]))))
    return BootstrapSummary(
        estimates=point, se=se, p_value=p_value, n_failures=n_failures, reps=reps
    )
