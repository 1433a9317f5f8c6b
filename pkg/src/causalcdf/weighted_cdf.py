"""Inverse-probability-weighted counterfactual CDFs as step functions.

A ``WeightedCdf`` is the self-normalized weighted empirical CDF of one
treatment arm: atoms at the observed outcomes, each carrying weight 1/pi_hat
(treated) or 1/(1-pi_hat) (control), with the cumulative weights divided by
their total so the function is a proper CDF.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

ARMS = ("treated", "control")

#: tolerance on the final cumulative weight before defensive renormalization
_TOTAL_TOL = 1e-12


@dataclass(frozen=True)
class WeightedCdf:
    """Normalized weighted step function over the sorted distinct outcomes.

    ``support`` is strictly increasing; ``cum_weight`` is positive,
    non-decreasing, and ends exactly at 1.  Evaluation is right-continuous.
    Instances are immutable and safe to share.
    """

    support: np.ndarray
    cum_weight: np.ndarray
    raw_weight_total: float
    atom_mass: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        support = np.array(self.support, dtype=np.float64)
        cum = np.array(self.cum_weight, dtype=np.float64)
        if support.ndim != 1 or support.size == 0:
            raise ValidationError("support must be a non-empty 1-d vector")
        if cum.shape != support.shape:
            raise ValidationError("support and cum_weight must align")
        if not np.all(np.diff(support) > 0):
            raise ValidationError("support values must be strictly increasing")
        if cum[0] <= 0 or np.any(np.diff(cum) < 0):
            raise ValidationError("cumulative weights must be positive and non-decreasing")
        if abs(cum[-1] - 1.0) > _TOTAL_TOL:
            raise ValidationError(f"cumulative weight must end at 1, got {cum[-1]!r}")
        cum = cum / cum[-1]
        cum[-1] = 1.0
        if self.atom_mass is None:
            mass = np.diff(cum, prepend=0.0)
        else:
            mass = np.array(self.atom_mass, dtype=np.float64)
            if mass.shape != support.shape:
                raise ValidationError("atom_mass and support must align")
        if not float(self.raw_weight_total) > 0:
            raise ValidationError("raw weight total must be positive")
        for arr in (support, cum, mass):
            arr.flags.writeable = False
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "cum_weight", cum)
        object.__setattr__(self, "atom_mass", mass)
        object.__setattr__(self, "raw_weight_total", float(self.raw_weight_total))

    @classmethod
    def from_atoms(cls, values, weights) -> "WeightedCdf":
        """Build from raw (value, weight) atoms, merging duplicated values."""
        values = np.asarray(values, dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValidationError("need at least one atom")
        if weights.shape != values.shape:
            raise ValidationError("values and weights must align")
        if np.any(weights <= 0) or not np.isfinite(weights).all():
            raise ValidationError("weights must be positive and finite")
        if not np.isfinite(values).all():
            raise ValidationError("atom values must be finite")
        support, inverse = np.unique(values, return_inverse=True)
        merged = np.bincount(inverse, weights=weights, minlength=support.size)
        total = float(merged.sum())
        mass = merged / total
        cum = np.cumsum(mass)
        cum /= cum[-1]
        cum[-1] = 1.0
        return cls(support=support, cum_weight=cum, raw_weight_total=total, atom_mass=mass)

    def to_arrays(self) -> dict:
        """Serializable view for plotting or reporting."""
        return {
            "support": self.support.tolist(),
            "cum_weight": self.cum_weight.tolist(),
            "raw_weight_total": self.raw_weight_total,
        }


def build_ipw_cdf(y, a, pi_hat, arm: str) -> WeightedCdf:
    """Weighted empirical CDF of one arm with inverse-propensity weights.

    Treated rows get weight 1/pi_hat, control rows 1/(1-pi_hat); tied outcome
    values are merged by summing their weights.
    """
    if arm not in ARMS:
        raise ValidationError(f"arm must be one of {ARMS}")
    y = np.asarray(y, dtype=np.float64)
    a = np.asarray(a)
    pi_hat = np.asarray(pi_hat, dtype=np.float64)
    if not (y.shape == a.shape == pi_hat.shape):
        raise ValidationError("y, a, pi_hat must have the same shape")
    if np.any(pi_hat <= 0) or np.any(pi_hat >= 1):
        raise ValidationError("propensity scores must lie strictly inside (0, 1)")
    mask = a == 1 if arm == "treated" else a == 0
    if not mask.any():
        raise ValidationError(f"no rows in the {arm} arm")
    denom = pi_hat[mask] if arm == "treated" else 1.0 - pi_hat[mask]
    return WeightedCdf.from_atoms(y[mask], 1.0 / denom)


def cdf_eval(f: WeightedCdf, y):
    """F(y): total normalized weight of atoms <= y (right-continuous step)."""
    y_arr = np.asarray(y, dtype=np.float64)
    idx = np.searchsorted(f.support, y_arr, side="right")
    padded = np.concatenate(([0.0], f.cum_weight))
    out = padded[idx]
    return float(out) if np.isscalar(y) or y_arr.ndim == 0 else out


def cdf_quantile(f: WeightedCdf, q: float) -> float:
    """Smallest support value whose cumulative weight reaches q."""
    if not 0.0 < q < 1.0:
        raise ValidationError(f"quantile level must be in (0, 1), got {q}")
    idx = int(np.searchsorted(f.cum_weight, q, side="left"))
    return float(f.support[idx])


def cdf_mean(f: WeightedCdf) -> float:
    """Mean of the step distribution; equals the self-normalized weighted mean."""
    return float(np.dot(f.support, f.atom_mass))
