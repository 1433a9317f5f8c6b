"""Main-plus-pairwise-interaction design and L1-penalized least squares.

Recovers the informative confounder set (nonzero main-effect coefficients)
and the pairwise dependence set (nonzero interaction coefficients) by cyclic
coordinate descent on

    ||y - X b - X2 t||_2^2 + lambda1 ||b||_1 + lambda2 ||t||_1,

where X2 holds the entry-wise products of all column pairs.  The inner loop
runs in a compiled kernel when available (``causalcdf._cdcore``), otherwise in
the pure-numpy fallback; set CAUSALCDF_PURE=1 to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _cd_py
from .errors import DegenerateDesignError, InvariantError, ValidationError

if os.environ.get("CAUSALCDF_PURE"):
    _kernel = _cd_py
    KERNEL = "python"
else:
    try:
        from . import _cdcore as _kernel

        KERNEL = "compiled"
    except ImportError:  # extension not built
        _kernel = _cd_py
        KERNEL = "python"

cd_fit = _kernel.cd_fit

#: relative slack when asserting the per-cycle objective never increases
_MONOTONE_RTOL = 1e-9


@dataclass(frozen=True)
class InteractionDesign:
    """Design split into mains and all pairwise products (pairs j<k, lexicographic)."""

    x_main: np.ndarray
    x_pair: np.ndarray
    pair_index: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return self.x_main.shape[0]

    @property
    def p(self) -> int:
        return self.x_main.shape[1]

    @property
    def n_pairs(self) -> int:
        return self.x_pair.shape[1]

    def full_matrix(self) -> np.ndarray:
        """Mains and pair columns side by side, Fortran-ordered for the kernel."""
        return np.asfortranarray(np.hstack([self.x_main, self.x_pair]))


@dataclass(frozen=True)
class GraphSelection:
    """Fitted coefficients plus their exact nonzero supports.

    ``v_hat`` holds 0-based main indices with nonzero coefficient, ``e_hat``
    the 0-based (j, k) pairs with nonzero interaction coefficient; both are
    the literal nonzero patterns, with no epsilon thresholding.
    ``objective_value`` is the penalized objective recomputed at the returned
    coefficients (residuals include the fitted intercept).
    """

    beta_hat: np.ndarray
    theta_hat: np.ndarray
    v_hat: frozenset[int]
    e_hat: frozenset[tuple[int, int]]
    lambda1: float
    lambda2: float
    objective_value: float
    intercept: float
    converged: bool
    n_cycles: int

    @property
    def p(self) -> int:
        return self.beta_hat.shape[0]

    def pair_coefficients(self) -> dict[tuple[int, int], float]:
        """Nonzero interaction coefficients keyed by their 0-based (j, k) pair."""
        pairs = [(j, k) for j in range(self.p) for k in range(j + 1, self.p)]
        return {
            pairs[c]: float(self.theta_hat[c])
            for c in np.flatnonzero(self.theta_hat != 0.0)
        }

    def to_json_dict(self, col_names=None) -> dict:
        def name(j):
            return col_names[j] if col_names else f"x{j + 1}"

        return {
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "intercept": self.intercept,
            "converged": self.converged,
            "objective_value": self.objective_value,
            "mains": [
                {"index": j, "name": name(j), "coef": float(b)}
                for j, b in enumerate(self.beta_hat)
            ],
            "selected_mains": sorted(name(j) for j in self.v_hat),
            "selected_pairs": sorted(f"{name(s)}*{name(v)}" for s, v in self.e_hat),
        }


def build_design(x: np.ndarray) -> InteractionDesign:
    """All pairwise product columns for j<k in lexicographic order; needs p >= 2."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("x must be a 2-d matrix")
    n, p = x.shape
    if p < 2:
        raise DegenerateDesignError(
            f"pairwise design needs at least 2 columns, got {p}; use mains_only_design"
        )
    pairs = [(j, k) for j in range(p) for k in range(j + 1, p)]
    x_pair = np.empty((n, len(pairs)), dtype=np.float64)
    for col, (j, k) in enumerate(pairs):
        x_pair[:, col] = x[:, j] * x[:, k]
    return InteractionDesign(x_main=x, x_pair=x_pair, pair_index=tuple(pairs))


def mains_only_design(x: np.ndarray) -> InteractionDesign:
    """Degenerate design with an empty pair block (covers the p == 1 case)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValidationError("x must be a 2-d matrix with at least one column")
    return InteractionDesign(
        x_main=x, x_pair=np.empty((x.shape[0], 0)), pair_index=()
    )


def _standardize(full: np.ndarray, y: np.ndarray):
    """Center y and all columns; scale columns to squared norm n.

    Returns the standardized (Fortran-ordered) matrix, centered y, column
    means, scales (zero for constant columns, which are then inert), and the
    outcome mean.
    """
    n = full.shape[0]
    col_mean = full.mean(axis=0)
    centered = full - col_mean
    scale = np.sqrt(np.einsum("ij,ij->j", centered, centered) / n)
    safe = scale.copy()
    dead = scale <= 1e-12
    safe[dead] = 1.0
    xs = np.asfortranarray(centered / safe)
    if dead.any():
        xs[:, dead] = 0.0
        safe[dead] = 0.0
    y_mean = float(np.mean(y))
    return xs, y - y_mean, col_mean, safe, y_mean


def _thresholds(design: InteractionDesign, lambda1: float, lambda2: float) -> np.ndarray:
    # soft-threshold level is half the L1 weight of each coordinate
    return np.concatenate(
        [np.full(design.p, lambda1 / 2.0), np.full(design.n_pairs, lambda2 / 2.0)]
    )


def _finalize(design, y, lambda1, lambda2, coef_std, scale, col_mean, y_mean,
              converged, cycles) -> GraphSelection:
    p = design.p
    coef = np.zeros_like(coef_std)
    nonzero = scale > 0
    coef[nonzero] = coef_std[nonzero] / scale[nonzero]
    intercept = y_mean - float(np.dot(col_mean, coef))
    beta = coef[:p].copy()
    theta = coef[p:].copy()
    resid = y - intercept - design.x_main @ beta - design.x_pair @ theta
    objective = (
        float(resid @ resid)
        + lambda1 * float(np.abs(beta).sum())
        + lambda2 * float(np.abs(theta).sum())
    )
    return GraphSelection(
        beta_hat=beta,
        theta_hat=theta,
        v_hat=frozenset(int(j) for j in np.flatnonzero(beta != 0.0)),
        e_hat=frozenset(design.pair_index[int(c)] for c in np.flatnonzero(theta != 0.0)),
        lambda1=float(lambda1),
        lambda2=float(lambda2),
        objective_value=objective,
        intercept=intercept,
        converged=bool(converged),
        n_cycles=int(cycles),
    )


def _check_monotone(trace: np.ndarray) -> None:
    if trace.size < 2:
        return
    rises = np.diff(trace) > _MONOTONE_RTOL * np.maximum(np.abs(trace[:-1]), 1.0)
    if rises.any():
        cycle = int(np.flatnonzero(rises)[0]) + 1
        raise InvariantError(f"penalized objective increased at cycle {cycle}")


def fit_lasso(design: InteractionDesign, y, lambda1: float, lambda2: float,
              tol: float = 1e-7, max_iter: int = 10000) -> GraphSelection:
    """Coordinate-descent fit at a single penalty pair.

    Columns are standardized internally (unit L2 norm over sqrt(n)) and the
    intercept handled by centering; returned coefficients are on the original
    scale.  Convergence: largest coefficient move in a full cycle < tol.
    A non-converged fit is returned flagged, never raised.
    """
    if lambda1 < 0 or lambda2 < 0:
        raise ValidationError("penalty weights must be nonnegative")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (design.n,):
        raise ValidationError("y length must match the design")
    xs, yc, col_mean, scale, y_mean = _standardize(design.full_matrix(), y)
    coef = np.zeros(xs.shape[1], dtype=np.float64)
    thresh = _thresholds(design, lambda1, lambda2)
    cycles, converged, trace = cd_fit(xs, yc, thresh, coef, tol, max_iter)
    _check_monotone(trace)
    init_obj = float(yc @ yc)
    if trace.size and trace[-1] > init_obj * (1.0 + _MONOTONE_RTOL):
        raise InvariantError("fit ended worse than the zero initialization")
    return _finalize(design, y, lambda1, lambda2, coef, scale, col_mean, y_mean,
                     converged, cycles)


def default_lambda_grid(design: InteractionDesign, y, n_points: int = 20,
                        min_frac: float = 0.01, ratio: float = 1.0) -> list[tuple[float, float]]:
    """Log-spaced (lambda1, lambda2) path from the all-zero point downward.

    The top of the path is the smallest lambda1 that kills every coefficient
    (with lambda2 = ratio * lambda1); the bottom is min_frac times that.
    """
    if n_points < 1:
        raise ValidationError("n_points must be >= 1")
    if ratio <= 0:
        raise ValidationError("ratio must be positive")
    y = np.asarray(y, dtype=np.float64)
    xs, yc, *_ = _standardize(design.full_matrix(), y)
    grad = np.abs(xs.T @ yc)
    lam_from_mains = 2.0 * grad[: design.p].max(initial=0.0)
    lam_from_pairs = 2.0 * grad[design.p:].max(initial=0.0) / ratio
    # headroom keeps the path head strictly above the exact kill threshold,
    # where summation-order noise could otherwise admit a ~1e-16 ghost
    lam_max = max(lam_from_mains, lam_from_pairs) * (1.0 + 1e-8)
    if lam_max <= 0.0:
        return [(0.0, 0.0)]
    lams = np.geomspace(lam_max, min_frac * lam_max, n_points)
    return [(float(l1), float(ratio * l1)) for l1 in lams]


def select_lambda(design: InteractionDesign, y, grid) -> GraphSelection:
    """Fit every grid point warm-started along decreasing lambda1, pick min BIC.

    BIC = n log(RSS/n) + log(n) * #nonzero; ties break toward the sparser
    model, then the larger lambda1.
    """
    grid = list(grid)
    if not grid:
        raise ValidationError("lambda grid must be non-empty")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (design.n,):
        raise ValidationError("y length must match the design")
    n = design.n
    xs, yc, col_mean, scale, y_mean = _standardize(design.full_matrix(), y)
    coef = np.zeros(xs.shape[1], dtype=np.float64)
    order = sorted(range(len(grid)), key=lambda i: -grid[i][0])
    best = None
    best_key = None
    for i in order:
        lam1, lam2 = grid[i]
        if lam1 < 0 or lam2 < 0:
            raise ValidationError("penalty weights must be nonnegative")
        thresh = _thresholds(design, lam1, lam2)
        cycles, converged, trace = cd_fit(xs, yc, thresh, coef, 1e-7, 10000)
        _check_monotone(trace)
        fit = _finalize(design, y, lam1, lam2, coef.copy(), scale, col_mean, y_mean,
                        converged, cycles)
        df = len(fit.v_hat) + len(fit.e_hat)
        rss = fit.objective_value - lam1 * float(np.abs(fit.beta_hat).sum()) \
            - lam2 * float(np.abs(fit.theta_hat).sum())
        rss = max(rss, np.finfo(float).tiny)
        bic = n * np.log(rss / n) + np.log(n) * df
        key = (bic, df, -lam1)
        if best_key is None or key < best_key:
            best, best_key = fit, key
    return best
