"""Logistic propensity model on the selected mains and interactions.

The design is [1 | selected mains | selected pairwise products]; the model is
fit by Newton-Raphson (iteratively reweighted least squares) with a
step-halving line search on the Bernoulli log-likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .selection import GraphSelection

#: L-infinity bound on standardized coefficients before flagging separation
_SEPARATION_BOUND = 30.0


@dataclass(frozen=True)
class StarDesign:
    """Propensity design: intercept, selected mains (ascending), pairs (lexicographic)."""

    x_star: np.ndarray
    k: int
    m: int
    layout: tuple[str, ...]
    main_idx: tuple[int, ...]
    pair_idx: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return self.x_star.shape[0]

    @property
    def width(self) -> int:
        return self.x_star.shape[1]


@dataclass(frozen=True)
class PropensityFit:
    """Maximum-likelihood logistic fit and fitted scores.

    ``info_matrix`` is the observed information divided by n:
    (1/n) sum_i pi_i (1 - pi_i) x*_i x*_i^T.  ``flags`` records numerical
    fallbacks ("ridged", "separation") without aborting the fit.
    """

    eta_hat: np.ndarray
    pi_hat: np.ndarray
    loglik: float
    converged: bool
    info_matrix: np.ndarray
    flags: tuple[str, ...] = ()

    def to_json_dict(self, layout=None) -> dict:
        labels = layout if layout is not None else [f"b{i}" for i in range(len(self.eta_hat))]
        return {
            "coefficients": {str(l): float(e) for l, e in zip(labels, self.eta_hat)},
            "loglik": self.loglik,
            "converged": self.converged,
            "flags": list(self.flags),
        }


def build_star_design(x: np.ndarray, sel: GraphSelection, col_names=None) -> StarDesign:
    """Assemble [1 | X_selected_mains | products of selected pairs].

    Empty selections are fine: the result degenerates to an intercept-only
    column.  Interaction columns are recomputed from the original mains.
    """
    x = np.asarray(x, dtype=np.float64)
    n, p = x.shape
    mains = tuple(sorted(int(j) for j in sel.v_hat))
    pairs = tuple(sorted((int(s), int(v)) for s, v in sel.e_hat))
    for j in mains:
        if not 0 <= j < p:
            raise ValidationError(f"selected main index {j} outside 0..{p - 1}")
    for s, v in pairs:
        if not (0 <= s < p and 0 <= v < p):
            raise ValidationError(f"selected pair ({s}, {v}) outside 0..{p - 1}")

    def name(j):
        return col_names[j] if col_names else f"x{j + 1}"

    cols = [np.ones(n)]
    labels = ["intercept"]
    for j in mains:
        cols.append(x[:, j])
        labels.append(name(j))
    for s, v in pairs:
        cols.append(x[:, s] * x[:, v])
        labels.append(f"{name(s)}*{name(v)}")
    return StarDesign(
        x_star=np.column_stack(cols),
        k=len(mains),
        m=len(pairs),
        layout=tuple(labels),
        main_idx=mains,
        pair_idx=pairs,
    )


def full_main_star(x: np.ndarray, col_names=None) -> StarDesign:
    """Baseline design [1 | all mains], bypassing variable selection."""
    x = np.asarray(x, dtype=np.float64)
    n, p = x.shape

    def name(j):
        return col_names[j] if col_names else f"x{j + 1}"

    return StarDesign(
        x_star=np.column_stack([np.ones(n), x]),
        k=p,
        m=0,
        layout=("intercept", *(name(j) for j in range(p))),
        main_idx=tuple(range(p)),
        pair_idx=(),
    )


def _loglik(a, lp):
    # sum a*lp - log(1 + exp(lp)), stable via logaddexp
    return float(np.sum(a * lp) - np.sum(np.logaddexp(0.0, lp)))


def fit_logistic(design: StarDesign, a, tol: float = 1e-10, max_iter: int = 100) -> PropensityFit:
    """Newton-Raphson maximum likelihood for the treatment model.

    Convergence is declared when the log-likelihood improves by less than
    ``tol``.  A singular weighted Gram matrix triggers a ridge-stabilized
    retry (flag "ridged"); runaway standardized coefficients flag
    "separation" and mark the fit non-converged, but fitted scores stay
    usable.
    """
    if tol <= 0 or max_iter < 1:
        raise ValidationError("tol must be positive and max_iter >= 1")
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (design.n,):
        raise ValidationError("treatment length must match the design")
    if not np.isin(a, (0.0, 1.0)).all():
        raise ValidationError("treatment must be coded 0/1")
    if a.sum() < 1 or (1 - a).sum() < 1:
        raise ValidationError("both treatment arms must be non-empty")

    xs = design.x_star
    n, d = xs.shape
    # standardize the non-intercept columns for conditioning and for the
    # separation check; coefficients are mapped back afterwards
    mean = xs.mean(axis=0)
    sd = xs.std(axis=0)
    mean[0], sd[0] = 0.0, 1.0
    sd[sd <= 1e-12] = 1.0
    z = (xs - mean) / sd

    eta = np.zeros(d)
    eta[0] = _logit(np.clip(a.mean(), 1e-12, 1 - 1e-12))
    lp = z @ eta
    ll = _loglik(a, lp)
    flags: list[str] = []
    converged = False
    for _ in range(max_iter):
        pi = _sigmoid(lp)
        w = pi * (1.0 - pi)
        hess = z.T @ (w[:, None] * z)
        grad = z.T @ (a - pi)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            if "ridged" not in flags:
                flags.append("ridged")
            step = np.linalg.solve(hess + 1e-8 * np.eye(d), grad)
        # step-halving keeps the log-likelihood non-decreasing
        scale = 1.0
        for _ in range(40):
            lp_new = z @ (eta + scale * step)
            ll_new = _loglik(a, lp_new)
            if ll_new >= ll - 1e-12:
                break
            scale *= 0.5
        eta = eta + scale * step
        lp = z @ eta
        improvement = ll_new - ll
        ll = ll_new
        if abs(improvement) < tol:
            converged = True
            break

    if np.max(np.abs(eta)) > _SEPARATION_BOUND:
        flags.append("separation")
        converged = False

    # back-transform to the original column scale
    eta_orig = eta / sd
    eta_orig[0] = eta[0] - float(np.dot(eta[1:] / sd[1:], mean[1:]))
    lp_orig = xs @ eta_orig
    pi_hat = np.clip(_sigmoid(lp_orig), 1e-12, 1.0 - 1e-12)
    info = xs.T @ ((pi_hat * (1.0 - pi_hat))[:, None] * xs) / n
    return PropensityFit(
        eta_hat=eta_orig,
        pi_hat=pi_hat,
        loglik=_loglik(a, lp_orig),
        converged=converged,
        info_matrix=info,
        flags=tuple(flags),
    )


def predict_propensity(fit: PropensityFit, design: StarDesign, clip_eps: float = 1e-3) -> np.ndarray:
    """Fitted treatment probabilities, clipped into [clip_eps, 1 - clip_eps]."""
    if not 0.0 < clip_eps < 0.5:
        raise ValidationError("clip_eps must be in (0, 0.5)")
    if design.width != fit.eta_hat.shape[0]:
        raise ValidationError("design width does not match the fitted coefficients")
    lp = design.x_star @ fit.eta_hat
    return np.clip(_sigmoid(lp), clip_eps, 1.0 - clip_eps)


def _sigmoid(lp):
    out = np.empty_like(lp, dtype=np.float64)
    pos = lp >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-lp[pos]))
    e = np.exp(lp[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _logit(p):
    return float(np.log(p / (1.0 - p)))
