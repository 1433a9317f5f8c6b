"""Pure-numpy coordinate-descent kernel (fallback for the compiled extension).

Same contract as ``causalcdf._cdcore.cd_fit``: cyclic coordinate descent with
exact soft-threshold updates on a residual cache.  ``coef`` is updated in
place; returns ``(cycles, converged, objective_trace)`` where the trace holds
RSS + L1 penalty after each full cycle.
"""

from __future__ import annotations

import numpy as np


def cd_fit(x, y, thresh, coef, tol, max_iter):
    """Run cyclic coordinate descent until the largest coefficient move < tol.

    ``x`` should be Fortran-ordered so column slices are contiguous;
    ``thresh[j]`` is the soft-threshold level for coordinate j (half its L1
    penalty weight).  Zero-norm columns are skipped and keep coefficient 0.
    """
    n_cols = x.shape[1]
    colsq = np.einsum("ij,ij->j", x, x)
    active = colsq > 0.0
    r = y - x @ coef
    trace = []
    converged = False
    cycles = 0
    for _ in range(int(max_iter)):
        max_delta = 0.0
        for j in range(n_cols):
            if not active[j]:
                continue
            xj = x[:, j]
            old = coef[j]
            rho = xj @ r + old * colsq[j]
            if rho > thresh[j]:
                new = (rho - thresh[j]) / colsq[j]
            elif rho < -thresh[j]:
                new = (rho + thresh[j]) / colsq[j]
            else:
                new = 0.0
            if new != old:
                r -= (new - old) * xj
                coef[j] = new
                max_delta = max(max_delta, abs(new - old))
        trace.append(float(r @ r) + 2.0 * float(np.dot(thresh, np.abs(coef))))
        cycles += 1
        if max_delta < tol:
            converged = True
            break
    return cycles, converged, np.asarray(trace)
