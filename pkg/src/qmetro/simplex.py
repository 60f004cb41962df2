"""Phase-one simplex for bounded linear feasibility problems.

Finds ``x`` with ``A x = b`` and ``0 <= x <= upper`` or reports that none
exists. Dense tableau, Bland's rule against cycling; intended for the small
systems (tens of rows and columns) that arise from completeness weights.
"""

import numpy as np


def phase_one(A, b, upper=None, tol=1e-9, max_iter=20000):
    """Return a feasible ``x`` or ``None``.

    Parameters
    ----------
    A : (p, m) array
    b : (p,) array
    upper : (m,) array or None
        Upper bounds; ``None`` means unbounded above.
    tol : float
        Pivot and optimality tolerance. The problem is declared infeasible
        when the phase-one optimum (sum of artificials) exceeds ``tol``
        times the scale of ``b``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    p, m = A.shape
    nu = 0 if upper is None else m
    # columns: x (m) | bound slacks (nu) | artificials (p)
    ncol = m + nu + p
    nrow = p + nu
    T = np.zeros((nrow, ncol + 1))
    sign = np.where(b < 0, -1.0, 1.0)
    T[:p, :m] = A * sign[:, None]
    T[:p, m + nu : m + nu + p] = np.eye(p)
    T[:p, -1] = b * sign
    basis = list(range(m + nu, m + nu + p))
    if nu:
        u = np.asarray(upper, dtype=float)
        T[p:, :m] = np.eye(m)
        T[p:, m : m + nu] = np.eye(m)
        T[p:, -1] = u
        basis += list(range(m, m + nu))
    cost = np.zeros(ncol)
    cost[m + nu :] = 1.0
    # reduced costs relative to the initial basis
    z = cost.copy()
    obj = 0.0
    for r in range(p):
        z -= T[r, :-1]
        obj -= T[r, -1]
    for _ in range(max_iter):
        enter = next((j for j in range(ncol) if z[j] < -tol), None)
        if enter is None:
            break
        col = T[:, enter]
        rows = [r for r in range(nrow) if col[r] > tol]
        if not rows:
            # unbounded direction cannot occur for a bounded-below objective
            break
        ratios = [T[r, -1] / col[r] for r in rows]
        best = min(ratios)
        cands = [r for r, q in zip(rows, ratios) if q <= best + tol * max(1.0, abs(best))]
        leave = min(cands, key=lambda r: basis[r])
        T[leave] /= T[leave, enter]
        for r in range(nrow):
            if r != leave and T[r, enter] != 0:
                T[r] -= T[r, enter] * T[leave]
        factor = z[enter]
        z -= factor * T[leave, :-1]
        obj -= factor * T[leave, -1]
        basis[leave] = enter
    else:
        return None
    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))
    if -obj > tol * scale * max(1, p):
        return None
    x = np.zeros(ncol)
    for r, j in enumerate(basis):
        x[j] = T[r, -1]
    return np.clip(x[:m], 0.0, None if upper is None else np.asarray(upper, dtype=float))
