"""Small dense simplex solver for the feasibility and support queries of the
polytope layer.

Problems here are tiny (a handful of variables, tens of rows), so a plain
tableau method with Bland's rule beats the per-call overhead of a general
solver.  All variables are free; every constraint is ``A @ z <= b``.
"""
from __future__ import annotations

import numpy as np

EPS_FEAS = 1e-9
_PIVOT_TOL = 1e-11
_MAX_ITER = 5000

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LPError(RuntimeError):
    """Raised when the simplex loop fails to terminate."""


def _pivot(T, r, j):
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T, basis, ncols):
    """Maximize the objective stored in the last row of ``T`` (Bland's rule)."""
    m = T.shape[0] - 1
    for _ in range(_MAX_ITER):
        obj = T[-1, :ncols]
        cand = np.flatnonzero(obj < -_PIVOT_TOL)
        if cand.size == 0:
            return OPTIMAL
        j = cand[0]
        col = T[:m, j]
        pos = col > _PIVOT_TOL
        if not pos.any():
            return UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-12 * max(1.0, abs(rmin)))
        r = ties[np.argmin(basis[ties])]
        _pivot(T, r, j)
        basis[r] = j
    raise LPError("simplex iteration limit reached")


def _solve_free(c, A, b, x0=None):
    """max c.z s.t. A z <= b with z free.  Returns (status, value, z)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    shift = np.zeros(n)
    if x0 is not None:
        shift = np.asarray(x0, dtype=float)
        b = b - A @ shift
        if b.min(initial=0.0) < -1e-7:
            shift = np.zeros(n)
            b = np.asarray(b + A @ np.asarray(x0, dtype=float))
    if m == 0:
        if np.any(np.abs(c) > 0):
            return UNBOUNDED, np.inf, None
        return OPTIMAL, float(c @ shift), shift.copy()

    # columns: p (n) | q (n) | slack (m) | artificial (1) | rhs
    N = 2 * n + m + 1
    T = np.zeros((m + 1, N + 1))
    T[:m, :n] = A
    T[:m, n:2 * n] = -A
    T[:m, 2 * n:2 * n + m] = np.eye(m)
    T[:m, 2 * n + m] = -1.0
    T[:m, -1] = b
    basis = np.arange(2 * n, 2 * n + m)
    art = 2 * n + m

    if b.min() < -EPS_FEAS * 1e-3:
        # phase one: maximize -a
        T[-1, art] = 1.0
        r = int(np.argmin(b))
        _pivot(T, r, art)
        basis[r] = art
        status = _run(T, basis, N)
        if status != OPTIMAL or -T[-1, -1] > EPS_FEAS:
            return INFEASIBLE, -np.inf, None
        rows = np.flatnonzero(basis == art)
        for r in rows:
            nz = np.flatnonzero(np.abs(T[r, :art]) > _PIVOT_TOL)
            if nz.size:
                _pivot(T, r, nz[0])
                basis[r] = nz[0]
            else:
                T[r] = 0.0
                basis[r] = -1
        keep = basis >= 0
        if not keep.all():
            T = np.vstack([T[:m][keep], T[-1:]])
            basis = basis[keep]
            m = T.shape[0] - 1
    else:
        T[:m, -1] = np.maximum(T[:m, -1], 0.0)

    T[:, art] = 0.0
    T[-1] = 0.0
    T[-1, :n] = -c
    T[-1, n:2 * n] = c
    for r, j in enumerate(basis):
        if T[-1, j] != 0.0:
            T[-1] -= T[-1, j] * T[r]
    status = _run(T, basis, art)
    if status == UNBOUNDED:
        return UNBOUNDED, np.inf, None
    vals = np.zeros(N)
    vals[basis] = T[:m, -1]
    z = vals[:n] - vals[n:2 * n] + shift
    return OPTIMAL, float(c @ z), z


def lp_max(c, A, b, x0=None):
    """Maximize ``c @ z`` subject to ``A @ z <= b``.

    ``x0`` may be a known feasible point; it lets the solver skip phase one.
    Returns ``(status, value, z)``.
    """
    return _solve_free(c, A, b, x0)


def feasible_point(A, b, strict=None, hint=None):
    """Return a point satisfying the mixed system, or ``None``.

    Rows flagged in ``strict`` must hold with ``<`` (decided with margin
    ``EPS_FEAS``); the rest with ``<=`` up to ``EPS_FEAS``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape if A.ndim == 2 else (0, 0)
    if strict is None:
        strict = np.zeros(m, dtype=bool)
    strict = np.asarray(strict, dtype=bool)
    for cand in (hint, np.zeros(n)):
        if cand is None:
            continue
        cand = np.asarray(cand, dtype=float)
        if m == 0:
            return cand.copy()
        slack = b - A @ cand
        if np.all(slack[~strict] >= 0.0) and np.all(slack[strict] > EPS_FEAS):
            return cand.copy()
    if m == 0:
        return np.zeros(n)
    if not strict.any():
        status, _, z = _solve_free(np.zeros(n), A, b)
        return z if status == OPTIMAL else None
    # maximize the margin on the strict rows, capped at 1
    Aa = np.zeros((m + 1, n + 1))
    Aa[:m, :n] = A
    Aa[:m, n] = strict.astype(float)
    Aa[m, n] = 1.0
    ba = np.append(b, 1.0)
    c = np.zeros(n + 1)
    c[n] = 1.0
    status, val, z = _solve_free(c, Aa, ba)
    if status != OPTIMAL or val <= EPS_FEAS:
        return None
    return z[:n]
