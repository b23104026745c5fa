"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``PDEBOUNDS_DISABLE_NUMBA=1`` before import to force the numpy path.
Both paths are always importable as ``*_numba`` / ``*_numpy`` so they can be
compared directly (see ``benchmarks/bench_kernels.py``).
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLED = os.environ.get("PDEBOUNDS_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
USE_NUMBA = numba is not None and not _DISABLED

# simplex status codes
OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
ITERATION_LIMIT = 3

_COST_TOL = 1e-11
_PIVOT_TOL = 1e-11
_TIE_TOL = 1e-13
_FEAS_TOL = 1e-9


def _njit(func):
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)


# ---------------------------------------------------------------------------
# weighted cell counts
# ---------------------------------------------------------------------------

def _weighted_counts_loops(idx, weights, size):
    out = np.zeros(size)
    for i in range(idx.shape[0]):
        out[idx[i]] += weights[i]
    return out


def _weighted_counts_batch_loops(idx, weights, size):
    nrep = weights.shape[0]
    out = np.zeros((nrep, size))
    for b in range(nrep):
        for i in range(idx.shape[0]):
            out[b, idx[i]] += weights[b, i]
    return out


def weighted_counts_numpy(idx, weights, size):
    return np.bincount(idx, weights=weights, minlength=size).astype(float)


def weighted_counts_batch_numpy(idx, weights, size):
    nrep = weights.shape[0]
    offsets = (np.arange(nrep)[:, None] * size + idx[None, :]).ravel()
    flat = np.bincount(offsets, weights=weights.ravel(), minlength=nrep * size)
    return flat.reshape(nrep, size)


weighted_counts_numba = _njit(_weighted_counts_loops)
weighted_counts_batch_numba = _njit(_weighted_counts_batch_loops)


# ---------------------------------------------------------------------------
# bounded-variable primal simplex (dense tableau, Bland's rule)
# ---------------------------------------------------------------------------

@_njit
def _iterate_loops(T, x, lo, hi, basis, is_basic, at_upper, cost, max_iter):
    m, ntot = T.shape
    for _ in range(max_iter):
        enter = -1
        direction = 0.0
        for j in range(ntot):
            if is_basic[j] or hi[j] - lo[j] <= 0.0:
                continue
            dj = cost[j]
            for i in range(m):
                dj -= cost[basis[i]] * T[i, j]
            if at_upper[j]:
                if dj > _COST_TOL:
                    enter = j
                    direction = -1.0
                    break
            elif dj < -_COST_TOL:
                enter = j
                direction = 1.0
                break
        if enter < 0:
            return OPTIMAL

        best = hi[enter] - lo[enter]
        row = -1
        for i in range(m):
            alpha = direction * T[i, enter]
            bi = basis[i]
            if alpha > _PIVOT_TOL:
                lim = (x[bi] - lo[bi]) / alpha
            elif alpha < -_PIVOT_TOL:
                if hi[bi] == np.inf:
                    continue
                lim = (hi[bi] - x[bi]) / (-alpha)
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            if lim < best - _TIE_TOL:
                best = lim
                row = i
            elif row >= 0 and abs(lim - best) <= _TIE_TOL and bi < basis[row]:
                row = i
        if row < 0 and best == np.inf:
            return UNBOUNDED

        x[enter] += direction * best
        for i in range(m):
            x[basis[i]] -= direction * best * T[i, enter]

        if row < 0:
            at_upper[enter] = not at_upper[enter]
            x[enter] = hi[enter] if at_upper[enter] else lo[enter]
            continue

        leaving = basis[row]
        alpha = direction * T[row, enter]
        at_upper[leaving] = alpha < 0.0
        x[leaving] = hi[leaving] if alpha < 0.0 else lo[leaving]
        is_basic[leaving] = False
        piv = T[row, enter]
        for j in range(ntot):
            T[row, j] /= piv
        for i in range(m):
            if i == row:
                continue
            f = T[i, enter]
            if f != 0.0:
                for j in range(ntot):
                    T[i, j] -= f * T[row, j]
        basis[row] = enter
        is_basic[enter] = True
        at_upper[enter] = False
    return ITERATION_LIMIT


@_njit
def _polish_loops(Aaug, baug, x, lo, hi, basis, is_basic):
    # recompute basic values from the original system to shed pivot round-off
    m, ntot = Aaug.shape
    if m == 0:
        return
    rhs = baug.copy()
    for j in range(ntot):
        if not is_basic[j]:
            for i in range(m):
                rhs[i] -= Aaug[i, j] * x[j]
    AB = np.empty((m, m))
    for i in range(m):
        for k in range(m):
            AB[i, k] = Aaug[i, basis[k]]
    xb = np.linalg.solve(AB, rhs)
    for k in range(m):
        v = xb[k]
        bk = basis[k]
        if v < lo[bk]:
            v = lo[bk]
        if v > hi[bk]:
            v = hi[bk]
        x[bk] = v


@_njit
def _simplex_loops(c, A, b, lo, hi, max_iter):
    m, n = A.shape
    ntot = n + m
    T = np.zeros((m, ntot))
    Aaug = np.zeros((m, ntot))
    baug = np.zeros(m)
    x = np.zeros(ntot)
    lo2 = np.zeros(ntot)
    hi2 = np.zeros(ntot)
    basis = np.empty(m, dtype=np.int64)
    is_basic = np.zeros(ntot, dtype=np.bool_)
    at_upper = np.zeros(ntot, dtype=np.bool_)
    for j in range(n):
        lo2[j] = lo[j]
        hi2[j] = hi[j]
        x[j] = lo[j]
    for i in range(m):
        resid = b[i]
        for j in range(n):
            resid -= A[i, j] * lo[j]
        s = 1.0 if resid >= 0.0 else -1.0
        for j in range(n):
            Aaug[i, j] = s * A[i, j]
            T[i, j] = s * A[i, j]
        Aaug[i, n + i] = 1.0
        T[i, n + i] = 1.0
        baug[i] = s * b[i]
        x[n + i] = abs(resid)
        hi2[n + i] = np.inf
        basis[i] = n + i
        is_basic[n + i] = True

    cost = np.zeros(ntot)
    for i in range(m):
        cost[n + i] = 1.0
    status = _iterate_loops(T, x, lo2, hi2, basis, is_basic, at_upper, cost, max_iter)
    if status != OPTIMAL:
        return x[:n].copy(), status
    infeas = 0.0
    for i in range(m):
        infeas += x[n + i]
    if infeas > _FEAS_TOL:
        return x[:n].copy(), INFEASIBLE

    for i in range(m):
        hi2[n + i] = 0.0
        if not is_basic[n + i]:
            x[n + i] = 0.0
            at_upper[n + i] = False
    for j in range(ntot):
        cost[j] = c[j] if j < n else 0.0
    status = _iterate_loops(T, x, lo2, hi2, basis, is_basic, at_upper, cost, max_iter)
    _polish_loops(Aaug, baug, x, lo2, hi2, basis, is_basic)
    return x[:n].copy(), status


def _simplex_numpy_impl(c, A, b, lo, hi, max_iter):
    m, n = A.shape
    ntot = n + m
    resid = b - A @ lo
    sign = np.where(resid >= 0.0, 1.0, -1.0)
    Aaug = np.hstack([sign[:, None] * A, np.eye(m)])
    baug = sign * b
    T = Aaug.copy()
    x = np.concatenate([lo.astype(float), np.abs(resid)])
    lo2 = np.concatenate([lo.astype(float), np.zeros(m)])
    hi2 = np.concatenate([hi.astype(float), np.full(m, np.inf)])
    basis = np.arange(n, ntot)
    is_basic = np.zeros(ntot, dtype=bool)
    is_basic[basis] = True
    at_upper = np.zeros(ntot, dtype=bool)

    def run(cost):
        for _ in range(max_iter):
            d = cost - cost[basis] @ T
            free = (~is_basic) & (hi2 - lo2 > 0.0)
            elig = free & ((at_upper & (d > _COST_TOL)) | (~at_upper & (d < -_COST_TOL)))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return OPTIMAL
            enter = cand[0]
            direction = -1.0 if at_upper[enter] else 1.0
            alpha = direction * T[:, enter]
            xb, lb, hb = x[basis], lo2[basis], hi2[basis]
            lims = np.full(m, np.inf)
            pos = alpha > _PIVOT_TOL
            neg = (alpha < -_PIVOT_TOL) & np.isfinite(hb)
            lims[pos] = (xb[pos] - lb[pos]) / alpha[pos]
            lims[neg] = (hb[neg] - xb[neg]) / (-alpha[neg])
            lims = np.maximum(lims, 0.0)
            best = hi2[enter] - lo2[enter]
            row = -1
            if m:
                lmin = lims.min()
                if lmin < best - _TIE_TOL:
                    ties = np.flatnonzero(lims <= lmin + _TIE_TOL)
                    row = ties[np.argmin(basis[ties])]
                    best = lims[row]
            if row < 0 and best == np.inf:
                return UNBOUNDED
            x[enter] += direction * best
            x[basis] -= direction * best * T[:, enter]
            if row < 0:
                at_upper[enter] = not at_upper[enter]
                x[enter] = hi2[enter] if at_upper[enter] else lo2[enter]
                continue
            leaving = basis[row]
            a_row = alpha[row]
            at_upper[leaving] = a_row < 0.0
            x[leaving] = hi2[leaving] if a_row < 0.0 else lo2[leaving]
            is_basic[leaving] = False
            T[row] /= T[row, enter]
            f = T[:, enter].copy()
            f[row] = 0.0
            T[:] -= np.outer(f, T[row])
            basis[row] = enter
            is_basic[enter] = True
            at_upper[enter] = False
        return ITERATION_LIMIT

    cost = np.zeros(ntot)
    cost[n:] = 1.0
    status = run(cost)
    if status != OPTIMAL:
        return x[:n].copy(), status
    if x[n:].sum() > _FEAS_TOL:
        return x[:n].copy(), INFEASIBLE
    hi2[n:] = 0.0
    nb_art = ~is_basic[n:]
    x[n:][nb_art] = 0.0
    at_upper[n:] = False
    cost = np.concatenate([c.astype(float), np.zeros(m)])
    status = run(cost)
    if m:
        nonbasic = ~is_basic
        rhs = baug - Aaug[:, nonbasic] @ x[nonbasic]
        xb = np.linalg.solve(Aaug[:, basis], rhs)
        x[basis] = np.clip(xb, lo2[basis], hi2[basis])
    return x[:n].copy(), status


def _prep(c, A, b, lo, hi):
    A = np.ascontiguousarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("constraint matrix must be 2-d")
    c = np.ascontiguousarray(c, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    lo = np.ascontiguousarray(lo, dtype=float)
    hi = np.ascontiguousarray(hi, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or lo.shape != (n,) or hi.shape != (n,) or b.shape != (m,):
        raise ValueError("inconsistent simplex input shapes")
    if not np.all(np.isfinite(lo)):
        raise ValueError("lower bounds must be finite")
    if np.any(hi < lo - _FEAS_TOL):
        return None
    hi = np.maximum(hi, lo)
    return c, A, b, lo, hi


def simplex_numba(c, A, b, lo, hi, max_iter=10_000):
    """Minimize ``c @ z`` subject to ``A z = b`` and ``lo <= z <= hi`` (jitted path)."""
    args = _prep(c, A, b, lo, hi)
    if args is None:
        return np.asarray(lo, dtype=float).copy(), INFEASIBLE
    z, status = _simplex_loops(*args, max_iter)
    return z, int(status)


def simplex_numpy(c, A, b, lo, hi, max_iter=10_000):
    """Minimize ``c @ z`` subject to ``A z = b`` and ``lo <= z <= hi`` (numpy path)."""
    args = _prep(c, A, b, lo, hi)
    if args is None:
        return np.asarray(lo, dtype=float).copy(), INFEASIBLE
    return _simplex_numpy_impl(*args, max_iter)


if USE_NUMBA:
    bounded_simplex = simplex_numba

    def weighted_counts(idx, weights, size):
        return weighted_counts_numba(np.ascontiguousarray(idx, dtype=np.int64),
                                     np.ascontiguousarray(weights, dtype=float), int(size))

    def weighted_counts_batch(idx, weights, size):
        return weighted_counts_batch_numba(np.ascontiguousarray(idx, dtype=np.int64),
                                           np.ascontiguousarray(weights, dtype=float), int(size))
else:
    bounded_simplex = simplex_numpy
    weighted_counts = weighted_counts_numpy
    weighted_counts_batch = weighted_counts_batch_numpy


def backend():
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"
