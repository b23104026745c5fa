"""Cross-world linear program for gamma0 under independent structural errors.

gamma0 = x' pi, where pi is the (unidentified) joint pmf of {R(a), R(a*)}
vectorized row-major over ``[r, r*]`` and x the vectorized nested-mean
matrix.  Fixing both marginals leaves (p-1)^2 free cells ``delta`` (all
cells with r < p and r* < p), so pi = B delta + d.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .bounds import Assumption, IntervalEstimate, nested_mean_matrix
from .errors import Infeasible, NotBinaryR, SolverError, TooLarge, UndefinedConditional
from .probmodel import BASELINE, COMPARISON, MediationLaw

MAX_LEVELS = 64
MAX_ORACLE_FREE = 9
DEGENERATE_TOL = 1e-12


def build_B(p: int) -> np.ndarray:
    """The p^2 x (p-1)^2 matrix mapping free cells to the full joint."""
    q = p - 1
    B = np.zeros((p * p, q * q))
    for j in range(q):
        rows = slice(j * p, j * p + q)
        cols = slice(j * q, (j + 1) * q)
        B[rows, cols] = np.eye(q)
        B[j * p + q, cols] = -1.0
    for k in range(q):
        B[q * p + k, k::q] = -1.0
    B[p * p - 1, :] = 1.0
    return B


def build_d(pr_a, pr_astar) -> np.ndarray:
    """Offset vector d from pr(R | a) and pr(R | a*)."""
    pr_a = np.asarray(pr_a, dtype=float)
    pr_astar = np.asarray(pr_astar, dtype=float)
    p = pr_a.shape[0]
    q = p - 1
    d = np.zeros(p * p)
    for j in range(q):
        d[j * p + q] = pr_a[j]
    d[q * p:q * p + q] = pr_astar[:q]
    d[p * p - 1] = pr_a[q] + pr_astar[q] - 1.0
    return d


def free_cell_index(p: int) -> np.ndarray:
    """Positions (in vectorized pi) of the free cells delta."""
    return np.array([r * p + s for r in range(p - 1) for s in range(p - 1)], dtype=int)


def frechet_box(pr_a, pr_astar) -> np.ndarray:
    """(p^2, 2) Frechet-Hoeffding bounds on every cell pi[r, r*]."""
    pa = np.asarray(pr_a, dtype=float)[:, None]
    ps = np.asarray(pr_astar, dtype=float)[None, :]
    lo = np.maximum(0.0, pa + ps - 1.0)
    hi = np.minimum(pa, ps)
    return np.stack([lo.ravel(), hi.ravel()], axis=1)


@dataclass(frozen=True)
class CrossWorldLp:
    """Data of the cross-world LP; ``box`` bounds delta, ``full_box`` bounds pi."""

    p: int
    B: np.ndarray
    d: np.ndarray
    x: np.ndarray
    pr_a: np.ndarray
    pr_astar: np.ndarray
    box: np.ndarray = field(repr=False)
    full_box: np.ndarray = field(repr=False)

    @property
    def free_index(self) -> np.ndarray:
        return free_cell_index(self.p)

    def joint(self, delta) -> np.ndarray:
        """pi = B delta + d reshaped to ``[r, r*]``."""
        return (self.B @ np.asarray(delta, dtype=float) + self.d).reshape(self.p, self.p)

    def objective(self, delta) -> float:
        return float(self.x @ (self.B @ np.asarray(delta, dtype=float) + self.d))

    def independence_delta(self) -> np.ndarray:
        return np.outer(self.pr_a, self.pr_astar).ravel()[self.free_index]

    def to_text(self) -> str:
        """Plain-text LP dump (objective, equalities, bounds) for external solvers."""
        p = self.p
        names = [f"pi_{r + 1}_{s + 1}" for r in range(p) for s in range(p)]
        lines = [f"\\ cross-world LP, p = {p}; pi = B delta + d, delta = free cells",
                 "\\ objective constant term is zero: value = x' pi", "minimize", " obj: " + _lin(self.x, names)]
        lines.append("subject to")
        free = set(self.free_index.tolist())
        for k in range(p * p):
            if k in free:
                continue
            coefs = np.zeros(p * p)
            coefs[k] = 1.0
            coefs[self.free_index] -= self.B[k]
            lines.append(f" c{k + 1}: {_lin(coefs, names)} = {float(self.d[k])!r}")
        lines.append("bounds")
        for name, (lo, hi) in zip(names, self.full_box):
            lines.append(f" {float(lo)!r} <= {name} <= {float(hi)!r}")
        lines.append("end")
        lines.append("\\ B =")
        lines.extend("\\ " + " ".join(f"{v:g}" for v in row) for row in self.B)
        lines.append("\\ d = " + " ".join(repr(float(v)) for v in self.d))
        lines.append("\\ x = " + " ".join(repr(float(v)) for v in self.x))
        return "\n".join(lines) + "\n"


def _lin(coefs, names):
    terms = [f"{'+' if c >= 0 else '-'} {abs(float(c))!r} {n}" for c, n in zip(coefs, names) if c != 0.0]
    return " ".join(terms) if terms else "0"


def build_lp_from_parts(pr_a, pr_astar, x) -> CrossWorldLp:
    pr_a = np.asarray(pr_a, dtype=float)
    pr_astar = np.asarray(pr_astar, dtype=float)
    x = np.asarray(x, dtype=float).ravel()
    p = pr_a.shape[0]
    if p < 1 or pr_astar.shape != (p,) or x.shape != (p * p,):
        raise ValueError("marginals and objective must describe the same confounder support")
    if p > MAX_LEVELS:
        raise TooLarge(f"confounder has {p} levels; the dense solver is capped at {MAX_LEVELS}")
    box = frechet_box(pr_a, pr_astar)
    return CrossWorldLp(p, build_B(p), build_d(pr_a, pr_astar), x, pr_a, pr_astar,
                        box[free_cell_index(p)], box)


def build_cross_world_lp(law: MediationLaw) -> CrossWorldLp:
    """Assemble B, d, x and the Frechet boxes from a fitted law."""
    pr_a, pr_astar = law.r_given_a[COMPARISON], law.r_given_a[BASELINE]
    x = nested_mean_matrix(law)
    forced_zero = (pr_a[:, None] <= 0) | (pr_astar[None, :] <= 0)
    if np.any(np.isnan(x) & ~forced_zero):
        raise UndefinedConditional("nested mean undefined for a confounder pair with positive probability")
    x = np.where(forced_zero, 0.0, x)
    return build_lp_from_parts(pr_a, pr_astar, x)


def equality_system(lp: CrossWorldLp):
    """Equality rows of the LP over all p*p cells.

    Returns ``(A, b)`` with one row ``pi_k - B_k . delta = d_k`` per non-free
    cell ``k``; the variable vector is the full joint ``pi`` in row-major order.
    """
    p = lp.p
    free = lp.free_index
    fixed = np.setdiff1d(np.arange(p * p), free)
    A = np.zeros((fixed.size, p * p))
    A[np.arange(fixed.size), fixed] = 1.0
    A[:, free] -= lp.B[fixed]
    return A, lp.d[fixed]


def simplex_solve(lp: CrossWorldLp, direction: str = "min"):
    """Optimize x' (B delta + d) over the Frechet-boxed transportation polytope.

    Returns ``(delta, value)``.  Ties between optimal vertices resolve to the
    first one Bland's rule reaches; the value is unique, delta is not.
    """
    if direction not in ("min", "max"):
        raise ValueError("direction must be 'min' or 'max'")
    if lp.p == 1:
        return np.zeros(0), float(lp.x[0] * lp.d[0])
    A, b = equality_system(lp)
    c = lp.x if direction == "min" else -lp.x
    z, status = kernels.bounded_simplex(c, A, b, lp.full_box[:, 0], lp.full_box[:, 1])
    if status == kernels.INFEASIBLE:
        raise Infeasible("cross-world LP is infeasible; are both confounder marginals valid pmfs?")
    if status != kernels.OPTIMAL:
        raise SolverError(f"simplex stopped with status {status}")
    delta = z[lp.free_index]
    return delta, lp.objective(delta)


def _r_degenerate(law: MediationLaw) -> bool:
    return bool(np.any(law.r_given_a.max(axis=1) >= 1.0 - DEGENERATE_TOL))


def pde_bounds_npsem_lp(law: MediationLaw) -> IntervalEstimate:
    """Sharp bounds on gamma0 under independent structural errors with a discrete R."""
    lp = build_cross_world_lp(law)
    d_lo, v_lo = simplex_solve(lp, "min")
    d_hi, v_hi = simplex_solve(lp, "max")
    meta = {"delta_lower": d_lo.tolist(), "delta_upper": d_hi.tolist()}
    if lp.p == 1 or _r_degenerate(law):
        mid = 0.5 * (v_lo + v_hi)
        return IntervalEstimate.point(mid, Assumption.NPSEM_IE_LP, meta)
    return IntervalEstimate.interval(v_lo, v_hi, Assumption.NPSEM_IE_LP, meta)


def binary_r_weights(pi11, p1_a, p1_astar) -> np.ndarray:
    """Joint weights h(r, r*, pi11) indexed ``[r, r*]`` (level index 1 is "R = 1")."""
    return np.array([[1.0 - p1_a - p1_astar + pi11, p1_astar - pi11],
                     [p1_a - pi11, pi11]])


def binary_r_objective(x, pi11, p1_a, p1_astar) -> float:
    """sum_{r, r*} x[r, r*] h(r, r*, pi11)."""
    return float((np.asarray(x, dtype=float) * binary_r_weights(pi11, p1_a, p1_astar)).sum())


def pde_bounds_binary_r(law: MediationLaw) -> IntervalEstimate:
    """Closed-form bounds for binary R: the objective is linear in pi11, so
    evaluate it at both Frechet endpoints."""
    if law.p != 2:
        raise NotBinaryR(f"closed-form bounds need a binary confounder, got {law.p} levels")
    p1_a = law.r_given_a[COMPARISON, 1]
    p1_s = law.r_given_a[BASELINE, 1]
    lp = build_cross_world_lp(law)
    x = lp.x.reshape(2, 2)
    ends = (max(0.0, p1_a + p1_s - 1.0), min(p1_a, p1_s))
    vals = [binary_r_objective(x, e, p1_a, p1_s) for e in ends]
    meta = {"pi11_candidates": list(ends), "values": vals}
    if ends[1] - ends[0] <= DEGENERATE_TOL:
        return IntervalEstimate.point(vals[0], Assumption.NPSEM_IE_BINARY_R, meta)
    return IntervalEstimate.interval(min(vals), max(vals), Assumption.NPSEM_IE_BINARY_R, meta)


@lru_cache(maxsize=8)
def _basis_subsets(p: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(p * p), 2 * p - 1)), dtype=int)


def enumerate_vertices_oracle(lp: CrossWorldLp, tol: float = 1e-10) -> IntervalEstimate:
    """Exact LP optimum by enumerating every basic feasible solution.

    Works on the transportation form {pi >= 0, row sums = pr(R|a),
    column sums = pr(R|a*)} directly, never touching B or d.  Test-only.
    """
    p = lp.p
    if (p - 1) ** 2 > MAX_ORACLE_FREE:
        raise TooLarge(f"vertex enumeration limited to (p-1)^2 <= {MAX_ORACLE_FREE}")
    if p == 1:
        return IntervalEstimate.point(lp.x[0], Assumption.NPSEM_IE_LP)
    # marginal constraints; the last column-sum row is implied by the others
    rows = []
    for r in range(p):
        v = np.zeros((p, p))
        v[r, :] = 1
        rows.append(v.ravel())
    for s in range(p - 1):
        v = np.zeros((p, p))
        v[:, s] = 1
        rows.append(v.ravel())
    M = np.array(rows)
    rhs = np.concatenate([lp.pr_a, lp.pr_astar[:-1]])
    subsets = _basis_subsets(p)
    mats = M[:, subsets].transpose(1, 0, 2)          # (n_sub, 2p-1, 2p-1)
    dets = np.linalg.det(mats)
    ok = np.abs(dets) > 0.5                           # totally unimodular: det in {0, +-1}
    sols = np.linalg.solve(mats[ok], np.broadcast_to(rhs, (ok.sum(), rhs.size))[..., None])[..., 0]
    full = np.zeros((sols.shape[0], p * p))
    np.put_along_axis(full, subsets[ok], sols, axis=1)
    lo, hi = lp.full_box[:, 0], lp.full_box[:, 1]
    feasible = np.all(full >= -tol, axis=1) & np.all(full >= lo - tol, axis=1) & np.all(full <= hi + tol, axis=1)
    if not feasible.any():
        raise Infeasible("no feasible vertex")
    values = full[feasible] @ lp.x
    return IntervalEstimate.interval(values.min(), values.max(), Assumption.NPSEM_IE_LP,
                                     {"n_vertices": int(np.unique(np.round(full[feasible], 12), axis=0).shape[0])})
