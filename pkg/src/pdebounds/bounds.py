"""Closed-form identification formulas and copula (Frechet-Hoeffding) bounds for
gamma0 = E[Y{a, M(a*)}], plus the total / direct / indirect decomposition.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import MismatchedSupport, MonotonicityViolated, UndefinedConditional
from .probmodel import BASELINE, COMPARISON, MediationLaw, weighted_sum, y_pmf_table

POINT_TOL = 1e-12
MONOTONICITY_TOL = 1e-9


class Assumption(str, enum.Enum):
    """Identification regime an estimate was computed under."""

    SWIG_IGNORE_R = "SwigIgnoreR"
    SWIG_WITH_R = "SwigWithR"
    NPSEM_IE_IGNORE_R = "NpsemIeIgnoreR"
    NPSEM_IE_LP = "NpsemIeLp"
    NPSEM_IE_BINARY_R = "NpsemIeBinaryR"
    MONOTONICITY = "Monotonicity"
    NO_MR_INTERACTION = "NoMRInteraction"
    INDEPENDENT_CROSS_WORLD_R = "IndependentCrossWorldR"
    DETERMINISTIC_CROSS_WORLD_R = "DeterministicCrossWorldR"

    @property
    def partial(self) -> bool:
        return self in _PARTIAL


_PARTIAL = frozenset({Assumption.SWIG_IGNORE_R, Assumption.SWIG_WITH_R,
                      Assumption.NPSEM_IE_LP, Assumption.NPSEM_IE_BINARY_R})


@dataclass(frozen=True)
class IntervalEstimate:
    """[lower, upper] in outcome units; a point estimate has lower == upper."""

    lower: float
    upper: float
    point_identified: bool
    assumptions: Assumption | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if lo > hi + POINT_TOL:
            raise ValueError(f"interval lower {lo} exceeds upper {hi}")
        if self.point_identified and abs(hi - lo) > POINT_TOL:
            raise ValueError("point-identified estimate must have zero width")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def point(cls, value, assumptions=None, meta=None):
        v = float(value)
        return cls(v, v, True, assumptions, dict(meta or {}))

    @classmethod
    def interval(cls, lower, upper, assumptions=None, meta=None):
        lo, hi = float(lower), float(upper)
        if lo > hi:
            # round-off on a collapsed interval
            lo = hi = 0.5 * (lo + hi)
        return cls(lo, hi, hi - lo <= POINT_TOL, assumptions, dict(meta or {}))

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value, tol=0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def shifted(self, offset, negate=False) -> "IntervalEstimate":
        """``offset - self`` when ``negate``, else ``self + offset``."""
        if negate:
            return IntervalEstimate(offset - self.upper, offset - self.lower, self.point_identified,
                                    self.assumptions, dict(self.meta))
        return IntervalEstimate(self.lower + offset, self.upper + offset, self.point_identified,
                                self.assumptions, dict(self.meta))


# ---------------------------------------------------------------------------
# Frechet-Hoeffding interval for gamma0
# ---------------------------------------------------------------------------

def frechet_cell_bounds(pm_star, py):
    """Per-(m, y) Frechet-Hoeffding bounds on pr{Y(a,m)=y, M(a*)=m}.

    Returns ``(low, high)`` arrays shaped like ``py``.
    """
    pm = np.asarray(pm_star, dtype=float)[:, None]
    return np.maximum(0.0, pm + py - 1.0), np.minimum(pm, py)


def frechet_interval_gamma0(pm_star, py, y_values, assumptions=None) -> IntervalEstimate:
    """Sharp copula bounds on gamma0 from the marginals of M(a*) and each Y(a, m).

    Parameters
    ----------
    pm_star : (n_m,) array
        pmf of M(a*).
    py : (n_m, n_y) array
        Row ``m`` is the pmf of Y(a, m).  Rows for which ``pm_star`` is zero
        may be NaN (undefined) and are ignored.
    y_values : (n_y,) array
        Numeric outcome support; may include negative values.
    """
    pm = np.asarray(pm_star, dtype=float)
    py = np.asarray(py, dtype=float)
    yv = np.asarray(y_values, dtype=float)
    if pm.ndim != 1 or py.ndim != 2 or py.shape != (pm.shape[0], yv.shape[0]):
        raise MismatchedSupport(f"pmf shapes {pm.shape}, {py.shape}, {yv.shape} do not line up")
    live = pm > 0
    if np.any(np.isnan(py[live])):
        raise UndefinedConditional("outcome pmf undefined for a mediator level with positive probability")
    py = np.where(live[:, None], py, 0.0)
    low, high = frechet_cell_bounds(pm, py)
    pos, neg = yv > 0, yv < 0
    lower = float((yv * (low * pos + high * neg)).sum())
    upper = float((yv * (low * neg + high * pos)).sum())
    return IntervalEstimate.interval(lower, upper, assumptions)


def pde_bounds_swig(law: MediationLaw, account_for_R: bool) -> IntervalEstimate:
    """Assumption-free (single-world) bounds on gamma0.

    With ``account_for_R`` the outcome marginals come from the g-formula over
    the exposure-induced confounder; otherwise R is ignored.
    """
    py = y_pmf_table(law, account_for_R)
    label = Assumption.SWIG_WITH_R if account_for_R else Assumption.SWIG_IGNORE_R
    return frechet_interval_gamma0(law.m_given_a[BASELINE], py, law.y_values, label)


# ---------------------------------------------------------------------------
# point-identifying formulas
# ---------------------------------------------------------------------------

def pde_point_mediation_formula(law: MediationLaw) -> IntervalEstimate:
    """sum_m E(Y | m, a) pr(M=m | a*), ignoring R."""
    value = weighted_sum(law.mean_y_given_ma[COMPARISON], law.m_given_a[BASELINE], axis=0, what="E(Y|M,A)")
    return IntervalEstimate.point(value, Assumption.NPSEM_IE_IGNORE_R)


def nested_mean_matrix(law: MediationLaw) -> np.ndarray:
    """Matrix of E{E(Y | M, R=r, a) | R=r*, a*} indexed ``[r, r*]``.

    Entries that need an undefined cell are NaN; they only matter when the
    corresponding cross-world probability can be positive.
    """
    mu = law.mean_y_given_mra[COMPARISON]          # [r, m]
    pm = law.m_given_ra[BASELINE]                   # [r*, m]
    live = pm > 0                                   # [r*, m]
    prod = np.where(live[None, :, :], mu[:, None, :], 0.0) * np.where(live, pm, 0.0)[None, :, :]
    out = prod.sum(axis=2)
    bad = (np.isnan(mu)[:, None, :] & live[None, :, :]).any(axis=2) | np.isnan(pm).any(axis=1)[None, :]
    out[bad] = np.nan
    return out


def _weigh_nested(law, weights, what):
    return float(weighted_sum(nested_mean_matrix(law), weights, axis=(0, 1), what=what))


def pde_point_independent_r(law: MediationLaw) -> IntervalEstimate:
    """gamma0 when R(a) and R(a*) are independent."""
    w = np.outer(law.r_given_a[COMPARISON], law.r_given_a[BASELINE])
    return IntervalEstimate.point(_weigh_nested(law, w, "nested mean"), Assumption.INDEPENDENT_CROSS_WORLD_R)


def deterministic_coupling(law: MediationLaw, g: Sequence[int]) -> np.ndarray:
    """Cross-world joint implied by R(a) = g{R(a*)}, indexed ``[r, r*]``."""
    g = np.asarray(g, dtype=int)
    p = law.p
    if g.shape != (p,) or g.min() < 0 or g.max() >= p:
        raise ValueError(f"map must send each of the {p} confounder levels to a level")
    w = np.zeros((p, p))
    w[g, np.arange(p)] = law.r_given_a[BASELINE]
    return w


def pde_point_deterministic_r(law: MediationLaw, g: Sequence[int], tol: float = 1e-9) -> IntervalEstimate:
    """gamma0 when R(a) = g{R(a*)} for a known map ``g`` (level index -> level index).

    ``meta["marginal_compatible"]`` reports whether the implied joint
    reproduces the observed pr(R | a); if not, the map contradicts the data.
    """
    w = deterministic_coupling(law, g)
    compatible = bool(np.all(np.abs(w.sum(axis=1) - law.r_given_a[COMPARISON]) <= tol))
    value = _weigh_nested(law, w, "nested mean")
    return IntervalEstimate.point(value, Assumption.DETERMINISTIC_CROSS_WORLD_R,
                                  {"g": [int(v) for v in g], "marginal_compatible": compatible})


def component_marginals(law: MediationLaw) -> np.ndarray:
    """pr(R_j = 1 | A) for each binary component, shape (2, k)."""
    bits = law.r_component_bits
    if bits.max(initial=0) > 1:
        raise ValueError("confounder components must be binary")
    return law.r_given_a @ (bits == 1).astype(float)


def monotonicity_weights(law: MediationLaw, tol: float = MONOTONICITY_TOL) -> np.ndarray:
    """Product-of-components weights over (r, r*) under A-R monotonicity."""
    bits = law.r_component_bits
    if law.p < 2 or bits.max(initial=0) > 1 or bits.min(initial=0) < 0:
        raise ValueError("monotonicity formula needs R declared as binary components")
    comp = component_marginals(law)
    p_a, p_s = comp[COMPARISON], comp[BASELINE]
    if np.any(p_a < p_s - tol):
        j = int(np.argmax(p_s - p_a))
        raise MonotonicityViolated(
            f"pr(R_{j}=1|a)={p_a[j]:.6g} < pr(R_{j}=1|a*)={p_s[j]:.6g}")
    k = bits.shape[1]
    w = np.ones((law.p, law.p))
    for j in range(k):
        # f[r_j, r*_j]
        f = np.array([[1.0 - p_a[j], 0.0],
                      [p_a[j] - p_s[j], p_s[j]]])
        w *= f[bits[:, j][:, None], bits[:, j][None, :]]
    return w


def pde_point_monotonicity(law: MediationLaw, tol: float = MONOTONICITY_TOL) -> IntervalEstimate:
    """gamma0 under A-R monotonicity of every binary confounder component."""
    w = monotonicity_weights(law, tol)
    return IntervalEstimate.point(_weigh_nested(law, w, "nested mean"), Assumption.MONOTONICITY)


def _no_interaction_value(mu, pm_star, pr_a, m_ref, r_ref):
    # mu indexed [r, m]
    term_m = weighted_sum(mu[r_ref, :] - mu[r_ref, m_ref], pm_star, axis=0, what="E(Y|M,R,A)")
    term_r = weighted_sum(mu[:, m_ref] - mu[r_ref, m_ref], pr_a, axis=0, what="E(Y|M,R,A)")
    if np.isnan(mu[r_ref, m_ref]):
        raise UndefinedConditional("reference cell E(Y | m*, r*, a) is undefined")
    return float(term_m + term_r + mu[r_ref, m_ref])


def pde_point_no_interaction(law: MediationLaw, m_ref: int = 0, r_ref: int = 0,
                             diagnostics: bool = False) -> IntervalEstimate:
    """gamma0 assuming no additive M-R interaction in E(Y | M, R, a).

    With ``diagnostics`` the value at every reference pair is stored in
    ``meta["by_reference"]`` (indexed ``[m*, r*]``; NaN where undefined).
    """
    mu = law.mean_y_given_mra[COMPARISON]
    pm_star = law.m_given_a[BASELINE]
    pr_a = law.r_given_a[COMPARISON]
    value = _no_interaction_value(mu, pm_star, pr_a, m_ref, r_ref)
    meta = {"m_ref": int(m_ref), "r_ref": int(r_ref)}
    if diagnostics:
        table = np.full((law.n_m, law.p), np.nan)
        for mi in range(law.n_m):
            for ri in range(law.p):
                try:
                    table[mi, ri] = _no_interaction_value(mu, pm_star, pr_a, mi, ri)
                except UndefinedConditional:
                    pass
        meta["by_reference"] = table.tolist()
    return IntervalEstimate.point(value, Assumption.NO_MR_INTERACTION, meta)


def interaction_contrasts(law: MediationLaw) -> float:
    """Largest |E(Y|m,r,a) - E(Y|m*,r,a) - E(Y|m,r*,a) + E(Y|m*,r*,a)| over defined cells."""
    mu = law.mean_y_given_mra[COMPARISON].T        # [m, r]
    c = (mu[:, None, :, None] - mu[None, :, :, None] - mu[:, None, None, :] + mu[None, :, None, :])
    c = np.abs(c)
    if np.all(np.isnan(c)):
        return 0.0
    return float(np.nanmax(c))


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Decomposition:
    """Total effect, gamma0 interval, and the implied PDE and NIE intervals."""

    total: float
    mean_y_a: float
    mean_y_astar: float
    gamma0: IntervalEstimate
    pde: IntervalEstimate
    nie: IntervalEstimate

    def to_record(self) -> dict:
        g = self.gamma0
        rec = {
            "assumptions": g.assumptions.value if g.assumptions is not None else None,
            "lower": g.lower,
            "upper": g.upper,
            "point_identified": g.point_identified,
            "total_effect": self.total,
            "nie_lower": self.nie.lower,
            "nie_upper": self.nie.upper,
            "pde_lower": self.pde.lower,
            "pde_upper": self.pde.upper,
        }
        if g.meta:
            rec["meta"] = _jsonable(g.meta)
        return rec


def effect_decomposition(law: MediationLaw, gamma0: IntervalEstimate) -> Decomposition:
    """Split the total effect given an estimate of gamma0.

    NIE = E(Y|a) - gamma0 and PDE = gamma0 - E(Y|a*), so both inherit the
    width of the gamma0 interval.
    """
    ey = law.mean_y_given_a
    ey_a, ey_s = float(ey[COMPARISON]), float(ey[BASELINE])
    return Decomposition(
        total=ey_a - ey_s,
        mean_y_a=ey_a,
        mean_y_astar=ey_s,
        gamma0=gamma0,
        pde=gamma0.shifted(-ey_s),
        nie=gamma0.shifted(ey_a, negate=True),
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return None if np.isnan(obj) else float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj
