"""Covariate-adjusted bounds: stratify on the baseline covariate pattern C."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bounds import Assumption, Decomposition, IntervalEstimate, pde_bounds_swig
from .errors import EmptyStratum, IncoherentBounds
from .lp import build_cross_world_lp, build_lp_from_parts, simplex_solve
from .probmodel import BASELINE, COMPARISON, Dataset, MediationLaw, ZeroCellPolicy, fit_laws

COHERENCE_TOL = 1e-9


@dataclass(frozen=True)
class StratifiedLaws:
    """Per-pattern laws with pr(C = c); zero-weight patterns are dropped."""

    laws: tuple
    weights: np.ndarray
    patterns: tuple
    dropped: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.laws) == 0:
            raise EmptyStratum("no covariate pattern carries positive weight")
        if w.shape != (len(self.laws),) or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("stratum weights must be positive and sum to 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "laws", tuple(self.laws))

    def __len__(self):
        return len(self.laws)

    def averaged(self, attr) -> np.ndarray:
        """Weight-average of a per-stratum array attribute or callable."""
        get = attr if callable(attr) else (lambda law: getattr(law, attr))
        return sum(w * np.asarray(get(law), dtype=float) for w, law in zip(self.weights, self.laws))

    @property
    def marginalized(self) -> MediationLaw:
        """Law whose conditional tables are the C-weighted averages of the stratum tables."""
        first = self.laws[0]
        return MediationLaw(self.averaged("r_given_a"), self.averaged("m_given_ra"),
                            self.averaged("y_given_mra"), first.y_values, first.r_codec)


def fit_strata(data: Dataset, policy: ZeroCellPolicy = ZeroCellPolicy.ERROR) -> StratifiedLaws:
    """Fit one law per covariate pattern; pr(C=c) is estimated marginally."""
    totals = data.stratum_weights()
    keep = np.flatnonzero(totals > 0)
    laws = tuple(fit_laws(data, stratum=int(c), policy=policy) for c in keep)
    w = totals[keep] / totals[keep].sum()
    return StratifiedLaws(laws, w, tuple(int(c) for c in keep), int(totals.size - keep.size))


def _weighted_interval(strata, estimate: Callable[[MediationLaw], IntervalEstimate]):
    parts = [estimate(law) for law in strata.laws]
    lo = float(np.dot(strata.weights, [e.lower for e in parts]))
    hi = float(np.dot(strata.weights, [e.upper for e in parts]))
    return lo, hi, parts


def adjusted_single_world_bounds(strata: StratifiedLaws, account_for_R: bool) -> IntervalEstimate:
    """Average the per-stratum single-world bounds over pr(C)."""
    lo, hi, parts = _weighted_interval(strata, lambda law: pde_bounds_swig(law, account_for_R))
    label = Assumption.SWIG_WITH_R if account_for_R else Assumption.SWIG_IGNORE_R
    return IntervalEstimate.interval(lo, hi, label, {"n_strata": len(strata), "dropped_strata": strata.dropped})


def _lp_interval(lp):
    _, v_lo = simplex_solve(lp, "min")
    _, v_hi = simplex_solve(lp, "max")
    return v_lo, v_hi


def adjusted_cross_world_bounds(strata: StratifiedLaws, assumptions=Assumption.NPSEM_IE_LP) -> IntervalEstimate:
    """Intersect two candidate LP intervals.

    Pair 1 averages the per-stratum LP bounds.  Pair 2 solves one LP on the
    C-averaged confounder marginals and C-averaged nested-mean vector.
    """
    lps = [build_cross_world_lp(law) for law in strata.laws]
    per = [_lp_interval(lp) for lp in lps]
    lo1 = float(np.dot(strata.weights, [v[0] for v in per]))
    hi1 = float(np.dot(strata.weights, [v[1] for v in per]))
    pr_a = strata.averaged(lambda law: law.r_given_a[COMPARISON])
    pr_s = strata.averaged(lambda law: law.r_given_a[BASELINE])
    x_bar = sum(w * lp.x for w, lp in zip(strata.weights, lps))
    lo2, hi2 = _lp_interval(build_lp_from_parts(pr_a, pr_s, x_bar))
    lower, upper = max(lo1, lo2), min(hi1, hi2)
    meta = {"pair_stratified": [lo1, hi1], "pair_averaged": [lo2, hi2],
            "n_strata": len(strata), "dropped_strata": strata.dropped}
    if lower > upper + COHERENCE_TOL:
        raise IncoherentBounds(f"combined bounds cross: lower {lower:.6g} > upper {upper:.6g}")
    return IntervalEstimate.interval(min(lower, upper), upper, assumptions, meta)


def adjusted_point(strata: StratifiedLaws, estimate: Callable[[MediationLaw], IntervalEstimate]) -> IntervalEstimate:
    """Average a point-identifying functional over pr(C)."""
    lo, hi, parts = _weighted_interval(strata, estimate)
    label = parts[0].assumptions
    return IntervalEstimate.interval(lo, hi, label, {"n_strata": len(strata), "dropped_strata": strata.dropped})


def adjusted_mean_y(strata: StratifiedLaws) -> np.ndarray:
    """E(Y | A) for both exposure levels, standardized over pr(C)."""
    return strata.averaged("mean_y_given_a")


def adjusted_decomposition(strata: StratifiedLaws, gamma0: IntervalEstimate) -> Decomposition:
    """Effect decomposition with E(Y | A) standardized over pr(C)."""
    ey = adjusted_mean_y(strata)
    ey_a, ey_s = float(ey[COMPARISON]), float(ey[BASELINE])
    return Decomposition(ey_a - ey_s, ey_a, ey_s, gamma0, gamma0.shifted(-ey_s), gamma0.shifted(ey_a, negate=True))
