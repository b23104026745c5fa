"""Weighted-bootstrap confidence intervals for identified intervals.

Each replicate multiplies the record weights by i.i.d. Exponential(1) draws
(mean 1, variance 1), refits the laws and re-runs the estimator.  The
interval CI takes the lower percentile of replicate lower bounds and the
upper percentile of replicate upper bounds.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .bounds import (Assumption, IntervalEstimate, pde_bounds_swig, pde_point_deterministic_r,
                     pde_point_independent_r, pde_point_mediation_formula, pde_point_monotonicity,
                     pde_point_no_interaction)
from .covariates import adjusted_single_world_bounds, adjusted_cross_world_bounds, adjusted_point, fit_strata
from .errors import EstimatorFailed, PdeBoundsError
from .lp import pde_bounds_binary_r, pde_bounds_npsem_lp
from .probmodel import Dataset, MediationLaw, ZeroCellPolicy, fit_laws

MAX_FAILURE_RATE = 0.05

Estimator = Callable[[Dataset], IntervalEstimate]


@dataclass(frozen=True)
class BootstrapResult:
    """Percentile CI for an interval-valued estimate.

    ``replicates`` has one row per draw; failed draws hold NaN and are
    listed in ``failed``.
    """

    estimate: IntervalEstimate
    replicates: np.ndarray
    ci_lower: float
    ci_upper: float
    level: float
    seed: int | tuple
    B: int
    failed: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.replicates) != self.B:
            raise ValueError("replicate table must have one row per draw")
        if not self.ci_lower <= self.ci_upper:
            raise ValueError("CI endpoints cross")

    def __eq__(self, other):
        if not isinstance(other, BootstrapResult):
            return NotImplemented
        return (self.estimate == other.estimate and self.ci_lower == other.ci_lower
                and self.ci_upper == other.ci_upper and self.level == other.level and self.seed == other.seed
                and self.B == other.B and self.failed == other.failed
                and np.array_equal(self.replicates, other.replicates, equal_nan=True))

    def covers(self, lower, upper, tol=0.0) -> bool:
        """Whether the CI contains the interval [lower, upper]."""
        return self.ci_lower - tol <= lower and upper <= self.ci_upper + tol

    def to_record(self, keep_replicates: bool = False) -> dict:
        out = {"ci_lower": self.ci_lower, "ci_upper": self.ci_upper, "level": self.level, "seed": self.seed,
               "B": self.B, "n_failed": len(self.failed)}
        if keep_replicates:
            out["replicates"] = [[None if np.isnan(v) else float(v) for v in row] for row in self.replicates]
        return out


def exponential_weights(seed, b: int, n: int) -> np.ndarray:
    """Replicate ``b``'s multiplier weights; depends only on (seed, b).

    ``seed`` may be an int or a sequence of ints.
    """
    parts = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    return np.random.default_rng([*(int(x) for x in parts), int(b)]).exponential(1.0, size=n)


def constant_weights(seed, b: int, n: int) -> np.ndarray:
    """Degenerate multipliers; every replicate reproduces the point estimate."""
    return np.ones(n)


def _validate(B, level):
    if int(B) < 1:
        raise ValueError("need at least one bootstrap replicate")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")


def _percentile_ci(reps, level):
    alpha = 1.0 - level
    lo = float(np.quantile(reps[:, 0], alpha / 2))
    hi = float(np.quantile(reps[:, 1], 1 - alpha / 2))
    return lo, hi


def bootstrap_many(data: Dataset, estimators: Mapping[str, Estimator], B: int = 1000, level: float = 0.95,
                   seed: int | tuple = 0, weight_fn=exponential_weights, n_jobs: int = 1) -> dict:
    """Bootstrap several estimators on shared weight draws.

    Parameters
    ----------
    data : Dataset
    estimators : mapping of name to callable
        Each maps a (reweighted) Dataset to an IntervalEstimate.
    B : int
        Replicate count.
    level : float
        Nominal coverage of the interval CI.
    seed : int or tuple of int
        Master seed; replicate ``b`` uses the stream ``(seed, b)`` so results
        do not depend on ``n_jobs`` or evaluation order.
    weight_fn : callable
        ``weight_fn(seed, b, n)`` returns replicate multipliers.
    n_jobs : int
        Worker threads.

    Returns
    -------
    dict of name to BootstrapResult

    Raises
    ------
    EstimatorFailed
        If more than 5% of an estimator's replicates fail, or the estimator
        fails on the full sample.
    """
    _validate(B, level)
    B = int(B)
    names = list(estimators)
    full = {}
    for name in names:
        try:
            full[name] = estimators[name](data)
        except PdeBoundsError as exc:
            raise EstimatorFailed(f"{name}: estimator fails on the full sample: {exc}") from exc
    base = data.weights

    def one(b):
        boot = data.with_weights(base * weight_fn(seed, b, data.n))
        row = np.full((len(names), 2), np.nan)
        for k, name in enumerate(names):
            try:
                est = estimators[name](boot)
                row[k] = est.lower, est.upper
            except PdeBoundsError:
                pass
        return row

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(one, range(B)))
    else:
        rows = [one(b) for b in range(B)]
    table = np.stack(rows, axis=1)                       # (estimator, B, 2)
    out = {}
    for k, name in enumerate(names):
        reps = table[k]
        bad = np.flatnonzero(np.isnan(reps[:, 0]))
        if bad.size > MAX_FAILURE_RATE * B:
            raise EstimatorFailed(f"{name}: {bad.size} of {B} replicates failed", replicate=int(bad[0]))
        ok = reps[~np.isnan(reps[:, 0])]
        lo, hi = _percentile_ci(ok, level) if ok.size else (full[name].lower, full[name].upper)
        out[name] = BootstrapResult(full[name], reps, lo, hi, float(level), seed if isinstance(seed, int) else tuple(seed), B,
                                    tuple(int(i) for i in bad))
    return out


def weighted_bootstrap_ci(data: Dataset, estimator: Estimator, B: int = 1000, level: float = 0.95,
                          seed: int = 0, weight_fn=exponential_weights, n_jobs: int = 1) -> BootstrapResult:
    """Weighted-bootstrap percentile CI for one estimator; see ``bootstrap_many``."""
    return bootstrap_many(data, {"estimate": estimator}, B, level, seed, weight_fn, n_jobs)["estimate"]


def law_function(assumption, g=None) -> Callable[[MediationLaw], IntervalEstimate]:
    """Law-to-estimate function for one identification regime."""
    assumption = Assumption(assumption)
    if assumption is Assumption.DETERMINISTIC_CROSS_WORLD_R and g is None:
        raise ValueError("the deterministic cross-world regime needs a map g")
    return {
        Assumption.SWIG_IGNORE_R: lambda law: pde_bounds_swig(law, False),
        Assumption.SWIG_WITH_R: lambda law: pde_bounds_swig(law, True),
        Assumption.NPSEM_IE_IGNORE_R: pde_point_mediation_formula,
        Assumption.NPSEM_IE_LP: pde_bounds_npsem_lp,
        Assumption.NPSEM_IE_BINARY_R: pde_bounds_binary_r,
        Assumption.MONOTONICITY: pde_point_monotonicity,
        Assumption.NO_MR_INTERACTION: pde_point_no_interaction,
        Assumption.INDEPENDENT_CROSS_WORLD_R: pde_point_independent_r,
        Assumption.DETERMINISTIC_CROSS_WORLD_R: lambda law: pde_point_deterministic_r(law, g),
    }[assumption]


def estimate_fitted(assumption, fitted, g=None) -> IntervalEstimate:
    """Evaluate a regime on a single law or on covariate-stratified laws.

    Stratified single-world bounds are averaged over strata; the cross-world
    LP uses the two-pair rule; point regimes are averaged over strata.
    """
    assumption = Assumption(assumption)
    fn = law_function(assumption, g)
    if isinstance(fitted, MediationLaw):
        return fn(fitted)
    if assumption is Assumption.SWIG_IGNORE_R:
        return adjusted_single_world_bounds(fitted, False)
    if assumption is Assumption.SWIG_WITH_R:
        return adjusted_single_world_bounds(fitted, True)
    if assumption is Assumption.NPSEM_IE_LP:
        return adjusted_cross_world_bounds(fitted)
    return adjusted_point(fitted, fn)


def fit_for(data: Dataset, policy=ZeroCellPolicy.ERROR, adjust: bool | None = None):
    """Fit one law, or per-pattern laws when the data carry covariates."""
    stratify = data.c_codec.size > 1 if adjust is None else adjust
    return fit_strata(data, policy) if stratify else fit_laws(data, policy=policy)


def regime_estimator(assumption, g=None, policy=ZeroCellPolicy.ERROR, adjust: bool | None = None) -> Estimator:
    """Dataset-to-estimate pipeline for one identification regime.

    With ``adjust`` (default: whenever the dataset has more than one
    covariate pattern) the laws are fitted per pattern and combined by the
    covariate rules; otherwise a single law is fitted.
    """
    assumption = Assumption(assumption)
    law_function(assumption, g)

    def estimate(data: Dataset) -> IntervalEstimate:
        return estimate_fitted(assumption, fit_for(data, policy, adjust), g)

    estimate.assumption = assumption
    return estimate
