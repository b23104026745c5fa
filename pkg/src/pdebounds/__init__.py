"""Point estimates and sharp bounds for the pure direct effect E[Y{a, M(a*)}]
and the natural indirect effect from categorical data."""
from .bounds import (Assumption, Decomposition, IntervalEstimate, effect_decomposition, frechet_interval_gamma0,
                     interaction_contrasts, nested_mean_matrix, pde_bounds_swig, pde_point_deterministic_r,
                     pde_point_independent_r, pde_point_mediation_formula, pde_point_monotonicity,
                     pde_point_no_interaction)
from .covariates import StratifiedLaws, adjusted_single_world_bounds, adjusted_cross_world_bounds, fit_strata
from .errors import *  # noqa: F401,F403
from .inference import BootstrapResult, bootstrap_many, regime_estimator, weighted_bootstrap_ci
from .lp import CrossWorldLp, build_cross_world_lp, enumerate_vertices_oracle, pde_bounds_binary_r, pde_bounds_npsem_lp
from .oracle_sim import WorldSpec, enumerate_truth, random_world, sample_dataset
from .probmodel import (CategoricalCodec, ColumnRoles, Dataset, MediationLaw, ZeroCellPolicy, fit_laws,
                        read_csv_dataset, y_pmf_g_formula)

__version__ = "0.1.0"
