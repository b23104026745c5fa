import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from helpers import binary_display_bounds, coupling_search, random_law, slow_nested_mean
from pdebounds import lp, oracle_sim
from pdebounds.bounds import (Assumption, IntervalEstimate, effect_decomposition, frechet_interval_gamma0,
                              interaction_contrasts, monotonicity_weights, nested_mean_matrix, pde_bounds_swig,
                              pde_point_deterministic_r, pde_point_independent_r, pde_point_mediation_formula,
                              pde_point_monotonicity, pde_point_no_interaction)
from pdebounds.errors import MismatchedSupport, MonotonicityViolated
from pdebounds.probmodel import BASELINE, COMPARISON, CategoricalCodec, MediationLaw

BIN = np.array([0.0, 1.0])


def binary_py(p1):
    p1 = np.asarray(p1, dtype=float)
    return np.stack([1 - p1, p1], axis=1)


# -- Frechet interval ----------------------------------------------------------

def test_frechet_binary_instance():
    iv = frechet_interval_gamma0([0.5, 0.5], binary_py([0.3, 0.7]), BIN)
    assert iv.lower == pytest.approx(0.2, abs=1e-12)
    assert iv.upper == pytest.approx(0.8, abs=1e-12)


def test_frechet_ternary_instance():
    iv = frechet_interval_gamma0([0.2, 0.3, 0.5], binary_py([0.1, 0.5, 0.9]), BIN)
    assert iv.lower == pytest.approx(0.4, abs=1e-12)
    assert iv.upper == pytest.approx(0.9, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_frechet_matches_coupling_search_for_binary_outcome(seed, n_m):
    rng = np.random.default_rng(seed)
    # grid-aligned marginals so the grid search is exact
    pm = rng.multinomial(200, np.ones(n_m) / n_m) / 200
    p1 = rng.integers(0, 201, n_m) / 200
    iv = frechet_interval_gamma0(pm, binary_py(p1), BIN)
    lo, hi = coupling_search(pm, p1)
    assert iv.lower == pytest.approx(lo, abs=1e-9)
    assert iv.upper == pytest.approx(hi, abs=1e-9)


def test_degenerate_mediator_collapses():
    py = np.array([[0.2, 0.3, 0.5], [0.6, 0.1, 0.3]])
    yv = np.array([-1.0, 0.0, 2.5])
    iv = frechet_interval_gamma0([0.0, 1.0], py, yv)
    assert iv.point_identified
    assert iv.lower == pytest.approx(py[1] @ yv, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 4))
@example(18, 1, 2)
def test_width_zero_iff_each_level_degenerate(seed, n_m, n_y):
    rng = np.random.default_rng(seed)
    pm = rng.dirichlet(np.ones(n_m))
    if rng.random() < 0.3:
        pm = np.eye(n_m)[rng.integers(n_m)]
    py = rng.dirichlet(np.ones(n_y), size=n_m)
    flip = rng.random(n_m) < 0.3
    py[flip] = np.eye(n_y)[rng.integers(n_y, size=flip.sum())]
    yv = np.sort(rng.normal(size=n_y)) if n_y > 1 else np.array([1.0])
    iv = frechet_interval_gamma0(pm, py, yv)
    # no cross-world freedom iff, for every m, M(a*)=m is sure or impossible or Y(a,m) is constant
    sure = np.isclose(pm, 0.0, atol=1e-12) | np.isclose(pm, 1.0, atol=1e-12)
    degenerate = all(sure[m] or np.count_nonzero(py[m]) == 1 for m in range(n_m))
    assert (iv.width <= 1e-12) == degenerate


def test_frechet_rejects_mismatched_support():
    with pytest.raises(MismatchedSupport):
        frechet_interval_gamma0([0.5, 0.5], binary_py([0.3, 0.7]), np.array([0.0, 1.0, 2.0]))


def test_negative_support_follows_sign_split():
    # Y in {-1, 0}: bounds mirror those of -Y in {0, 1}
    pos = frechet_interval_gamma0([0.4, 0.6], binary_py([0.3, 0.8]), BIN)
    neg = frechet_interval_gamma0([0.4, 0.6], binary_py([0.3, 0.8])[:, ::-1], np.array([0.0, -1.0])[::-1])
    assert neg.lower == pytest.approx(-pos.upper, abs=1e-15)
    assert neg.upper == pytest.approx(-pos.lower, abs=1e-15)


def test_comonotone_coupling_attains_bounds_for_binary_outcome():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n_m = int(rng.integers(2, 5))
        pm = rng.dirichlet(np.ones(n_m))
        p1 = rng.random(n_m)
        v = float(rng.choice([-2.0, 1.5]))
        yv = np.array([0.0, v])
        iv = frechet_interval_gamma0(pm, binary_py(p1), yv)
        # indicator couplings: pr{M=m, Y_m=v} at its largest / smallest value
        hi_cell = np.minimum(pm, p1)
        lo_cell = np.maximum(0.0, pm + p1 - 1)
        top = v * (hi_cell if v > 0 else lo_cell).sum()
        bottom = v * (lo_cell if v > 0 else hi_cell).sum()
        assert top == pytest.approx(iv.upper, abs=1e-10)
        assert bottom == pytest.approx(iv.lower, abs=1e-10)


# -- single-world bounds --------------------------------------------------------

def test_binary_displays_term_by_term():
    for seed in range(200):
        law = random_law(seed, p=1 + seed % 3, n_m=2, n_y=2)
        for with_r in (False, True):
            iv = pde_bounds_swig(law, with_r)
            lo, hi = binary_display_bounds(law, with_r)
            assert iv.lower == pytest.approx(lo, abs=1e-12)
            assert iv.upper == pytest.approx(hi, abs=1e-12)


def test_trivial_r_swig_variants_agree():
    law = random_law(9, p=1, n_m=3, n_y=3)
    a, b = pde_bounds_swig(law, False), pde_bounds_swig(law, True)
    assert (a.lower, a.upper) == pytest.approx((b.lower, b.upper), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 4), st.integers(1, 3))
def test_mediation_formula_inside_swig_bounds(seed, p, n_m, n_y):
    law = random_law(seed, p=p, n_m=n_m, n_y=n_y, y_values=np.linspace(-1, 2, n_y))
    iv = pde_bounds_swig(law, False)
    pt = pde_point_mediation_formula(law)
    assert iv.lower - 1e-12 <= pt.lower <= iv.upper + 1e-12


def test_mediation_formula_symmetric_midpoint():
    law = MediationLaw(np.ones((2, 1)), np.full((2, 1, 2), 0.5),
                       np.stack([binary_py([0.3, 0.7])] * 2)[:, None], BIN)
    assert pde_point_mediation_formula(law).lower == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_relabeling_invariance(seed):
    law = random_law(seed, p=3, n_m=3, n_y=2)
    rng = np.random.default_rng(seed)
    pm, pr = rng.permutation(3), rng.permutation(3)
    perm = MediationLaw(law.r_given_a[:, pr], law.m_given_ra[:, pr][:, :, pm],
                        law.y_given_mra[:, pr][:, :, pm], law.y_values, law.r_codec)
    for fn in (lambda l: pde_bounds_swig(l, True), lambda l: pde_bounds_swig(l, False), lp.pde_bounds_npsem_lp,
               pde_point_independent_r):
        a, b = fn(law), fn(perm)
        assert a.lower == pytest.approx(b.lower, abs=1e-12)
        assert a.upper == pytest.approx(b.upper, abs=1e-12)


# -- nested means and point formulas ------------------------------------------------

def test_nested_mean_matches_loops():
    law = random_law(13, p=3, n_m=3, n_y=3, y_values=[0.0, 1.0, 4.0])
    assert np.allclose(nested_mean_matrix(law), slow_nested_mean(law), atol=1e-12)


def test_nested_mean_constant_outcome():
    law = random_law(14, p=3, n_m=2, n_y=1, y_values=[2.5])
    assert np.allclose(nested_mean_matrix(law), 2.5)


def test_trivial_r_point_formulas_coincide():
    law = random_law(15, p=1, n_m=3, n_y=2)
    ref = pde_point_mediation_formula(law).lower
    assert nested_mean_matrix(law)[0, 0] == pytest.approx(ref, abs=1e-12)
    assert pde_point_independent_r(law).lower == pytest.approx(ref, abs=1e-12)
    assert pde_point_no_interaction(law).lower == pytest.approx(ref, abs=1e-12)


def test_monotonicity_weights_instance():
    r_codec = CategoricalCodec.product("R", [CategoricalCodec("R1", ("0", "1"))])
    law = MediationLaw(np.array([[0.6, 0.4], [0.4, 0.6]]), np.full((2, 2, 2), 0.5), np.full((2, 2, 2, 2), 0.5),
                       BIN, r_codec)
    w = monotonicity_weights(law)
    assert w[1, 1] == pytest.approx(0.4, abs=1e-12)
    assert w[1, 0] == pytest.approx(0.2, abs=1e-12)
    assert w[0, 1] == 0.0
    assert w[0, 0] == pytest.approx(0.4, abs=1e-12)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)


def test_monotonicity_no_effect_is_diagonal():
    law = random_law(16, r_components=2)
    law = MediationLaw(np.stack([law.r_given_a[0]] * 2), law.m_given_ra, law.y_given_mra, law.y_values, law.r_codec)
    w = monotonicity_weights(law)
    assert np.allclose(w, np.diag(np.diag(w)))
    # product of the component marginals, since components have independent errors
    comp = law.r_given_a[0] @ law.r_component_bits
    bits = law.r_component_bits
    assert np.allclose(np.diag(w), np.prod(np.where(bits == 1, comp, 1 - comp), axis=1))


def test_monotonicity_violation_raises():
    r_codec = CategoricalCodec.product("R", [CategoricalCodec("R1", ("0", "1"))])
    law = MediationLaw(np.array([[0.4, 0.6], [0.6, 0.4]]), np.full((2, 2, 2), 0.5), np.full((2, 2, 2, 2), 0.5),
                       BIN, r_codec)
    with pytest.raises(MonotonicityViolated):
        pde_point_monotonicity(law)


def monotone_law(seed, k=1):
    law = random_law(seed, r_components=k)
    comp_s = np.random.default_rng(seed).random(k) * 0.5
    comp_a = comp_s + 0.5 * np.random.default_rng(seed + 1).random(k)
    bits = law.r_component_bits
    ra = np.prod(np.where(bits == 1, comp_a, 1 - comp_a), axis=1)
    rs = np.prod(np.where(bits == 1, comp_s, 1 - comp_s), axis=1)
    return MediationLaw(np.stack([rs, ra]), law.m_given_ra, law.y_given_mra, law.y_values, law.r_codec)


def test_monotonicity_equals_binary_objective_at_upper_endpoint():
    for seed in range(100):
        law = monotone_law(seed)
        pa, ps = law.r_given_a[COMPARISON, 1], law.r_given_a[BASELINE, 1]
        ref = lp.binary_r_objective(nested_mean_matrix(law), min(pa, ps), pa, ps)
        assert pde_point_monotonicity(law).lower == pytest.approx(ref, abs=1e-12)
        assert lp.pde_bounds_npsem_lp(law).contains(ref, 1e-12)


def test_independent_r_equals_binary_objective_at_product():
    for seed in range(50):
        law = random_law(seed, p=2)
        pa, ps = law.r_given_a[COMPARISON, 1], law.r_given_a[BASELINE, 1]
        ref = lp.binary_r_objective(nested_mean_matrix(law), pa * ps, pa, ps)
        assert pde_point_independent_r(law).lower == pytest.approx(ref, abs=1e-12)


def test_deterministic_identity_and_constant_maps():
    law = random_law(17, p=3, n_m=2, n_y=2)
    x = nested_mean_matrix(law)
    ps = law.r_given_a[BASELINE]
    ident = pde_point_deterministic_r(law, [0, 1, 2])
    assert ident.lower == pytest.approx(sum(x[r, r] * ps[r] for r in range(3)), abs=1e-12)
    const = pde_point_deterministic_r(law, [2, 2, 2])
    assert const.lower == pytest.approx(sum(x[2, r] * ps[r] for r in range(3)), abs=1e-12)
    assert not const.meta["marginal_compatible"]


def test_compatible_deterministic_map_inside_lp_interval():
    rng = np.random.default_rng(4)
    hits = 0
    for seed in range(200):
        law = random_law(seed, p=3)
        perm = rng.permutation(3)
        ps = law.r_given_a[BASELINE]
        # make R(a) = perm(R(a*)) consistent with the data
        law = MediationLaw(np.stack([ps, ps[np.argsort(perm)]]), law.m_given_ra, law.y_given_mra, law.y_values,
                           law.r_codec)
        est = pde_point_deterministic_r(law, perm)
        assert est.meta["marginal_compatible"]
        assert lp.pde_bounds_npsem_lp(law).contains(est.lower, 1e-10)
        hits += 1
    assert hits == 200


def test_no_interaction_reference_invariance_when_separable():
    law = random_law(18, p=3, n_m=3, n_y=2)
    rng = np.random.default_rng(2)
    h1, h2 = rng.random(3) * 0.5, rng.random(3) * 0.5
    mean = h1[:, None] + h2[None, :]                 # [r, m], in [0, 1]
    y = np.zeros((2, 3, 3, 2))
    y[..., 1] = mean
    y[..., 0] = 1 - mean
    law = MediationLaw(law.r_given_a, law.m_given_ra, y, BIN, law.r_codec)
    est = pde_point_no_interaction(law, diagnostics=True)
    table = np.array(est.meta["by_reference"])
    assert np.allclose(table, est.lower, atol=1e-12)
    assert interaction_contrasts(law) == pytest.approx(0.0, abs=1e-12)


def test_interaction_contrast_pure_interaction():
    y = np.zeros((2, 2, 2, 2))
    mean = np.array([[0.0, 0.0], [0.0, 1.0]])        # [r, m] = m * r
    y[..., 1] = mean
    y[..., 0] = 1 - mean
    law = MediationLaw(np.full((2, 2), 0.5), np.full((2, 2, 2), 0.5), y, BIN)
    assert interaction_contrasts(law) == pytest.approx(1.0)


def test_interaction_contrast_matches_brute_force():
    law = random_law(19, p=3, n_m=3, n_y=3)
    mu = law.mean_y_given_mra[COMPARISON]
    best = max(abs(mu[r, m] - mu[r, ms] - mu[rs, m] + mu[rs, ms])
               for m in range(3) for ms in range(3) for r in range(3) for rs in range(3))
    assert interaction_contrasts(law) == pytest.approx(best, abs=1e-15)


# -- decomposition --------------------------------------------------------------------

def test_decomposition_algebra():
    law = random_law(20, p=2, n_m=2, n_y=2)
    pt = pde_point_mediation_formula(law)
    dec = effect_decomposition(law, pt)
    assert dec.nie.point_identified
    assert dec.nie.lower == pytest.approx(dec.total - (pt.lower - dec.mean_y_astar), abs=1e-14)
    iv = pde_bounds_swig(law, True)
    dec = effect_decomposition(law, iv)
    assert dec.nie.width == pytest.approx(iv.width, abs=1e-14)
    assert dec.pde.width == pytest.approx(iv.width, abs=1e-14)
    rec = dec.to_record()
    assert set(rec) >= {"assumptions", "lower", "upper", "point_identified", "total_effect", "nie_lower",
                        "nie_upper"}
    assert rec["assumptions"] == "SwigWithR"


def test_decomposition_nie_interval_holds_true_nie():
    for seed in range(30):
        spec = oracle_sim.random_world(seed, kind="swig", n_r=2)
        truth = oracle_sim.enumerate_truth(spec)
        dec = effect_decomposition(truth.law, pde_bounds_swig(truth.law, True))
        assert dec.nie.contains(truth.nie, 1e-10)
        assert dec.total == pytest.approx(truth.te, abs=1e-12)


def test_interval_estimate_invariants():
    with pytest.raises(ValueError):
        IntervalEstimate(1.0, 0.0, False)
    with pytest.raises(ValueError):
        IntervalEstimate(0.0, 0.1, True)
    assert Assumption.SWIG_WITH_R.partial and not Assumption.MONOTONICITY.partial
