import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_law
from pdebounds import oracle_sim
from pdebounds.errors import ConfigError, EmptyStratum, UndefinedConditional
from pdebounds.probmodel import (BASELINE, COMPARISON, CategoricalCodec, ColumnRoles, Dataset, MediationLaw,
                                 ZeroCellPolicy, fit_laws, read_csv_dataset, write_csv_dataset, y_pmf_g_formula,
                                 y_pmf_table)


def small_dataset(weights=None):
    a = CategoricalCodec.exposure("A", "ctl", "trt")
    m = CategoricalCodec("M", ("0", "1"))
    y = CategoricalCodec("Y", ("0", "1"), (0.0, 1.0))
    return Dataset(a, m, y, a=[0, 0, 1, 1], m=[1, 0, 1, 1], y=[1, 1, 1, 1], weights=weights)


def test_direct_counting():
    law = fit_laws(small_dataset())
    assert law.m_given_a[BASELINE, 1] == 0.5
    assert law.m_given_a[COMPARISON, 1] == 1.0
    assert not law.has_R


def test_weight_scaling_leaves_law_unchanged():
    a = fit_laws(small_dataset())
    b = fit_laws(small_dataset(weights=[2.0, 2.0, 2.0, 2.0]))
    assert np.array_equal(a.m_given_ra, b.m_given_ra, equal_nan=True)
    assert np.array_equal(a.y_given_mra, b.y_given_mra, equal_nan=True)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100))
def test_fit_invariant_to_order_and_scale(seed, scale):
    rng = np.random.default_rng(seed)
    spec = oracle_sim.random_world(seed, n_r=2)
    data = oracle_sim.sample_dataset(spec, 300, seed)
    perm = rng.permutation(data.n)
    shuffled = Dataset(data.a_codec, data.m_codec, data.y_codec, data.a[perm], data.m[perm], data.y[perm],
                       data.r[perm], data.c[perm], data.weights[perm] * scale, data.r_codec, data.c_codec)
    a, b = fit_laws(data), fit_laws(shuffled)
    for name in ("r_given_a", "m_given_ra", "y_given_mra"):
        assert np.allclose(getattr(a, name), getattr(b, name), atol=1e-12, equal_nan=True)


def test_fitted_cells_near_population_law():
    # derived: population law from exact enumeration of the world
    spec = oracle_sim.random_world(21, n_r=2)
    truth = oracle_sim.enumerate_truth(spec)
    data = oracle_sim.sample_dataset(spec, 200, seed=4, truth=truth)
    law = fit_laws(data)
    counts = np.bincount(data.a * law.p + data.r, minlength=2 * law.p).reshape(2, law.p)
    p = truth.law.m_given_ra
    se = np.sqrt(p * (1 - p) / np.maximum(counts, 1)[..., None])
    ok = counts[..., None] > 0
    assert np.all(np.abs(law.m_given_ra - p)[ok.repeat(law.n_m, -1)] <= 3 * se[ok.repeat(law.n_m, -1)] + 1e-12)


def test_empty_stratum():
    a = CategoricalCodec.exposure("A", "0", "1")
    c = CategoricalCodec.product("C", [CategoricalCodec("C1", ("x", "y"))])
    m = CategoricalCodec("M", ("0", "1"))
    y = CategoricalCodec("Y", ("0", "1"), (0.0, 1.0))
    d = Dataset(a, m, y, [0, 1], [0, 1], [0, 1], c=[0, 0], c_codec=c)
    with pytest.raises(EmptyStratum):
        fit_laws(d, stratum=1)


def test_zero_cell_policies():
    a = CategoricalCodec.exposure("A", "0", "1")
    m = CategoricalCodec("M", ("0", "1", "2"))
    y = CategoricalCodec("Y", ("0", "1"), (0.0, 1.0))
    d = Dataset(a, m, y, [0, 1, 1], [0, 0, 1], [0, 1, 0])
    law = fit_laws(d)
    assert np.isnan(law.y_given_mra[COMPARISON, 0, 2]).all()
    # M=2 never occurs under a*, so the undefined row is harmless
    assert np.isfinite(y_pmf_table(law, False)[:2]).all()
    uni = fit_laws(d, policy=ZeroCellPolicy.UNIFORM)
    assert np.allclose(uni.y_given_mra[COMPARISON, 0, 2], 0.5)
    with pytest.raises(UndefinedConditional):
        y_pmf_g_formula(law, 2, account_for_R=False)


def test_g_formula_equal_mixture():
    r_given_a = np.array([[0.5, 0.5], [0.5, 0.5]])
    m_given_ra = np.full((2, 2, 2), 0.5)
    y = np.zeros((2, 2, 2, 2))
    y[..., 1] = np.array([0.2, 0.6])[None, :, None]
    y[..., 0] = 1 - y[..., 1]
    law = MediationLaw(r_given_a, m_given_ra, y, [0.0, 1.0])
    assert y_pmf_g_formula(law, 0, True)[1] == pytest.approx(0.4, abs=1e-15)


def test_g_formula_matches_brute_force():
    law = random_law(5, p=3, n_m=2, n_y=3)
    for m in range(2):
        ref = sum(law.y_given_mra[COMPARISON, r, m] * law.r_given_a[COMPARISON, r] for r in range(3))
        assert np.allclose(y_pmf_g_formula(law, m, True), ref, atol=1e-12)


def test_trivial_r_g_formula_equals_conditional():
    law = random_law(6, p=1, n_m=3, n_y=2)
    for m in range(3):
        assert np.array_equal(y_pmf_g_formula(law, m, True), y_pmf_g_formula(law, m, False))
        assert np.array_equal(y_pmf_g_formula(law, m, False), law.y_given_mra[COMPARISON, 0, m])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
def test_emitted_pmfs_are_valid(seed, p, n_m, n_y):
    law = random_law(seed, p=p, n_m=n_m, n_y=n_y)
    for table in (law.m_given_a, y_pmf_table(law, True), y_pmf_table(law, False), law.r_given_ma.reshape(-1, p)):
        assert np.all(table >= 0)
        assert np.allclose(table.sum(-1), 1.0, atol=1e-12)


def test_invalid_law_rejected():
    with pytest.raises(ValueError):
        MediationLaw(np.array([[0.5, 0.6], [0.5, 0.5]]), np.full((2, 2, 2), 0.5), np.full((2, 2, 2, 2), 0.5),
                     [0.0, 1.0])


def test_codecs():
    a = CategoricalCodec.exposure("A", "x", "y")
    assert a.index("x") == 0 and a.index("y") == 1
    with pytest.raises(ConfigError):
        a.index("z")
    with pytest.raises(ValueError):
        CategoricalCodec("M", ("0", "0"))
    with pytest.raises(ValueError):
        CategoricalCodec("Y", ("0",), (float("inf"),))
    r = CategoricalCodec.product("R", [CategoricalCodec("T", ("0", "1")), CategoricalCodec("H", ("0", "1", "2"))])
    assert r.size == 6
    assert r.component_indices.tolist()[4] == [1, 1]


def test_csv_round_trip(tmp_path):
    spec = oracle_sim.art_cohort_world(1)
    data = oracle_sim.sample_dataset(spec, 400, seed=2)
    path = tmp_path / "d.csv"
    write_csv_dataset(data, path)
    roles = ColumnRoles(a="A", m="M", y="Y", r=["R1", "R2"], c=["C1"])
    back = read_csv_dataset(path, roles, "0", "1")
    for name in ("a", "m", "y", "r", "c"):
        assert np.array_equal(getattr(back, name), getattr(data, name))
    assert np.allclose(fit_laws(back).y_given_mra, fit_laws(data).y_given_mra, equal_nan=True)


def test_csv_missing_column_named(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("A,M\n0,1\n")
    with pytest.raises(ConfigError, match="'Y'"):
        read_csv_dataset(path, ColumnRoles(a="A", m="M", y="Y"), "0", "1")


def test_declared_y_support_keeps_unobserved_levels(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("A,M,Y\n0,0,lo\n1,1,lo\n0,1,lo\n1,0,lo\n")
    d = read_csv_dataset(path, ColumnRoles(a="A", m="M", y="Y"), "0", "1", y_values={"lo": 0.0, "hi": 5.0})
    assert d.y_codec.size == 2
    assert d.y_codec.levels == ("hi", "lo")
    assert d.y_codec.support.tolist() == [5.0, 0.0]
    assert fit_laws(d).y_given_mra[COMPARISON, 0, 0].tolist() == [0.0, 1.0]
