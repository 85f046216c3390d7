import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from ctmcgsa.config import load_config
from ctmcgsa.errors import DegenerateOutputError, FlaggedEstimateWarning, ModelValidationError
from ctmcgsa.gsa import (
    IndexEstimate,
    InputGroup,
    InputSpec,
    ParameterSpec,
    aggregated_indices,
    build_pickfreeze,
    dynamical_indices,
    estimate_first_order,
    estimate_total,
    lhs_sample,
    replicate_indices,
    scalar_indices,
    split_outputs,
)
from ctmcgsa.rng import UniformStream

N_ORACLE = 10_000
ORACLE_SEED = 7


def unit_spec(*names, z=True):
    params = tuple(ParameterSpec(n, 0.5, 0.0, 1.0) for n in names)
    groups = [InputGroup(n, (n,)) for n in names]
    if z:
        groups.append(InputGroup("Z"))
    return InputSpec(params, tuple(groups))


def normal_from_seeds(seeds):
    """One standard normal per row, from the first draw of each row's stream."""
    u = np.array([UniformStream(int(s)).next_uniform() for s in seeds[:, 0]])
    return stats.norm.ppf(u)


def indices_for(g, spec, n=N_ORACLE, seed=ORACLE_SEED, slots=1):
    design = build_pickfreeze(spec, n, UniformStream(seed), slots)
    x, seeds = design.stacked()
    return {e.group: e for e in scalar_indices(g(x, seeds), spec, n)}


# ------------------------------------------------------------------ LHS


def test_lhs_one_point_per_stratum_n4():
    x = lhs_sample([(0.0, 1.0)], 4, UniformStream(3))[:, 0]
    assert np.array_equal(np.floor(np.sort(x) * 4), [0, 1, 2, 3])


@given(st.integers(2, 300), st.integers(1, 10**9))
def test_lhs_stratification(n, seed):
    x = lhs_sample([(0.0, 1.0), (-2.0, 6.0)], n, UniformStream(seed))
    assert np.array_equal(np.sort(np.floor(x[:, 0] * n)), np.arange(n))
    assert np.array_equal(np.sort(np.floor((x[:, 1] + 2.0) / 8.0 * n)), np.arange(n))


def test_lhs_column_means():
    n = 2000
    x = lhs_sample([(0.0, 1.0)] * 8, n, UniformStream(11))
    assert np.all(np.abs(x.mean(axis=0) - 0.5) < 3 / np.sqrt(12 * n))


def test_lhs_deterministic_and_errors():
    a = lhs_sample([(0, 1), (2, 3)], 50, UniformStream(5))
    b = lhs_sample([(0, 1), (2, 3)], 50, UniformStream(5))
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        lhs_sample([(1.0, 1.0)], 10, UniformStream(5))
    with pytest.raises(ValueError):
        lhs_sample([(0.0, 1.0)], 1, UniformStream(5))


# --------------------------------------------------------- pick-freeze design


@pytest.fixture(scope="module")
def seiarhd_spec():
    return load_config("seiarhd").inputs


def test_seiarhd_groups(seiarhd_spec):
    assert seiarhd_spec.group_names == ("beta", "gamma_E", "gamma_A", "gamma_I", "gamma_H", "p_EA", "p_I", "p_HD", "Z")


def test_hybrids_swap_exactly_one_group(seiarhd_spec):
    n = 40
    d = build_pickfreeze(seiarhd_spec, n, UniformStream(2), 9)
    thetas, seeds = d.stacked()
    assert thetas.shape == ((2 + 9) * n, 9) and seeds.shape == ((2 + 9) * n, 9)
    for j, group in enumerate(seiarhd_spec.groups):
        x, s = d.hybrid(j)
        if group.is_z:
            assert np.array_equal(x, d.x_A) and np.array_equal(s, d.seeds_B)
            continue
        cols = seiarhd_spec.columns(group)
        other = [c for c in range(9) if c not in cols]
        assert np.array_equal(x[:, cols], d.x_B[:, cols])
        assert np.array_equal(x[:, other], d.x_A[:, other])
        assert np.array_equal(s, d.seeds_A)
    assert seiarhd_spec.columns(seiarhd_spec.groups[6]) == [6, 7]


def test_design_ranges_and_reciprocal_scale(seiarhd_spec):
    d = build_pickfreeze(seiarhd_spec, 500, UniformStream(9), 9)
    theta = d.theta_A
    for k, p in enumerate(seiarhd_spec.parameters):
        lo, hi = (1 / p.high, 1 / p.low) if p.scale == "reciprocal" else (p.low, p.high)
        assert lo <= theta[:, k].min() and theta[:, k].max() <= hi
    gamma_e = seiarhd_spec.parameter_names.index("gamma_E")
    assert np.allclose(theta[:, gamma_e], 1 / d.x_A[:, gamma_e])
    assert np.all((d.seeds_A >= 1) & (d.seeds_A <= 10**9))
    assert not np.array_equal(d.x_A, d.x_B)


def test_input_spec_invariants():
    p = (ParameterSpec("a", 0.5, 0, 1), ParameterSpec("b", 0.5, 0, 1))
    with pytest.raises(ModelValidationError):
        InputSpec(p, (InputGroup("a", ("a",)), InputGroup("Z")))  # b missing
    with pytest.raises(ModelValidationError):
        InputSpec(p, (InputGroup("ab", ("a", "b")),))  # no Z group
    with pytest.raises(ModelValidationError):
        InputSpec(p, (InputGroup("a", ("a",)), InputGroup("ab", ("a", "b")), InputGroup("Z")))
    with pytest.raises(ModelValidationError):
        ParameterSpec("c", 1.0, 2.0, 2.0)


# ------------------------------------------------------- analytic oracles


def test_additive_function():
    spec = unit_spec("x1", "x2")
    est = indices_for(lambda x, s: x[:, 0] + 2 * x[:, 1], spec)
    assert est["x1"].first_order == pytest.approx(0.2, abs=0.03)
    assert est["x2"].first_order == pytest.approx(0.8, abs=0.03)
    assert est["x1"].total == pytest.approx(0.2, abs=0.03)
    assert est["x2"].total == pytest.approx(0.8, abs=0.03)
    assert est["Z"].first_order == pytest.approx(0.0, abs=0.03)
    assert est["Z"].total == pytest.approx(0.0, abs=0.03)


def test_product_function():
    spec = unit_spec("x1", "x2")
    est = indices_for(lambda x, s: x[:, 0] * x[:, 1], spec)
    assert est["x1"].first_order == pytest.approx(3 / 7, abs=0.03)
    assert est["x1"].total == pytest.approx(4 / 7, abs=0.03)


def test_product_function_unbiased_over_replications():
    # the +-0.03 single-estimate tolerance is under 3 sd at n=10^4; the mean of
    # 20 independent designs pins the centre much more tightly
    spec = unit_spec("x1", "x2")
    reps = replicate_indices(lambda t, s: t[:, 0] * t[:, 1], spec, N_ORACLE, 20, UniformStream(99), 1)
    assert reps.by_group("first_order")["x1"].mean() == pytest.approx(3 / 7, abs=0.01)
    assert reps.by_group("total")["x1"].mean() == pytest.approx(4 / 7, abs=0.01)


def test_example_two_representations():
    # X Rademacher from a parameter column, Z standard normal from the seed
    spec = unit_spec("x")

    def rademacher(x):
        return np.where(x[:, 0] < 0.5, -1.0, 1.0)

    f = indices_for(lambda x, s: rademacher(x) * normal_from_seeds(s), spec)
    g = indices_for(lambda x, s: rademacher(x) ** 2 * normal_from_seeds(s), spec)
    assert f["Z"].first_order == pytest.approx(0.0, abs=0.03)
    assert f["x"].total == pytest.approx(1.0, abs=0.03)
    assert g["Z"].first_order == pytest.approx(1.0, abs=0.03)
    assert g["x"].total == pytest.approx(0.0, abs=0.03)
    # the same stochastic model, but the total index of X differs by about 1
    assert f["x"].total - g["x"].total == pytest.approx(1.0, abs=0.06)


def test_toy_model_with_intrinsic_noise():
    # Y = X1 + X2 Z with standard normals: V = 2, V_X1 = 1, total X2 = total Z = 1/2
    spec = unit_spec("x1", "x2")

    def g(x, s):
        return stats.norm.ppf(x[:, 0]) + stats.norm.ppf(x[:, 1]) * normal_from_seeds(s)

    est = indices_for(g, spec)
    assert est["x1"].first_order == pytest.approx(0.5, abs=0.03)
    assert est["x2"].total == pytest.approx(0.5, abs=0.03)
    assert est["Z"].total == pytest.approx(0.5, abs=0.03)


@pytest.mark.parametrize(
    "g",
    [
        lambda x, s: x[:, 0] + 2 * x[:, 1],
        lambda x, s: x[:, 0] * x[:, 1],
        lambda x, s: np.sin(6 * x[:, 0]) + x[:, 1] ** 2 * normal_from_seeds(s),
    ],
)
def test_first_order_below_total(g):
    est = indices_for(g, unit_spec("x1", "x2"), n=2000, seed=4)
    for e in est.values():
        assert e.first_order <= e.total + 0.05


def test_estimators_on_iid_samples(rng):
    # independent route: plain Monte Carlo pick-freeze with numpy draws
    n = N_ORACLE
    A = rng.random((n, 2))
    B = rng.random((n, 2))
    AB1 = A.copy()
    AB1[:, 0] = B[:, 0]
    g = lambda X: X[:, 0] * X[:, 1]  # noqa: E731
    yA, yB, yAB = g(A), g(B), g(AB1)
    assert estimate_first_order(yA, yB, yAB) == pytest.approx(3 / 7, abs=0.03)
    assert estimate_first_order(yA, yB, yAB, center=False) == pytest.approx(3 / 7, abs=0.03)
    assert estimate_total(yA, yAB, yB) == pytest.approx(4 / 7, abs=0.03)


def test_literal_formulas():
    yA = np.array([1.0, 4.0, 2.0, 7.0])
    yB = np.array([3.0, 0.0, 5.0, 1.0])
    yAB = np.array([2.0, 4.0, 6.0, 1.0])
    v = np.var(np.concatenate([yA, yB]), ddof=1)
    raw = np.mean(yB * (yAB - yA)) / v
    mu = np.concatenate([yA, yB]).mean()
    centred = np.mean((yB - mu) * (yAB - yA)) / v
    assert estimate_first_order(yA, yB, yAB, center=False) == pytest.approx(raw, rel=1e-14)
    assert estimate_first_order(yA, yB, yAB) == pytest.approx(centred, rel=1e-14)
    assert estimate_total(yA, yAB, yB) == pytest.approx(np.mean((yA - yAB) ** 2) / 2 / v, rel=1e-14)


def test_degenerate_output():
    y = np.ones(10)
    with pytest.raises(DegenerateOutputError):
        estimate_first_order(y, y, y)
    with pytest.raises(DegenerateOutputError):
        estimate_total(y, y)
    with pytest.raises(ValueError):
        estimate_total(np.ones(3), np.ones(4))


def test_flagging():
    e = IndexEstimate("g", -0.2, 0.5, 1.0, -0.2, 0.5)
    assert e.flagged
    assert not IndexEstimate("g", 0.1, 0.5, 1.0, 0.1, 0.5).flagged


def test_out_of_range_estimate_warns_and_is_kept():
    spec = unit_spec("x1")
    yA = np.array([0.0, 1.0, 0.0, 1.0])
    yB = 1.0 - yA
    y = np.concatenate([yA, yB, 2 * yA - 0.5, yA])   # hybrid moves against yB
    with pytest.warns(FlaggedEstimateWarning):
        est = scalar_indices(y, spec, 4, 0)[0]
    assert est.first_order < -0.05


# ------------------------------------------------------ functional outputs


def curve_outputs(spec, n, grid, seed=3, f=None):
    design = build_pickfreeze(spec, n, UniformStream(seed), 1)
    x, s = design.stacked()
    if f is None:
        f = lambda x, t: t * x[:, 0] + (1 - t) * x[:, 1]  # noqa: E731
    return np.column_stack([f(x, t) for t in grid])


def test_dynamical_indices_analytic():
    spec = unit_spec("x1", "x2")
    grid = np.linspace(0, 1, 11)
    dyn = dynamical_indices(curve_outputs(spec, N_ORACLE, grid), spec, N_ORACLE, grid)
    expected = grid**2 / (grid**2 + (1 - grid) ** 2)
    assert np.allclose(dyn.first_order[0], expected, atol=0.05)
    agg = {e.group: e for e in aggregated_indices(dyn)}
    assert agg["x1"].first_order == pytest.approx(0.5, abs=0.05)


def test_undefined_times_flagged():
    spec = unit_spec("x1", "x2")
    grid = np.array([0.0, 0.5, 1.0])
    y = curve_outputs(spec, 200, grid, f=lambda x, t: t * x[:, 0] + t * x[:, 1])
    dyn = dynamical_indices(y, spec, 200, grid)
    assert dyn.defined.tolist() == [False, True, True]
    assert np.isnan(dyn.first_order[:, 0]).all() and np.isfinite(dyn.first_order[:, 1:]).all()
    assert np.isfinite([e.total for e in aggregated_indices(dyn)]).all()


def test_constant_in_time_output_gives_constant_index():
    spec = unit_spec("x1", "x2")
    grid = np.linspace(0, 1, 5)
    y = curve_outputs(spec, 500, grid, f=lambda x, t: x[:, 0] + 2 * x[:, 1] + 0 * t)
    dyn = dynamical_indices(y, spec, 500, grid)
    assert np.all(dyn.first_order == dyn.first_order[:, :1])


def test_single_point_grid_equals_scalar():
    spec = unit_spec("x1", "x2")
    y = curve_outputs(spec, 300, [0.7])
    agg = aggregated_indices(dynamical_indices(y, spec, 300, [0.7]))
    scalar = scalar_indices(y[:, 0], spec, 300)
    for a, s in zip(agg, scalar):
        assert a.first_order == pytest.approx(s.first_order, rel=1e-12)
        assert a.total == pytest.approx(s.total, rel=1e-12)


def test_aggregated_is_variance_weighted_average():
    spec = unit_spec("x1", "x2")
    grid = np.linspace(0.05, 1, 20)
    dyn = dynamical_indices(curve_outputs(spec, 400, grid), spec, 400, grid)
    agg = aggregated_indices(dyn)
    for k, e in enumerate(agg):
        w = dyn.variance / dyn.variance.sum()
        assert e.first_order == pytest.approx(np.sum(w * dyn.first_order[k]), rel=1e-12)
        assert e.total == pytest.approx(np.sum(w * dyn.total[k]), rel=1e-12)


def test_aggregated_degenerate():
    spec = unit_spec("x1")
    grid = np.array([0.0, 1.0])
    y = np.ones((4 * 10, 2))
    with pytest.raises(DegenerateOutputError):
        aggregated_indices(dynamical_indices(y, spec, 10, grid))


def test_split_outputs_checks_length():
    with pytest.raises(ValueError):
        split_outputs(np.zeros(7), 2, 2)


# ------------------------------------------------------------ replication


def additive(thetas, seeds):
    return thetas[:, 0] + 2 * thetas[:, 1]


def test_replications_deterministic_and_sized():
    spec = unit_spec("x1", "x2")
    a = replicate_indices(additive, spec, 100, 50, UniformStream(6), 1)
    b = replicate_indices(additive, spec, 100, 50, UniformStream(6), 1)
    assert len(a.estimates) == 50 and all(len(r) == 3 for r in a.estimates)
    assert a.estimates == b.estimates
    assert [r[0].replication for r in a.estimates] == list(range(50))
    with pytest.raises(ValueError):
        replicate_indices(additive, spec, 100, 1, UniformStream(6), 1)


def test_replication_spread_scales_like_root_n():
    spec = unit_spec("x1", "x2")
    f = lambda t, s: t[:, 0] * t[:, 1]  # noqa: E731
    sd = [
        np.std(replicate_indices(f, spec, n, 60, UniformStream(8), 1).by_group("first_order")["x1"], ddof=1)
        for n in (500, 1000)
    ]
    assert 1.1 < sd[0] / sd[1] < 1.9
