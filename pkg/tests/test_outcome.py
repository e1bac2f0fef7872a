# test_outcome.py
import numpy as np
import pytest

from src.model.contest import ContestConfig
from src.model.costs import LinearPowerCost, TabulatedCost
from src.model.distributions import UniformDistribution
from src.outcome.frontier import (FrontierError, UndefinedDerivativeError, budget_derivative, cost_elasticity,
                                  expected_selected_type, frontier, outcome_pair, selection_efficiency,
                                  societal_cost, type_deficit)
from src.statics.power_family import PowerFamily


def test_societal_cost_uniform_linear(uniform_linear):
    _, F, c = uniform_linear
    assert societal_cost(0.0, F, c) == 0.0
    assert societal_cost(0.6, F, c) == pytest.approx(0.18, abs=1e-10)
    for s in (0.1, 0.35, 0.9):
        assert societal_cost(s, F, c) == pytest.approx(s * s / 2, abs=1e-10)


def test_selection_efficiency_uniform_linear(uniform_linear):
    config, F, c = uniform_linear
    assert selection_efficiency(0.0, config, F, c) == 0.0
    assert selection_efficiency(1.0, config, F, c) == 0.0
    assert selection_efficiency(0.5, config, F, c) == pytest.approx(0.25, abs=1e-10)
    for s in (0.2, 0.7):
        assert selection_efficiency(s, config, F, c) == pytest.approx(2 * s * s * (1 - s), abs=1e-10)


@pytest.mark.parametrize("alpha, gamma, eps", [(1.0, 1.0, 1.0), (2.0, 1.5, 0.5), (3.0, 0.4, 2.0)])
@pytest.mark.parametrize("n, m", [(2, 1), (5, 2)])
def test_power_family_closed_forms(alpha, gamma, eps, n, m):
    family = PowerFamily(alpha, gamma, eps)
    config = ContestConfig(n, m, 1.0)
    F, c = family.distribution(), family.cost()
    for s in (0.15, 0.5, 0.85):
        assert societal_cost(s, F, c) == pytest.approx(family.societal_cost(s), abs=1e-9)
        assert selection_efficiency(s, config, F, c) == pytest.approx(family.selection_efficiency(s, config), abs=1e-8)
        assert budget_derivative(s, config, F, c) == pytest.approx(family.budget_slope(s, config), rel=1e-6)
        assert cost_elasticity(s, F, c) == pytest.approx(eps, rel=1e-9)


def test_elasticity_right_limit_at_zero(power_unit):
    family, _ = power_unit
    assert cost_elasticity(0.0, family.distribution(), family.cost()) == pytest.approx(1.0)


def test_expected_selected_type(fig1):
    config, F, c = fig1
    for s in (0.0, 0.3, 0.6, 1.0):
        eta = selection_efficiency(s, config, F, c)
        assert expected_selected_type(s, config, F, c) == pytest.approx(F.mean * (1 - eta))


def test_type_deficit_is_nonnegative(fig1):
    _, F, _ = fig1
    assert type_deficit(0.0, F) == 0.0
    # s=1 时 ∫(μ−θ)dF = 0
    assert type_deficit(1.0, F) == pytest.approx(0.0, abs=1e-10)
    assert all(type_deficit(s, F) > 0 for s in (0.2, 0.5, 0.9))


def test_budget_derivative_matches_finite_difference(fig1):
    config, F, c = fig1
    h = 1e-4
    for s in np.random.default_rng(64).uniform(0.2, 0.95, 100):
        lo, hi = outcome_pair(s - h, config, F, c), outcome_pair(s + h, config, F, c)
        numeric = (hi.eta - lo.eta) / (hi.C - lo.C)
        assert budget_derivative(s, config, F, c) == pytest.approx(numeric, rel=1e-4, abs=1e-6)


def test_budget_derivative_undefined(uniform_linear):
    config, F, c = uniform_linear
    for s in (0.0, 1.0):
        with pytest.raises(UndefinedDerivativeError):
            budget_derivative(s, config, F, c)


def test_frontier_samples(power_unit):
    family, config = power_unit
    F, c = family.distribution(), family.cost()
    curve = frontier(config, F, c, grid_size=257, threads=1, extra_points=(0.5,))
    assert curve.C[0] == 0.0 and curve.eta[0] == 0.0
    assert np.all(np.diff(curve.C) > 0)
    i = curve.index_of(0.5)
    assert curve.s[i] == 0.5
    assert curve.C[i] == pytest.approx(0.125, abs=1e-10)
    assert curve.eta[i] == pytest.approx(0.25, abs=1e-10)
    assert curve.slope[i] == pytest.approx(family.budget_slope(0.5, config), rel=1e-6)
    frame = curve.to_frame()
    assert list(frame.columns[:4]) == ["s", "C", "eta", "dEta_dC"]
    assert len(frame) == len(curve)


def test_frontier_is_thread_independent(fig1):
    config, F, c = fig1
    a = frontier(config, F, c, grid_size=301, threads=1)
    b = frontier(config, F, c, grid_size=301, threads=4)
    assert np.array_equal(a.s, b.s)
    assert np.array_equal(a.C, b.C)
    assert np.array_equal(a.eta, b.eta)


def test_frontier_inverse_cost(fig1):
    config, F, c = fig1
    curve = frontier(config, F, c, grid_size=129, threads=1)
    for s in (0.2, 0.55, 0.93):
        assert curve.inverse_cost(societal_cost(s, F, c)) == pytest.approx(s, abs=1e-8)


def test_frontier_refines_large_eta_jumps(uniform_linear):
    config, F, c = uniform_linear
    curve = frontier(config, F, c, grid_size=5, threads=1)
    assert len(curve) > 5
    assert np.max(np.abs(np.diff(curve.eta))) < 0.01


def test_frontier_flags_cost_kinks():
    config = ContestConfig(3, 1, 1.0)
    c = TabulatedCost([0.0, 0.5, 1.0], [0.1, 0.2, 0.6], interpolation="linear")
    curve = frontier(config, UniformDistribution(), c, grid_size=64, threads=1)
    kinked = curve.s[curve.kink_flags]
    assert kinked.tolist() == [0.5]
    assert curve.warnings
    i = curve.index_of(0.5)
    assert curve.slope[i] == pytest.approx(budget_derivative(0.5, config, UniformDistribution(), c, side=1))


def test_frontier_rejects_flat_cost_region():
    config = ContestConfig(2, 1, 1.0)

    class ZeroCost(LinearPowerCost):
        def __call__(self, theta):
            out = 0.0 * np.asarray(theta, dtype=float)
            return out if np.ndim(out) else float(out)

    with pytest.raises(FrontierError):
        frontier(config, UniformDistribution(), ZeroCost(1.0, 1.0), grid_size=16, threads=1)
