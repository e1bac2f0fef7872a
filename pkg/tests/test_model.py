# test_model.py
import numpy as np
import pytest

from src.model.contest import ContestConfig
from src.model.costs import AffineCost, LinearPowerCost, PowerCost, TabulatedCost
from src.model.distributions import PowerDistribution, TabulatedDistribution, UniformDistribution
from src.model.mechanisms import (AllocationVector, MechanismError, blind_eye_family, family_by_name,
                                  lower_bounds, mechanism_from_spec, per_capita_allocation, quota_family,
                                  random_vector, relaxed_vector, reversed_vector, standard_vector, upper_bounds)
from src.utils import config as settings
from src.utils.config import ConfigError
from src.utils.numerics import NumericalError, integrate_interval


@pytest.mark.parametrize("n, m, expected", [
    (3, 2, [1, 2]),
    (4, 1, [1, 1, 1]),
    (5, 2, [1, 2, 2, 2]),
])
def test_standard_vector(n, m, expected):
    assert standard_vector(ContestConfig(n, m, 1.0)).to_list() == expected


@pytest.mark.parametrize("n, m, expected", [
    (3, 2, [0, 1]),
    (4, 1, [0, 0, 0]),
    (5, 3, [0, 0, 1, 2]),
])
def test_reversed_vector(n, m, expected):
    assert reversed_vector(ContestConfig(n, m, 1.0)).to_list() == expected


@pytest.mark.parametrize("n, m, expected", [
    (3, 2, [2 / 3, 4 / 3]),
    (2, 1, [0.5]),
    (4, 2, [0.5, 1.0, 1.5]),
])
def test_random_vector(n, m, expected):
    assert random_vector(ContestConfig(n, m, 1.0)).to_list() == pytest.approx(expected)


CONFIGS = [(n, m) for n in range(2, 9) for m in range(1, n)]


@pytest.mark.parametrize("n, m", CONFIGS)
def test_random_vector_lies_between_reversed_and_standard(n, m):
    config = ContestConfig(n, m, 1.0)
    low, mid, high = reversed_vector(config), random_vector(config), standard_vector(config)
    assert low.dominated_by(mid) and mid.dominated_by(high)
    assert low.as_array() == pytest.approx(lower_bounds(config))
    assert high.as_array() == pytest.approx(upper_bounds(config))


@pytest.mark.parametrize("n, t, expected", [
    (3, 1.0, [1, 1]),
    (3, 0.0, [0, 0]),
    (4, 0.4, [0.4, 0.4, 0.4]),
])
def test_quota_family(n, t, expected):
    family = quota_family(ContestConfig(n, 1, 1.0))
    assert family(t).to_list() == pytest.approx(expected)


def test_quota_family_needs_relaxed_bounds_for_multiple_prizes():
    config = ContestConfig(4, 2, 1.0)
    with pytest.raises(MechanismError):
        quota_family(config)
    family = quota_family(config, relax_bounds=True)
    assert family.relaxed
    assert family(0.5).to_list() == pytest.approx([1.0, 1.0, 1.0])
    assert family(1.0).to_list() == relaxed_vector(config).to_list()


@pytest.mark.parametrize("n, m, t, expected", [
    (3, 2, 1.0, [1, 2]),
    (3, 2, 0.0, [2 / 3, 4 / 3]),
    (2, 1, 0.5, [0.75]),
])
def test_blind_eye_family(n, m, t, expected):
    family = blind_eye_family(ContestConfig(n, m, 1.0))
    assert family(t).to_list() == pytest.approx(expected)


def test_blind_eye_is_monotone_between_random_and_standard():
    config = ContestConfig(6, 2, 1.0)
    family = blind_eye_family(config)
    previous = family(0.0)
    for t in np.linspace(0.05, 1.0, 20):
        current = family(float(t))
        assert current.satisfies_bounds
        assert previous.dominated_by(current, tol=1e-12)
        previous = current


@pytest.mark.parametrize("n, m", [(2, 1), (3, 1), (3, 2), (5, 2), (6, 1), (7, 4), (9, 8)])
def test_family_outputs_satisfy_bounds(n, m):
    config = ContestConfig(n, m, 1.0)
    families = [blind_eye_family(config)] + ([quota_family(config)] if m == 1 else [])
    for family in families:
        for t in np.linspace(0.0, 1.0, 101):
            assert family(float(t)).satisfies_bounds, (family.name, t)


@pytest.mark.parametrize("n, m", [(3, 2), (6, 2), (8, 5)])
def test_blind_eye_is_lipschitz(n, m):
    config = ContestConfig(n, m, 1.0)
    family = blind_eye_family(config)
    grid = np.linspace(0.0, 1.0, 401)
    values = np.array([family(float(t)).as_array() for t in grid])
    # E[g(J)]，J ~ Bin(k, t)，对 t 的导数不超过 k·max|Δg| ≤ k·m
    slopes = np.abs(np.diff(values, axis=0)) / np.diff(grid)[:, None]
    assert np.all(slopes <= np.arange(1, n) * m + 1e-9)
    dense = np.abs(family(0.5 + 1e-7).as_array() - family(0.5).as_array()) / 1e-7
    assert np.all(dense <= np.arange(1, n) * m + 1e-6)


def test_family_parameter_range():
    family = family_by_name("blind", ContestConfig(3, 2, 1.0))
    with pytest.raises(MechanismError):
        family(1.5)
    with pytest.raises(MechanismError):
        family_by_name("auction", ContestConfig(3, 2, 1.0))


def test_allocation_vector_validation():
    config = ContestConfig(3, 2, 1.0)
    with pytest.raises(MechanismError):
        AllocationVector.from_values([1.0], config)
    with pytest.raises(MechanismError):
        AllocationVector.from_values([1.0, 2.5], config)
    with pytest.raises(MechanismError):
        AllocationVector.from_values([np.nan, 1.0], config)
    assert random_vector(config).satisfies_bounds
    assert not relaxed_vector(config).satisfies_bounds


def test_full_vector_and_indexing():
    v = standard_vector(ContestConfig(3, 2, 1.0))
    assert v.full().tolist() == [0.0, 1.0, 2.0, 2.0]
    assert v[0] == 0.0 and v[1] == 1.0 and v[3] == 2.0


def test_per_capita_allocation_of_standard_contest():
    config = ContestConfig(5, 2, 1.0)
    high, low = per_capita_allocation(standard_vector(config), config)
    assert high == pytest.approx([1.0, 1.0, 2 / 3, 0.5])
    assert low == pytest.approx([0.25, 0.0, 0.0, 0.0])


def test_mechanism_from_spec():
    config = ContestConfig(3, 2, 1.0)
    assert mechanism_from_spec("standard", config).to_list() == [1.0, 2.0]
    assert mechanism_from_spec("custom:0.5,1.5", config).to_list() == [0.5, 1.5]
    assert mechanism_from_spec("blind:0", config).to_list() == pytest.approx([2 / 3, 4 / 3])
    with pytest.raises(MechanismError):
        mechanism_from_spec("blind:x", config)
    with pytest.raises(MechanismError):
        mechanism_from_spec("lottery", config)
    with pytest.raises(MechanismError):
        mechanism_from_spec("custom:1,a", config)


@pytest.mark.parametrize("n, m, lam, field", [
    (1, 1, 1.0, "n"),
    (3, 0, 1.0, "m"),
    (3, 3, 1.0, "m"),
    (3, 1, float("inf"), "lambda"),
])
def test_contest_config_validation(n, m, lam, field):
    with pytest.raises(ConfigError) as info:
        ContestConfig(n, m, lam)
    assert info.value.field == field


@pytest.mark.parametrize("dist", [
    UniformDistribution(),
    PowerDistribution(4.0),
    PowerDistribution(0.5),
    TabulatedDistribution([0.0, 0.25, 0.5, 0.75, 1.0], [0.0, 0.1, 0.35, 0.7, 1.0]),
])
def test_distribution_invariants(dist):
    assert dist.cdf(0.0) == pytest.approx(0.0, abs=1e-15)
    assert dist.cdf(1.0) == pytest.approx(1.0)
    grid = np.linspace(0.0, 1.0, 201)
    assert np.all(np.diff(dist.cdf(grid)) >= 0.0)
    mean = 1.0 - integrate_interval(lambda x: float(dist.cdf(x)), 0.0, 1.0)
    assert dist.mean == pytest.approx(mean, abs=1e-8)
    inner = np.linspace(0.05, 0.95, 19)
    assert dist.quantile(dist.cdf(inner)) == pytest.approx(inner, abs=1e-9)


def test_linear_tabulated_distribution():
    dist = TabulatedDistribution([0.0, 0.5, 1.0], [0.0, 0.25, 1.0], interpolation="linear")
    assert dist.mean == pytest.approx(0.625, abs=1e-10)
    assert dist.pdf(0.25) == pytest.approx(0.5)
    assert dist.pdf(0.75) == pytest.approx(1.5)


def test_tabulated_mean_is_self_checked(monkeypatch):
    dist = TabulatedDistribution([0.0, 0.3, 1.0], [0.0, 0.6, 1.0], interpolation="linear")
    # 1 − ∫F = 1 − (0.09 + 0.56)
    assert dist.mean == pytest.approx(0.35, abs=1e-10)
    monkeypatch.setattr(settings, "MEAN_CHECK_TOL", -1.0)
    with pytest.raises(NumericalError):
        TabulatedDistribution([0.0, 0.3, 1.0], [0.0, 0.6, 1.0], interpolation="linear")


def test_sampling_stays_in_unit_interval(rng):
    draws = PowerDistribution(2.0).sample(rng, 10_000)
    assert draws.min() >= 0.0 and draws.max() <= 1.0
    # E[θ] = 2/3
    assert draws.mean() == pytest.approx(2 / 3, abs=0.02)


def test_affine_cost_pseudo_inverse_clamps():
    c = AffineCost(0.5, 1.0 / 9.0)
    assert c.pseudo_inverse(0.0) == 0.0
    assert c.pseudo_inverse(1.0) == 1.0
    assert c.pseudo_inverse(0.3) == pytest.approx((0.3 - 1.0 / 9.0) * 2.0)
    with pytest.raises(ConfigError):
        AffineCost(0.0, 0.1)
    with pytest.raises(ConfigError):
        AffineCost(1.0, -0.1)


def test_tabulated_cost_kinks_and_one_sided_derivatives():
    c = TabulatedCost([0.0, 0.5, 1.0], [0.1, 0.2, 0.6], interpolation="linear")
    assert c.kinks == (0.5,)
    assert c.derivative(0.5, side=-1) == pytest.approx(0.2)
    assert c.derivative(0.5, side=1) == pytest.approx(0.8)
    assert c.derivative(0.5) == pytest.approx(0.8)
    assert c.pseudo_inverse(0.4) == pytest.approx(0.75, abs=1e-9)
    assert c.pseudo_inverse(0.05) == 0.0


def test_power_cost_derivative_matches_finite_difference():
    c = PowerCost(2.0, 1.0, PowerDistribution(2.0))
    assert c(0.5) == pytest.approx(0.5)
    assert c.derivative(0.5) == pytest.approx(2.0)
    generic = LinearPowerCost(2.0, 2.0)
    assert generic.derivative(0.5) == pytest.approx(c.derivative(0.5))
    assert c.pseudo_inverse(c(0.3)) == pytest.approx(0.3)
