# test_simulate.py
import numpy as np
import pytest

from src.equilibrium.cutoff import find_equilibria
from src.feasible.feasible_set import synthesize_mechanism
from src.model.contest import ContestConfig
from src.model.costs import LinearPowerCost
from src.model.distributions import PowerDistribution
from src.model.mechanisms import (AllocationVector, blind_eye_family, lower_bounds, quota_family, random_vector,
                                  relaxed_vector, standard_vector, upper_bounds)
from src.outcome.frontier import outcome_pair, selection_efficiency, societal_cost
from src.simulate.lottery import LotteryError, realize_lottery, realize_lottery_batch
from src.simulate.monte_carlo import deviation_audit, run
from tests.conftest import FIG1_ROOTS


def test_standard_contest_selects_every_high_agent_when_few(rng):
    config = ContestConfig(4, 2, 1.0)
    v = standard_vector(config)
    for actions in ([1, 0, 0, 0], [0, 1, 1, 0]):
        outcome = realize_lottery(v, actions, rng)
        assert outcome.total == 2
        assert np.all(outcome.selected[np.asarray(actions, dtype=bool)] == 1)


def test_lottery_rejects_out_of_bounds_vectors(rng):
    config = ContestConfig(3, 2, 1.0)
    with pytest.raises(LotteryError):
        realize_lottery(relaxed_vector(config), [1, 0, 0], rng)
    with pytest.raises(LotteryError):
        realize_lottery_batch(standard_vector(config), np.ones((2, 4), dtype=bool), rng)


def test_lottery_always_awards_exactly_m(rng):
    for n, m in ((3, 1), (5, 2), (7, 4)):
        config = ContestConfig(n, m, 1.0)
        for _ in range(5):
            v = AllocationVector.from_values(rng.uniform(lower_bounds(config), upper_bounds(config)), config)
            actions = rng.random((20_000, n)) < 0.5
            selected = realize_lottery_batch(v, actions, rng)
            assert np.all(selected.sum(axis=1) == m)
            assert set(np.unique(selected)) <= {0, 1}
            k = actions.sum(axis=1)
            high = (selected.astype(bool) & actions).sum(axis=1)
            assert np.all(high <= np.minimum(k, m))
            assert np.all(selected.sum(axis=1) - high <= n - k)


def _frequency_within(hits: np.ndarray, p: float, width: float = 3.0) -> bool:
    se = np.sqrt(p * (1 - p) / len(hits))
    return abs(hits.mean() - p) <= width * se


def test_random_allocation_is_uniform(rng):
    config = ContestConfig(5, 2, 1.0)
    actions = np.tile([True, True, False, False, False], (100_000, 1))
    selected = realize_lottery_batch(random_vector(config), actions, rng)
    for i in range(5):
        assert _frequency_within(selected[:, i], 0.4, width=4.0)


def test_group_marginals_match_vector(rng):
    config = ContestConfig(3, 2, 1.0)
    v = AllocationVector.from_values([0.5, 1.5], config)
    actions = np.tile([True, False, False], (100_000, 1))
    selected = realize_lottery_batch(v, actions, rng)
    assert _frequency_within(selected[:, 0], 0.5, width=4.0)
    # 低努力组平分剩余的 1.5 个奖品
    assert _frequency_within(selected[:, 1], 0.75, width=4.0)


def test_zero_cutoff_has_no_cost_and_no_selection(fig1):
    config, F, c = fig1
    report = run(standard_vector(config), 0.0, config, F, c, trials=2_000, seed=1)
    assert report.C_hat == 0.0
    assert report.eta_hat == 0.0
    assert report.exact_m_violations == 0


def test_run_is_reproducible_and_thread_independent(fig1):
    config, F, c = fig1
    v = standard_vector(config)
    a = run(v, FIG1_ROOTS[0], config, F, c, trials=25_000, seed=42, threads=1, block_size=5_000)
    b = run(v, FIG1_ROOTS[0], config, F, c, trials=25_000, seed=42, threads=4, block_size=5_000)
    assert a.to_dict() == b.to_dict()
    c_other = run(v, FIG1_ROOTS[0], config, F, c, trials=25_000, seed=43, threads=1, block_size=5_000)
    assert c_other.C_hat != a.C_hat


@pytest.mark.slow
def test_simulation_matches_closed_forms(uniform_linear):
    config, F, c = uniform_linear
    # c(θ)=θ 时 φ(s, v̄) = 1/2 − s，唯一内点均衡为 0.5
    v = standard_vector(config)
    s = find_equilibria(v, config, F, c).values()[0]
    assert s == pytest.approx(0.5)
    report = run(v, s, config, F, c, trials=200_000, seed=7)
    assert abs(report.C_hat - societal_cost(s, F, c)) <= 4 * report.C_se
    assert abs(report.eta_hat - selection_efficiency(s, config, F, c)) <= 4 * report.eta_se
    assert report.exact_m_violations == 0 and report.bound_violations == 0


@pytest.mark.parametrize("s", [0.25, FIG1_ROOTS[0], 0.7])
def test_empirical_interim_allocation_conserves_prizes(fig1, s):
    config, F, c = fig1
    report = run(standard_vector(config), s, config, F, c, trials=60_000, seed=21)
    p = float(F.cdf(s))
    total = p * report.q_high_hat + (1 - p) * report.q_low_hat
    se = p * report.q_high_se + (1 - p) * report.q_low_se
    assert abs(total - config.ratio) <= 4 * se + 1e-12


def test_empirical_interim_allocation_conserves_prizes_uniform(uniform_linear):
    config, F, c = uniform_linear
    report = run(standard_vector(config), 0.3, config, F, c, trials=60_000, seed=22)
    total = 0.3 * report.q_high_hat + 0.7 * report.q_low_hat
    assert abs(total - 0.5) <= 4 * (0.3 * report.q_high_se + 0.7 * report.q_low_se) + 1e-12


def _invariance_instance(seed):
    rng = np.random.default_rng(3000 + seed)
    config = ContestConfig(int(rng.integers(3, 7)), 1, 1.0)
    F = PowerDistribution(float(rng.uniform(0.5, 3.0)))
    # γ ≤ 0.15 保证 φ(s, v̄) ≥ 1/n − c(s) > 0 在 [0, 0.5] 上成立
    c = LinearPowerCost(float(rng.uniform(0.05, 0.15)), float(rng.uniform(0.5, 2.0)))
    s = float(rng.uniform(0.1, 0.5))
    quota, blind = quota_family(config), blind_eye_family(config)
    v1 = quota(synthesize_mechanism(s, quota, config, F, c))
    v2 = blind(synthesize_mechanism(s, blind, config, F, c))
    return config, F, c, s, v1, v2


def _located_cutoff(v, s, config, F, c):
    values = find_equilibria(v, config, F, c).values()
    return min(values, key=lambda x: abs(x - s))


@pytest.mark.parametrize("seed", range(20))
def test_synthesized_mechanisms_share_outcomes(seed):
    config, F, c, s, v1, v2 = _invariance_instance(seed)
    assert not np.allclose(v1.as_array(), v2.as_array())
    s1 = _located_cutoff(v1, s, config, F, c)
    s2 = _located_cutoff(v2, s, config, F, c)
    assert s1 == pytest.approx(s, abs=1e-8) and s2 == pytest.approx(s, abs=1e-8)
    a, b = outcome_pair(s1, config, F, c), outcome_pair(s2, config, F, c)
    assert a.C == pytest.approx(b.C, abs=1e-8)
    assert a.eta == pytest.approx(b.eta, abs=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_outcomes_depend_only_on_the_cutoff(seed):
    config, F, c, s, v1, v2 = _invariance_instance(seed)
    r1 = run(v1, s, config, F, c, trials=40_000, seed=11 + seed)
    r2 = run(v2, s, config, F, c, trials=40_000, seed=511 + seed)
    assert abs(r1.eta_hat - r2.eta_hat) <= 4 * np.hypot(r1.eta_se, r2.eta_se)
    assert abs(r1.C_hat - r2.C_hat) <= 4 * np.hypot(r1.C_se, r2.C_se)
    assert r1.exact_m_violations == 0 and r2.exact_m_violations == 0


@pytest.mark.slow
def test_large_exact_m_audit():
    rng = np.random.default_rng(2024)
    total = 0
    for n, m in ((4, 2), (6, 3), (9, 2), (10, 7)):
        config = ContestConfig(n, m, 1.0)
        v = AllocationVector.from_values(rng.uniform(lower_bounds(config), upper_bounds(config)), config)
        actions = rng.random((250_000, n)) < rng.random()
        selected = realize_lottery_batch(v, actions, rng)
        assert np.all(selected.sum(axis=1) == m)
        k = actions.sum(axis=1)
        full = v.full()
        for kk in range(1, n):
            rows = k == kk
            if rows.sum() < 1_000:
                continue
            high = selected[rows][actions[rows]].reshape(-1)
            assert _frequency_within(high, full[kk] / kk, width=4.0) or full[kk] / kk in (0.0, 1.0)
        total += len(actions)
    assert total == 1_000_000


def test_deviation_audit_at_equilibrium(fig1):
    config, F, c = fig1
    v = standard_vector(config)
    s = find_equilibria(v, config, F, c).values()[0]
    audit = deviation_audit(v, s, config, F, c, trials=50_000, seed=3)
    assert audit.max_gain <= 4 * audit.max_gain_se + 1e-12
    row = audit.table[np.isclose(audit.table["theta"], s)].iloc[0]
    assert abs(row["gain"]) <= 4 * row["se"] + 1e-12


def test_deviation_audit_flags_non_equilibrium(fig1):
    config, F, c = fig1
    # 紧贴截断下方的类型偏离收益趋近 −φ(0.7)
    audit = deviation_audit(standard_vector(config), 0.7, config, F, c, trials=20_000, seed=3,
                            probes=[0.0, 0.5, 0.7 - 1e-9, 0.9])
    assert audit.significant
    assert audit.max_gain == pytest.approx(0.0477, abs=5e-3)
    assert list(audit.table.columns) == ["theta", "prescribed", "payoff_prescribed", "payoff_deviant", "gain", "se"]
