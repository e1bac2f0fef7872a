# monte_carlo.py
"""
蒙特卡洛竞赛模拟：抽取类型、执行截断策略、实现精确 m 抽签，估计 (C, η)
与中间分配；以及基于共同随机数的偏离审计。

随机数按固定大小的试验块拆分为独立的 Philox 流（SeedSequence.spawn），
因此结果与线程数无关，同一种子逐位可复现。
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from src.model.contest import ContestConfig
from src.model.costs import CostFunction
from src.model.distributions import TypeDistribution
from src.model.mechanisms import AllocationVector
from src.simulate.lottery import realize_lottery_batch
from src.utils import config as settings
from src.utils.config import resolve_threads
from src.utils.logger_config import log_event
from src.utils.numerics import ordered_map


@dataclass(frozen=True)
class SimulationReport:
    trials: int
    seed: int
    s: float
    C_hat: float
    C_se: float
    eta_hat: float
    eta_se: float
    selected_type_mean: float
    selected_type_se: float
    q_high_hat: float
    q_high_se: float
    q_low_hat: float
    q_low_se: float
    high_share: float
    exact_m_violations: int
    bound_violations: int

    def to_dict(self) -> Dict:
        return asdict(self)


def _streams(seed: int, trials: int, block_size: int):
    blocks = int(np.ceil(trials / block_size))
    children = np.random.SeedSequence(seed).spawn(blocks)
    sizes = [min(block_size, trials - b * block_size) for b in range(blocks)]
    return list(zip(children, sizes))


def _generator(seed_seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_seq))


def _play_block(job, v: AllocationVector, s: float, config: ContestConfig, F: TypeDistribution,
                c: CostFunction) -> Dict[str, np.ndarray]:
    seed_seq, size = job
    rng = _generator(seed_seq)
    n, m = config.n, config.m
    types = F.sample(rng, (size, n))
    actions = types < s if s < 1.0 else np.ones((size, n), dtype=bool)
    costs = np.where(actions, np.asarray(c(types), dtype=float), 0.0)
    selected = realize_lottery_batch(v, actions, rng)
    k = actions.sum(axis=1)
    sel_high = (selected.astype(bool) & actions).sum(axis=1)
    sel_low = (selected.astype(bool) & ~actions).sum(axis=1)
    total = selected.sum(axis=1)
    bound_bad = (sel_high > np.minimum(k, m)) | (sel_low > n - k) | (selected.max(axis=1) > 1)
    return {
        "cost": costs.mean(axis=1),
        "sel_type": (types * selected).sum(axis=1) / m,
        "k": k,
        "sel_high": sel_high,
        "sel_low": sel_low,
        "mixed": (k > 0) & (k < n),
        "exact_bad": total != m,
        "bound_bad": bound_bad,
    }


def _mean_se(x: np.ndarray):
    mean = float(np.mean(x))
    se = float(np.std(x, ddof=1) / np.sqrt(len(x))) if len(x) > 1 else 0.0
    return mean, se


def _ratio_se(a: np.ndarray, b: np.ndarray):
    """比值估计 Σa/Σb 及其 delta 方法标准误。"""
    total_b = float(np.sum(b))
    if total_b == 0.0:
        return float("nan"), float("nan")
    r = float(np.sum(a)) / total_b
    if len(a) < 2:
        return r, 0.0
    resid = a - r * b
    se = float(np.std(resid, ddof=1) / np.sqrt(len(a)) / np.mean(b))
    return r, se


def run(v: AllocationVector, s: float, config: ContestConfig, F: TypeDistribution, c: CostFunction,
        trials: int, seed: Optional[int] = None, threads: Optional[int] = None,
        block_size: Optional[int] = None) -> SimulationReport:
    """按截断 s 模拟 trials 场竞赛并汇总估计量。"""
    if trials < 1:
        raise ValueError("trials 必须 ≥ 1")
    seed = settings.DEFAULT_SEED if seed is None else int(seed)
    jobs = _streams(seed, trials, block_size or settings.SIM_BLOCK_SIZE)
    parts = ordered_map(lambda job: _play_block(job, v, s, config, F, c), jobs, resolve_threads(threads))
    data = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}

    n, m = config.n, config.m
    mu = F.mean
    C_hat, C_se = _mean_se(data["cost"])
    sel_mean, sel_se = _mean_se(data["sel_type"])
    if data["mixed"].any():
        eta_hat, eta_se = 1.0 - sel_mean / mu, sel_se / mu
    else:
        # 每场比赛所有人行动相同，分配与类型无关
        eta_hat, eta_se = 0.0, 0.0
    q_high, q_high_se = _ratio_se(data["sel_high"].astype(float), data["k"].astype(float))
    q_low, q_low_se = _ratio_se(data["sel_low"].astype(float), (n - data["k"]).astype(float))

    report = SimulationReport(
        trials=trials, seed=seed, s=float(s), C_hat=C_hat, C_se=C_se, eta_hat=eta_hat, eta_se=eta_se,
        selected_type_mean=sel_mean, selected_type_se=sel_se, q_high_hat=q_high, q_high_se=q_high_se,
        q_low_hat=q_low, q_low_se=q_low_se, high_share=float(np.mean(data["k"]) / n),
        exact_m_violations=int(data["exact_bad"].sum()), bound_violations=int(data["bound_bad"].sum()),
    )
    log_event("SIMULATION", {"trials": trials, "seed": seed, "s": float(s), "C_hat": C_hat, "eta_hat": eta_hat,
                             "exact_m_violations": report.exact_m_violations})
    return report


@dataclass(frozen=True, eq=False)
class DeviationAudit:
    table: pd.DataFrame
    max_gain: float
    max_gain_se: float
    max_gain_theta: float

    @property
    def significant(self) -> bool:
        """最大偏离收益是否超过 3 倍标准误。"""
        return self.max_gain > 3.0 * self.max_gain_se

    def to_dict(self) -> Dict:
        return {"max_gain": self.max_gain, "max_gain_se": self.max_gain_se, "max_gain_theta": self.max_gain_theta,
                "significant": self.significant}


def deviation_audit(v: AllocationVector, s: float, config: ContestConfig, F: TypeDistribution, c: CostFunction,
                    trials: int, seed: Optional[int] = None, probes: Optional[Sequence[float]] = None) -> DeviationAudit:
    """
    对每个探针类型，用同一批对手类型（共同随机数）估计规定行动与偏离行动的收益。
    给定对手中 k 人高努力，高努力者获奖概率 v_{k+1}/(k+1)，低努力者为 (m−v_k)/(n−k)。
    """
    if trials < 1:
        raise ValueError("trials 必须 ≥ 1")
    seed = settings.DEFAULT_SEED if seed is None else int(seed)
    n, m = config.n, config.m
    rng = _generator(np.random.SeedSequence(seed))
    opponents = F.sample(rng, (trials, n - 1))
    k = (opponents < s).sum(axis=1) if s < 1.0 else np.full(trials, n - 1)
    full = v.full()
    prize_high = full[k + 1] / (k + 1)
    prize_low = (m - full[k]) / (n - k)
    diff = prize_high - prize_low
    diff_mean, diff_se = _mean_se(diff)
    high_mean = float(np.mean(prize_high))
    low_mean = float(np.mean(prize_low))

    thetas = np.union1d(np.linspace(0.0, 1.0, 21) if probes is None else np.asarray(probes, dtype=float), [s])
    rows = []
    for theta in thetas:
        cost = float(c(theta))
        prescribed_high = theta < s or s >= 1.0
        pay_h = high_mean - cost
        if prescribed_high:
            rows.append({"theta": theta, "prescribed": "H", "payoff_prescribed": pay_h,
                         "payoff_deviant": low_mean, "gain": cost - diff_mean, "se": diff_se})
        else:
            rows.append({"theta": theta, "prescribed": "L", "payoff_prescribed": low_mean,
                         "payoff_deviant": pay_h, "gain": diff_mean - cost, "se": diff_se})
    table = pd.DataFrame(rows)
    worst = int(table["gain"].idxmax())
    audit = DeviationAudit(table=table, max_gain=float(table.at[worst, "gain"]), max_gain_se=diff_se,
                           max_gain_theta=float(table.at[worst, "theta"]))
    log_event("DEVIATION_AUDIT", {"s": float(s), "trials": trials, **audit.to_dict()})
    return audit
