# lottery.py
"""
精确 m 奖品抽签：k 名高努力者时，以随机取整 z ∈ {⌊v_k⌋, ⌈v_k⌉}（E[z] = v_k）
决定高努力组获得的奖品数，再在两组内部均匀抽取。
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.model.mechanisms import AllocationVector


class LotteryError(Exception):
    """分配向量超出上下界，无法实现每次恰好发放 m 个奖品。"""
    pass


@dataclass(frozen=True, eq=False)
class LotteryOutcome:
    selected: np.ndarray

    @property
    def total(self) -> int:
        return int(self.selected.sum())


def _check_bounds(v: AllocationVector):
    if not v.satisfies_bounds:
        raise LotteryError(f"分配向量 {v.to_list()} 不满足 max(0, m−(n−k)) ≤ v_k ≤ min(k, m)，无法精确抽签")


def high_group_prizes(v: AllocationVector, k: np.ndarray, u: np.ndarray) -> np.ndarray:
    """按高努力人数 k 和均匀随机数 u 做随机取整，返回高努力组获得的奖品数 z。"""
    totals = v.full()[k]
    base = np.floor(totals)
    z = base + (u < totals - base)
    # 上界保护：由于浮点误差，v_k 可能略微超过整数上界
    return np.clip(z, np.maximum(0, v.m - (v.n - k)), np.minimum(k, v.m)).astype(int)


def realize_lottery_batch(v: AllocationVector, actions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    向量化抽签：actions 为 (trials, n) 的布尔矩阵（True 为高努力），
    返回同形状的 0/1 选中矩阵，每行恰好 m 个 1。
    """
    _check_bounds(v)
    actions = np.asarray(actions, dtype=bool)
    trials, n = actions.shape
    if n != v.n:
        raise LotteryError(f"行动组合人数 {n} 与分配向量的 n={v.n} 不一致")
    k = actions.sum(axis=1)
    z = high_group_prizes(v, k, rng.random(trials))
    keys = rng.random((trials, n))
    # 组内排名：另一组的成员排到最后
    rank_high = np.argsort(np.argsort(np.where(actions, keys, np.inf), axis=1), axis=1)
    rank_low = np.argsort(np.argsort(np.where(actions, np.inf, keys), axis=1), axis=1)
    selected = (actions & (rank_high < z[:, None])) | (~actions & (rank_low < (v.m - z)[:, None]))
    return selected.astype(np.int8)


def realize_lottery(v: AllocationVector, actions, rng: np.random.Generator) -> LotteryOutcome:
    """单次抽签。"""
    row = np.asarray(actions, dtype=bool).reshape(1, -1)
    return LotteryOutcome(selected=realize_lottery_batch(v, row, rng)[0])
