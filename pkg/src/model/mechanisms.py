# mechanisms.py
"""
分配向量 v 与单参数机制族。

v 的第 k 个分量是 k 名参与者付出高努力时，高努力组得到的期望奖品总数，
隐含 v₀ = 0、vₙ = m。
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.stats import binom

from src.model.contest import ContestConfig

BOUND_TOL = 1e-12


class MechanismError(Exception):
    """分配向量越界或机制族前提条件不满足时抛出。"""
    pass


def lower_bounds(config: ContestConfig) -> np.ndarray:
    """v̲_k = max(0, m − (n − k))，k = 1..n−1。"""
    k = np.arange(1, config.n)
    return np.maximum(0, config.m - (config.n - k)).astype(float)


def upper_bounds(config: ContestConfig) -> np.ndarray:
    """v̄_k = min(k, m)，k = 1..n−1。"""
    k = np.arange(1, config.n)
    return np.minimum(k, config.m).astype(float)


@dataclass(frozen=True)
class AllocationVector:
    values: Tuple[float, ...]
    n: int
    m: int
    satisfies_bounds: bool = field(init=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.n - 1,):
            raise MechanismError(f"分配向量长度应为 n−1={self.n - 1}，实际为 {len(vals)}")
        bad = np.nonzero(~np.isfinite(vals))[0]
        if len(bad):
            raise MechanismError(f"分配向量包含非有限值，下标 {[int(i) + 1 for i in bad]}")
        bad = np.nonzero((vals < -BOUND_TOL) | (vals > self.m + BOUND_TOL))[0]
        if len(bad):
            raise MechanismError(f"分配向量分量必须位于 [0, m={self.m}]，越界下标 {[int(i) + 1 for i in bad]}")
        vals = np.clip(vals, 0.0, float(self.m))
        object.__setattr__(self, "values", tuple(float(v) for v in vals))
        k = np.arange(1, self.n)
        lo = np.maximum(0, self.m - (self.n - k))
        hi = np.minimum(k, self.m)
        ok = bool(np.all(vals >= lo - BOUND_TOL) and np.all(vals <= hi + BOUND_TOL))
        object.__setattr__(self, "satisfies_bounds", ok)

    @classmethod
    def from_values(cls, values: Sequence[float], config: ContestConfig) -> "AllocationVector":
        return cls(tuple(float(v) for v in values), config.n, config.m)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def full(self) -> np.ndarray:
        """(v₀=0, v₁, …, v_{n−1}, vₙ=m)"""
        return np.concatenate(([0.0], self.as_array(), [float(self.m)]))

    def __getitem__(self, k: int) -> float:
        """按人数 k ∈ [0, n] 取值，含隐含端点。"""
        if k == 0:
            return 0.0
        if k == self.n:
            return float(self.m)
        return self.values[k - 1]

    def dominated_by(self, other: "AllocationVector", tol: float = 0.0) -> bool:
        """逐分量 self ≤ other。"""
        return bool(np.all(self.as_array() <= other.as_array() + tol))

    def to_list(self) -> list:
        return list(self.values)


def standard_vector(config: ContestConfig) -> AllocationVector:
    """标准竞赛：尽可能多地选中高努力者。"""
    return AllocationVector.from_values(upper_bounds(config), config)


def reversed_vector(config: ContestConfig) -> AllocationVector:
    """反向竞赛：尽可能多地选中低努力者。"""
    return AllocationVector.from_values(lower_bounds(config), config)


def random_vector(config: ContestConfig) -> AllocationVector:
    """完全随机分配：每人以 m/n 的概率被选中。"""
    k = np.arange(1, config.n)
    return AllocationVector.from_values(k * config.m / config.n, config)


def relaxed_vector(config: ContestConfig) -> AllocationVector:
    """放宽上界后的极端向量 (m, …, m)。"""
    return AllocationVector.from_values(np.full(config.n - 1, float(config.m)), config)


def per_capita_allocation(v: AllocationVector, config: ContestConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    人均分配：(v_k / k) 与 ((m − v_k)/(n − k))，k = 1..n−1。
    分别是 k 人高努力时高努力者与低努力者的被选中概率。
    """
    k = np.arange(1, config.n)
    vals = v.as_array()
    return vals / k, (config.m - vals) / (config.n - k)


@dataclass(frozen=True)
class MechanismFamily:
    """t ∈ [0,1] ↦ 分配向量的连续映射，带端点标签。"""
    name: str
    config: ContestConfig
    builder: Callable[[float], np.ndarray] = field(repr=False, compare=False)
    start_tag: str = "reversed"
    end_tag: str = "standard"

    def __call__(self, t: float) -> AllocationVector:
        if not (0.0 <= t <= 1.0):
            raise MechanismError(f"机制参数 t 必须位于 [0,1]，实际为 {t}")
        return AllocationVector.from_values(self.builder(float(t)), self.config)

    @property
    def relaxed(self) -> bool:
        return self.end_tag == "relaxed"


def quota_family(config: ContestConfig, relax_bounds: bool = None) -> MechanismFamily:
    """
    配额机制：以概率 t 把奖品整体给高努力组，再在组内均匀分配。
    m = 1 时 v(t) = (t, …, t)；m ≥ 2 需要放宽上界，此时 v(t) = t·m·𝟏。
    """
    relax = config.relax_bounds if relax_bounds is None else relax_bounds
    size = config.n - 1
    if config.m == 1:
        return MechanismFamily("quota", config, lambda t: np.full(size, t), "reversed", "standard")
    if not relax:
        raise MechanismError(f"配额机制只适用于单奖品 (m=1)，当前 m={config.m}；如需使用请放宽上界 relax_bounds")
    m = float(config.m)
    return MechanismFamily("quota", config, lambda t: np.full(size, t * m), "zero", "relaxed")


def blind_eye_vector(t: float, config: ContestConfig) -> np.ndarray:
    """
    睁一只眼：高努力以概率 t 被正确观察到，否则被误看作低努力，
    随后按观察结果运行标准竞赛。
    """
    n, m = config.n, config.m
    out = np.empty(n - 1)
    for k in range(1, n):
        j = np.arange(0, k + 1)
        weights = binom.pmf(j, k, t)
        won = np.minimum(j, m)
        # 未被观察到的 k−j 名高努力者与 n−j 名“低努力”者平分剩余奖品
        totals = won + (k - j) * (m - won) / (n - j)
        out[k - 1] = float(np.dot(weights, totals))
    return out


def blind_eye_family(config: ContestConfig) -> MechanismFamily:
    return MechanismFamily("blind", config, lambda t: blind_eye_vector(t, config), "random", "standard")


def family_by_name(name: str, config: ContestConfig) -> MechanismFamily:
    if name == "quota":
        return quota_family(config)
    if name in ("blind", "blind_eye"):
        return blind_eye_family(config)
    raise MechanismError(f"未知的机制族 {name!r}（可选: quota, blind）")


def parse_vector(text: str, config: ContestConfig) -> AllocationVector:
    """解析逗号分隔的分配向量，例如 "1,2"。"""
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise MechanismError(f"无法解析分配向量 {text!r}: {e}") from e
    return AllocationVector.from_values(values, config)


def mechanism_from_spec(spec: str, config: ContestConfig) -> AllocationVector:
    """
    解析机制描述：standard | reversed | random | relaxed | quota:t | blind:t | custom:v1,…
    """
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    if name == "standard":
        return standard_vector(config)
    if name == "reversed":
        return reversed_vector(config)
    if name == "random":
        return random_vector(config)
    if name == "relaxed":
        return relaxed_vector(config)
    if name in ("quota", "blind"):
        try:
            t = float(arg)
        except ValueError as e:
            raise MechanismError(f"机制 {name} 需要参数 t，例如 {name}:0.5") from e
        return family_by_name(name, config)(t)
    if name == "custom":
        return parse_vector(arg, config)
    raise MechanismError(f"未知的机制 {spec!r}")
