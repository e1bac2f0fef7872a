# cutoff.py
"""
对称截断均衡：中间分配、偏离激励函数 φ 以及给定机制下的全部均衡截断点。

截断策略 s：类型 θ < s 的参与者付出高努力。φ(s, v) 是边际类型在其余人都采用
截断 s 时高努力与低努力的收益差。
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import comb
from scipy.stats import binom

from src.model.contest import ContestConfig
from src.model.costs import CostFunction
from src.model.distributions import TypeDistribution
from src.model.mechanisms import AllocationVector, MechanismError
from src.utils import config as settings
from src.utils.logger_config import log_event, logger
from src.utils.numerics import find_root, merge_sorted, sign_changes, tangency_candidates


class CutoffKind(Enum):
    INTERIOR = "interior"
    BOUNDARY_ZERO = "boundary_zero"
    BOUNDARY_ONE = "boundary_one"


@dataclass(frozen=True)
class InterimAllocation:
    """高/低努力参与者在对手采用截断 s 时的被选中概率。"""
    q_high: float
    q_low: float

    @property
    def gap(self) -> float:
        return self.q_high - self.q_low


@dataclass(frozen=True)
class EquilibriumCutoff:
    s: float
    kind: CutoffKind
    phi_value: float

    def to_dict(self) -> dict:
        return {"s": self.s, "kind": self.kind.value, "phi": self.phi_value}


@dataclass(frozen=True)
class EquilibriumSet:
    """find_equilibria 的结果：按 s 升序排列的均衡截断，外加扫描告警。"""
    cutoffs: tuple
    grid_size: int
    warnings: tuple = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.cutoffs)

    def __len__(self):
        return len(self.cutoffs)

    def __getitem__(self, i):
        return self.cutoffs[i]

    def values(self) -> List[float]:
        return [e.s for e in self.cutoffs]

    def contains(self, s: float, tol: float) -> bool:
        return any(abs(e.s - s) <= tol for e in self.cutoffs)

    def to_dict(self) -> dict:
        return {"equilibria": [e.to_dict() for e in self.cutoffs], "warnings": list(self.warnings),
                "grid_size": self.grid_size}


def _check_vector(v: AllocationVector, config: ContestConfig):
    if v.n != config.n or v.m != config.m:
        raise MechanismError(f"分配向量属于 (n={v.n}, m={v.m})，与配置 (n={config.n}, m={config.m}) 不一致")


def interim_allocation(v: AllocationVector, s: float, config: ContestConfig, F: TypeDistribution) -> InterimAllocation:
    """对手以概率 F(s) 高努力时，按高努力对手人数 k 的二项分布加权。"""
    _check_vector(v, config)
    n, m = config.n, config.m
    p = float(F.cdf(s))
    k = np.arange(n)
    w = binom.pmf(k, n - 1, p)
    full = v.full()
    q_high = float(np.dot(w, full[k + 1] / (k + 1)))
    q_low = float(np.dot(w, (m - full[k]) / (n - k)))
    return InterimAllocation(q_high=q_high, q_low=q_low)


def phi(s, v: AllocationVector, config: ContestConfig, F: TypeDistribution, c: CostFunction):
    """
    φ(s,v) = (1/n) Σ_{k=1}^{n−1} F^{k−1}(1−F)^{n−1−k} C(n,k) v_k − c(s) − (m/n) Σ_{k=0}^{n−2} F^k

    s 可以是标量或数组。
    """
    _check_vector(v, config)
    n, m = config.n, config.m
    s_arr = np.asarray(s, dtype=float)
    p = np.asarray(F.cdf(s_arr), dtype=float)[..., None]
    k = np.arange(1, n)
    gain = np.sum(np.power(p, k - 1) * np.power(1.0 - p, n - 1 - k) * comb(n, k) * v.as_array(), axis=-1) / n
    j = np.arange(0, n - 1)
    base = m / n * np.sum(np.power(p, j), axis=-1)
    out = gain - np.asarray(c(s_arr), dtype=float) - base
    return out if np.ndim(out) else float(out)


def phi_by_enumeration(s: float, v: AllocationVector, config: ContestConfig, F: TypeDistribution, c: CostFunction) -> float:
    """逐一枚举 2^{n−1} 种对手行动组合计算 φ，用作闭式的暴力校验。"""
    _check_vector(v, config)
    n, m = config.n, config.m
    if n > settings.ENUMERATION_MAX_N:
        raise MechanismError(f"枚举最多支持 n ≤ {settings.ENUMERATION_MAX_N}，当前 n={n}")
    p = float(F.cdf(s))
    full = v.full()
    q_high = q_low = 0.0
    for profile in itertools.product((0, 1), repeat=n - 1):
        k = sum(profile)
        prob = p ** k * (1.0 - p) ** (n - 1 - k)
        q_high += prob * full[k + 1] / (k + 1)
        q_low += prob * (m - full[k]) / (n - k)
    return q_high - float(c(s)) - q_low


def equilibrium_interim_allocation(s: float, config: ContestConfig, F: TypeDistribution, c: CostFunction) -> InterimAllocation:
    """内点均衡处的闭式：Q(H) = m/n + (1−F)c，Q(L) = m/n − F·c。"""
    p = float(F.cdf(s))
    cs = float(c(s))
    return InterimAllocation(q_high=config.ratio + (1.0 - p) * cs, q_low=config.ratio - p * cs)


def phi_single_prize(s, config: ContestConfig, F: TypeDistribution, c: CostFunction):
    """
    φ(s,𝟏) = (1/n) Σ_{k=0}^{n−2} (1−F(s))^k − c(s)。
    放宽上界时对应 v = (m,…,m)，系数变为 m/n。
    """
    if config.m != 1 and not config.relax_bounds:
        raise MechanismError(f"单奖品闭式要求 m=1，当前 m={config.m}")
    s_arr = np.asarray(s, dtype=float)
    q = 1.0 - np.asarray(F.cdf(s_arr), dtype=float)[..., None]
    j = np.arange(0, config.n - 1)
    out = config.ratio * np.sum(np.power(q, j), axis=-1) - np.asarray(c(s_arr), dtype=float)
    return out if np.ndim(out) else float(out)


def phi_quota(s, t: float, config: ContestConfig, F: TypeDistribution, c: CostFunction):
    """φ(s, v_Q(t)) = (t/n)Σ(1−F)^k − ((1−t)/n)ΣF^k − c(s)，k = 0..n−2；放宽时乘以 m。"""
    if config.m != 1 and not config.relax_bounds:
        raise MechanismError(f"配额机制要求 m=1，当前 m={config.m}")
    s_arr = np.asarray(s, dtype=float)
    p = np.asarray(F.cdf(s_arr), dtype=float)[..., None]
    j = np.arange(0, config.n - 1)
    up = np.sum(np.power(1.0 - p, j), axis=-1)
    down = np.sum(np.power(p, j), axis=-1)
    out = config.ratio * (t * up - (1.0 - t) * down) - np.asarray(c(s_arr), dtype=float)
    return out if np.ndim(out) else float(out)


def find_equilibria(v: AllocationVector, config: ContestConfig, F: TypeDistribution, c: CostFunction,
                    grid_size: Optional[int] = None) -> EquilibriumSet:
    """
    扫描 φ(·, v) 的符号变化并用 Brent 方法精化，再按三种条件分类：
      - φ(0) ≤ tol      → boundary_zero
      - φ(1) ≥ −tol     → boundary_one
      - 内点 |φ(s)| ≤ tol → interior
    """
    grid_size = grid_size or settings.SCAN_GRID_SIZE
    if grid_size < 2:
        raise ValueError("扫描网格至少需要 2 个点")
    tol = settings.CLASSIFY_TOL
    grid = np.linspace(0.0, 1.0, grid_size)
    values = phi(grid, v, config, F, c)
    func = lambda x: phi(x, v, config, F, c)
    step = 1.0 / (grid_size - 1)
    warnings: List[str] = []

    candidates = [float(grid[i]) for i in range(1, grid_size - 1) if values[i] == 0.0]
    for a, b in sign_changes(grid, values):
        root = find_root(func, a, b)
        if abs(func(root)) > tol:
            # 陡峭的 φ 需要更细的 xtol 才能满足 |φ| ≤ tol
            root = find_root(func, a, b, xtol=1e-15)
        if abs(func(root)) > tol:
            msg = f"φ 在 [{a:.6g}, {b:.6g}] 内变号但根处 |φ|={abs(func(root)):.3e}，疑似不连续"
            logger.warning(msg)
            warnings.append(msg)
            continue
        candidates.append(root)
    candidates.extend(tangency_candidates(func, grid, values, tol))
    roots = [r for r in merge_sorted(candidates, settings.MERGE_TOL) if 0.0 < r < 1.0]

    for r1, r2 in zip(roots, roots[1:]):
        if r2 - r1 < step:
            msg = f"两个根 {r1:.10f} 与 {r2:.10f} 的间距小于扫描步长 {step:.3e}，可能遗漏根"
            logger.warning(msg)
            warnings.append(msg)

    cutoffs = []
    if values[0] <= tol:
        cutoffs.append(EquilibriumCutoff(0.0, CutoffKind.BOUNDARY_ZERO, float(values[0])))
    cutoffs.extend(EquilibriumCutoff(r, CutoffKind.INTERIOR, float(func(r))) for r in roots)
    if values[-1] >= -tol:
        cutoffs.append(EquilibriumCutoff(1.0, CutoffKind.BOUNDARY_ONE, float(values[-1])))

    if not cutoffs:
        msg = "未找到任何对称均衡（φ 可能不连续）"
        logger.warning(msg)
        warnings.append(msg)

    result = EquilibriumSet(cutoffs=tuple(cutoffs), grid_size=grid_size, warnings=tuple(warnings))
    log_event("EQUILIBRIUM_SCAN", {"v": v.to_list(), "cutoffs": [e.to_dict() for e in cutoffs],
                                   "warnings": len(warnings)})
    return result


def best_response_check(v: AllocationVector, s: float, config: ContestConfig, F: TypeDistribution,
                        c: CostFunction, grid: Optional[Sequence[float]] = None) -> bool:
    """
    对每个抽样类型 θ，检查截断 s 规定的行动在对手也采用 s 时是否为最优反应。
    无差异时参与者选择低努力，因此规定高努力需要严格占优。
    """
    tol = settings.CLASSIFY_TOL
    if grid is None:
        grid = np.linspace(0.0, 1.0, 1001)
    thetas = np.union1d(np.asarray(grid, dtype=float), [s])
    gap = interim_allocation(v, s, config, F).gap
    margin = gap - np.asarray(c(thetas), dtype=float)
    # s = 1 时所有类型（含零测度的 θ=1）都付出高努力
    high = thetas < s if s < 1.0 else np.ones_like(thetas, dtype=bool)
    ok_high = np.all(margin[high] > -tol)
    ok_low = np.all(margin[~high] <= tol)
    return bool(ok_high and ok_low)
