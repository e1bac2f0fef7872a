# feasible_set.py
"""
可行截断集合 𝒮(v_min, v_max)：存在某个介于 v_min 与 v_max 之间的机制使 s 成为对称均衡。

成员条件：s < 1 时 φ(s, v_min) ≤ 0，s > 0 时 φ(s, v_max) ≥ 0。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.equilibrium.cutoff import EquilibriumSet, find_equilibria, phi, phi_single_prize
from src.model.contest import ContestConfig
from src.model.costs import CostFunction
from src.model.distributions import TypeDistribution
from src.model.mechanisms import (AllocationVector, MechanismError, MechanismFamily, reversed_vector,
                                  standard_vector)
from src.utils import config as settings
from src.utils.config import resolve_threads
from src.utils.logger_config import log_event, logger
from src.utils.numerics import (NumericalError, bisect_predicate, find_root, ordered_map,
                                tangency_candidates)

Interval = Tuple[float, float]


class InfeasibleTargetError(Exception):
    """目标截断不在可行集合内，无法合成机制。"""
    pass


def _normalize(intervals: Sequence[Interval], tol: float) -> Tuple[Interval, ...]:
    """排序并合并端点间距不超过 tol 的区间。"""
    merged: List[List[float]] = []
    for a, b in sorted((float(a), float(b)) for a, b in intervals):
        a, b = max(a, 0.0), min(b, 1.0)
        if b < a:
            continue
        if merged and a - merged[-1][1] <= tol:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


@dataclass(frozen=True)
class FeasibleSet:
    """[0,1] 内互不相交、已排序的闭区间并集（允许单点）。"""
    intervals: Tuple[Interval, ...]

    @classmethod
    def of(cls, intervals: Sequence[Interval], tol: float = None) -> "FeasibleSet":
        return cls(_normalize(intervals, settings.MERGE_TOL if tol is None else tol))

    @classmethod
    def full(cls) -> "FeasibleSet":
        return cls(((0.0, 1.0),))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    @property
    def upper_endpoints(self) -> List[float]:
        return [b for _, b in self.intervals]

    def endpoints(self) -> List[float]:
        return sorted({p for iv in self.intervals for p in iv})

    def contains(self, s, tol: float = None):
        """成员判定；s 可以是数组。"""
        tol = settings.MERGE_TOL if tol is None else tol
        arr = np.asarray(s, dtype=float)
        out = np.zeros(arr.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (arr >= a - tol) & (arr <= b + tol)
        return bool(out) if out.ndim == 0 else out

    def is_subset_of(self, other: "FeasibleSet", tol: float = None) -> bool:
        tol = settings.MERGE_TOL if tol is None else tol
        return all(any(a >= oa - tol and b <= ob + tol for oa, ob in other.intervals) for a, b in self.intervals)

    def intersect(self, other: "FeasibleSet") -> "FeasibleSet":
        out = []
        i = j = 0
        while i < len(self.intervals) and j < len(other.intervals):
            a1, b1 = self.intervals[i]
            a2, b2 = other.intervals[j]
            lo, hi = max(a1, a2), min(b1, b2)
            if lo <= hi:
                out.append((lo, hi))
            if b1 < b2:
                i += 1
            else:
                j += 1
        return FeasibleSet.of(out)

    def union(self, other: "FeasibleSet") -> "FeasibleSet":
        return FeasibleSet.of(self.intervals + other.intervals)

    def nearest_below(self, s: float) -> Optional[float]:
        """max 𝒮 ∩ [0, s]"""
        best = None
        for a, b in self.intervals:
            if a <= s:
                best = min(b, s)
        return best

    def nearest_above(self, s: float) -> Optional[float]:
        """min 𝒮 ∩ [s, 1]"""
        for a, b in self.intervals:
            if b >= s:
                return max(a, s)
        return None

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        """按长度均匀抽样；全部是单点时在单点间均匀抽取。"""
        if self.is_empty:
            return np.empty(0)
        lengths = np.array([b - a for a, b in self.intervals])
        if lengths.sum() <= 0:
            points = np.array([a for a, _ in self.intervals])
            return rng.choice(points, size=k)
        u = rng.random(k) * lengths.sum()
        edges = np.cumsum(lengths)
        idx = np.searchsorted(edges, u, side="right").clip(0, len(lengths) - 1)
        starts = np.array([a for a, _ in self.intervals])
        offset = u - np.concatenate(([0.0], edges[:-1]))[idx]
        return np.minimum(starts[idx] + offset, np.array([b for _, b in self.intervals])[idx])

    def complement(self) -> List[Interval]:
        """[0,1] 中不属于集合的开区间（以端点对表示）。"""
        gaps = []
        cursor = 0.0
        for a, b in self.intervals:
            if a > cursor:
                gaps.append((cursor, a))
            cursor = max(cursor, b)
        if cursor < 1.0:
            gaps.append((cursor, 1.0))
        return gaps

    def complement_sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        gaps = self.complement()
        if not gaps:
            return np.empty(0)
        inner = FeasibleSet(tuple(gaps))
        draws = inner.sample(rng, k)
        # 去掉恰好落在集合端点上的样本
        return draws[~self.contains(draws, tol=0.0)]

    def to_dict(self) -> dict:
        return {"intervals": [[a, b] for a, b in self.intervals]}


def _level_set(func: Callable[[float], float], values_func: Callable, grid_size: int) -> FeasibleSet:
    """{s ∈ [0,1] : func(s) ≥ 0}，端点用 Brent 方法精化，孤立切点作为单点区间。"""
    grid = np.linspace(0.0, 1.0, grid_size)
    values = np.asarray(values_func(grid), dtype=float)
    good = values >= 0.0
    intervals: List[Interval] = []
    i = 0
    last = grid_size - 1
    while i <= last:
        if not good[i]:
            i += 1
            continue
        j = i
        while j < last and good[j + 1]:
            j += 1
        left = 0.0 if i == 0 else find_root(func, float(grid[i - 1]), float(grid[i]))
        right = 1.0 if j == last else find_root(func, float(grid[j]), float(grid[j + 1]))
        intervals.append((left, right))
        i = j + 1
    current = FeasibleSet.of(intervals)
    for point in tangency_candidates(func, grid, values, settings.CLASSIFY_TOL):
        if not current.contains(point):
            intervals.append((point, point))
    return FeasibleSet.of(intervals)


def _phi_level(v: AllocationVector, config, F, c, sign: float, grid_size: int) -> FeasibleSet:
    return _level_set(lambda x: sign * phi(x, v, config, F, c),
                      lambda g: sign * phi(g, v, config, F, c), grid_size)


def feasible_set(v_min: AllocationVector, v_max: AllocationVector, config: ContestConfig, F: TypeDistribution,
                 c: CostFunction, grid_size: Optional[int] = None, threads: Optional[int] = None) -> FeasibleSet:
    """𝒮(v_min, v_max) = ({φ(·,v_min) ≤ 0} ∪ {1}) ∩ ({φ(·,v_max) ≥ 0} ∪ {0})。"""
    if not v_min.dominated_by(v_max, tol=1e-12):
        raise MechanismError("要求 v_min ≤ v_max（逐分量）")
    grid_size = grid_size or settings.SCAN_GRID_SIZE
    jobs = [(v_min, -1.0), (v_max, 1.0)]
    low_ok, high_ok = ordered_map(lambda job: _phi_level(job[0], config, F, c, job[1], grid_size), jobs,
                                  min(2, resolve_threads(threads)))
    result = low_ok.union(FeasibleSet(((1.0, 1.0),))).intersect(high_ok.union(FeasibleSet(((0.0, 0.0),))))
    log_event("FEASIBLE_SET", {"v_min": v_min.to_list(), "v_max": v_max.to_list(),
                               "intervals": [list(iv) for iv in result.intervals]})
    return result


def feasible_set_default(config: ContestConfig, F: TypeDistribution, c: CostFunction,
                         grid_size: Optional[int] = None) -> FeasibleSet:
    """𝒮 = {0} ∪ {s : φ(s, v̄) ≥ 0}。"""
    grid_size = grid_size or settings.SCAN_GRID_SIZE
    high_ok = _phi_level(standard_vector(config), config, F, c, 1.0, grid_size)
    result = high_ok.union(FeasibleSet(((0.0, 0.0),)))
    log_event("FEASIBLE_SET", {"v_min": "reversed", "v_max": "standard",
                               "intervals": [list(iv) for iv in result.intervals]})
    return result


def phi_inverse_single_prize(y: float, config: ContestConfig, F: TypeDistribution, c: CostFunction) -> float:
    """
    严格递减的 φ(·,𝟏) 的反函数：返回 sup{s : φ(s,𝟏) ≥ y}。
    若 y 落在 x 处的跳跃内，则返回 x。
    """
    g = lambda x: phi_single_prize(x, config, F, c)
    if g(0.0) < y:
        return 0.0
    if g(1.0) >= y:
        return 1.0
    lo, _ = bisect_predicate(lambda x: g(x) >= y, 0.0, 1.0, depth=settings.SYNTH_BISECT_DEPTH)
    return lo


def single_prize_feasible(config: ContestConfig, F: TypeDistribution, c: CostFunction) -> FeasibleSet:
    """单奖品：{0}、[0, φ⁻¹(0)] 或 [0,1] 三种情形。"""
    if config.m != 1 and not config.relax_bounds:
        raise MechanismError(f"单奖品可行集只适用于 m=1，当前 m={config.m}")
    if phi_single_prize(0.0, config, F, c) <= 0.0:
        return FeasibleSet(((0.0, 0.0),))
    if phi_single_prize(1.0, config, F, c) >= 0.0:
        return FeasibleSet.full()
    return FeasibleSet(((0.0, phi_inverse_single_prize(0.0, config, F, c)),))


def synthesize_mechanism(s: float, family: MechanismFamily, config: ContestConfig, F: TypeDistribution,
                         c: CostFunction, feasible: Optional[FeasibleSet] = None) -> float:
    """
    在机制族上二分 t，使 φ(s, v(t)) = 0；s ∈ {0,1} 时只要求边界条件成立。
    t ↦ φ(s, v(t)) 连续，因此端点异号即可保证有解。
    """
    tol = settings.CLASSIFY_TOL
    if not (0.0 <= s <= 1.0):
        raise InfeasibleTargetError(f"目标截断 s={s} 不在 [0,1] 内")
    if feasible is not None and not feasible.contains(s):
        raise InfeasibleTargetError(f"目标截断 s={s} 不在可行集合 {feasible.to_dict()['intervals']} 内")
    g = lambda t: phi(s, family(t), config, F, c)
    g0, g1 = g(0.0), g(1.0)

    if s == 0.0:
        if g0 <= tol:
            t = 0.0
        elif g1 <= tol:
            _, t = bisect_predicate(lambda x: g(x) > tol, 0.0, 1.0, settings.SYNTH_BISECT_DEPTH)
        else:
            raise InfeasibleTargetError(f"机制族 {family.name} 无法使 s=0 成为均衡")
    elif s == 1.0:
        if g1 < -tol:
            raise InfeasibleTargetError(f"机制族 {family.name} 无法使 s=1 成为均衡")
        if g0 >= -tol:
            t = 0.0
        else:
            _, t = bisect_predicate(lambda x: g(x) < -tol, 0.0, 1.0, settings.SYNTH_BISECT_DEPTH)
    else:
        if g0 > tol or g1 < -tol:
            raise InfeasibleTargetError(
                f"目标截断 s={s} 不在机制族 {family.name} 的可行范围内 (φ(s,v(0))={g0:.3e}, φ(s,v(1))={g1:.3e})")
        if abs(g0) <= tol:
            t = 0.0
        elif abs(g1) <= tol:
            t = 1.0
        else:
            lo, hi = bisect_predicate(lambda x: g(x) < 0.0, 0.0, 1.0, settings.SYNTH_BISECT_DEPTH)
            t = lo if abs(g(lo)) <= abs(g(hi)) else hi
            if abs(g(t)) > settings.SYNTH_TOL:
                raise NumericalError(f"机制合成未收敛: |φ(s, v(t))|={abs(g(t)):.3e}")

    log_event("MECHANISM_SYNTHESIS", {"family": family.name, "s": s, "t": t})
    return float(t)


@dataclass(frozen=True)
class SynthesisReport:
    family: str
    s: float
    t: float
    vector: AllocationVector
    equilibria: EquilibriumSet

    @property
    def unique(self) -> bool:
        return len(self.equilibria) == 1

    def to_dict(self) -> dict:
        return {"family": self.family, "s": self.s, "t": self.t, "v": self.vector.to_list(),
                "equilibria": [e.to_dict() for e in self.equilibria], "unique": self.unique}


def synthesize_and_verify(s: float, family: MechanismFamily, config: ContestConfig, F: TypeDistribution,
                          c: CostFunction, feasible: Optional[FeasibleSet] = None,
                          grid_size: Optional[int] = None) -> SynthesisReport:
    """合成机制并重新求出其全部均衡；多重均衡只报告，不做唯一性断言。"""
    t = synthesize_mechanism(s, family, config, F, c, feasible)
    vector = family(t)
    equilibria = find_equilibria(vector, config, F, c, grid_size)
    if len(equilibria) > 1:
        logger.info(f"合成机制 {family.name}(t={t:.10f}) 存在 {len(equilibria)} 个均衡截断: {equilibria.values()}")
    return SynthesisReport(family=family.name, s=s, t=t, vector=vector, equilibria=equilibria)


def quota_parameter(s: float, config: ContestConfig, F: TypeDistribution, c: CostFunction) -> float:
    """
    t(s) = (ΣF^k + n·c(s)/m) / (ΣF^k + Σ(1−F)^k)，k = 0..n−2。
    m = 1 时即单奖品闭式；放宽上界时成本按 1/m 缩放。
    """
    if config.m != 1 and not config.relax_bounds:
        raise MechanismError(f"配额参数闭式要求 m=1，当前 m={config.m}")
    if not (0.0 < s < 1.0):
        raise MechanismError(f"配额参数闭式只适用于内点截断，s={s}")
    p = float(F.cdf(s))
    j = np.arange(0, config.n - 1)
    down = float(np.sum(p ** j))
    up = float(np.sum((1.0 - p) ** j))
    t = (down + config.n * float(c(s)) / config.m) / (down + up)
    if t > 1.0 + 1e-12:
        raise InfeasibleTargetError(f"s={s} 需要 t={t:.6f} > 1，不在配额机制的可行范围内")
    return min(t, 1.0)
