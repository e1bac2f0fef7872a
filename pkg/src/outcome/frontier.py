# frontier.py
"""
均衡截断 s 的结果：社会成本 C(s)、选拔效率 η(s) 以及前沿曲线 Η(C)。

C(s) = ∫₀ˢ c dF，η(s) = n·c(s)/(m·μ) · ∫₀ˢ (μ−θ) dF。二者只依赖截断 s，
与实现该截断的机制无关。
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.model.contest import ContestConfig
from src.model.costs import CostFunction
from src.model.distributions import TypeDistribution
from src.utils import config as settings
from src.utils.config import resolve_threads
from src.utils.logger_config import log_event, logger
from src.utils.numerics import NumericalError, find_root, integrate_interval, ordered_map


class FrontierError(NumericalError):
    """前沿上 C(s) 不严格递增时抛出（成本/分布组合无效）。"""
    pass


class UndefinedDerivativeError(Exception):
    """c(s)=0 或 f(s)=0 处预算线斜率无定义。"""
    pass


@dataclass(frozen=True)
class OutcomePair:
    C: float
    eta: float


def _cost_density(F: TypeDistribution, c: CostFunction):
    return lambda x: float(c(x)) * float(F.pdf(x))


def _cdf(F: TypeDistribution):
    return lambda x: float(F.cdf(x))


def societal_cost(s: float, F: TypeDistribution, c: CostFunction) -> float:
    """C(s) = ∫₀ˢ c(θ) dF(θ)"""
    if s <= 0.0:
        return 0.0
    return integrate_interval(_cost_density(F, c), 0.0, min(s, 1.0), points=c.kinks)


def type_deficit(s: float, F: TypeDistribution) -> float:
    """
    ∫₀ˢ (μ−θ) dF(θ)，按分部积分写成 (μ−s)F(s) + ∫₀ˢ F(θ) dθ，只用到 cdf。
    """
    if s <= 0.0:
        return 0.0
    s = min(s, 1.0)
    return (F.mean - s) * float(F.cdf(s)) + integrate_interval(_cdf(F), 0.0, s)


def selection_efficiency(s: float, config: ContestConfig, F: TypeDistribution, c: CostFunction) -> float:
    """η(s)；s ∈ {0,1} 时所有人行动相同，返回精确的 0。"""
    if s <= 0.0 or s >= 1.0:
        return 0.0
    return config.n * float(c(s)) / (config.m * F.mean) * type_deficit(s, F)


def expected_selected_type(s: float, config: ContestConfig, F: TypeDistribution, c: CostFunction) -> float:
    """被选中者的期望类型 μ − (n/m)·c(s)·∫₀ˢ(μ−θ)dF。"""
    if s <= 0.0 or s >= 1.0:
        return F.mean
    return F.mean - config.n / config.m * float(c(s)) * type_deficit(s, F)


def outcome_pair(s: float, config: ContestConfig, F: TypeDistribution, c: CostFunction) -> OutcomePair:
    return OutcomePair(C=societal_cost(s, F, c), eta=selection_efficiency(s, config, F, c))


def cost_elasticity(s: float, F: TypeDistribution, c: CostFunction, side: int = 0) -> float:
    """
    ε(s) = c′(s)F(s) / (c(s)f(s))。
    直接商为 0/0（或非有限）且 s 小于探针时，用 s = ELASTICITY_PROBE 处的值作为右极限。
    """
    def direct(x: float) -> float:
        num = c.derivative(x, side) * float(F.cdf(x))
        den = float(c(x)) * float(F.pdf(x))
        with np.errstate(divide="ignore", invalid="ignore"):
            return float(np.float64(num) / np.float64(den))

    value = direct(s)
    if np.isfinite(value):
        return value
    if s < settings.ELASTICITY_PROBE:
        return direct(settings.ELASTICITY_PROBE)
    raise UndefinedDerivativeError(f"ε(s) 在 s={s} 处无定义")


def _is_kink(s: float, c: CostFunction) -> bool:
    return any(abs(s - k) <= 1e-12 for k in c.kinks)


def budget_derivative(s: float, config: ContestConfig, F: TypeDistribution, c: CostFunction, side: int = 0) -> float:
    """
    Η′(C(s)) = (n/(mμ))·[(μ−s) + ε(s)·(μ − E[θ|θ<s])]
             = (n/(mμ))·[(μ−s) + c′(s)/(c(s)f(s))·∫₀ˢ(μ−θ)dF]

    在成本函数的拐点处 side=0 取右导数；side=±1 显式选择单侧导数。
    """
    if not (0.0 < s < 1.0):
        raise UndefinedDerivativeError(f"预算线斜率只在 (0,1) 内定义，s={s}")
    cs = float(c(s))
    fs = float(F.pdf(s))
    if cs <= 0.0 or not np.isfinite(fs) or fs <= 0.0:
        raise UndefinedDerivativeError(f"s={s} 处 c(s)={cs}、f(s)={fs}，预算线斜率无定义")
    if side == 0 and _is_kink(s, c):
        side = 1
    mu = F.mean
    dc = c.derivative(s, side)
    return config.n / (config.m * mu) * ((mu - s) + dc / (cs * fs) * type_deficit(s, F))


@dataclass(frozen=True, eq=False)
class FrontierCurve:
    """按 s 升序采样的 (s, C, η)；C 严格递增，可用单调求根做 C⁻¹。"""
    s: np.ndarray
    C: np.ndarray
    eta: np.ndarray
    slope: np.ndarray
    kink_flags: np.ndarray
    config: ContestConfig = field(repr=False)
    F: TypeDistribution = field(repr=False)
    c: CostFunction = field(repr=False)
    warnings: tuple = ()

    def __len__(self):
        return len(self.s)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"s": self.s, "C": self.C, "eta": self.eta, "dEta_dC": self.slope,
                             "kink": self.kink_flags})

    def index_of(self, s: float) -> int:
        """最接近 s 的样本下标。"""
        i = int(np.searchsorted(self.s, s))
        if i == 0:
            return 0
        if i >= len(self.s):
            return len(self.s) - 1
        return i if abs(self.s[i] - s) < abs(self.s[i - 1] - s) else i - 1

    def inverse_cost(self, C_target: float) -> float:
        """C⁻¹：先在样本中定位区间，再对 C(s) − C_target 单调求根。"""
        if C_target <= self.C[0]:
            return float(self.s[0])
        if C_target >= self.C[-1]:
            return float(self.s[-1])
        i = int(np.searchsorted(self.C, C_target))
        if self.C[i] == C_target:
            return float(self.s[i])
        a, b = float(self.s[i - 1]), float(self.s[i])
        base = float(self.C[i - 1])
        density = _cost_density(self.F, self.c)
        return find_root(lambda x: base + integrate_interval(density, a, x) - C_target, a, b)


def _segment_integrals(F: TypeDistribution, c: CostFunction, edges: Sequence[Tuple[float, float]]) -> np.ndarray:
    density = _cost_density(F, c)
    cdf = _cdf(F)
    out = np.empty((len(edges), 2))
    for i, (a, b) in enumerate(edges):
        out[i, 0] = integrate_interval(density, a, b, points=c.kinks)
        out[i, 1] = integrate_interval(cdf, a, b)
    return out


def _integrate_segments_pairs(F, c, edges: np.ndarray, threads: int) -> np.ndarray:
    """按段分区并行计算每段上的 ∫c dF 与 ∫F dθ，按原顺序合并。"""
    edges = [(float(a), float(b)) for a, b in edges]
    if not edges:
        return np.empty((0, 2))
    chunks = np.array_split(np.arange(len(edges)), max(1, min(threads, len(edges))))
    parts = ordered_map(lambda idx: _segment_integrals(F, c, [edges[j] for j in idx]),
                        [ch for ch in chunks if len(ch)], threads)
    return np.vstack(parts)


def _integrate_segments(F, c, s: np.ndarray, threads: int) -> np.ndarray:
    return _integrate_segments_pairs(F, c, np.column_stack((s[:-1], s[1:])), threads)


def _assemble(config, F, c, s, seg):
    C = np.concatenate(([0.0], np.cumsum(seg[:, 0])))
    intF = np.concatenate(([0.0], np.cumsum(seg[:, 1])))
    mu = F.mean
    deficit = (mu - s) * np.asarray(F.cdf(s), dtype=float) + intF
    eta = config.n * np.asarray(c(s), dtype=float) / (config.m * mu) * deficit
    eta[(s <= 0.0) | (s >= 1.0)] = 0.0
    return C, deficit, eta


def frontier(config: ContestConfig, F: TypeDistribution, c: CostFunction, grid_size: Optional[int] = None,
             threads: Optional[int] = None, extra_points: Iterable[float] = ()) -> FrontierCurve:
    """
    在 [0,1] 的均匀网格（加上 extra_points 与成本拐点）上采样前沿；
    相邻样本 |Δη| 超过 REFINE_ETA_JUMP 时插入中点。
    """
    grid_size = grid_size or settings.FRONTIER_GRID_SIZE
    if grid_size < 2:
        raise ValueError("前沿网格至少需要 2 个点")
    threads = resolve_threads(threads)
    s = np.linspace(0.0, 1.0, grid_size)
    extra = [float(p) for p in extra_points if 0.0 <= p <= 1.0] + list(c.kinks)
    s = np.unique(np.concatenate((s, extra)))

    seg = _integrate_segments(F, c, s, threads)
    C, deficit, eta = _assemble(config, F, c, s, seg)
    for round_no in range(settings.MAX_REFINE_ROUNDS):
        jumps = np.nonzero(np.abs(np.diff(eta)) > settings.REFINE_ETA_JUMP)[0]
        mids = 0.5 * (s[jumps] + s[jumps + 1])
        keep = (mids > s[jumps]) & (mids < s[jumps + 1])
        jumps, mids = jumps[keep], mids[keep]
        if len(jumps) == 0:
            break
        logger.debug(f"前沿加密第 {round_no + 1} 轮: 插入 {len(jumps)} 个中点")
        # 只对被拆分的段重新积分
        halves = np.ravel(np.column_stack((s[jumps], mids, mids, s[jumps + 1])))
        split = _integrate_segments_pairs(F, c, halves.reshape(-1, 2), threads)
        seg = np.insert(np.delete(seg, jumps, axis=0), np.repeat(jumps - np.arange(len(jumps)), 2), split, axis=0)
        s = np.insert(s, jumps + 1, mids)
        C, deficit, eta = _assemble(config, F, c, s, seg)

    bad = np.nonzero(np.diff(C) <= 0)[0]
    if len(bad):
        i = int(bad[0])
        raise FrontierError(f"C(s) 在 s∈[{s[i]:.6g}, {s[i + 1]:.6g}] 上不严格递增，成本/分布组合无效")

    slope = np.full(len(s), np.nan)
    cs = np.asarray(c(s), dtype=float)
    fs = np.asarray(F.pdf(s), dtype=float)
    kinks = np.array([_is_kink(float(x), c) for x in s], dtype=bool)
    mu = F.mean
    for i in range(len(s)):
        x = float(s[i])
        if not (0.0 < x < 1.0) or cs[i] <= 0.0 or not np.isfinite(fs[i]) or fs[i] <= 0.0:
            continue
        dc = c.derivative(x, 1 if kinks[i] else 0)
        slope[i] = config.n / (config.m * mu) * ((mu - x) + dc / (cs[i] * fs[i]) * deficit[i])

    warnings = ()
    if kinks.any():
        msg = f"成本函数在 {int(kinks.sum())} 个样本点处不可导，dEta_dC 取右导数"
        logger.warning(msg)
        warnings = (msg,)

    for arr in (s, C, eta, slope, kinks):
        arr.setflags(write=False)
    curve = FrontierCurve(s=s, C=C, eta=eta, slope=slope, kink_flags=kinks, config=config, F=F, c=c,
                          warnings=warnings)
    log_event("FRONTIER", {"samples": len(s), "C_max": float(C[-1]), "eta_max": float(np.max(eta))})
    return curve
