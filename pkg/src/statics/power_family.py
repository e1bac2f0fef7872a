# power_family.py
"""
幂函数族 F(x) = x^α、c(x) = γF(x)^ε 的闭式结果与比较静态扫描。

该族的成本弹性 ε(s) ≡ ε 为常数，Η 为凹函数，放宽问题的最优截断有闭式：
    s⋆ = (ε + 1 − (m/n)λ)·α / ((ε + 1)α + 1)
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.model.contest import ContestConfig
from src.model.costs import PowerCost
from src.model.distributions import PowerDistribution
from src.model.mechanisms import MechanismError
from src.utils import config as settings
from src.utils.config import ConfigError, resolve_threads
from src.utils.logger_config import log_event, logger
from src.utils.numerics import find_root, ordered_map

SWEEPABLE = ("alpha", "gamma", "eps", "lambda", "n", "m")


@dataclass(frozen=True)
class PowerFamily:
    alpha: float
    gamma: float
    eps: float

    def __post_init__(self):
        for name in ("alpha", "gamma", "eps"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} 必须为正，实际为 {value}", field=name)

    @property
    def mu(self) -> float:
        return self.alpha / (1.0 + self.alpha)

    def distribution(self) -> PowerDistribution:
        return PowerDistribution(self.alpha)

    def cost(self) -> PowerCost:
        return PowerCost(self.gamma, self.eps, self.distribution())

    def societal_cost(self, s: float) -> float:
        """C = γ/(ε+1)·s^{(ε+1)α}"""
        return self.gamma / (self.eps + 1.0) * s ** ((self.eps + 1.0) * self.alpha)

    def selection_efficiency(self, s: float, config: ContestConfig) -> float:
        """η = (n/m)·γ·s^{(ε+1)α}·(1−s)"""
        return self.gamma / config.ratio * s ** ((self.eps + 1.0) * self.alpha) * (1.0 - s)

    def budget_slope(self, s: float, config: ContestConfig) -> float:
        """Η′(C(s)) = (n/(mα))·((ε+1)α − ((ε+1)α+1)s)"""
        a = (self.eps + 1.0) * self.alpha
        return (a - (a + 1.0) * s) / (config.ratio * self.alpha)

    def to_dict(self) -> Dict:
        return {"alpha": self.alpha, "gamma": self.gamma, "eps": self.eps}


@dataclass(frozen=True)
class ClampedValue:
    """截断到 [0,1] 的值及其未截断的原始值。"""
    value: float
    raw: float

    def __float__(self):
        return self.value


def s_star_relaxed(family: PowerFamily, config: ContestConfig, lam: Optional[float] = None) -> ClampedValue:
    lam = config.lam if lam is None else lam
    raw = (family.eps + 1.0 - config.ratio * lam) * family.alpha / ((family.eps + 1.0) * family.alpha + 1.0)
    return ClampedValue(value=min(max(raw, 0.0), 1.0), raw=raw)


def _single_prize_gap(s: float, family: PowerFamily, config: ContestConfig) -> float:
    """γ s^{αε} − (m/n)·Σ_{k=0}^{n−2}(1 − s^α)^k，即 −φ(s, m·𝟏)。"""
    j = np.arange(0, config.n - 1)
    return family.gamma * s ** (family.alpha * family.eps) - config.ratio * float(np.sum((1.0 - s ** family.alpha) ** j))


def s_max_single_prize(family: PowerFamily, config: ContestConfig) -> float:
    """单奖品（或放宽上界）下可行区间 [0, s_max] 的右端点。"""
    if config.m != 1 and not config.relax_bounds:
        raise MechanismError(f"s_max 闭式要求 m=1，当前 m={config.m}")
    g = lambda s: _single_prize_gap(s, family, config)
    if g(0.0) >= 0.0:
        return 0.0
    if g(1.0) <= 0.0:
        return 1.0
    return find_root(g, 0.0, 1.0)


def s_star_constrained(family: PowerFamily, config: ContestConfig, lam: Optional[float] = None) -> float:
    """把 s⋆ 投影到 [0, s_max]。"""
    star = s_star_relaxed(family, config, lam)
    if star.raw <= 0.0:
        return 0.0
    return min(star.value, s_max_single_prize(family, config))


@dataclass(frozen=True, eq=False)
class SweepResult:
    table: pd.DataFrame
    which: str
    flags: Dict[str, bool] = field(default_factory=dict)
    turning_point: Optional[float] = None

    def to_dict(self) -> Dict:
        return {"which": self.which, "flags": self.flags, "turning_point": self.turning_point,
                "rows": len(self.table)}


def default_grid(which: str, lo: float, hi: float, points: int = None) -> np.ndarray:
    """γ 使用对数网格，n 与 m 使用整数网格，其余使用均匀网格。"""
    points = points or settings.SWEEP_DEFAULT_POINTS
    if which == "gamma":
        return np.geomspace(lo, hi, points)
    if which in ("n", "m"):
        return np.unique(np.round(np.linspace(lo, hi, points)).astype(int))
    return np.linspace(lo, hi, points)


def _sweep_row(value: float, which: str, family: PowerFamily, config: ContestConfig) -> Dict:
    lam = config.lam
    if which == "lambda":
        lam = float(value)
    elif which == "n":
        config = ContestConfig(int(value), config.m, config.lam, config.relax_bounds)
    elif which == "m":
        config = ContestConfig(config.n, int(value), config.lam, config.relax_bounds)
    elif which in ("alpha", "gamma", "eps"):
        family = replace(family, **{which: float(value)})
    star = s_star_relaxed(family, config, lam)
    single = config.m == 1 or config.relax_bounds
    s_max = s_max_single_prize(family, config) if single else float("nan")
    s_con = s_star_constrained(family, config, lam) if single else float("nan")
    s_eval = s_con if single else star.value
    C = family.societal_cost(s_eval)
    eta = family.selection_efficiency(s_eval, config)
    return {
        "value": float(value), "alpha": family.alpha, "gamma": family.gamma, "eps": family.eps,
        "lambda": lam, "n": config.n, "m": config.m, "m_over_n": config.ratio,
        "s_star_raw": star.raw, "s_star": star.value, "s_max": s_max,
        "F_s_max": s_max ** family.alpha if single else float("nan"),
        "s_constrained": s_con, "C": C, "eta": eta, "payoff": eta - lam * C,
    }


def _monotone(values: np.ndarray, direction: int, tol: float = 1e-12) -> bool:
    d = np.diff(values)
    if direction > 0:
        return bool(np.all(d >= -tol))
    if direction < 0:
        return bool(np.all(d <= tol))
    return bool(np.all(np.abs(d) <= tol))


def _strict(values: np.ndarray, direction: int) -> bool:
    d = np.diff(values)
    return bool(np.all(d > 0)) if direction > 0 else bool(np.all(d < 0))


def sweep(family: PowerFamily, config: ContestConfig, which: str, values: Sequence[float],
          threads: Optional[int] = None) -> SweepResult:
    """
    在参数网格上列出 s⋆（原始与截断）、s_max、s*、C、η 与收益，并给出
    与比较静态结论对照的单调性标记。
    """
    if which not in SWEEPABLE:
        raise ConfigError(f"不支持扫描参数 {which!r}（可选: {', '.join(SWEEPABLE)}）", field="over")
    values = [float(v) for v in values]
    if not values:
        raise ConfigError("扫描网格为空", field="over")
    rows = ordered_map(lambda v: _sweep_row(v, which, family, config), values, resolve_threads(threads))
    table = pd.DataFrame(rows)
    raw = table["s_star_raw"].to_numpy()
    fmax = table["F_s_max"].to_numpy()
    has_fmax = not np.isnan(fmax).any()
    flags: Dict[str, bool] = {}
    turning = None

    if which == "lambda":
        flags["s_star_decreasing"] = _strict(raw, -1)
    elif which == "eps":
        flags["s_star_increasing"] = _strict(raw, +1)
        if has_fmax:
            flags["F_s_max_increasing"] = _monotone(fmax, +1)
    elif which == "gamma":
        flags["s_star_constant"] = _monotone(raw, 0)
        if has_fmax:
            flags["F_s_max_decreasing"] = _monotone(fmax, -1)
    elif which == "alpha":
        predicted = family.eps + 1.0 >= config.ratio * config.lam
        flags["s_star_nondecreasing"] = _monotone(raw, +1)
        flags["alpha_direction_matches"] = flags["s_star_nondecreasing"] == predicted
        if has_fmax:
            flags["F_s_max_flat"] = bool(np.all(np.abs(fmax - fmax[0]) <= 1e-8))
    elif which in ("n", "m"):
        # 按 m/n 升序判断单调性；n 增大即 m/n 减小
        order = np.argsort(table["m_over_n"].to_numpy(), kind="stable")
        flags["s_star_decreasing_in_ratio"] = _monotone(raw[order], -1)
        if has_fmax:
            flags["F_s_max_increasing_in_ratio"] = _monotone(fmax[order], +1)
        s_con = table["s_constrained"].to_numpy()
        if not np.isnan(s_con).any() and len(s_con) > 2:
            ratio = table["m_over_n"].to_numpy()
            order = np.argsort(ratio)
            peak = int(np.argmax(s_con[order]))
            if 0 < peak < len(order) - 1:
                turning = float(ratio[order][peak])
                logger.info(f"s* 随 m/n 先增后减，经验转折点 m/n ≈ {turning:.6g}")

    result = SweepResult(table=table, which=which, flags=flags, turning_point=turning)
    log_event("SWEEP", {"family": family.to_dict(), "which": which, "points": len(values), "flags": flags,
                        "turning_point": turning})
    return result
