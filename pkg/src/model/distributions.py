# distributions.py
"""
类型分布 F：能力指数 θ ∈ [0,1] 的分布，θ 越小表示能力越强。

提供 cdf / pdf / 均值 / 分位数 / 逆变换抽样。所有对象构造后不可变，
可以在线程之间共享。
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from src.utils import config
from src.utils.config import ConfigError
from src.utils.numerics import NumericalError, integrate_interval


class TypeDistribution:
    """类型分布的公共接口。子类实现 cdf、pdf 与 mean。"""

    kind = "abstract"

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    def quantile(self, u):
        """默认数值分位数：向量化二分，精度 QUANTILE_TOL。"""
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        lo = np.zeros_like(u)
        hi = np.ones_like(u)
        iterations = int(np.ceil(np.log2(1.0 / config.QUANTILE_TOL))) + 1
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        result = 0.5 * (lo + hi)
        return float(result) if result.ndim == 0 else result

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """逆变换抽样。"""
        return np.asarray(self.quantile(rng.random(size)), dtype=float)

    def to_dict(self) -> Dict:
        raise NotImplementedError


def _numeric_mean(dist: TypeDistribution, knots: Sequence[float] = ()) -> float:
    # ∫₀¹ θ dF(θ) = 1 − ∫₀¹ F(θ) dθ，再用 ∫θ f(θ)dθ 自检
    mean = 1.0 - integrate_interval(lambda x: float(dist.cdf(x)), 0.0, 1.0, points=knots)
    direct = integrate_interval(lambda x: x * float(dist.pdf(x)), 0.0, 1.0, points=knots)
    if abs(mean - direct) > config.MEAN_CHECK_TOL:
        raise NumericalError(f"分布均值自检失败: 1−∫F={mean:.12g}，∫θf={direct:.12g}")
    return mean


@dataclass(frozen=True)
class UniformDistribution(TypeDistribution):
    kind = "uniform"

    def cdf(self, x):
        return np.clip(x, 0.0, 1.0) if np.ndim(x) else float(min(max(x, 0.0), 1.0))

    def pdf(self, x):
        return np.ones_like(np.asarray(x, dtype=float)) if np.ndim(x) else 1.0

    @property
    def mean(self) -> float:
        return 0.5

    def quantile(self, u):
        return np.clip(u, 0.0, 1.0) if np.ndim(u) else float(min(max(u, 0.0), 1.0))

    def to_dict(self) -> Dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class PowerDistribution(TypeDistribution):
    """F(x) = x^α。"""
    alpha: float
    kind = "power"

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise ConfigError(f"alpha 必须为正，实际为 {self.alpha}", field="alpha")

    def cdf(self, x):
        x = np.clip(x, 0.0, 1.0)
        out = np.power(x, self.alpha)
        return out if np.ndim(out) else float(out)

    def pdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        with np.errstate(divide="ignore"):
            out = self.alpha * np.power(x, self.alpha - 1.0)
        return out if np.ndim(out) else float(out)

    @property
    def mean(self) -> float:
        return self.alpha / (1.0 + self.alpha)

    def quantile(self, u):
        u = np.clip(u, 0.0, 1.0)
        out = np.power(u, 1.0 / self.alpha)
        return out if np.ndim(out) else float(out)

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "alpha": self.alpha}


def validate_table(x: Sequence[float], y: Sequence[float], y_name: str) -> Tuple[np.ndarray, np.ndarray]:
    """检查表格输入：x 从 0 到 1 严格递增，y 严格递增；违规时报告下标。"""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.ndim != 1 or len(xs) < 2:
        raise ConfigError("至少需要两个网格点", field="x")
    if len(ys) != len(xs):
        raise ConfigError(f"长度 {len(ys)} 与 x 的长度 {len(xs)} 不一致", field=y_name)
    bad = np.nonzero(~np.isfinite(xs))[0]
    if len(bad):
        raise ConfigError("包含非有限值", field="x", indices=bad)
    bad = np.nonzero(~np.isfinite(ys))[0]
    if len(bad):
        raise ConfigError("包含非有限值", field=y_name, indices=bad)
    if xs[0] != 0.0 or xs[-1] != 1.0:
        raise ConfigError("网格必须从 0 开始并以 1 结束", field="x")
    bad = np.nonzero(np.diff(xs) <= 0)[0] + 1
    if len(bad):
        raise ConfigError("网格必须严格递增", field="x", indices=bad)
    bad = np.nonzero(np.diff(ys) <= 0)[0] + 1
    if len(bad):
        raise ConfigError("数值必须严格递增", field=y_name, indices=bad)
    return xs, ys


@dataclass(frozen=True)
class TabulatedDistribution(TypeDistribution):
    """用户给出的 CDF 表，使用保形单调插值（pchip）或分段线性插值。"""
    x: Tuple[float, ...]
    cdf_values: Tuple[float, ...]
    interpolation: str = "pchip"
    kind = "tabulated"
    _interp: object = field(init=False, repr=False, compare=False)
    _mean: float = field(init=False, repr=False, compare=False)

    def __init__(self, x: Sequence[float], cdf: Sequence[float], interpolation: str = "pchip"):
        xs, ys = validate_table(x, cdf, "cdf")
        if ys[0] != 0.0 or ys[-1] != 1.0:
            bad = [i for i in (0, len(ys) - 1) if ys[i] != (0.0 if i == 0 else 1.0)]
            raise ConfigError("cdf 必须满足 F(0)=0 且 F(1)=1", field="cdf", indices=bad)
        if interpolation not in ("pchip", "linear"):
            raise ConfigError(f"未知的插值方式 {interpolation!r}", field="interpolation")
        object.__setattr__(self, "x", tuple(float(v) for v in xs))
        object.__setattr__(self, "cdf_values", tuple(float(v) for v in ys))
        object.__setattr__(self, "interpolation", interpolation)
        interp = PchipInterpolator(xs, ys, extrapolate=False) if interpolation == "pchip" else None
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_mean", _numeric_mean(self, self.x[1:-1]))

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        if self._interp is not None:
            out = np.clip(self._interp(x), 0.0, 1.0)
        else:
            out = np.interp(x, self.x, self.cdf_values)
        return out if np.ndim(out) else float(out)

    def pdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        if self._interp is not None:
            out = self._interp.derivative()(x)
        else:
            xs = np.asarray(self.x)
            slopes = np.diff(self.cdf_values) / np.diff(xs)
            # 节点处取右侧斜率，x=1 处取最后一段
            idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slopes) - 1)
            out = slopes[idx]
        return out if np.ndim(out) else float(out)

    @property
    def mean(self) -> float:
        return self._mean

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "x": list(self.x), "cdf": list(self.cdf_values),
                "interpolation": self.interpolation}
