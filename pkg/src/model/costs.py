# costs.py
"""努力成本函数 c(θ)：严格递增、非负，附带截断伪逆与导数。"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from src.utils import config
from src.utils.config import ConfigError
from src.utils.numerics import central_difference
from src.model.distributions import TypeDistribution, validate_table


def _as_output(out):
    return out if np.ndim(out) else float(out)


class CostFunction:
    """成本函数接口：__call__、derivative、pseudo_inverse 与 kinks。"""

    kind = "abstract"

    def __call__(self, theta):
        raise NotImplementedError

    @property
    def kinks(self) -> Tuple[float, ...]:
        """不可导点（仅分段线性表格成本非空）。"""
        return ()

    def derivative(self, theta: float, side: int = 0) -> float:
        """c′(θ)；默认使用步长 FD_STEP 的中心差分。side=±1 取单侧差分。"""
        h = config.FD_STEP
        if side > 0 and theta + h <= 1.0:
            return float((self(theta + h) - self(theta)) / h)
        if side < 0 and theta - h >= 0.0:
            return float((self(theta) - self(theta - h)) / h)
        return central_difference(lambda x: float(self(x)), theta)

    def pseudo_inverse(self, value):
        """c₋₁：低于 c(0) 返回 0，高于 c(1) 返回 1，中间为精确反函数（数值二分）。"""
        value = np.asarray(value, dtype=float)
        lo = np.zeros_like(value)
        hi = np.ones_like(value)
        iterations = int(np.ceil(np.log2(1.0 / config.QUANTILE_TOL))) + 1
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            below = np.asarray(self(mid)) < value
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        out = np.where(value <= self(0.0), 0.0, np.where(value >= self(1.0), 1.0, out))
        return _as_output(out)

    def to_dict(self) -> Dict:
        raise NotImplementedError


@dataclass(frozen=True)
class AffineCost(CostFunction):
    """c(θ) = a·θ + b，a > 0，b ≥ 0。"""
    a: float
    b: float
    kind = "affine"

    def __post_init__(self):
        if not np.isfinite(self.a) or self.a <= 0:
            raise ConfigError(f"斜率 a 必须为正以保证严格递增，实际为 {self.a}", field="a")
        if not np.isfinite(self.b) or self.b < 0:
            raise ConfigError(f"截距 b 必须非负，实际为 {self.b}", field="b")

    def __call__(self, theta):
        return _as_output(self.a * np.asarray(theta, dtype=float) + self.b)

    def derivative(self, theta: float, side: int = 0) -> float:
        return self.a

    def pseudo_inverse(self, value):
        return _as_output(np.clip((np.asarray(value, dtype=float) - self.b) / self.a, 0.0, 1.0))

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class PowerCost(CostFunction):
    """c(θ) = γ·F(θ)^ε，绑定到类型分布 F。"""
    gamma: float
    eps: float
    distribution: TypeDistribution
    kind = "power"

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            raise ConfigError(f"gamma 必须为正，实际为 {self.gamma}", field="gamma")
        if not np.isfinite(self.eps) or self.eps <= 0:
            raise ConfigError(f"eps 必须为正，实际为 {self.eps}", field="eps")

    def __call__(self, theta):
        return _as_output(self.gamma * np.power(self.distribution.cdf(theta), self.eps))

    def derivative(self, theta: float, side: int = 0) -> float:
        F = float(self.distribution.cdf(theta))
        f = float(self.distribution.pdf(theta))
        if F == 0.0:
            return 0.0 if self.eps > 1 else super().derivative(theta, side)
        return float(self.gamma * self.eps * F ** (self.eps - 1.0) * f)

    def pseudo_inverse(self, value):
        value = np.asarray(value, dtype=float)
        u = np.power(np.clip(value / self.gamma, 0.0, 1.0), 1.0 / self.eps)
        return _as_output(self.distribution.quantile(u))

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "gamma": self.gamma, "eps": self.eps}


@dataclass(frozen=True)
class LinearPowerCost(CostFunction):
    """c(θ) = γ·θ^k。"""
    gamma: float
    exponent: float
    kind = "linear_power"

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            raise ConfigError(f"gamma 必须为正，实际为 {self.gamma}", field="gamma")
        if not np.isfinite(self.exponent) or self.exponent <= 0:
            raise ConfigError(f"exponent 必须为正，实际为 {self.exponent}", field="exponent")

    def __call__(self, theta):
        return _as_output(self.gamma * np.power(np.clip(theta, 0.0, 1.0), self.exponent))

    def derivative(self, theta: float, side: int = 0) -> float:
        if theta == 0.0 and self.exponent < 1:
            return float("inf")
        return float(self.gamma * self.exponent * theta ** (self.exponent - 1.0))

    def pseudo_inverse(self, value):
        value = np.asarray(value, dtype=float)
        return _as_output(np.power(np.clip(value / self.gamma, 0.0, 1.0), 1.0 / self.exponent))

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "gamma": self.gamma, "exponent": self.exponent}


@dataclass(frozen=True)
class TabulatedCost(CostFunction):
    """成本表，pchip（C¹，无拐点）或分段线性（内部节点为拐点）插值。"""
    x: Tuple[float, ...]
    values: Tuple[float, ...]
    interpolation: str = "pchip"
    kind = "tabulated"
    _interp: object = field(init=False, repr=False, compare=False)

    def __init__(self, x: Sequence[float], values: Sequence[float], interpolation: str = "pchip"):
        xs, ys = validate_table(x, values, "values")
        if ys[0] < 0:
            raise ConfigError("成本必须非负", field="values", indices=[0])
        if interpolation not in ("pchip", "linear"):
            raise ConfigError(f"未知的插值方式 {interpolation!r}", field="interpolation")
        object.__setattr__(self, "x", tuple(float(v) for v in xs))
        object.__setattr__(self, "values", tuple(float(v) for v in ys))
        object.__setattr__(self, "interpolation", interpolation)
        interp = PchipInterpolator(xs, ys, extrapolate=False) if interpolation == "pchip" else None
        object.__setattr__(self, "_interp", interp)

    def __call__(self, theta):
        theta = np.clip(np.asarray(theta, dtype=float), 0.0, 1.0)
        if self._interp is not None:
            return _as_output(self._interp(theta))
        return _as_output(np.interp(theta, self.x, self.values))

    @property
    def kinks(self) -> Tuple[float, ...]:
        if self.interpolation == "linear":
            return self.x[1:-1]
        return ()

    def derivative(self, theta: float, side: int = 0) -> float:
        if self._interp is not None:
            return float(self._interp.derivative()(min(max(theta, 0.0), 1.0)))
        xs = np.asarray(self.x)
        slopes = np.diff(self.values) / np.diff(xs)
        # side<0 取左侧斜率；其余情况取右侧斜率（x=1 时为最后一段）
        pick = "left" if side < 0 else "right"
        idx = int(np.clip(np.searchsorted(xs, theta, side=pick) - 1, 0, len(slopes) - 1))
        return float(slopes[idx])

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "x": list(self.x), "values": list(self.values),
                "interpolation": self.interpolation}
