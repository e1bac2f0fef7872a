# contest.py
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from src.utils.config import ConfigError


@dataclass(frozen=True)
class ContestConfig:
    """竞赛配置：n 名参与者，m 个相同且不可分的奖品，成本厌恶权重 λ。"""
    n: int
    m: int
    lam: float
    relax_bounds: bool = False

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise ConfigError(f"参与者数量必须是 ≥ 2 的整数，实际为 {self.n}", field="n")
        if isinstance(self.m, bool) or int(self.m) != self.m or not (0 < self.m < self.n):
            raise ConfigError(f"奖品数量必须满足 0 < m < n，实际为 m={self.m}, n={self.n}", field="m")
        if not np.isfinite(self.lam):
            raise ConfigError(f"λ 必须是有限实数，实际为 {self.lam}", field="lambda")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def ratio(self) -> float:
        """m/n"""
        return self.m / self.n

    def with_lam(self, lam: float) -> "ContestConfig":
        return ContestConfig(self.n, self.m, lam, self.relax_bounds)

    def to_dict(self) -> Dict:
        return {"n": self.n, "m": self.m, "lambda": self.lam, "relax_bounds": self.relax_bounds}
