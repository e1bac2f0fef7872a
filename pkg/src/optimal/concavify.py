# concavify.py
"""
可行性限制下的前沿 Η₀ 及其凹包（最小凹上界）Η̄₀。

凹包通过对样本点做一次上凸包扫描得到，顶点总是输入样本（或原点）。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.feasible.feasible_set import FeasibleSet
from src.outcome.frontier import FrontierCurve

# 平台（λ 恰好等于某段斜率）判定的相对容差
TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RestrictedFrontier:
    """Η₀ 的样本：不可行处 η 置零，并记录可行性掩码。"""
    C: np.ndarray
    eta: np.ndarray
    eta0: np.ndarray
    mask: np.ndarray
    s: Optional[np.ndarray] = None

    @classmethod
    def from_samples(cls, C, eta, mask=None) -> "RestrictedFrontier":
        C = np.asarray(C, dtype=float)
        eta = np.asarray(eta, dtype=float)
        mask = np.ones(len(C), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        if len(C) != len(eta) or len(C) != len(mask):
            raise ValueError("C、η 与掩码的长度必须一致")
        if np.any(np.diff(C) < 0):
            raise ValueError("样本必须按 C 升序排列")
        return cls(C=C, eta=eta, eta0=np.where(mask, eta, 0.0), mask=mask)


def restrict_eta(curve: FrontierCurve, feasible: FeasibleSet) -> RestrictedFrontier:
    """Η₀(C) = Η(C)·𝟙[C ∈ C(𝒮)]"""
    mask = np.asarray(feasible.contains(curve.s), dtype=bool)
    return RestrictedFrontier(C=np.asarray(curve.C), eta=np.asarray(curve.eta),
                              eta0=np.where(mask, curve.eta, 0.0), mask=mask, s=np.asarray(curve.s))


@dataclass(frozen=True, eq=False)
class ConcaveEnvelope:
    """凹包：顶点 (C, η)、各段斜率（严格递减）以及顶点对应的样本下标（原点为 −1）。"""
    vertices_C: np.ndarray
    vertices_eta: np.ndarray
    slopes: np.ndarray
    vertex_index: np.ndarray

    @property
    def domain(self):
        return 0.0, float(self.vertices_C[-1])

    def value(self, C):
        """Η̄₀(C)，在定义域外返回 nan。"""
        C = np.asarray(C, dtype=float)
        out = np.interp(C, self.vertices_C, self.vertices_eta)
        out = np.where((C < 0.0) | (C > self.vertices_C[-1]), np.nan, out)
        return float(out) if out.ndim == 0 else out

    def slope_at(self, C: float) -> float:
        """C 处的右导数；最后一个顶点处取最后一段的斜率。"""
        if len(self.slopes) == 0:
            return float("nan")
        k = int(np.searchsorted(self.vertices_C, C, side="right")) - 1
        return float(self.slopes[min(max(k, 0), len(self.slopes) - 1)])

    def bridges(self, min_width: float = 0.0) -> List[dict]:
        """跨越多个样本（或不可行区域）的凹包线段，即凹化“熨平”的部分。"""
        out = []
        for k, slope in enumerate(self.slopes):
            i, j = int(self.vertex_index[k]), int(self.vertex_index[k + 1])
            if j - i > 1 and self.vertices_C[k + 1] - self.vertices_C[k] > min_width:
                c0, e0 = float(self.vertices_C[k]), float(self.vertices_eta[k])
                out.append({"C_left": c0, "C_right": float(self.vertices_C[k + 1]),
                            "slope": float(slope), "intercept": e0 - float(slope) * c0})
        return out

    def to_dict(self) -> dict:
        return {"vertices": [[float(c), float(e)] for c, e in zip(self.vertices_C, self.vertices_eta)],
                "slopes": [float(d) for d in self.slopes], "bridges": self.bridges()}


def concavify(samples: RestrictedFrontier) -> ConcaveEnvelope:
    """对 {(C, Η₀(C))} ∪ {(0,0)} 做上凸包扫描；只使用可行样本。"""
    idx = np.nonzero(samples.mask)[0]
    xs = [0.0]
    ys = [0.0]
    ids = [-1]
    for i in idx:
        x, y = float(samples.C[i]), float(samples.eta0[i])
        if x == xs[-1]:
            # 与原点（或上一个点）重合时保留较高者
            if y >= ys[-1]:
                ys[-1], ids[-1] = y, int(i)
            continue
        xs.append(x)
        ys.append(y)
        ids.append(int(i))

    hull: List[int] = []
    for p in range(len(xs)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (xs[a] - xs[o]) * (ys[p] - ys[o]) - (ys[a] - ys[o]) * (xs[p] - xs[o])
            if cross >= 0.0:
                hull.pop()
            else:
                break
        hull.append(p)

    vx = np.array([xs[p] for p in hull])
    vy = np.array([ys[p] for p in hull])
    slopes = np.diff(vy) / np.diff(vx) if len(hull) > 1 else np.empty(0)
    return ConcaveEnvelope(vertices_C=vx, vertices_eta=vy, slopes=slopes,
                           vertex_index=np.array([ids[p] for p in hull], dtype=int))


def locate_vertex(envelope: ConcaveEnvelope, lam: float) -> int:
    """
    第一个右侧斜率 ≤ λ 的顶点位置：
      - λ ≥ 第一段斜率 → 原点；
      - λ 落在顶点 x 的斜率跳跃内 → x；
      - λ 等于某段斜率 → 该段左端点；
      - λ 小于所有斜率 → 最后一个顶点。
    """
    tol = TIE_TOL * max(1.0, abs(lam))
    hits = np.nonzero(envelope.slopes <= lam + tol)[0]
    return int(hits[0]) if len(hits) else len(envelope.vertices_C) - 1


def inverse_derivative(envelope: ConcaveEnvelope, lam: float) -> float:
    """C* = Η̄₀′⁻¹(λ)"""
    return float(envelope.vertices_C[locate_vertex(envelope, lam)])
