# solver.py
"""
委托人问题 max η − λC：限制 → 凹化 → 逆导数 → C⁻¹，必要时附上机制参数。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.feasible.feasible_set import FeasibleSet, feasible_set_default, synthesize_mechanism
from src.model.contest import ContestConfig
from src.model.costs import CostFunction
from src.model.distributions import TypeDistribution
from src.model.mechanisms import MechanismFamily
from src.optimal.concavify import ConcaveEnvelope, RestrictedFrontier, concavify, locate_vertex, restrict_eta
from src.outcome.frontier import (FrontierCurve, UndefinedDerivativeError, budget_derivative, cost_elasticity,
                                  frontier, selection_efficiency, societal_cost)
from src.utils import config as settings
from src.utils.logger_config import log_event, logger
from src.utils.numerics import NumericalError, find_root


@dataclass(frozen=True)
class OptimalSolution:
    C_star: float
    s_star: float
    payoff: float
    lam: float
    eta_star: float
    envelope_value: float
    mechanism_hint: Optional[Tuple[str, float]] = None

    def to_dict(self) -> dict:
        out = {"C_star": self.C_star, "s_star": self.s_star, "payoff": self.payoff, "lambda": self.lam,
               "eta_star": self.eta_star, "envelope_value": self.envelope_value}
        if self.mechanism_hint is not None:
            out["family"], out["t"] = self.mechanism_hint
        return out


@dataclass(frozen=True)
class SampleSolution:
    """直接给定 (C, Η) 样本时的求解结果。"""
    envelope: ConcaveEnvelope
    C_star: float
    index: int
    eta0_star: float
    envelope_value: float


def payoff(s: float, lam: float, config: ContestConfig, F: TypeDistribution, c: CostFunction) -> float:
    """η(s) − λ·C(s)"""
    return selection_efficiency(s, config, F, c) - lam * societal_cost(s, F, c)


def solve_samples(C, eta, feasible_mask, lam: float) -> SampleSolution:
    """在原始 (C, Η) 样本上运行 限制 → 凹化 → 逆导数。"""
    restricted = RestrictedFrontier.from_samples(C, eta, feasible_mask)
    envelope = concavify(restricted)
    k = locate_vertex(envelope, lam)
    index = int(envelope.vertex_index[k])
    eta0 = 0.0 if index < 0 else float(restricted.eta0[index])
    return SampleSolution(envelope=envelope, C_star=float(envelope.vertices_C[k]), index=index,
                          eta0_star=eta0, envelope_value=float(envelope.vertices_eta[k]))


def _polish(curve: FrontierCurve, restricted: RestrictedFrontier, index: int, lam: float,
            feasible: FeasibleSet) -> Optional[float]:
    """
    顶点位于可行且局部光滑的样本段内时，在相邻样本之间求解 Η′(C(s)) = λ，
    把网格精度的顶点修正为一阶条件的精确解。
    """
    config, F, c = curve.config, curve.F, curve.c
    lo = max(index - 1, 0)
    hi = min(index + 1, len(curve.s) - 1)
    if not (restricted.mask[lo] and restricted.mask[hi]):
        return None
    if np.isnan(curve.slope[lo:hi + 1]).any() or curve.kink_flags[lo:hi + 1].any():
        return None

    def h(x: float) -> float:
        return budget_derivative(x, config, F, c) - lam

    for a, b in ((curve.s[lo], curve.s[index]), (curve.s[index], curve.s[hi])):
        a, b = float(a), float(b)
        if a >= b:
            continue
        try:
            ha, hb = h(a), h(b)
            if ha >= 0.0 >= hb:
                root = find_root(h, a, b)
            else:
                continue
        except (UndefinedDerivativeError, NumericalError):
            continue
        if feasible.contains(root, tol=0.0):
            return root
    return None


def solve(config: ContestConfig, F: TypeDistribution, c: CostFunction, feasible: Optional[FeasibleSet] = None,
          lam: Optional[float] = None, family: Optional[MechanismFamily] = None,
          frontier_grid: Optional[int] = None, scan_grid: Optional[int] = None,
          threads: Optional[int] = None) -> OptimalSolution:
    """组合 restrict_eta → concavify → inverse_derivative → C⁻¹。"""
    lam = config.lam if lam is None else float(lam)
    if feasible is None:
        feasible = feasible_set_default(config, F, c, scan_grid)
    curve = frontier(config, F, c, frontier_grid, threads, extra_points=feasible.endpoints())
    restricted = restrict_eta(curve, feasible)
    envelope = concavify(restricted)
    k = locate_vertex(envelope, lam)
    index = int(envelope.vertex_index[k])
    s_star = 0.0 if index < 0 else float(curve.s[index])
    envelope_value = float(envelope.vertices_eta[k])

    if 0.0 < s_star < 1.0:
        refined = _polish(curve, restricted, index, lam, feasible)
        if refined is not None and payoff(refined, lam, config, F, c) >= payoff(s_star, lam, config, F, c) - 1e-15:
            logger.debug(f"一阶条件修正: s* {s_star:.10f} → {refined:.10f}")
            s_star = refined
            envelope_value = selection_efficiency(s_star, config, F, c)

    C_star = societal_cost(s_star, F, c)
    eta_star = selection_efficiency(s_star, config, F, c)
    hint = None
    if family is not None:
        hint = (family.name, synthesize_mechanism(s_star, family, config, F, c, feasible))

    solution = OptimalSolution(C_star=C_star, s_star=s_star, payoff=eta_star - lam * C_star, lam=lam,
                               eta_star=eta_star, envelope_value=envelope_value, mechanism_hint=hint)
    log_event("OPTIMAL_SOLUTION", solution.to_dict())
    return solution


def solve_concave_first_order(config: ContestConfig, F: TypeDistribution, c: CostFunction, feasible: FeasibleSet,
                              lam: Optional[float] = None, grid_size: Optional[int] = None) -> float:
    """
    Η 为凹函数时的直接规则：
      - 1 + ε(0) < (m/n)λ → s* = 0；
      - 否则解 Η′(C(s₀)) = λ；s₀ ∈ 𝒮 时取 s₀，
        否则在 s₁ = max 𝒮∩[0,s₀] 与 s₂ = min 𝒮∩[s₀,1] 中取收益较高者。
    """
    lam = config.lam if lam is None else float(lam)
    if 1.0 + cost_elasticity(0.0, F, c) < config.ratio * lam:
        return 0.0

    grid = np.linspace(0.0, 1.0, grid_size or settings.SCAN_GRID_SIZE)[1:-1]

    def h(x: float) -> float:
        return budget_derivative(x, config, F, c) - lam

    values = []
    for x in grid:
        try:
            values.append(h(float(x)))
        except UndefinedDerivativeError:
            values.append(np.nan)
    values = np.asarray(values)
    valid = np.nonzero(np.isfinite(values))[0]
    s0 = None
    for a, b in zip(valid[:-1], valid[1:]):
        if values[a] > 0.0 >= values[b]:
            s0 = find_root(h, float(grid[a]), float(grid[b]))
            break
    if s0 is None:
        s0 = 1.0 if len(valid) and values[valid[-1]] > 0.0 else 0.0

    if feasible.contains(s0):
        return float(s0)
    candidates = [x for x in (feasible.nearest_below(s0), feasible.nearest_above(s0)) if x is not None]
    return float(max(candidates, key=lambda x: payoff(x, lam, config, F, c)))
