# numerics.py
"""
数值内核：自适应积分、区间求根、符号扫描与有序并行映射。

所有求解模块都经由这里调用 scipy，从而统一容差与失败处理。
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize

from src.utils import config
from src.utils.logger_config import logger


class NumericalError(Exception):
    """积分、求根或单调性校验失败时抛出。"""
    pass


# QUADPACK 的 QAGS 每个子区间使用 21 点 Gauss-Kronrod 规则
_QUAD_LIMIT = max(50, config.QUAD_MAX_EVALS // 42)


def integrate_interval(func: Callable[[float], float], a: float, b: float, points: Sequence[float] = None) -> float:
    """∫_a^b func，绝对容差 QUAD_ABS_TOL；失败时抛出 NumericalError。"""
    if b <= a:
        return 0.0
    inner = None
    if points is not None:
        inner = [p for p in points if a < p < b] or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr, info = integrate.quad(
            func, a, b, epsabs=config.QUAD_ABS_TOL, epsrel=0.0,
            limit=_QUAD_LIMIT, points=inner, full_output=1,
        )[:3]
    if not np.isfinite(value):
        raise NumericalError(f"积分结果非有限值: [{a}, {b}]")
    if info.get("neval", 0) > config.QUAD_MAX_EVALS:
        raise NumericalError(f"积分求值次数超过上限 {config.QUAD_MAX_EVALS}: [{a}, {b}]")
    if abserr > 100 * config.QUAD_ABS_TOL:
        logger.warning(f"积分误差估计 {abserr:.3e} 超过容差，区间 [{a:.6g}, {b:.6g}]")
    return float(value)


def find_root(func: Callable[[float], float], a: float, b: float, xtol: float = None) -> float:
    """在有号变区间 [a, b] 上用 Brent 方法求根。"""
    xtol = config.ROOT_TOL if xtol is None else xtol
    fa, fb = func(a), func(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise NumericalError(f"区间 [{a}, {b}] 端点同号，无法求根")
    try:
        return float(optimize.brentq(func, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500))
    except (RuntimeError, ValueError) as e:
        raise NumericalError(f"求根失败: {e}") from e


def bisect_predicate(predicate: Callable[[float], bool], lo: float, hi: float, depth: int) -> Tuple[float, float]:
    """
    对单调谓词二分：要求 predicate(lo) 为真、predicate(hi) 为假。
    返回最终的 (lo, hi) 区间，lo 始终满足谓词。
    """
    for _ in range(depth):
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def sign_changes(grid: np.ndarray, values: np.ndarray) -> List[Tuple[float, float]]:
    """返回相邻网格点严格变号的区间。"""
    idx = np.nonzero(values[:-1] * values[1:] < 0)[0]
    return [(float(grid[i]), float(grid[i + 1])) for i in idx]


def tangency_candidates(func: Callable[[float], float], grid: np.ndarray, values: np.ndarray, tol: float) -> List[float]:
    """
    寻找 φ 触零但不变号的点：在 |values| 的局部极小处做有界一维最小化，
    只保留 |func| ≤ tol 的点。
    """
    found = []
    absval = np.abs(values)
    scale = max(float(np.max(absval)), 1.0)
    for i in range(1, len(grid) - 1):
        if not (absval[i] <= absval[i - 1] and absval[i] <= absval[i + 1]):
            continue
        if values[i - 1] * values[i + 1] < 0 or values[i] == 0.0:
            continue
        # 只有在局部极小足够接近零时才值得精化
        if absval[i] > 1e-3 * scale:
            continue
        res = optimize.minimize_scalar(
            lambda x: abs(func(x)), bounds=(float(grid[i - 1]), float(grid[i + 1])),
            method="bounded", options={"xatol": config.ROOT_TOL},
        )
        if res.success and abs(func(res.x)) <= tol:
            found.append(float(res.x))
    return found


def merge_sorted(points: Iterable[float], tol: float) -> List[float]:
    """对排序后的点去重，间距不超过 tol 的点只保留第一个。"""
    merged: List[float] = []
    for p in sorted(points):
        if not merged or p - merged[-1] > tol:
            merged.append(p)
    return merged


def ordered_map(func: Callable, items: Sequence, threads: int) -> list:
    """按输入顺序返回结果的线程池映射；threads ≤ 1 时串行执行。"""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(func, items))


def central_difference(func: Callable[[float], float], x: float, step: float = None, lo: float = 0.0, hi: float = 1.0) -> float:
    """中心差分；靠近端点时退化为单侧差分。"""
    h = config.FD_STEP if step is None else step
    if x - h < lo:
        return (func(x + h) - func(x)) / h
    if x + h > hi:
        return (func(x) - func(x - h)) / h
    return (func(x + h) - func(x - h)) / (2 * h)
