# scripts/verify_acceptance.py
"""
对照已知数值逐项核验求解器，打印汇总表。

用法:
    python scripts/verify_acceptance.py
    python scripts/verify_acceptance.py --quick        # 跳过蒙特卡洛项
    python scripts/verify_acceptance.py --out checks.csv
"""
import argparse
import os
import sys
from typing import Callable, List, Tuple

import numpy as np
import pandas as pd

# 将项目根目录添加到Python路径中
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, project_root)

from src.cli.contest_cli import FIG1_INSTANCE, FIG2_GAP, fig2_curve
from src.equilibrium.cutoff import find_equilibria, phi
from src.feasible.feasible_set import feasible_set_default, synthesize_and_verify
from src.model.contest import ContestConfig
from src.model.mechanisms import quota_family, standard_vector
from src.optimal.solver import solve_samples
from src.outcome.frontier import selection_efficiency, societal_cost
from src.simulate.monte_carlo import run
from src.statics.power_family import PowerFamily, s_max_single_prize, s_star_relaxed
from src.utils.config import setup_from_dict
from src.utils.logger_config import logger

Check = Tuple[str, float, float, float]


def fig1_checks() -> List[Check]:
    setup = setup_from_dict(FIG1_INSTANCE)
    config, F, c = setup.config, setup.F, setup.c
    v = standard_vector(config)
    feasible = feasible_set_default(config, F, c)
    (_, right0), (left1, _) = feasible.intervals
    roots = find_equilibria(v, config, F, c).values()
    return [
        ("fig1 φ(1, v̄)", float(phi(1.0, v, config, F, c)), 1.0 / 18.0, 1e-12),
        ("fig1 φ(0.7, v̄)", float(phi(0.7, v, config, F, c)), -0.0477, 5e-4),
        ("fig1 可行集右端点 1", right0, 0.47976448, 1e-7),
        ("fig1 可行集左端点 2", left1, 0.91809379, 1e-7),
        ("fig1 均衡个数", float(len(roots)), 3.0, 0.0),
    ]


def fig2_checks() -> List[Check]:
    C = np.unique(np.concatenate((np.linspace(0.0, 1.0, 4096), FIG2_GAP)))
    mask = ~((C > FIG2_GAP[0]) & (C < FIG2_GAP[1]))
    envelope = solve_samples(C, fig2_curve(C), mask, 1.0).envelope
    gap, tangent = envelope.bridges(min_width=0.01)
    return [
        ("fig2 Η′(0)", envelope.slope_at(0.0), 6.0, 1e-2),
        ("fig2 缺口桥斜率", gap["slope"], 1.7846, 1e-9),
        ("fig2 缺口桥截距", gap["intercept"], 0.14330635, 1e-6),
        ("fig2 切线桥左端", tangent["C_left"], 0.164229, 1e-3),
        ("fig2 切线桥右端", tangent["C_right"], 0.703326, 1e-3),
        ("fig2 切线桥斜率", tangent["slope"], 0.32752, 1e-4),
    ]


def power_family_checks() -> List[Check]:
    config = ContestConfig(2, 1, 1.0)
    return [
        ("幂族 s⋆(α=ε=γ=1)", s_star_relaxed(PowerFamily(1.0, 1.0, 1.0), config).value, 0.5, 1e-12),
        ("幂族 s_max(γ=2, ε=1)", s_max_single_prize(PowerFamily(1.0, 2.0, 1.0), config), 0.25, 1e-9),
        ("幂族 s_max(γ=2, ε=2)", s_max_single_prize(PowerFamily(1.0, 2.0, 2.0), config), 0.5, 1e-9),
        ("幂族 C(0.5)", PowerFamily(1.0, 1.0, 1.0).societal_cost(0.5), 0.125, 1e-12),
    ]


def quota_checks() -> List[Check]:
    setup = setup_from_dict({"n": 2, "m": 1, "lambda": 1.0, "F": {"kind": "uniform"},
                             "c": {"kind": "linear_power", "gamma": 0.5, "exponent": 1.0}})
    config, F, c = setup.config, setup.F, setup.c
    report = synthesize_and_verify(0.5, quota_family(config), config, F, c)
    return [
        ("配额 t(0.5)", report.t, 0.75, 1e-8),
        ("配额 均衡回代", report.equilibria[0].s, 0.5, 1e-7),
    ]


def simulation_checks(trials: int) -> List[Check]:
    setup = setup_from_dict({"n": 2, "m": 1, "lambda": 1.0, "F": {"kind": "uniform"},
                             "c": {"kind": "linear_power", "gamma": 1.0, "exponent": 1.0}})
    config, F, c = setup.config, setup.F, setup.c
    report = run(standard_vector(config), 0.5, config, F, c, trials=trials, seed=7)
    return [
        ("模拟 C", report.C_hat, societal_cost(0.5, F, c), 4 * report.C_se),
        ("模拟 η", report.eta_hat, selection_efficiency(0.5, config, F, c), 4 * report.eta_se),
        ("模拟 恰好 m 违例", float(report.exact_m_violations), 0.0, 0.0),
    ]


def collect(quick: bool, trials: int) -> pd.DataFrame:
    groups: List[Callable[[], List[Check]]] = [fig1_checks, fig2_checks, power_family_checks, quota_checks]
    if not quick:
        groups.append(lambda: simulation_checks(trials))
    rows = []
    for group in groups:
        for name, actual, expected, tol in group():
            rows.append({"check": name, "actual": actual, "expected": expected, "tol": tol,
                         "passed": bool(abs(actual - expected) <= tol)})
    return pd.DataFrame(rows)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="核验求解器的已知数值。",
                                     formatter_class=argparse.RawTextHelpFormatter)
    parser.add_argument("--quick", action="store_true", help="跳过蒙特卡洛核验项。")
    parser.add_argument("--trials", type=int, default=200_000, help="蒙特卡洛试验次数。")
    parser.add_argument("--out", help="把核验表写入 CSV。")
    args = parser.parse_args(argv)

    table = collect(args.quick, args.trials)
    print(table.to_string(index=False))
    if args.out:
        table.to_csv(args.out, index=False, float_format="%.17g")
    failed = table[~table["passed"]]
    if len(failed):
        logger.error(f"{len(failed)} 项核验未通过: {', '.join(failed['check'])}")
        return 1
    print(f"\n全部 {len(table)} 项核验通过。")
    return 0


if __name__ == "__main__":
    sys.exit(main())
