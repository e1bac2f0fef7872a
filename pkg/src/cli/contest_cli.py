# contest_cli.py
"""
contestlab 命令行入口：加载实例、分发子命令、写出 JSON/CSV 产物与运行清单。

退出码：0 成功；1 输入/验证错误；2 数值失败。
"""

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from src.equilibrium.cutoff import find_equilibria, phi
from src.feasible.feasible_set import (InfeasibleTargetError, feasible_set, feasible_set_default,
                                       quota_parameter, single_prize_feasible, synthesize_and_verify)
from src.model.mechanisms import (MechanismError, family_by_name, mechanism_from_spec, reversed_vector,
                                  standard_vector)
from src.optimal.solver import solve, solve_samples
from src.outcome.frontier import UndefinedDerivativeError, frontier
from src.simulate.lottery import LotteryError
from src.simulate.monte_carlo import deviation_audit, run
from src.statics.power_family import PowerFamily, default_grid, sweep
from src.model.contest import ContestConfig
from src.utils import config as settings
from src.utils.config import ConfigError, canonical_hash, load_config, setup_from_dict
from src.utils.logger_config import log_error, log_event, logger
from src.utils.numerics import NumericalError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

FIG1_INSTANCE = {
    "n": 3, "m": 2, "lambda": 1.0,
    "F": {"kind": "power", "alpha": 4.0},
    "c": {"kind": "affine", "a": 0.5, "b": 1.0 / 9.0},
}

FIG2_GAP = (0.05, 0.15)
FIG2_LAMBDAS = (6.0, 1.7846, 0.32752, 0.1)


def fig2_curve(C):
    """Η(C) = 16C⁵ − 55C⁴ + 63C³ − 30C² + 6C"""
    return np.polyval([16.0, -55.0, 63.0, -30.0, 6.0, 0.0], C)


class UsageError(Exception):
    """命令行参数错误。"""
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: Optional[int]
    version: str = settings.TOOL_VERSION
    outputs: List[str] = field(default_factory=list)
    flags: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {"command": self.command, "config_hash": self.config_hash, "seed": self.seed,
                "version": self.version, "outputs": list(self.outputs), "flags": self.flags}


# --- 产物序列化 ---
def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def _encode(obj, level: int) -> str:
    pad = "  " * (level + 1)
    end = "  " * level
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k, ensure_ascii=False)}: {_encode(v, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(obj, ensure_ascii=False)


def format_json(payload) -> str:
    """确定性的 JSON 文本：键按插入顺序，浮点数固定 17 位有效数字。"""
    return _encode(_plain(payload), 0) + "\n"


def write_json(payload, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_json(payload))
    return path


def write_csv(frame: pd.DataFrame, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n", encoding="utf-8")
    return path


def _emit(payload, args, manifest: RunManifest):
    """有 --out 时写文件，否则写到标准输出。"""
    target = getattr(args, "out", None)
    if target:
        manifest.outputs.append(write_json(payload, target))
    else:
        sys.stdout.write(format_json(payload))


# --- 参数解析辅助 ---
def _setup(args):
    if args.config:
        return load_config(args.config)
    raise ConfigError("需要 --config 指定实例文件", field="config")


def _vector(args, config, default: str = "standard"):
    if getattr(args, "v", None):
        return mechanism_from_spec(f"custom:{args.v}", config)
    return mechanism_from_spec(getattr(args, "mechanism", None) or default, config)


def _seed(args) -> int:
    return settings.DEFAULT_SEED if args.seed is None else args.seed


def _global_flags(args) -> Dict:
    return {"threads": args.threads, "scan_grid": args.scan_grid, "frontier_grid": args.frontier_grid,
            "seed": args.seed}


def _in_out_dir(args, filename: str) -> str:
    return os.path.join(args.out_dir or settings.DEFAULT_OUTPUT_DIR, filename)


# --- 子命令 ---
def cmd_phi(args) -> RunManifest:
    setup = _setup(args)
    v = _vector(args, setup.config)
    manifest = RunManifest("phi", setup.config_hash, None)
    if args.grid:
        s = np.linspace(0.0, 1.0, args.grid)
        frame = pd.DataFrame({"s": s, "phi": phi(s, v, setup.config, setup.F, setup.c)})
        if args.out:
            manifest.outputs.append(write_csv(frame, args.out))
        else:
            sys.stdout.write(frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"))
        return manifest
    if args.s is None:
        raise UsageError("phi 需要 --s 或 --grid")
    value = phi(args.s, v, setup.config, setup.F, setup.c)
    _emit({"s": args.s, "v": v.to_list(), "phi": value}, args, manifest)
    return manifest


def cmd_equilibria(args) -> RunManifest:
    setup = _setup(args)
    v = _vector(args, setup.config)
    result = find_equilibria(v, setup.config, setup.F, setup.c, args.scan_grid)
    manifest = RunManifest("equilibria", setup.config_hash, None)
    _emit({"v": v.to_list(), **result.to_dict()}, args, manifest)
    return manifest


def cmd_feasible(args) -> RunManifest:
    setup = _setup(args)
    config, F, c = setup.config, setup.F, setup.c
    if args.single_prize:
        result = single_prize_feasible(config, F, c)
    elif args.vmin or args.vmax:
        v_min = mechanism_from_spec(args.vmin, config) if args.vmin else reversed_vector(config)
        v_max = mechanism_from_spec(args.vmax, config) if args.vmax else standard_vector(config)
        result = feasible_set(v_min, v_max, config, F, c, args.scan_grid, args.threads)
    else:
        result = feasible_set_default(config, F, c, args.scan_grid)
    manifest = RunManifest("feasible", setup.config_hash, None)
    _emit(result.to_dict(), args, manifest)
    return manifest


def cmd_curve(args) -> RunManifest:
    setup = _setup(args)
    curve = frontier(setup.config, setup.F, setup.c, args.frontier_grid, args.threads)
    manifest = RunManifest("curve", setup.config_hash, None)
    frame = curve.to_frame()[["s", "C", "eta", "dEta_dC"]]
    if args.out:
        manifest.outputs.append(write_csv(frame, args.out))
    else:
        sys.stdout.write(frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"))
    return manifest


def cmd_optimize(args) -> RunManifest:
    setup = _setup(args)
    config = setup.config if args.lam is None else setup.config.with_lam(args.lam)
    family = family_by_name(args.family, config) if args.family else None
    solution = solve(config, setup.F, setup.c, lam=config.lam, family=family,
                     frontier_grid=args.frontier_grid, scan_grid=args.scan_grid, threads=args.threads)
    manifest = RunManifest("optimize", setup.config_hash, None)
    _emit(solution.to_dict(), args, manifest)
    return manifest


def cmd_mechanism(args) -> RunManifest:
    setup = _setup(args)
    config, F, c = setup.config, setup.F, setup.c
    family = family_by_name(args.family, config)
    feasible = feasible_set(family(0.0), family(1.0), config, F, c, args.scan_grid, args.threads)
    report = synthesize_and_verify(args.target_s, family, config, F, c, feasible, args.scan_grid)
    payload = report.to_dict()
    if args.family == "quota" and 0.0 < args.target_s < 1.0:
        payload["t_closed_form"] = quota_parameter(args.target_s, config, F, c)
    manifest = RunManifest("mechanism", setup.config_hash, None)
    _emit(payload, args, manifest)
    return manifest


def cmd_simulate(args) -> RunManifest:
    setup = _setup(args)
    v = _vector(args, setup.config)
    seed = _seed(args)
    report = run(v, args.s, setup.config, setup.F, setup.c, args.trials, seed, args.threads)
    manifest = RunManifest("simulate", setup.config_hash, seed)
    payload = {"v": v.to_list(), **report.to_dict()}
    if args.audit:
        audit = deviation_audit(v, args.s, setup.config, setup.F, setup.c, args.trials, seed)
        manifest.outputs.append(write_csv(audit.table, args.audit))
        payload["audit"] = audit.to_dict()
    _emit(payload, args, manifest)
    return manifest


def _parse_family(text: str) -> PowerFamily:
    values = {"alpha": 1.0, "gamma": 1.0, "eps": 1.0}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, raw = part.partition("=")
        if not sep or key not in values:
            raise UsageError(f"无法解析 --family 片段 {part!r}（格式: alpha=…,gamma=…,eps=…）")
        try:
            values[key] = float(raw)
        except ValueError:
            raise UsageError(f"--family 中 {key} 的值 {raw!r} 不是数字")
    return PowerFamily(**values)


def _parse_over(text: str):
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise UsageError(f"--over 格式应为 参数:下限:上限[:点数]，实际为 {text!r}")
    try:
        lo, hi = float(parts[1]), float(parts[2])
        points = int(parts[3]) if len(parts) == 4 else settings.SWEEP_DEFAULT_POINTS
    except ValueError:
        raise UsageError(f"--over 中的数值无法解析: {text!r}")
    return parts[0], default_grid(parts[0], lo, hi, points)


def cmd_sweep(args) -> RunManifest:
    family = _parse_family(args.family)
    config = ContestConfig(args.n, args.m, args.lam, args.relax_bounds)
    which, grid = _parse_over(args.over)
    result = sweep(family, config, which, grid, args.threads)
    raw = {"family": family.to_dict(), "contest": config.to_dict(), "over": args.over}
    manifest = RunManifest("sweep", canonical_hash(raw), None)
    if args.out:
        manifest.outputs.append(write_csv(result.table, args.out))
        manifest.outputs.append(write_json(result.to_dict(), os.path.splitext(args.out)[0] + ".json"))
    else:
        sys.stdout.write(result.table.to_csv(index=False, float_format="%.17g", lineterminator="\n"))
    return manifest


def cmd_reproduce_fig1(args) -> RunManifest:
    setup = load_config(args.config) if args.config else setup_from_dict(FIG1_INSTANCE)
    config, F, c = setup.config, setup.F, setup.c
    v_hi, v_lo = standard_vector(config), reversed_vector(config)
    s = np.linspace(0.0, 1.0, 1001)
    frame = pd.DataFrame({"s": s, "phi_standard": phi(s, v_hi, config, F, c),
                          "phi_reversed": phi(s, v_lo, config, F, c)})
    feasible = feasible_set(v_lo, v_hi, config, F, c, args.scan_grid, args.threads)
    equilibria = find_equilibria(v_hi, config, F, c, args.scan_grid)
    manifest = RunManifest("reproduce-fig1", setup.config_hash, None)
    manifest.outputs.append(write_csv(frame, _in_out_dir(args, "fig1_phi.csv")))
    manifest.outputs.append(write_json({**feasible.to_dict(), **equilibria.to_dict()},
                                       _in_out_dir(args, "fig1.json")))
    return manifest


def cmd_reproduce_fig2(args) -> RunManifest:
    grid = args.frontier_grid or settings.FRONTIER_GRID_SIZE
    C = np.unique(np.concatenate((np.linspace(0.0, 1.0, grid), FIG2_GAP)))
    eta = fig2_curve(C)
    mask = ~((C > FIG2_GAP[0]) & (C < FIG2_GAP[1]))
    solutions = {lam: solve_samples(C, eta, mask, lam) for lam in FIG2_LAMBDAS}
    envelope = solutions[FIG2_LAMBDAS[0]].envelope
    frame = pd.DataFrame({"C": C, "eta": eta, "eta0": np.where(mask, eta, 0.0), "envelope": envelope.value(C)})
    payload = {
        **envelope.to_dict(),
        "bridges": envelope.bridges(min_width=10.0 / (grid - 1)),
        "inverse_derivative": [{"lambda": lam, "C_star": sol.C_star} for lam, sol in solutions.items()],
    }
    raw = {"curve": "16C^5-55C^4+63C^3-30C^2+6C", "gap": list(FIG2_GAP), "grid": grid}
    manifest = RunManifest("reproduce-fig2", canonical_hash(raw), None)
    manifest.outputs.append(write_csv(frame, _in_out_dir(args, "fig2_envelope.csv")))
    manifest.outputs.append(write_json(payload, _in_out_dir(args, "fig2.json")))
    return manifest


COMMANDS = {
    "phi": cmd_phi,
    "equilibria": cmd_equilibria,
    "feasible": cmd_feasible,
    "curve": cmd_curve,
    "optimize": cmd_optimize,
    "mechanism": cmd_mechanism,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "reproduce-fig1": cmd_reproduce_fig1,
    "reproduce-fig2": cmd_reproduce_fig2,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="工作线程数，0 表示自动")
    common.add_argument("--scan-grid", type=int, default=None, help=f"φ 扫描网格点数（默认 {settings.SCAN_GRID_SIZE}）")
    common.add_argument("--frontier-grid", type=int, default=None,
                        help=f"前沿网格点数（默认 {settings.FRONTIER_GRID_SIZE}）")
    common.add_argument("--seed", type=int, default=None, help="随机种子（默认读取 CONTESTLAB_SEED）")
    common.add_argument("--out-dir", default=None, help="产物目录（同时写出 manifest.json）")

    parser = _Parser(prog="contestlab", description="选拔性竞赛设计的求解器与模拟器")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        return p

    p = add("phi", "计算 φ(s, v)")
    p.add_argument("--config", required=True)
    p.add_argument("--v", help="逗号分隔的分配向量")
    p.add_argument("--mechanism", help="standard|reversed|random|relaxed|quota:t|blind:t|custom:v1,…")
    p.add_argument("--s", type=float)
    p.add_argument("--grid", type=int, help="在 [0,1] 的均匀网格上输出 CSV")
    p.add_argument("--out")

    p = add("equilibria", "列出给定机制的全部对称均衡截断")
    p.add_argument("--config", required=True)
    p.add_argument("--v")
    p.add_argument("--mechanism", default="standard")
    p.add_argument("--out")

    p = add("feasible", "计算可行截断集合")
    p.add_argument("--config", required=True)
    p.add_argument("--vmin")
    p.add_argument("--vmax")
    p.add_argument("--single-prize", action="store_true", help="使用单奖品闭式")
    p.add_argument("--out")

    p = add("curve", "采样成本-效率前沿，输出 s,C,eta,dEta_dC")
    p.add_argument("--config", required=True)
    p.add_argument("--out")

    p = add("optimize", "求解 max η − λC")
    p.add_argument("--config", required=True)
    p.add_argument("--family", choices=["quota", "blind"])
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--out")

    p = add("mechanism", "在机制族上合成目标截断")
    p.add_argument("--config", required=True)
    p.add_argument("--family", choices=["quota", "blind"], required=True)
    p.add_argument("--target-s", type=float, required=True)
    p.add_argument("--out")

    p = add("simulate", "蒙特卡洛模拟")
    p.add_argument("--config", required=True)
    p.add_argument("--v")
    p.add_argument("--mechanism", default="standard")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--audit", help="偏离审计表的 CSV 路径")
    p.add_argument("--out")

    p = add("sweep", "幂函数族比较静态扫描")
    p.add_argument("--family", required=True, help="alpha=…,gamma=…,eps=…")
    p.add_argument("--over", required=True, help="参数:下限:上限[:点数]，参数为 alpha|gamma|eps|lambda|n|m")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--relax-bounds", action="store_true")
    p.add_argument("--out")

    p = add("reproduce-fig1", "复现 n=3, m=2, F=x⁴, c=x/2+1/9 的 φ 曲线与可行集")
    p.add_argument("--config")

    add("reproduce-fig2", "复现给定五次多项式前沿的凹包与桥接线段")
    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        log_error(f"参数错误: {e}", {"argv": list(argv) if argv is not None else sys.argv[1:]})
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    try:
        manifest = COMMANDS[args.command](args)
    except (UsageError, ConfigError, MechanismError, InfeasibleTargetError, LotteryError,
            UndefinedDerivativeError, ValueError) as e:
        log_error(str(e), {"command": args.command})
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as e:
        log_error(f"数值失败: {e}", {"command": args.command})
        print(f"数值失败: {e}", file=sys.stderr)
        return EXIT_NUMERICAL

    if manifest.seed is None and args.command == "simulate":
        manifest.seed = _seed(args)
    manifest.flags = _global_flags(args)
    if args.out_dir:
        write_json(manifest.to_dict(), os.path.join(args.out_dir, "manifest.json"))
    log_event("RUN_MANIFEST", manifest.to_dict())
    logger.info(f"命令 {args.command} 完成，产物: {manifest.outputs or ['stdout']}")
    return EXIT_OK


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
