# config.py
import hashlib
import json
import os
from dataclasses import dataclass
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from src.utils.logger_config import logger

load_dotenv() # 加载 .env 文件

# --- 核心路径定义 ---
BASE_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
CONFIG_DIR = os.path.join(BASE_DIR, "config")
FIG1_CONFIG_FILE = os.path.join(CONFIG_DIR, "fig1.json")
DEFAULT_OUTPUT_DIR = os.getenv("CONTESTLAB_OUTPUT_DIR", "outputs")

TOOL_VERSION = "1.0.0"

# --- 运行默认值（可被环境变量覆盖） ---
# 随机种子的回退值；命令行未给出 --seed 时使用
DEFAULT_SEED = int(os.getenv("CONTESTLAB_SEED", 20240601))
# φ 符号扫描的网格点数
SCAN_GRID_SIZE = int(os.getenv("CONTESTLAB_SCAN_GRID", 2048))
# 前沿曲线的均匀 s 网格点数
FRONTIER_GRID_SIZE = int(os.getenv("CONTESTLAB_FRONTIER_GRID", 4096))
# 线程数，0 表示自动（os.cpu_count()）
DEFAULT_THREADS = int(os.getenv("CONTESTLAB_THREADS", 0))

# --- 数值容差 ---
ROOT_TOL = 1e-10               # 根在 s 方向上的精度
CLASSIFY_TOL = 1e-9            # 均衡分类时 φ 的容差
QUAD_ABS_TOL = 1e-9            # 自适应积分绝对容差
QUAD_MAX_EVALS = 1_000_000     # 积分函数求值上限
REFINE_ETA_JUMP = 1e-3         # 前沿相邻样本 |Δη| 超过该值时加密
MAX_REFINE_ROUNDS = 8
MERGE_TOL = 1e-8               # 区间端点合并容差
SYNTH_BISECT_DEPTH = 60        # 机制合成的二分深度
SYNTH_TOL = 1e-9               # 机制合成后 |φ| 的容差
FD_STEP = 1e-6                 # 有限差分步长
ELASTICITY_PROBE = 1e-4        # ε(s) 在 s→0 处的右极限探针
QUANTILE_TOL = 1e-12           # 数值分位数的二分精度
MEAN_CHECK_TOL = 1e-8          # 分布均值自检容差
ENUMERATION_MAX_N = 16         # 枚举对手行动组合的人数上限
SIM_BLOCK_SIZE = 10_000        # 蒙特卡洛每个随机流块的试验数

# --- 预设实例 ---
SWEEP_DEFAULT_POINTS = 33


class ConfigError(Exception):
    """实例配置不合法时抛出，携带字段路径和出错下标。"""

    def __init__(self, message: str, field: Optional[str] = None, indices: Optional[list] = None):
        self.message = message
        self.field = field
        self.indices = [int(i) for i in indices] if indices is not None else []
        prefix = f"{field}: " if field else ""
        suffix = f" (下标: {self.indices})" if self.indices else ""
        super().__init__(f"{prefix}{message}{suffix}")

    def with_prefix(self, prefix: str) -> "ConfigError":
        """在字段路径前加上父级字段名，便于定位嵌套错误。"""
        field = f"{prefix}.{self.field}" if self.field else prefix
        return ConfigError(self.message, field=field, indices=self.indices)


@dataclass(frozen=True)
class ContestSetup:
    """一次运行所需的全部已验证模型对象。"""
    config: Any
    F: Any
    c: Any
    source_path: Optional[str]
    config_hash: str


def resolve_threads(threads: Optional[int]) -> int:
    """0 或 None 表示自动使用全部 CPU。"""
    if threads is None:
        threads = DEFAULT_THREADS
    if threads < 0:
        raise ConfigError("线程数不能为负", field="threads")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def canonical_hash(raw: Dict) -> str:
    """对实例做规范化 JSON（排序键、紧凑分隔符）后取 SHA-256。"""
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _load_json_file(file_path: str) -> Dict:
    """读取 UTF-8 JSON 实例文件，错误转换为 ConfigError。"""
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError:
        logger.error(f"错误: 找不到配置文件 {file_path}")
        raise ConfigError(f"找不到配置文件 {file_path}", field="path")
    except json.JSONDecodeError as e:
        logger.error(f"错误: 无法解析JSON文件 {file_path}: {e}")
        raise ConfigError(f"无法解析JSON: {e}", field="path")
    if not isinstance(data, dict):
        raise ConfigError("顶层必须是一个对象", field="$")
    return data


def _require(raw: Dict, key: str, kind: type, path: str):
    if key not in raw:
        raise ConfigError("缺少必填字段", field=f"{path}{key}")
    value = raw[key]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"应为整数，实际为 {value!r}", field=f"{path}{key}")
    elif kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"应为实数，实际为 {value!r}", field=f"{path}{key}")
        value = float(value)
    elif kind is dict and not isinstance(value, dict):
        raise ConfigError("应为对象", field=f"{path}{key}")
    elif kind is list and not isinstance(value, list):
        raise ConfigError("应为数组", field=f"{path}{key}")
    return value


def build_distribution(spec: Dict):
    """由 {"kind": ..., 参数} 构造类型分布。"""
    from src.model.distributions import PowerDistribution, TabulatedDistribution, UniformDistribution

    kind = spec.get("kind")
    try:
        if kind == "uniform":
            return UniformDistribution()
        if kind == "power":
            return PowerDistribution(_require(spec, "alpha", float, ""))
        if kind == "tabulated":
            return TabulatedDistribution(
                _require(spec, "x", list, ""),
                _require(spec, "cdf", list, ""),
                interpolation=spec.get("interpolation", "pchip"),
            )
    except ConfigError as e:
        raise e.with_prefix("F")
    raise ConfigError(f"未知的分布类型 {kind!r}", field="F.kind")


def build_cost(spec: Dict, distribution):
    """由 {"kind": ..., 参数} 构造成本函数；power 类型绑定到分布 F。"""
    from src.model.costs import AffineCost, LinearPowerCost, PowerCost, TabulatedCost

    kind = spec.get("kind")
    try:
        if kind == "affine":
            return AffineCost(_require(spec, "a", float, ""), _require(spec, "b", float, ""))
        if kind == "power":
            return PowerCost(_require(spec, "gamma", float, ""), _require(spec, "eps", float, ""), distribution)
        if kind == "linear_power":
            return LinearPowerCost(_require(spec, "gamma", float, ""), _require(spec, "exponent", float, ""))
        if kind == "tabulated":
            return TabulatedCost(
                _require(spec, "x", list, ""),
                _require(spec, "values", list, ""),
                interpolation=spec.get("interpolation", "pchip"),
            )
    except ConfigError as e:
        raise e.with_prefix("c")
    raise ConfigError(f"未知的成本类型 {kind!r}", field="c.kind")


def setup_from_dict(raw: Dict, source_path: Optional[str] = None) -> ContestSetup:
    """验证实例字典并构造模型对象，所有不变量在此处立即检查。"""
    from src.model.contest import ContestConfig

    n = _require(raw, "n", int, "")
    m = _require(raw, "m", int, "")
    lam = _require(raw, "lambda", float, "")
    relax = raw.get("relax_bounds", False)
    if not isinstance(relax, bool):
        raise ConfigError("应为布尔值", field="relax_bounds")
    contest = ContestConfig(n=n, m=m, lam=lam, relax_bounds=relax)
    F = build_distribution(_require(raw, "F", dict, ""))
    c = build_cost(_require(raw, "c", dict, ""), F)

    setup = ContestSetup(config=contest, F=F, c=c, source_path=source_path, config_hash=canonical_hash(raw))
    logger.debug(f"实例加载完成: n={n}, m={m}, λ={lam}, F={F.kind}, c={c.kind}, hash={setup.config_hash[:12]}")
    return setup


def load_config(path: str) -> ContestSetup:
    """从 JSON 文件加载并验证一个竞赛实例。"""
    raw = _load_json_file(path)
    return setup_from_dict(raw, source_path=path)


# --- 配置验证函数 ---
def validate_configuration():
    """验证运行默认值是否满足最低要求"""
    errors = []

    if SCAN_GRID_SIZE < 2:
        errors.append(f"扫描网格至少需要2个点 (当前: {SCAN_GRID_SIZE})")
    if FRONTIER_GRID_SIZE < 2:
        errors.append(f"前沿网格至少需要2个点 (当前: {FRONTIER_GRID_SIZE})")
    if DEFAULT_THREADS < 0:
        errors.append(f"CONTESTLAB_THREADS 不能为负 (当前: {DEFAULT_THREADS})")
    if not os.path.exists(CONFIG_DIR):
        errors.append(f"实例目录不存在: {CONFIG_DIR}")

    is_valid = len(errors) == 0
    return is_valid, errors
