# conftest.py
import os
import tempfile

# 日志写到临时目录，避免污染工作区
os.environ.setdefault("CONTESTLAB_LOG_DIR", os.path.join(tempfile.gettempdir(), "contestlab-test-logs"))
os.environ.setdefault("CONTESTLAB_LOG_LEVEL", "WARNING")

import numpy as np
import pytest

from src.model.contest import ContestConfig
from src.model.costs import AffineCost, LinearPowerCost
from src.model.distributions import PowerDistribution, UniformDistribution
from src.statics.power_family import PowerFamily

FIG1_ROOTS = (0.47976448, 0.91809379)


@pytest.fixture
def fig1():
    """n=3, m=2, F(x)=x⁴, c(x)=x/2+1/9"""
    return ContestConfig(3, 2, 1.0), PowerDistribution(4.0), AffineCost(0.5, 1.0 / 9.0)


@pytest.fixture
def uniform_linear():
    """n=2, m=1, F 均匀，c(θ)=θ"""
    return ContestConfig(2, 1, 1.0), UniformDistribution(), LinearPowerCost(1.0, 1.0)


@pytest.fixture
def uniform_half():
    """n=2, m=1, F 均匀，c(θ)=θ/2"""
    return ContestConfig(2, 1, 1.0), UniformDistribution(), LinearPowerCost(0.5, 1.0)


@pytest.fixture
def power_unit():
    """α=ε=γ=1，n=2，m=1"""
    family = PowerFamily(1.0, 1.0, 1.0)
    return family, ContestConfig(2, 1, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def fig2_samples(points: int = 4096):
    """Η(C)=16C⁵−55C⁴+63C³−30C²+6C，C∈(0.05,0.15) 不可行。"""
    C = np.unique(np.concatenate((np.linspace(0.0, 1.0, points), [0.05, 0.15])))
    eta = np.polyval([16.0, -55.0, 63.0, -30.0, 6.0, 0.0], C)
    mask = ~((C > 0.05) & (C < 0.15))
    return C, eta, mask
