# test_config.py
import glob
import json
import os

import pytest

from src.model.costs import AffineCost, TabulatedCost
from src.model.distributions import PowerDistribution
from src.utils import config as settings
from src.utils.config import ConfigError, canonical_hash, load_config, resolve_threads, setup_from_dict


def _instance(**overrides):
    raw = {
        "n": 3, "m": 2, "lambda": 1.0,
        "F": {"kind": "power", "alpha": 4.0},
        "c": {"kind": "affine", "a": 0.5, "b": 1.0 / 9.0},
    }
    raw.update(overrides)
    return raw


def test_fig1_config_file_loads():
    setup = load_config(settings.FIG1_CONFIG_FILE)
    assert setup.config.n == 3
    assert setup.config.m == 2
    assert isinstance(setup.F, PowerDistribution) and setup.F.alpha == 4.0
    assert isinstance(setup.c, AffineCost)
    assert setup.c(0.0) == pytest.approx(1.0 / 9.0)
    assert len(setup.config_hash) == 64


@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(settings.CONFIG_DIR, "*.json"))))
def test_shipped_instances_validate(path):
    setup = load_config(path)
    assert setup.source_path == path
    assert 0 < setup.config.m < setup.config.n


@pytest.mark.parametrize("n, m", [(3, 3), (3, 4), (2, 0)])
def test_prize_count_must_be_below_population(n, m):
    with pytest.raises(ConfigError) as info:
        setup_from_dict(_instance(n=n, m=m))
    assert info.value.field == "m"


def test_decreasing_cost_table_reports_indices():
    raw = _instance(c={"kind": "tabulated", "x": [0.0, 0.5, 1.0], "values": [0.1, 0.3, 0.2]})
    with pytest.raises(ConfigError) as info:
        setup_from_dict(raw)
    assert info.value.field == "c.values"
    assert info.value.indices == [2]


def test_cdf_table_must_end_at_one():
    raw = _instance(F={"kind": "tabulated", "x": [0.0, 0.5, 1.0], "cdf": [0.0, 0.4, 0.9]})
    with pytest.raises(ConfigError) as info:
        setup_from_dict(raw)
    assert info.value.field == "F.cdf"
    assert info.value.indices == [2]


def test_grid_must_span_unit_interval():
    raw = _instance(c={"kind": "tabulated", "x": [0.0, 0.5, 0.9], "values": [0.1, 0.2, 0.3]})
    with pytest.raises(ConfigError) as info:
        setup_from_dict(raw)
    assert info.value.field == "c.x"


@pytest.mark.parametrize("missing", ["n", "m", "lambda", "F", "c"])
def test_missing_field(missing):
    raw = _instance()
    del raw[missing]
    with pytest.raises(ConfigError) as info:
        setup_from_dict(raw)
    assert info.value.field == missing


def test_unknown_kind():
    with pytest.raises(ConfigError) as info:
        setup_from_dict(_instance(F={"kind": "beta"}))
    assert info.value.field == "F.kind"


def test_wrong_types():
    with pytest.raises(ConfigError):
        setup_from_dict(_instance(n=3.5))
    with pytest.raises(ConfigError):
        setup_from_dict(_instance(n=True))
    with pytest.raises(ConfigError) as info:
        setup_from_dict(_instance(relax_bounds="yes"))
    assert info.value.field == "relax_bounds"


def test_linear_tabulated_cost_has_kinks():
    raw = _instance(c={"kind": "tabulated", "x": [0.0, 0.5, 1.0], "values": [0.1, 0.2, 0.6],
                       "interpolation": "linear"})
    setup = setup_from_dict(raw)
    assert isinstance(setup.c, TabulatedCost)
    assert setup.c.kinks == (0.5,)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(str(tmp_path / "nope.json"))
    assert info.value.field == "path"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    top = tmp_path / "list.json"
    top.write_text(json.dumps([1, 2]), encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(top))


def test_config_hash_ignores_key_order():
    a = _instance()
    b = dict(reversed(list(a.items())))
    assert canonical_hash(a) == canonical_hash(b)
    assert canonical_hash(a) != canonical_hash(_instance(n=4))


def test_resolve_threads():
    assert resolve_threads(0) >= 1
    assert resolve_threads(3) == 3
    with pytest.raises(ConfigError):
        resolve_threads(-1)


def test_error_prefix_keeps_indices():
    err = ConfigError("坏数据", field="values", indices=[1, 4])
    nested = err.with_prefix("c")
    assert nested.field == "c.values"
    assert nested.indices == [1, 4]
    assert "c.values" in str(nested)


def test_validate_configuration_defaults():
    is_valid, errors = settings.validate_configuration()
    assert is_valid, errors
