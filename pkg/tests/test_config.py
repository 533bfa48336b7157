import copy
import json
from pathlib import Path

import numpy as np
import pytest

from dipolelets import config as C
from dipolelets.errors import ConfigurationError

DEFAULT = Path(__file__).resolve().parents[1] / "configs" / "default.json"


def test_defaults_validate():
    full = C.resolve()
    assert full == C.resolve(copy.deepcopy(C.DEFAULTS))
    assert C.load(DEFAULT)["grid"]["shape"] == [32, 32, 32]


def test_partial_override_keeps_defaults():
    full = C.resolve({"solver": {"tv": {"lam": 0.1}}})
    assert full["solver"]["tv"]["lam"] == 0.1
    assert full["solver"]["tkd"] == C.DEFAULTS["solver"]["tkd"]


@pytest.mark.parametrize("cfg, name", [
    ({"grdi": {}}, "grdi"),
    ({"weights": {"flor": 0.1}}, "flor"),
    ({"bands": {"radial": {"J": 2, "scales": 3}}}, "scales"),
])
def test_unknown_keys_named(cfg, name):
    with pytest.raises(ConfigurationError, match=name):
        C.resolve(cfg)


@pytest.mark.parametrize("cfg", [
    {"grid": {"shape": [32, 32]}},
    {"weights": {"floor": 1.5}},
    {"solver": {"methods": ["magic"]}},
    {"seed": "zero"},
])
def test_bad_values(cfg):
    with pytest.raises(ConfigurationError):
        C.resolve(cfg)


def test_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigurationError):
        C.load(bad)
    with pytest.raises(ConfigurationError):
        C.load(tmp_path / "missing.json")


def test_hash_is_order_independent():
    a = C.resolve()
    b = json.loads(json.dumps(a, sort_keys=False))
    b = dict(reversed(list(b.items())))
    assert C.config_hash(a) == C.config_hash(b)
    a2 = copy.deepcopy(a)
    a2["seed"] = 1
    assert C.config_hash(a) != C.config_hash(a2)


def test_default_offsets_inside_roi(head32):
    for o in C.default_offsets((32, 32, 32)):
        assert head32.mask.data[tuple(int(c) for c in o.center)] == 1
        assert o.value == pytest.approx(np.pi)


def test_converters():
    cfg = C.resolve()
    spec = C.corruption_spec(cfg, (32, 32, 32))
    assert spec.noise_snr == 100.0 and len(spec.offsets) == 3
    assert C.radial_config(cfg).J == 3
    assert C.tv_config(cfg).lam == cfg["solver"]["tv"]["lam"]
    assert C.weight_config(cfg).floor == 0.1
