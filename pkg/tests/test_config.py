import numpy as np
import pytest

from fbm_lab.config import SCHEMA, build_config, flatten, load_config
from fbm_lab.errors import ConfigError
from fbm_lab.sde import DriftKind


def test_defaults():
    cfg = build_config({})
    assert set(cfg.values) == set(SCHEMA)
    assert cfg.hurst.h == 0.5
    assert cfg.dim == 1
    np.testing.assert_array_equal(cfg.sde.sigma, [[1.0]])


def test_tables_and_dotted_keys_agree(tmp_path):
    a = tmp_path / "a.toml"
    a.write_text('hurst = 0.3\n[drift]\nkind = "perturbed_linear"\nalpha0 = 2.0\neps = 0.5\n')
    b = tmp_path / "b.toml"
    b.write_text('hurst = 0.3\ndrift.kind = "perturbed_linear"\ndrift.alpha0 = 2.0\ndrift.eps = 0.5\n')
    ca, cb = load_config(a), load_config(b)
    assert ca.values == cb.values
    assert ca.sde.drift.kind is DriftKind.PERTURBED_LINEAR
    assert ca.sde.drift.alpha == 1.5


def test_flatten():
    assert flatten({"a": {"b": 1, "c": {"d": 2}}, "e": 3}) == {"a.b": 1, "a.c.d": 2, "e": 3}


@pytest.mark.parametrize(
    "raw",
    [
        {"unknown": 1},
        {"hurst": 1.0},
        {"hurst": "x"},
        {"replicas": 0},
        {"seed": -1},
        {"dt": 0.0},
        {"delta": 0.3, "dt": 0.25},
        {"burn_in": 0.1, "dt": 0.25},
        {"t_list": [0.5]},
        {"r_list": [-1.0]},
        {"sampler": "spectral"},
        {"r_units": "sd"},
        {"kernel": {"family": "riemann"}},
        {"drift": {"kind": "cubic"}},
        {"drift": {"kind": "perturbed_linear", "alpha0": 1.0, "eps": 2.0}},
        {"sde": {"sigma": [[1.0, 0.0], [0.0, 1.0]]}},
        {"f": {"kind": "tanh"}},
        {"f": {"lipschitz": 2.0}},
        {"envelope": {"confidence": 1.0}},
        {"replicas": True},
        {"n_list": [1.5]},
    ],
)
def test_rejects(raw):
    with pytest.raises(ConfigError):
        build_config(raw)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("hurst = = 1")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_replace_keeps_other_values():
    cfg = build_config({"hurst": 0.3, "drift": {"matrix": [[2.0]]}})
    new = cfg.replace(seed=7, drift__matrix=[[3.0]])
    assert new.seed == 7 and new.hurst.h == 0.3
    assert new.sde.drift.lip == 3.0
    assert cfg.seed == 42


def test_f_acts_on_first_coordinate():
    cfg = build_config({"f": {"kind": "clipped_abs", "clip": 0.5}})
    y = np.array([[-2.0, 9.0], [0.25, 9.0]])
    np.testing.assert_array_equal(cfg.f_spec(y), [0.5, 0.25])
