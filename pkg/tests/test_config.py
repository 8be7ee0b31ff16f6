from importlib import resources

import pytest
import yaml

from greenmpc.config import ConfigError, RunConfig, config_from_dict, load_config


def test_defaults_file_matches_code_defaults():
    text = resources.files("greenmpc").joinpath("data/default.yaml").read_text()
    cfg = config_from_dict(yaml.safe_load(text))
    assert cfg.digest() == RunConfig().digest()


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown top-level"):
        config_from_dict({"sed": 1})
    with pytest.raises(ConfigError, match="bounds"):
        config_from_dict({"bounds": {"ppfd_minimum": 100}})


def test_bad_values_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"mode": "magic"})
    with pytest.raises(ConfigError):
        config_from_dict({"bounds": {"ppfd_min": 900}})
    with pytest.raises(ConfigError):
        config_from_dict({"weights": {"gamma": -1}})


def test_inventory_and_tariff_blocks():
    cfg = config_from_dict({
        "greenhouse": {"device_inventory": [["led", 10, 0.6], {"name": "heater", "count": 2,
                                                               "rated_kw": 3.3}]},
        "tariff": {"icra_rate": 0.02, "peak_demand_rate": 5.0},
    })
    assert cfg.greenhouse.device("led").count == 10
    assert cfg.greenhouse.device("heater").rated_kw == 3.3
    assert cfg.tariff.icra_for(7) == 0.02


def test_missing_paths(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")
    p = tmp_path / "c.yaml"
    p.write_text("paths: {market_csv: missing.csv}\n")
    with pytest.raises(ConfigError, match="market_csv"):
        load_config(p)


def test_relative_paths_resolve_against_config(tmp_path):
    (tmp_path / "w.csv").write_text("x")
    p = tmp_path / "c.yaml"
    p.write_text("paths: {weather_csv: w.csv}\n")
    cfg = load_config(p)
    assert cfg.resolve(cfg.paths.weather_csv) == tmp_path / "w.csv"


def test_digest_changes_with_seed():
    assert config_from_dict({"seed": 1}).digest() != config_from_dict({"seed": 2}).digest()
