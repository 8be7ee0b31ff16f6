"""YAML run configuration with strict key checking."""
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .mpc import MpcWeights
from .recipe import PhysiologyBounds
from .simulator import DeviceClass, GreenhouseConfig
from .tariff import TariffConfig

MODES = ("oracle", "persistence", "transformer")


class ConfigError(ValueError):
    pass


@dataclass
class Paths:
    weather_csv: str = None
    market_csv: str = None
    train_weather_csv: str = None
    train_market_csv: str = None
    recipe_csv: str = None
    checkpoints: str = "checkpoints"
    out_dir: str = "out"


@dataclass
class SyntheticBlock:
    year: int = 2024
    train_year: int = 2023
    days: int = None
    train_days: int = None


@dataclass
class ForecasterBlock:
    decay: float = 0.15
    q_low: float = 10.0
    q_high: float = 80.0
    fence_k: float = 1.5
    price_layers: int = 4
    solar_layers: int = 3
    heads: int = 4
    model_dim: int = 64
    feedforward_dim: int = 256
    dropout: float = 0.1
    lr: float = 1e-3
    weight_decay: float = 1e-4
    batch_size: int = 64
    max_epochs: int = 100
    patience: int = 10


@dataclass
class PlotBlock:
    sample_days: list = field(default_factory=lambda: ["09-15", "12-15"])
    profile_weeks: list = field(default_factory=lambda: ["09-01", "12-01"])


@dataclass
class RunConfig:
    seed: int = 2024
    mode: str = "oracle"
    paths: Paths = field(default_factory=Paths)
    synthetic: SyntheticBlock = field(default_factory=SyntheticBlock)
    greenhouse: GreenhouseConfig = field(default_factory=GreenhouseConfig)
    tariff: TariffConfig = field(default_factory=TariffConfig)
    bounds: PhysiologyBounds = field(default_factory=PhysiologyBounds)
    weights: MpcWeights = field(default_factory=MpcWeights)
    forecaster: ForecasterBlock = field(default_factory=ForecasterBlock)
    plots: PlotBlock = field(default_factory=PlotBlock)
    base_dir: str = "."

    def resolve(self, p):
        if p is None:
            return None
        path = Path(p)
        return path if path.is_absolute() else Path(self.base_dir) / path

    def to_dict(self):
        d = {}
        for f in fields(self):
            if f.name == "base_dir":
                continue
            v = getattr(self, f.name)
            d[f.name] = asdict(v) if hasattr(v, "__dataclass_fields__") else v
        gh = d["greenhouse"]
        gh["device_inventory"] = [list(x.values()) if isinstance(x, dict) else list(x)
                                  for x in gh["device_inventory"]]
        return d

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()


def _block(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{name}: unknown keys {unknown}")
    kw = dict(data)
    for k, v in kw.items():
        if isinstance(v, list) and k not in ("sample_days", "profile_weeks", "device_inventory",
                                             "icra_rate"):
            kw[k] = tuple(v)
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _greenhouse(data):
    if data and "device_inventory" in data:
        data = dict(data)
        inv = []
        for item in data["device_inventory"]:
            if isinstance(item, dict):
                inv.append(DeviceClass(item["name"], int(item["count"]), float(item["rated_kw"])))
            else:
                name, count, kw = item
                inv.append(DeviceClass(name, int(count), float(kw)))
        data["device_inventory"] = tuple(inv)
    return _block(GreenhouseConfig, data, "greenhouse")


def config_from_dict(data, base_dir="."):
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    known = {f.name for f in fields(RunConfig)} - {"base_dir"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown top-level keys {unknown}")
    mode = data.get("mode", "oracle")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    try:
        seed = int(data.get("seed", 2024))
    except (TypeError, ValueError):
        raise ConfigError("seed must be an integer") from None
    return RunConfig(
        seed=seed, mode=mode,
        paths=_block(Paths, data.get("paths"), "paths"),
        synthetic=_block(SyntheticBlock, data.get("synthetic"), "synthetic"),
        greenhouse=_greenhouse(data.get("greenhouse")),
        tariff=_block(TariffConfig, data.get("tariff"), "tariff"),
        bounds=_block(PhysiologyBounds, data.get("bounds"), "bounds"),
        weights=_block(MpcWeights, data.get("weights"), "weights"),
        forecaster=_block(ForecasterBlock, data.get("forecaster"), "forecaster"),
        plots=_block(PlotBlock, data.get("plots"), "plots"),
        base_dir=str(base_dir),
    )


def validate_paths(cfg):
    """Every configured input file must exist."""
    for key in ("weather_csv", "market_csv", "train_weather_csv", "train_market_csv",
                "recipe_csv"):
        p = getattr(cfg.paths, key)
        if p is not None and not cfg.resolve(p).is_file():
            raise ConfigError(f"paths.{key}: {cfg.resolve(p)} does not exist")


def load_config(path=None):
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = config_from_dict(data, base_dir=path.parent)
    validate_paths(cfg)
    return cfg
