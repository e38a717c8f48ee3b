"""Flat TOML run configuration shared by the CLI subcommands.

Every key is top level; ``seed`` is the single root seed for model init,
shuffling and dropout.  Unknown keys are rejected.
"""

import hashlib
import json
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from teanet.errors import ConfigError
from teanet.evaluation import EvalConfig
from teanet.model import TeanetConfig
from teanet.training import TrainConfig

MODEL_KEYS = ("tea_layers", "variant", "dropout", "seed", "width_divisor", "bn_momentum",
              "bn_eps", "schedule")
TRAIN_KEYS = ("epochs", "batch_size", "learning_rate", "decay", "epsilon", "patience")
EVAL_KEYS = ("augment", "f1_class", "aggregate", "threshold")
OTHER_KEYS = ("window_s",)


@dataclass
class RunConfig:
    model: TeanetConfig = field(default_factory=TeanetConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    window_s: float = 30.0

    @property
    def seed(self):
        return self.model.seed

    def to_dict(self):
        d = self.model.to_dict()
        t = self.train.to_dict()
        t.pop("seed")
        d.update(t)
        d.update({k: getattr(self.eval, k) for k in EVAL_KEYS})
        d["window_s"] = self.window_s
        return d

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:12]


def config_from_dict(data):
    unknown = set(data) - set(MODEL_KEYS + TRAIN_KEYS + EVAL_KEYS + OTHER_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        model = TeanetConfig.from_dict({k: data[k] for k in MODEL_KEYS if k in data})
        train = TrainConfig(seed=model.seed, **{k: data[k] for k in TRAIN_KEYS if k in data})
        ev = EvalConfig(**{k: data[k] for k in EVAL_KEYS if k in data})
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    window = data.get("window_s", 30.0)
    if not isinstance(window, (int, float)) or window <= 0:
        raise ConfigError(f"window_s must be positive, got {window!r}")
    return RunConfig(model, train, ev, float(window))


def load_config(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)
