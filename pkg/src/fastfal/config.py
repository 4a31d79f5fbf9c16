"""Experiment configuration: a line-oriented `key = value` text format.

Keys are dotted section paths (`al.budget_fraction = 0.05`). Blank lines
and `#` comments are ignored; unknown keys are errors, as are malformed
values. Exactly one data source must be configured: a FASTEMB1 file via
`data.path`, or the synthetic generator via the `data.synthetic.*` block.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .errors import ConfigError
from .trainer import STRATEGIES, TrainConfig
from .weaklabel import UNCERTAINTY_METRICS

PARTITION_MODES = ("iid", "dirichlet", "diversity")
AL_METHODS = ("fast", "random", "entropy", "coreset")


@dataclass
class SyntheticSpec:
    classes: int = 4
    per_class: int = 400
    dim: int = 16
    sigma: float = 0.15


@dataclass
class ExperimentConfig:
    data_path: str | None = None
    synthetic: SyntheticSpec | None = None
    test_fraction: float = 0.25

    partition_mode: str = "iid"
    partition_alpha: float = 0.1
    clients: int = 10

    al_method: str = "fast"
    budget_fraction: float = 0.05
    per_round_fraction: float = 0.05
    initial_fraction: float = 0.01
    k_nn: int = 5
    metric: str = "entropy"
    al_rounds: int = 1
    budget_includes_initial: bool = True
    share_initial_embeddings: bool = False

    eta: float = 0.01
    tau: int = 5
    batch: int = 64
    strategy: str = "fedavg"
    mu: float = 0.0
    fl_rounds: int = 100
    sample_weighted: bool = False
    warm_start: bool = True

    hidden: int = 0  # 0 = linear head
    seed: int = 0
    out_dir: str | None = None

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            eta=self.eta,
            tau=self.tau,
            batch=self.batch,
            strategy=self.strategy,
            mu=self.mu,
            rounds_t=self.fl_rounds,
            seed=self.seed,
            sample_weighted=self.sample_weighted,
        )

    def validate(self) -> None:
        if (self.data_path is None) == (self.synthetic is None):
            raise ConfigError("configure exactly one of data.path and data.synthetic.*")
        if self.data_path is not None and not os.path.exists(self.data_path):
            raise ConfigError(f"data.path does not resolve: {self.data_path}")
        for name in ("test_fraction", "budget_fraction", "per_round_fraction",
                     "initial_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if not 0.0 <= self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in [0, 1)")
        if self.initial_fraction <= 0.0:
            raise ConfigError("initial_fraction must be positive")
        if self.partition_mode not in PARTITION_MODES:
            raise ConfigError(f"unknown partition mode {self.partition_mode!r}")
        if self.partition_mode != "iid" and self.partition_alpha <= 0:
            raise ConfigError("partition alpha must be positive")
        if self.clients < 1:
            raise ConfigError("need at least one client")
        if self.al_method not in AL_METHODS:
            raise ConfigError(f"unknown AL method {self.al_method!r}")
        if self.metric not in UNCERTAINTY_METRICS:
            raise ConfigError(f"unknown uncertainty metric {self.metric!r}")
        if self.al_rounds < 1:
            raise ConfigError("need at least one AL round")
        if self.al_method == "fast" and self.al_rounds != 1:
            raise ConfigError("the two-pass method runs exactly one AL round")
        if self.k_nn < 1:
            raise ConfigError("k_nn must be at least 1")
        if self.hidden < 0:
            raise ConfigError("hidden size must be non-negative")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        self.train_config().validate()

    def model_dims(self, feature_dim: int, class_count: int) -> tuple[int, ...]:
        if self.hidden > 0:
            return (feature_dim, self.hidden, class_count)
        return (feature_dim, class_count)


# key -> (target attribute, parser)
def _to_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


_SYNTH_KEYS = {
    "data.synthetic.classes": ("classes", int),
    "data.synthetic.per_class": ("per_class", int),
    "data.synthetic.dim": ("dim", int),
    "data.synthetic.sigma": ("sigma", float),
}

_KEYS = {
    "data.path": ("data_path", str),
    "data.test_fraction": ("test_fraction", float),
    "partition.mode": ("partition_mode", str),
    "partition.alpha": ("partition_alpha", float),
    "partition.clients": ("clients", int),
    "al.method": ("al_method", str),
    "al.budget_fraction": ("budget_fraction", float),
    "al.per_round_fraction": ("per_round_fraction", float),
    "al.initial_fraction": ("initial_fraction", float),
    "al.k_nn": ("k_nn", int),
    "al.metric": ("metric", str),
    "al.rounds": ("al_rounds", int),
    "al.budget_includes_initial": ("budget_includes_initial", _to_bool),
    "al.share_initial_embeddings": ("share_initial_embeddings", _to_bool),
    "fl.eta": ("eta", float),
    "fl.tau": ("tau", int),
    "fl.batch": ("batch", int),
    "fl.strategy": ("strategy", str),
    "fl.mu": ("mu", float),
    "fl.rounds": ("fl_rounds", int),
    "fl.sample_weighted": ("sample_weighted", _to_bool),
    "fl.warm_start": ("warm_start", _to_bool),
    "model.hidden": ("hidden", int),
    "seed": ("seed", int),
    "output.dir": ("out_dir", str),
}


def parse_pairs(text: str) -> dict[str, str]:
    """Raw key -> value strings, rejecting malformed or duplicate lines."""
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def config_from_pairs(pairs: dict[str, str]) -> ExperimentConfig:
    cfg = ExperimentConfig()
    synth_pairs = {k: v for k, v in pairs.items() if k in _SYNTH_KEYS}
    if synth_pairs:
        spec = SyntheticSpec()
        for key, raw in synth_pairs.items():
            attr, parse = _SYNTH_KEYS[key]
            try:
                setattr(spec, attr, parse(raw))
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from exc
        cfg.synthetic = spec
    for key, raw in pairs.items():
        if key in _SYNTH_KEYS:
            continue
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        attr, parse = _KEYS[key]
        try:
            setattr(cfg, attr, parse(raw))
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from exc
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_pairs(parse_pairs(text))


def parse_config_text(text: str) -> ExperimentConfig:
    return config_from_pairs(parse_pairs(text))


def override(cfg_pairs: dict[str, str], key: str, value: str) -> dict[str, str]:
    """New raw-pair dict with one key replaced (sweep support)."""
    if key not in _KEYS and key not in _SYNTH_KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    out = dict(cfg_pairs)
    out[key] = value
    return out
