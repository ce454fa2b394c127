"""Run configuration: one JSON document with a section per module."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources

from splitshort.errors import ConfigError
from splitshort.evaluation import SINGLE_ITEM_CRITERIA, CVConfig
from splitshort.features import CATALOG_VERSION
from splitshort.formats import dumps_json, load_json, loads_json
from splitshort.generator import GeneratorConfig
from splitshort.models.logitboost import DEFAULT_SHRINKAGE
from splitshort.optimizer import OptimizerConfig
from splitshort.router import RouterConfig

CONFIG_FORMAT = "splitshort-config"
CONFIG_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    shrinkage: float = DEFAULT_SHRINKAGE
    single_item_criterion: str = "one_line_qty_one"
    binned_features: tuple[str, ...] = ("best_no_split_cost_per_item", "max_possible_clearance_savings",
                                        "frac_nodes_full_inventory", "num_lines")
    n_bins: int = 10

    def __post_init__(self):
        if not 0.0 < self.shrinkage <= 1.0:
            raise ConfigError("train.shrinkage", "must be in (0, 1]")
        if self.single_item_criterion not in SINGLE_ITEM_CRITERIA:
            raise ConfigError("train.single_item_criterion", f"must be one of {SINGLE_ITEM_CRITERIA}")
        if self.n_bins < 1:
            raise ConfigError("train.n_bins", "must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 42
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    catalog_version: str = CATALOG_VERSION
    cv: CVConfig = field(default_factory=CVConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    router: RouterConfig = field(default_factory=RouterConfig)

    def __post_init__(self):
        if self.catalog_version != CATALOG_VERSION:
            raise ConfigError("catalog_version", f"only {CATALOG_VERSION} is available")
        # the global seed drives every seeded stage
        object.__setattr__(self, "generator", dataclasses.replace(self.generator, seed=self.seed))
        object.__setattr__(self, "cv", dataclasses.replace(self.cv, seed=self.seed))

    def with_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        gen = self.generator.to_dict()
        gen.pop("seed")
        cv = self.cv.to_dict()
        cv.pop("seed")
        opt = dataclasses.asdict(self.optimizer)
        train = dataclasses.asdict(self.train)
        train["binned_features"] = list(train["binned_features"])
        return {
            "format": CONFIG_FORMAT,
            "format_version": CONFIG_FORMAT_VERSION,
            "seed": self.seed,
            "catalog_version": self.catalog_version,
            "generator": gen,
            "optimizer": opt,
            "cv": cv,
            "train": train,
            "router": self.router.to_dict(),
        }

    def dumps(self) -> str:
        return dumps_json(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config", "must be a JSON object")
        if d.get("format", CONFIG_FORMAT) != CONFIG_FORMAT:
            raise ConfigError("format", f"expected {CONFIG_FORMAT}")
        if d.get("format_version", CONFIG_FORMAT_VERSION) != CONFIG_FORMAT_VERSION:
            raise ConfigError("format_version", f"expected {CONFIG_FORMAT_VERSION}")
        known = {"format", "format_version", "seed", "catalog_version", "generator", "optimizer", "cv",
                 "train", "router"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError("config", f"unknown sections {sorted(unknown)}")
        kw = {}
        if "seed" in d:
            kw["seed"] = _int(d["seed"], "seed")
        if "catalog_version" in d:
            kw["catalog_version"] = d["catalog_version"]
        if "generator" in d:
            kw["generator"] = GeneratorConfig.from_dict({k: v for k, v in d["generator"].items() if k != "seed"})
        if "optimizer" in d:
            kw["optimizer"] = _build(OptimizerConfig, d["optimizer"], "optimizer")
        if "cv" in d:
            kw["cv"] = CVConfig.from_dict({k: v for k, v in d["cv"].items() if k != "seed"})
        if "train" in d:
            t = dict(d["train"])
            if "binned_features" in t:
                t["binned_features"] = tuple(t["binned_features"])
            kw["train"] = _build(TrainConfig, t, "train")
        if "router" in d:
            kw["router"] = RouterConfig.from_dict(d["router"])
        return cls(**kw)

    @classmethod
    def loads(cls, text: str, path=None) -> "RunConfig":
        return cls.from_dict(loads_json(text, path=path))

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_dict(load_json(path))


def _int(v, name):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(name, "must be an integer")
    return v


def _build(cls, d, section):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(section, f"unknown fields {sorted(unknown)}")
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigError(section, str(exc)) from None


def default_config_text() -> str:
    return resources.files("splitshort").joinpath("data/default_config.json").read_text(encoding="utf-8")


def default_config() -> RunConfig:
    return RunConfig.loads(default_config_text(), path="default_config.json")
