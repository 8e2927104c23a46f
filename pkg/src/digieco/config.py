"""Scenario configuration: flat ``key = value`` files with command-line overrides."""
from __future__ import annotations

import configparser
import dataclasses
import typing
from dataclasses import dataclass
from pathlib import Path

from .evolution import GaConfig

TOPOLOGIES = ("random", "small_world")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ScenarioConfig:
    # population of the experiment
    users: int = 100
    initial_agents_per_user: int = 5
    requests_between_deployments: int = 3
    total_requests: int = 600
    # attribute model
    arity: int = 2
    agent_attributes: int = 2
    communities: int = 10
    profile_size: int = 32
    profile_step: int = 8
    sigma: float = 2.0
    segments: int = 3
    attributes_per_segment: int = 4
    # evolution
    crossover_fraction: float = 0.10
    mutation_fraction: float = 0.10
    parsimony_alpha: float = 0.05
    pop_base: int = 20
    pop_slope: float = 5.0
    pop_cap: int = 200
    max_generations: int = 100
    stagnation_window: int = 15
    # habitat network
    eta: float = 0.1
    p_min: float = 0.01
    p_max: float = 0.99
    p_init: float = 0.5
    migration_window: int = 5
    churn_rate: float = 0.01
    topology: str = "random"
    initial_degree: int = 4
    rewire_prob: float = 0.1
    prune_edges: bool = False
    clustering_threshold: float = 0.5
    # reporting
    window: int = 25
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10)

    def __post_init__(self):
        positive = ("users", "initial_agents_per_user", "requests_between_deployments",
                    "total_requests", "arity", "agent_attributes", "communities",
                    "profile_size", "segments", "attributes_per_segment", "migration_window",
                    "initial_degree", "window")
        for key in positive:
            if getattr(self, key) < 1:
                raise ConfigError(key, "must be positive")
        if self.profile_step < 0:
            raise ConfigError("profile_step", "must be non-negative")
        if self.sigma < 0:
            raise ConfigError("sigma", "must be non-negative")
        for key in ("churn_rate", "rewire_prob", "clustering_threshold"):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ConfigError(key, "must be in [0, 1]")
        if not 0.0 < self.p_min < self.p_max < 1.0:
            raise ConfigError("p_min", "must satisfy 0 < p_min < p_max < 1")
        if not self.p_min <= self.p_init <= self.p_max:
            raise ConfigError("p_init", "must be in [p_min, p_max]")
        if not 0.0 < self.eta < 1.0:
            raise ConfigError("eta", "must be in (0, 1)")
        if self.topology not in TOPOLOGIES:
            raise ConfigError("topology", f"must be one of {', '.join(TOPOLOGIES)}")
        if not self.seeds:
            raise ConfigError("seeds", "must be non-empty")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds", "must be non-negative")
        try:
            self.ga
        except ValueError as exc:
            key = str(exc).split()[0]
            raise ConfigError(key, str(exc)) from None

    @property
    def ga(self) -> GaConfig:
        return GaConfig(
            crossover_fraction=self.crossover_fraction,
            mutation_fraction=self.mutation_fraction,
            parsimony_alpha=self.parsimony_alpha,
            pop_base=self.pop_base,
            pop_slope=self.pop_slope,
            pop_cap=self.pop_cap,
            max_generations=self.max_generations,
            stagnation_window=self.stagnation_window,
        )

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_TYPES = typing.get_type_hints(ScenarioConfig)


def _coerce(key: str, text: str):
    kind = _TYPES[key]
    text = text.strip()
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind is str:
            return text
        return tuple(int(p) for p in text.replace(",", " ").split())
    except ValueError:
        name = getattr(kind, "__name__", "list of integers")
        raise ConfigError(key, f"expected {name}, got {text!r}") from None


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def parse_pairs(text: str, source: str = "<config>") -> dict:
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",), delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string("[scenario]\n" + text, source=source)
    except configparser.Error as exc:
        raise ConfigError("<file>", f"malformed config: {exc}") from None
    return dict(parser["scenario"])


def resolve(values: dict) -> ScenarioConfig:
    kwargs = {}
    for key, raw in values.items():
        if key not in _TYPES:
            raise ConfigError(key, "unknown key")
        kwargs[key] = _coerce(key, raw) if isinstance(raw, str) else raw
    return ScenarioConfig(**kwargs)


def parse_config(path: str | Path | None = None, overrides: typing.Iterable[str] = ()) -> ScenarioConfig:
    """Defaults, then file values, then ``key=value`` overrides."""
    values = {}
    if path is not None:
        values.update(parse_pairs(Path(path).read_text(), str(path)))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        values[key.strip()] = raw.strip()
    return resolve(values)


def format_config(cfg: ScenarioConfig) -> str:
    lines = ["# digieco scenario configuration"]
    for f in dataclasses.fields(cfg):
        lines.append(f"{f.name} = {_format(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"
