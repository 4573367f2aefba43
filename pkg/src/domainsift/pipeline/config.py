"""Run configuration — one frozen dataclass, read from YAML and overridden from the command line.

    epochs: 3                 # T
    candidates_per_epoch: 100 # n_a
    shrinkage: 0.8            # k; floor(n_a * k) candidates are kept
    metric: mmd               # or cosine
    mix: {splice: 1, reallocation: 1, splice_reallocation: 1, proportion: 0}
    box_mode: off             # or direct / mixture / gaussian
    provider: builtin         # or "file:emb/epoch_{epoch:03d}.txt"

Unknown keys are refused; :meth:`PipelineConfig.validate` checks every range and raises
:class:`~domainsift.errors.ConfigError`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..augment.box_level import EXCHANGE_MODES
from ..augment.sample import RECIPES
from ..errors import ConfigError
from ..selection import METRICS, shrunk_size

__all__ = ["PipelineConfig", "load_config", "BOX_MODES", "BOX_STAGES", "EXCHANGE_DIRECTIONS"]

BOX_MODES = ("off", *EXCHANGE_MODES)
BOX_STAGES = ("composite", "source")
EXCHANGE_DIRECTIONS = ("target", "source")


def _default_mix() -> dict[str, float]:
    return {"splice": 1.0, "reallocation": 1.0, "splice_reallocation": 1.0, "proportion": 0.0}


@dataclass(frozen=True)
class PipelineConfig:
    epochs: int = 3
    candidates_per_epoch: int = 100
    shrinkage: float = 0.8
    metric: str = "mmd"
    mix: dict[str, float] = field(default_factory=_default_mix)
    box_mode: str = "off"
    box_stage: str = "composite"      # exchange into the finished candidate, or into source images first
    exchange_from: str = "target"     # which domain donates box content
    p_exchange: float = 0.5
    alpha: float = 1.0
    alpha_m: float = 1.0
    canvas_side: int = 640
    min_area_frac: float = 0.2
    seed: int = 0
    provider: str = "builtin"
    embedding_dim: int = 192
    frozen_pool: bool = False
    timeout: float = 600.0
    poll_interval: float = 1.0
    workers: int = 1

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None) -> "PipelineConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        if "mix" in data:
            data["mix"] = _mix(data["mix"])
        if data.get("box_mode") is False:
            data["box_mode"] = "off"  # YAML 1.1 reads a bare `off` as false
        try:
            return cls(**data).validate()
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, **overrides: Any) -> "PipelineConfig":
        """A copy with every non-``None`` override applied, validated."""
        given = {k: v for k, v in overrides.items() if v is not None}
        if "mix" in given:
            given["mix"] = _mix(given["mix"])
        unknown = sorted(set(given) - {f.name for f in fields(self)})
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        return replace(self, **given).validate()

    def validate(self) -> "PipelineConfig":
        def need(ok: bool, message: str) -> None:
            if not ok:
                raise ConfigError(message)

        need(_is_int(self.epochs) and self.epochs >= 1, f"epochs must be an integer >= 1, got {self.epochs!r}")
        need(_is_int(self.candidates_per_epoch) and self.candidates_per_epoch >= 1,
             f"candidates_per_epoch must be an integer >= 1, got {self.candidates_per_epoch!r}")
        need(_is_real(self.shrinkage) and 0.0 < self.shrinkage <= 1.0,
             f"shrinkage must lie in (0, 1], got {self.shrinkage!r}")
        need(shrunk_size(self.candidates_per_epoch, self.shrinkage) >= 1,
             f"shrinkage ratio eliminates all candidates: floor({self.candidates_per_epoch} * "
             f"{self.shrinkage}) = 0")
        need(self.metric in METRICS, f"metric must be one of {METRICS}, got {self.metric!r}")
        need(sum(_mix(self.mix).values()) > 0, "mix weights must not all be zero")
        need(self.box_mode in BOX_MODES, f"box_mode must be one of {BOX_MODES}, got {self.box_mode!r}")
        need(self.box_stage in BOX_STAGES, f"box_stage must be one of {BOX_STAGES}, got {self.box_stage!r}")
        need(self.exchange_from in EXCHANGE_DIRECTIONS,
             f"exchange_from must be one of {EXCHANGE_DIRECTIONS}, got {self.exchange_from!r}")
        need(_is_real(self.p_exchange) and 0.0 <= self.p_exchange <= 1.0,
             f"p_exchange must lie in [0, 1], got {self.p_exchange!r}")
        need(_is_real(self.alpha) and self.alpha > 0, f"alpha must be positive, got {self.alpha!r}")
        need(_is_real(self.alpha_m) and self.alpha_m > 0, f"alpha_m must be positive, got {self.alpha_m!r}")
        need(_is_int(self.canvas_side) and self.canvas_side >= 8,
             f"canvas_side must be an integer >= 8, got {self.canvas_side!r}")
        need(_is_real(self.min_area_frac) and 0.0 <= self.min_area_frac <= 1.0,
             f"min_area_frac must lie in [0, 1], got {self.min_area_frac!r}")
        need(_is_int(self.seed) and self.seed >= 0, f"seed must be a non-negative integer, got {self.seed!r}")
        need(self.provider == "builtin" or (self.provider.startswith("file:") and "{epoch" in self.provider),
             f"provider must be 'builtin' or 'file:<path with {{epoch}}>', got {self.provider!r}")
        need(_is_int(self.embedding_dim) and self.embedding_dim >= 1,
             f"embedding_dim must be a positive integer, got {self.embedding_dim!r}")
        need(self.provider != "builtin" or self.embedding_dim == 192,
             "the builtin provider produces 192-dim embeddings; set embedding_dim: 192")
        need(_is_real(self.timeout) and self.timeout >= 0, f"timeout must be >= 0, got {self.timeout!r}")
        need(_is_real(self.poll_interval) and self.poll_interval > 0,
             f"poll_interval must be positive, got {self.poll_interval!r}")
        need(_is_int(self.workers) and self.workers >= 1, f"workers must be an integer >= 1, got {self.workers!r}")
        return self

    @property
    def kept_per_epoch(self) -> int:
        return shrunk_size(self.candidates_per_epoch, self.shrinkage)

    def recipe_weights(self) -> list[float]:
        """Mix weights in :data:`~domainsift.augment.RECIPES` order, normalised to sum to 1."""
        total = sum(self.mix.values())
        return [self.mix.get(r, 0.0) / total for r in RECIPES]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def dump(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=False),
                        newline="\n")
        return path


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_real(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _mix(value: Any) -> dict[str, float]:
    """Mix weights from a mapping or a ``"splice=1,reallocation=2"`` string; missing recipes weigh 0."""
    if isinstance(value, str):
        pairs = {}
        for item in filter(None, (part.strip() for part in value.split(","))):
            name, sep, weight = item.partition("=")
            if not sep:
                raise ConfigError(f"mix entry {item!r} is not name=weight")
            pairs[name.strip()] = weight.strip()
        value = pairs
    if not isinstance(value, Mapping):
        raise ConfigError(f"mix must be a mapping of recipe to weight, got {value!r}")
    unknown = sorted(set(value) - set(RECIPES))
    if unknown:
        raise ConfigError(f"unknown recipe(s) in mix: {', '.join(unknown)}; choose from {RECIPES}")
    mix = {}
    for name in RECIPES:
        try:
            weight = float(value.get(name, 0.0))
        except (TypeError, ValueError):
            raise ConfigError(f"mix weight for {name} is not a number: {value[name]!r}") from None
        if not weight >= 0.0:
            raise ConfigError(f"mix weight for {name} must be non-negative, got {weight}")
        mix[name] = weight
    return mix


def load_config(path: str | Path | None = None, **overrides: Any) -> PipelineConfig:
    """Read a YAML config (or start from the defaults) and apply ``overrides``."""
    data: Any = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"no config file at {path}")
        try:
            data = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML: {exc}") from None
        if data is None:
            data = {}
        if not isinstance(data, Mapping):
            raise ConfigError(f"{path}: expected a mapping of config keys")
    return PipelineConfig.from_mapping(data).with_overrides(**overrides)
