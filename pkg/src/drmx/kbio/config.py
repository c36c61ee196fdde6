"""Run configuration shared by every pipeline stage."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Tuple

from ..errors import ConfigError

COMPARE_MODES = ("dictionary", "qualitative")


@dataclass(frozen=True)
class RunConfig:
    # feature construction
    depth: int = 2
    recall_cap: int = 10
    literal_cap: int = 256
    max_draws: int = 500
    max_clause_len: int = 4
    seed: int = 0
    proof_depth: int = 64
    subsumption_budget: int = 10 ** 6
    # explanation
    hamming_k: int = 5
    beam_width: int = 5
    max_body: int = 4
    epsilon: float = 0.05
    partition_count: int = 2
    compare_mode: str = "dictionary"
    relevance_missing: str = "strict"
    # network
    hidden: Tuple[int, ...] = (64, 64)
    dropout: Tuple[float, ...] = (0.0, 0.0)
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 4
    epochs: int = 500
    validation_fraction: float = 0.0
    init_std: float = 0.05
    # extra candidate settings tried during model selection, as dicts of
    # overrides for hidden/dropout/learning_rate/momentum/batch_size
    search: Tuple[Dict[str, Any], ...] = ()

    def __post_init__(self):
        for name in ("depth", "hamming_k"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("recall_cap", "literal_cap", "max_clause_len", "proof_depth",
                     "subsumption_budget", "beam_width", "max_body", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.max_draws < 0 or self.epochs < 0:
            raise ConfigError("max_draws and epochs must be >= 0")
        if not 0 < self.epsilon <= 1:
            raise ConfigError("epsilon must lie in (0, 1]")
        if self.partition_count < 2:
            raise ConfigError("partition_count must be >= 2")
        if self.compare_mode not in COMPARE_MODES:
            raise ConfigError(f"compare_mode must be one of {COMPARE_MODES}")
        if self.relevance_missing not in ("strict", "lowest", "inherit"):
            raise ConfigError("relevance_missing must be strict, lowest or inherit")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "dropout", tuple(float(d) for d in self.dropout))
        object.__setattr__(self, "search", tuple(dict(s) for s in self.search))
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ConfigError("need at least one hidden layer of positive width")
        if len(self.dropout) != len(self.hidden):
            raise ConfigError("one dropout rate per hidden layer")
        if any(not 0 <= d < 1 for d in self.dropout):
            raise ConfigError("dropout rates must lie in [0, 1)")
        if not 0 <= self.validation_fraction < 1:
            raise ConfigError("validation_fraction must lie in [0, 1)")
        if self.learning_rate <= 0 or not 0 <= self.momentum < 1 or self.init_std < 0:
            raise ConfigError("bad optimiser settings")

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        d["dropout"] = list(self.dropout)
        d["search"] = [dict(s) for s in self.search]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def update(self, **changes) -> "RunConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        try:
            return replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return RunConfig.from_dict(data)
