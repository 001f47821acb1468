"""Run configuration: a flat, human-editable JSON key-value file.

Defaults encode the reference constants of the modeled society: up to 3
concurrently led teams per agent, at most 9 references per speech, 5 memory
entries per agent, 3 reviewers per submission, acceptance strictly above 5,
and a 40-epoch run. None of these are hard-coded elsewhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict, fields
from pathlib import Path

from .errors import ConfigError


@dataclass
class SimulationConfig:
    n_agents: int = 1000
    epochs: int = 40
    seed: int = 0
    max_led_teams: int = 3
    max_refs: int = 9
    memory_cap: int = 5
    n_reviewers: int = 3
    accept_threshold: float = 5
    accept_rule: str = "mean"  # mean | median | all
    team_rate: float | None = None  # None: use the rate fitted at ingest
    team_formation_prob: float = 0.1
    coauthor_weight: float = 0.6
    topic_weight: float = 0.4
    candidate_pool: int = 64
    retry_budget: int = 3
    memory_char_budget: int = 240
    backend: str = "mock"  # mock | live
    embed_dim: int = 32
    ports: int = 1
    port_cap: int = 4
    base_wait: float = 0.001
    max_wait: float = 0.05
    pending_threshold: int = 64
    deterministic: bool = False
    checkpoint_every: int = 0  # epochs between checkpoints; 0 disables
    live_urls: tuple[str, ...] = ()
    out_dir: str = "run_out"

    def validate(self) -> "SimulationConfig":
        if self.n_agents <= 0:
            raise ConfigError(f"n_agents must be positive, got {self.n_agents}")
        if self.epochs < 0:
            raise ConfigError(f"epochs cannot be negative, got {self.epochs}")
        if self.accept_rule not in ("mean", "median", "all"):
            raise ConfigError(f"accept_rule must be mean|median|all, got {self.accept_rule!r}")
        if self.backend not in ("mock", "live"):
            raise ConfigError(f"backend must be mock|live, got {self.backend!r}")
        if not 1 <= self.max_refs <= 9:
            raise ConfigError(f"max_refs must be in 1..9, got {self.max_refs}")
        if self.team_rate is not None and self.team_rate <= 0:
            raise ConfigError(f"team_rate must be positive, got {self.team_rate}")
        if not 0.0 <= self.team_formation_prob <= 1.0:
            raise ConfigError("team_formation_prob must be a probability")
        if self.ports <= 0 or self.port_cap <= 0:
            raise ConfigError("ports and port_cap must be positive")
        if self.backend == "live" and len(self.live_urls) not in (0, self.ports):
            raise ConfigError("live_urls must list one URL per port")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["live_urls"] = list(self.live_urls)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "live_urls" in d:
            d["live_urls"] = tuple(d["live_urls"])
        return cls(**d).validate()

    def save(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "SimulationConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        return cls.from_dict(raw)
