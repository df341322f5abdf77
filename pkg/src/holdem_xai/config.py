"""Game configuration and run manifests.

Defaults reproduce the reference experimental table: 50 battles of 30 hands,
3000-chip stacks, 5/10 blinds, seed 7, decoding temperature 0.2 and top-p
1.0, logit intervention magnitude 2.5 and 1000 Monte Carlo simulations.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GameConfig:
    battles: int = 50
    hands_per_battle: int = 30
    initial_stack: int = 3000
    small_blind: int = 5
    big_blind: int = 10
    rng_seed: int = 7
    mc_simulations: int = 1000
    temperature: float = 0.2
    top_p: float = 1.0
    intervention_delta: float = 2.5

    def __post_init__(self) -> None:
        if self.battles < 1 or self.hands_per_battle < 1:
            raise ConfigError("battles and hands_per_battle must be positive")
        if not 0 < self.small_blind < self.big_blind <= self.initial_stack:
            raise ConfigError("need 0 < small_blind < big_blind <= initial_stack")
        if self.mc_simulations < 1:
            raise ConfigError("mc_simulations must be >= 1")


@dataclass(frozen=True)
class SeatSpec:
    """One seat: an archetype bot or a model-driven agent.

    ``kind`` is ``"archetype"`` (``name`` is the archetype) or ``"model"``
    (``name`` is the model name looked up in the endpoint/scripted registry).
    """

    kind: str
    name: str

    def __post_init__(self) -> None:
        if self.kind not in ("archetype", "model"):
            raise ConfigError(f"unknown seat kind {self.kind!r}")


@dataclass(frozen=True)
class EndpointSpec:
    model_name: str
    base_url: str | None = None  # None selects a scripted backend
    api_key_env: str | None = None
    scripted_policy: str | None = None
    timeout: float = 60.0
    max_retries: int = 3
    max_in_flight: int = 4


@dataclass(frozen=True)
class InterventionPlan:
    traits: tuple[str, ...] = ("aggressiveness", "risk_tolerance")
    directions: tuple[str, ...] = ("up", "down")
    runs: int = 50


@dataclass(frozen=True)
class FeatureThresholds:
    weak_below: float = 0.40
    strong_from: float = 0.65
    high_risk_raise_over_pot: float = 0.75
    high_risk_raise_over_stack: float = 0.25
    bluff_equity_below: float = 0.35


@dataclass(frozen=True)
class RuleAuditTable:
    version: str = "rules-v1"
    missing_claim: int = 1
    missing_claim_max: int = 2
    contradiction: int = 2
    contradiction_cap: int = 2
    pot_odds_violation: int = 1
    pot_odds_margin: float = 0.05
    spr_violation: int = 1
    spr_threshold: float = 1.0
    raise_sizing_violation: int = 1
    illegal_action_proposed: int = 1


DEFAULT_SEATS: tuple[SeatSpec, ...] = (
    SeatSpec("model", "scripted-honest"),
    SeatSpec("archetype", "LoosePassive"),
    SeatSpec("archetype", "LooseAggressive"),
    SeatSpec("archetype", "Maniac"),
    SeatSpec("archetype", "TightPassive"),
    SeatSpec("archetype", "TightAggressive"),
)

DEFAULT_ENDPOINTS: tuple[EndpointSpec, ...] = (
    EndpointSpec("scripted-honest", scripted_policy="honest"),
    EndpointSpec("scripted-noisy", scripted_policy="noisy"),
    EndpointSpec("scripted-threshold", scripted_policy="threshold"),
    EndpointSpec("scripted-oracle-a", scripted_policy="oracle"),
    EndpointSpec("scripted-oracle-b", scripted_policy="oracle"),
)


@dataclass(frozen=True)
class RunManifest:
    game: GameConfig = field(default_factory=GameConfig)
    seats: tuple[SeatSpec, ...] = DEFAULT_SEATS
    endpoints: tuple[EndpointSpec, ...] = DEFAULT_ENDPOINTS
    oracles: tuple[str, ...] = ()
    interventions: InterventionPlan = field(default_factory=InterventionPlan)
    thresholds: FeatureThresholds = field(default_factory=FeatureThresholds)
    rules: RuleAuditTable = field(default_factory=RuleAuditTable)
    audit_windows: tuple[int, ...] = (5, 10, 15)
    profile_update_every: int = 1
    out_dir: str = "runs"
    workers: int = 1
    offline: bool = True
    stages: tuple[str, ...] = ("play", "audit", "intervene", "metrics")

    def __post_init__(self) -> None:
        if len(self.seats) < 2:
            raise ConfigError("need at least two seats")
        names = {e.model_name for e in self.endpoints}
        for seat in self.seats:
            if seat.kind == "model" and seat.name not in names:
                raise ConfigError(f"seat model {seat.name!r} has no endpoint or scripted backend")
        for oracle in self.oracles:
            if oracle not in names:
                raise ConfigError(f"oracle {oracle!r} has no endpoint or scripted backend")

    def endpoint(self, name: str) -> EndpointSpec:
        for e in self.endpoints:
            if e.model_name == name:
                return e
        raise ConfigError(f"no endpoint named {name!r}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        """Hash of everything that determines trace content.

        Audit and intervention settings are left out so later stages with
        different oracles or plans address the same run directory; their own
        stage digests cover them.
        """
        d = self.to_dict()
        for volatile in ("out_dir", "workers", "stages", "offline", "oracles", "interventions", "rules", "audit_windows"):
            d.pop(volatile)
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def manifest_from_dict(d: dict[str, Any]) -> RunManifest:
    d = dict(d)
    try:
        kw: dict[str, Any] = {}
        if "game" in d:
            kw["game"] = GameConfig(**d.pop("game"))
        if "seats" in d:
            kw["seats"] = tuple(SeatSpec(**s) for s in d.pop("seats"))
        if "endpoints" in d:
            kw["endpoints"] = tuple(EndpointSpec(**e) for e in d.pop("endpoints"))
        if "interventions" in d:
            iv = d.pop("interventions")
            kw["interventions"] = InterventionPlan(
                traits=tuple(iv.get("traits", InterventionPlan.traits)),
                directions=tuple(iv.get("directions", InterventionPlan.directions)),
                runs=iv.get("runs", InterventionPlan.runs),
            )
        if "thresholds" in d:
            kw["thresholds"] = FeatureThresholds(**d.pop("thresholds"))
        if "rules" in d:
            kw["rules"] = RuleAuditTable(**d.pop("rules"))
        for key in ("oracles", "audit_windows", "stages"):
            if key in d:
                kw[key] = tuple(d.pop(key))
        kw.update(d)
        return RunManifest(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_manifest(path: str | Path) -> RunManifest:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return manifest_from_dict(data)


def dump_manifest(manifest: RunManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8")
