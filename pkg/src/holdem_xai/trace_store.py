"""Append-only JSONL decision traces.

Each battle writes one file: a header line with exactly ``schema_version``,
``config_hash``, ``template_hashes`` and ``seed``, then one JSON object per
record. Records are either ``decision`` rows (one per action taken at the
table, by model or archetype seats) or ``hand_summary`` rows written when a
hand resolves. Lines are UTF-8 with LF endings and sorted keys, so identical
runs produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

import jsonschema

SCHEMA_VERSION = "1.0"

_ACTION = {
    "type": "object",
    "required": ["kind", "amount"],
    "properties": {
        "kind": {"enum": ["FOLD", "CALL", "CHECK", "RAISE"]},
        "amount": {"type": ["integer", "null"]},
    },
}

DECISION_SCHEMA = {
    "type": "object",
    "required": [
        "type", "battle_id", "hand_id", "decision_index", "player_id", "seat", "seat_kind",
        "model_name", "street", "observation", "legal", "proposed", "action", "features", "flags",
    ],
    "properties": {
        "type": {"const": "decision"},
        "battle_id": {"type": "integer", "minimum": 0},
        "hand_id": {"type": "integer", "minimum": 0},
        "decision_index": {"type": "integer", "minimum": 0},
        "player_id": {"type": "string"},
        "seat": {"type": "integer", "minimum": 0},
        "seat_kind": {"enum": ["model", "archetype"]},
        "street": {"enum": ["preflop", "flop", "turn", "river"]},
        "observation": {"type": "object", "required": ["hole", "board", "pot", "stacks", "committed", "button"]},
        "legal": {"type": "object"},
        "proposed": _ACTION,
        "action": _ACTION,
        "features": {"type": "object", "required": ["pot_odds", "spr", "equity", "hand_strength_bucket"]},
        "flags": {"type": "object"},
    },
}

HAND_SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["type", "battle_id", "hand_id", "payouts", "showdown", "stacks", "stats"],
    "properties": {"type": {"const": "hand_summary"}},
}

ABORT_SCHEMA = {
    "type": "object",
    "required": ["type", "battle_id", "hand_id", "reason"],
    "properties": {"type": {"const": "battle_aborted"}},
}

_SCHEMAS = {"decision": DECISION_SCHEMA, "hand_summary": HAND_SUMMARY_SCHEMA, "battle_aborted": ABORT_SCHEMA}
_VALIDATORS = {k: jsonschema.Draft202012Validator(v) for k, v in _SCHEMAS.items()}


class TraceSchemaError(ValueError):
    pass


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def validate_row(row: dict) -> None:
    validator = _VALIDATORS.get(row.get("type")) if isinstance(row, dict) else None
    if validator is None:
        raise TraceSchemaError(f"unknown record type {row.get('type') if isinstance(row, dict) else row!r}")
    err = jsonschema.exceptions.best_match(validator.iter_errors(row))
    if err is not None:
        path = "/".join(str(p) for p in err.absolute_path) or "<row>"
        raise TraceSchemaError(f"{row['type']} record invalid at {path}: {err.message}")


@dataclass(frozen=True)
class TraceHeader:
    schema_version: str
    config_hash: str
    template_hashes: dict[str, str]
    seed: int

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config_hash": self.config_hash,
            "template_hashes": dict(self.template_hashes),
            "seed": self.seed,
        }


class TraceWriter:
    """Single writer for one battle file; call ``end_hand`` at hand boundaries."""

    def __init__(self, path: str | Path, header: TraceHeader):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8", newline="\n")
        self._fh.write(dumps(header.to_dict()) + "\n")
        self.rows_written = 0

    def append(self, row: dict) -> None:
        validate_row(row)
        self._fh.write(dumps(row) + "\n")
        self.rows_written += 1

    def end_hand(self) -> None:
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_jsonl(path: str | Path) -> tuple[dict, list[dict]]:
    """Header and records of any JSONL file written by this package."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise TraceSchemaError(f"{path} is empty")
    return json.loads(lines[0]), [json.loads(line) for line in lines[1:] if line]


def read_trace(path: str | Path) -> tuple[TraceHeader, list[dict]]:
    head, rows = read_jsonl(path)
    if set(head) != {"schema_version", "config_hash", "template_hashes", "seed"}:
        raise TraceSchemaError(f"{path}: unexpected header keys {sorted(head)}")
    return TraceHeader(**head), rows


def write_jsonl(path: str | Path, header: dict, records: Iterable[dict]) -> int:
    """Write a whole file at once via a temporary name, returning the record count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    n = 0
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(header) + "\n")
        for rec in records:
            fh.write(dumps(rec) + "\n")
            n += 1
    os.replace(tmp, path)
    return n


def decision_key(row: dict) -> tuple[int, int, int, str]:
    return (row["battle_id"], row["hand_id"], row["decision_index"], row["player_id"])


def key_str(key: Sequence) -> str:
    return "/".join(str(k) for k in key)


def decisions(rows: Iterable[dict]) -> list[dict]:
    return [r for r in rows if r.get("type") == "decision"]


# ---------------------------------------------------------------- slicing

def coarse_class(kind: str) -> str:
    """fold / call / raise; a CHECK is a zero-cost call."""
    return {"FOLD": "fold", "CALL": "call", "CHECK": "call", "RAISE": "raise"}[kind]


@dataclass(frozen=True)
class TraceSlice:
    rows: list[dict]
    n_candidates: int
    filters: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.rows)

    def counts(self) -> dict:
        return {"matched": self.n, "candidates": self.n_candidates, "filters": dict(self.filters)}


def slice_rows(
    rows: Iterable[dict],
    street: str | None = None,
    player: str | None = None,
    bucket: str | None = None,
    action: str | None = None,
    high_risk: bool | None = None,
    window: tuple[int, int] | None = None,
    seat_kind: str | None = None,
    model: str | None = None,
) -> TraceSlice:
    """Decision rows matching every given filter (a conjunction).

    ``action`` is an executed action kind (FOLD/CALL/CHECK/RAISE);
    ``window`` is a half-open hand range ``(start, stop)``.
    """
    filters = {k: v for k, v in dict(street=street, player=player, bucket=bucket, action=action,
                                      high_risk=high_risk, window=window, seat_kind=seat_kind,
                                      model=model).items() if v is not None}
    cand = decisions(rows)
    out = []
    for r in cand:
        f = r["features"]
        if street is not None and r["street"] != street:
            continue
        if player is not None and r["player_id"] != player:
            continue
        if bucket is not None and f["hand_strength_bucket"] != bucket:
            continue
        if action is not None and r["action"]["kind"] != action.upper():
            continue
        if high_risk is not None and bool(f.get("high_risk")) != high_risk:
            continue
        if window is not None and not window[0] <= r["hand_id"] < window[1]:
            continue
        if seat_kind is not None and r["seat_kind"] != seat_kind:
            continue
        if model is not None and r["model_name"] != model:
            continue
        out.append(r)
    return TraceSlice(out, len(cand), filters)


# ----------------------------------------------------------- run directory

@dataclass(frozen=True)
class RunPaths:
    root: Path

    @classmethod
    def for_manifest(cls, out_dir: str | Path, config_hash: str, seed: int) -> "RunPaths":
        return cls(Path(out_dir) / f"run-{config_hash[:12]}-seed{seed}")

    @property
    def traces(self) -> Path:
        return self.root / "traces"

    @property
    def audits(self) -> Path:
        return self.root / "audits"

    @property
    def interventions(self) -> Path:
        return self.root / "interventions"

    @property
    def metrics(self) -> Path:
        return self.root / "metrics"

    @property
    def report(self) -> Path:
        return self.root / "report"

    @property
    def stages(self) -> Path:
        return self.root / "stages"

    def trace(self, battle: int) -> Path:
        return self.traces / f"battle_{battle:03d}.jsonl"

    def trace_files(self) -> list[Path]:
        return sorted(self.traces.glob("battle_*.jsonl"))


def files_digest(paths: Iterable[Path], extra: str = "") -> str:
    """Content hash over files (name + bytes) used to guard stage reruns."""
    h = hashlib.sha256(extra.encode())
    for p in sorted(paths):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def stage_is_current(paths: RunPaths, stage: str, digest: str) -> bool:
    marker = paths.stages / f"{stage}.done"
    return marker.exists() and marker.read_text(encoding="utf-8").strip() == digest


def mark_stage(paths: RunPaths, stage: str, digest: str) -> None:
    paths.stages.mkdir(parents=True, exist_ok=True)
    (paths.stages / f"{stage}.done").write_text(digest + "\n", encoding="utf-8")


def iter_trace_rows(paths: RunPaths) -> Iterator[dict]:
    for p in paths.trace_files():
        yield from read_trace(p)[1]
