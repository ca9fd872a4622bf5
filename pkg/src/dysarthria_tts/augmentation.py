"""Synthesis plans: which prosody controls each augmented utterance gets."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import UtteranceRecord
from .errors import DataError
from .seeding import derive_seed, utterance_rng
from .variance_adaptor import ProsodyControls

PLAN_KEYS = ("utterance_id", "variant_index", "speaker_id", "transcript", "pitch_coef",
             "energy_coef", "duration_coef", "severity_coef", "pause_insertion", "seed")


@dataclass(frozen=True)
class ExperimentGrid:
    pitch: tuple[float, ...]
    energy: tuple[float, ...]
    duration: tuple[float, ...]
    severity: tuple[float, ...]
    pause_insertion: bool
    multiplier: int

    def __post_init__(self):
        for name in ("pitch", "energy", "duration", "severity"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise ValueError(f"{name} grid is empty")
            object.__setattr__(self, name, values)
        for name in ("pitch", "energy", "duration"):
            if any(v <= 0 for v in getattr(self, name)):
                raise ValueError(f"{name} coefficients must be positive")
        if any(not 0.0 <= v <= 2.0 for v in self.severity):
            raise ValueError("severity coefficients must lie in [0, 2]")
        if self.multiplier < 1:
            raise ValueError("multiplier must be >= 1")

    def combinations(self) -> list[tuple[float, float, float, float]]:
        """(pitch, energy, duration, severity) tuples in lexicographic grid order."""
        return list(itertools.product(self.pitch, self.energy, self.duration, self.severity))


BUILTIN_GRIDS = {
    "exp1": ExperimentGrid(pitch=(1.0,), energy=(1.0,), duration=(1.0,),
                           severity=(0.0, 1.0, 2.0), pause_insertion=True, multiplier=3),
    "exp2": ExperimentGrid(pitch=(0.1, 0.6, 1.2, 1.75), energy=(0.1, 1.0, 2.0),
                           duration=(1.0, 1.3, 1.6, 1.8), severity=(0.0, 1.0, 2.0),
                           pause_insertion=True, multiplier=10),
}


def builtin_grid(name: str) -> ExperimentGrid:
    try:
        return BUILTIN_GRIDS[name]
    except KeyError:
        raise DataError(f"unknown experiment {name!r}; choose from {sorted(BUILTIN_GRIDS)}") from None


@dataclass(frozen=True)
class SynthesisSpecRecord:
    utterance_id: str
    variant_index: int
    speaker_id: str
    transcript: str
    controls: ProsodyControls
    seed: int

    def to_json(self) -> dict:
        c = self.controls
        return {"utterance_id": self.utterance_id, "variant_index": self.variant_index,
                "speaker_id": self.speaker_id, "transcript": self.transcript,
                "pitch_coef": c.pitch_coef, "energy_coef": c.energy_coef,
                "duration_coef": c.duration_coef, "severity_coef": c.severity_coef,
                "pause_insertion": c.pause_insertion, "seed": self.seed}

    @classmethod
    def from_json(cls, obj: dict) -> "SynthesisSpecRecord":
        if set(obj) != set(PLAN_KEYS):
            raise DataError(f"plan line keys {sorted(obj)} != {sorted(PLAN_KEYS)}")
        controls = ProsodyControls(float(obj["pitch_coef"]), float(obj["energy_coef"]),
                                   float(obj["duration_coef"]), float(obj["severity_coef"]),
                                   bool(obj["pause_insertion"]))
        return cls(obj["utterance_id"], int(obj["variant_index"]), obj["speaker_id"],
                   obj["transcript"], controls, int(obj["seed"]))


def plan(records: Sequence[UtteranceRecord], grid: ExperimentGrid, plan_seed: int,
         speakers: Iterable[str] | None = None) -> list[SynthesisSpecRecord]:
    """Emit ``grid.multiplier`` synthesis specs per record.

    When the grid has no more combinations than the multiplier they are all
    used in grid order (cycling if the grid is smaller); otherwise a uniform
    sample without replacement is drawn per utterance, seeded by
    ``(plan_seed, utterance_id)``.
    """
    if speakers is not None:
        keep = set(speakers)
        records = [r for r in records if r.speaker_id in keep]
    if not records:
        raise DataError("nothing to plan: no records")
    combos = grid.combinations()
    out = []
    seen = set()
    for rec in records:
        if rec.utterance_id in seen:
            raise DataError(f"duplicate utterance_id {rec.utterance_id!r}")
        seen.add(rec.utterance_id)
        if len(combos) <= grid.multiplier:
            picks = [i % len(combos) for i in range(grid.multiplier)]
        else:
            rng = utterance_rng(plan_seed, rec.utterance_id)
            picks = rng.choice(len(combos), size=grid.multiplier, replace=False).tolist()
        for variant, idx in enumerate(picks):
            pitch, energy, duration, severity = combos[idx]
            controls = ProsodyControls(pitch, energy, duration, severity, grid.pause_insertion)
            out.append(SynthesisSpecRecord(rec.utterance_id, variant, rec.speaker_id, rec.transcript,
                                           controls, derive_seed(plan_seed, rec.utterance_id, variant)))
    return out


def plan_to_text(specs: Iterable[SynthesisSpecRecord]) -> str:
    return "".join(json.dumps(s.to_json(), ensure_ascii=False) + "\n" for s in specs)


def write_plan(specs: Iterable[SynthesisSpecRecord], path) -> None:
    Path(path).write_text(plan_to_text(specs), encoding="utf-8")


def read_plan(path) -> list[SynthesisSpecRecord]:
    specs = []
    seen = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            spec = SynthesisSpecRecord.from_json(json.loads(line))
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
        key = (spec.utterance_id, spec.variant_index)
        if key in seen:
            raise DataError(f"{path}:{lineno}: duplicate (utterance_id, variant_index) {key}")
        seen.add(key)
        specs.append(spec)
    return specs
