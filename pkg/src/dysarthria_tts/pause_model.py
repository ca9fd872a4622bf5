"""Per-severity pause insertion: how many inter-word pauses, and where.

The model is a single probability per severity class: the chance that any
given inter-word slot carries a pause. A sentence with ``n`` words has
``n - 1`` slots, so the expected count is ``slot_prob * (n - 1)``; the count
is drawn by stochastic rounding of that expectation and the slots are then
chosen uniformly without replacement.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import GroupPauseStats, RawSeverity, SeverityClass, severity_class
from .errors import CalibrationError, DataError
from .text_frontend import PhraseSpec, pause_slots

FORMAT_VERSION = 1


@dataclass(frozen=True)
class PauseModel:
    slot_prob: dict  # SeverityClass -> float in [0, 1]

    def __post_init__(self):
        probs = {}
        for cls, p in self.slot_prob.items():
            p = float(p)
            if not math.isfinite(p):
                raise CalibrationError(f"non-finite slot probability for class {int(cls)}")
            probs[SeverityClass(int(cls))] = min(max(p, 0.0), 1.0)
        object.__setattr__(self, "slot_prob", probs)

    def prob(self, cls) -> float:
        try:
            return self.slot_prob[SeverityClass(int(cls))]
        except KeyError:
            raise CalibrationError(f"pause model has no class {int(cls)}") from None

    def to_json(self) -> dict:
        return {"format": FORMAT_VERSION,
                "slot_prob": {str(int(c)): p for c, p in sorted(self.slot_prob.items())}}

    @classmethod
    def from_json(cls, obj: dict) -> "PauseModel":
        if not isinstance(obj, dict) or obj.get("format") != FORMAT_VERSION:
            raise DataError(f"unsupported pause model format {obj.get('format') if isinstance(obj, dict) else obj!r}")
        if set(obj) != {"format", "slot_prob"}:
            raise DataError(f"unexpected pause model keys {sorted(obj)}")
        probs = obj["slot_prob"]
        if not isinstance(probs, dict) or set(probs) != {"0", "1", "2"}:
            raise DataError("slot_prob must have keys '0', '1', '2'")
        return cls({SeverityClass(int(k)): float(v) for k, v in probs.items()})

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "PauseModel":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid pause model JSON ({exc})") from None
        return cls.from_json(obj)


def calibrate(stats: dict[RawSeverity, GroupPauseStats]) -> PauseModel:
    """Pool raw groups into classes (sentence-count weighted) and take pauses/slots."""
    pooled = {c: [0.0, 0.0, 0] for c in SeverityClass}
    for group, g in stats.items():
        if g.sentence_count == 0:
            continue
        acc = pooled[severity_class(group)]
        acc[0] += g.mean_pauses * g.sentence_count
        acc[1] += g.mean_slots * g.sentence_count
        acc[2] += g.sentence_count
    probs = {}
    for cls, (pauses, slots, n) in pooled.items():
        if n == 0 or slots <= 0:
            raise CalibrationError(f"severity class {int(cls)} has no inter-word slots to calibrate from")
        probs[cls] = min(max(pauses / slots, 0.0), 1.0)
    return PauseModel(probs)


def pause_count(model: PauseModel, n_words: int, cls, rng: np.random.Generator) -> int:
    """Stochastically rounded ``slot_prob * (n_words - 1)``; always consumes one draw."""
    if n_words < 1:
        raise ValueError("n_words must be >= 1")
    slots = n_words - 1
    lam = model.prob(cls) * slots
    base = math.floor(lam)
    u = rng.random()
    count = base + (1 if u < lam - base else 0)
    return min(count, slots)


def choose_slots(count: int, spec: PhraseSpec, rng: np.random.Generator) -> frozenset:
    available = pause_slots(spec)
    if not 0 <= count <= available:
        raise ValueError(f"cannot choose {count} pause slots out of {available}")
    if count == 0:
        return frozenset()
    return frozenset(int(s) for s in rng.choice(available, size=count, replace=False))
