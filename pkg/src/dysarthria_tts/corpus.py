"""Corpus ingestion: manifests, alignments, severity labels and pause statistics.

A manifest is a JSON-lines file, one utterance per line::

    {"utterance_id": "u1", "speaker_id": "F01", "severity": "low",
     "transcript": "we would like to play", "alignment_path": "ali/u1.json"}

``alignment_path`` is resolved relative to the manifest's directory. An
alignment file holds ``frame_seconds`` and a list of
``[phone, duration_frames, word_index]`` triples where ``word_index == -1``
marks silence.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import AlignmentError, DataError, ManifestError

DEFAULT_FRAME_SECONDS = 256 / 22050

MANIFEST_KEYS = ("utterance_id", "speaker_id", "severity", "transcript")
OPTIONAL_MANIFEST_KEYS = ("alignment_path",)


class RawSeverity(str, enum.Enum):
    NORMAL = "normal"
    VERY_LOW = "very_low"
    LOW = "low"
    MEDIUM = "medium"

    @classmethod
    def parse(cls, label: str) -> "RawSeverity":
        try:
            return cls(label.strip().lower())
        except (ValueError, AttributeError):
            raise DataError(f"unknown severity label {label!r}") from None


class SeverityClass(enum.IntEnum):
    NORMAL = 0
    MILD = 1  # very low and low pooled
    MODERATE = 2


def severity_class(label: RawSeverity) -> SeverityClass:
    """Collapse the four corpus labels onto the three conditioning classes."""
    if label is RawSeverity.NORMAL:
        return SeverityClass.NORMAL
    if label in (RawSeverity.VERY_LOW, RawSeverity.LOW):
        return SeverityClass.MILD
    return SeverityClass.MODERATE


@dataclass(frozen=True)
class Alignment:
    entries: tuple[tuple[str, int, int], ...]
    frame_seconds: float = DEFAULT_FRAME_SECONDS

    def __post_init__(self):
        entries = tuple((str(p), int(d), int(w)) for p, d, w in self.entries)
        object.__setattr__(self, "entries", entries)
        if not (self.frame_seconds > 0 and math.isfinite(self.frame_seconds)):
            raise AlignmentError(f"frame_seconds must be positive, got {self.frame_seconds}")
        last_word = -1
        for phone, dur, word in entries:
            if dur < 0:
                raise AlignmentError(f"negative duration for phone {phone!r}")
            if word < -1:
                raise AlignmentError(f"word_index {word} < -1")
            if word >= 0:
                if word < last_word:
                    raise AlignmentError("word indices must be nondecreasing")
                last_word = word
        if self.total_frames <= 0:
            raise AlignmentError("alignment has zero total duration")

    @property
    def total_frames(self) -> int:
        return sum(d for _, d, _ in self.entries)

    @property
    def n_words(self) -> int:
        return len({w for _, _, w in self.entries if w >= 0})

    def between_word_pauses(self) -> int:
        """Silence entries sitting strictly between two different words.

        Leading/trailing silence and silence inside a word are not counted.
        Adjacent silence entries each count.
        """
        count = 0
        prev_word = None
        pending = 0
        for _, _, w in self.entries:
            if w == -1:
                if prev_word is not None:
                    pending += 1
                continue
            if prev_word is not None and w != prev_word:
                count += pending
            pending = 0
            prev_word = w
        return count

    def to_json(self) -> dict:
        return {"frame_seconds": self.frame_seconds,
                "entries": [list(e) for e in self.entries]}

    @classmethod
    def from_json(cls, obj: dict) -> "Alignment":
        if not isinstance(obj, dict) or set(obj) != {"frame_seconds", "entries"}:
            raise AlignmentError("alignment must have exactly keys frame_seconds, entries")
        entries = obj["entries"]
        if not isinstance(entries, list):
            raise AlignmentError("entries must be a list")
        triples = []
        for e in entries:
            if (not isinstance(e, list) or len(e) != 3 or not isinstance(e[0], str)
                    or not _is_int(e[1]) or not _is_int(e[2])):
                raise AlignmentError(f"bad alignment entry {e!r}")
            triples.append((e[0], e[1], e[2]))
        fs = obj["frame_seconds"]
        if isinstance(fs, bool) or not isinstance(fs, (int, float)):
            raise AlignmentError("frame_seconds must be a number")
        return cls(tuple(triples), float(fs))


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def load_alignment(path) -> Alignment:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AlignmentError(f"{path}: invalid JSON ({exc})") from None
    try:
        return Alignment.from_json(obj)
    except AlignmentError as exc:
        raise AlignmentError(f"{path}: {exc}") from None


def write_alignment(alignment: Alignment, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(alignment.to_json()) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class UtteranceRecord:
    utterance_id: str
    speaker_id: str
    severity: RawSeverity
    transcript: str
    alignment: Alignment | None = None
    alignment_path: str | None = None

    def __post_init__(self):
        if not self.utterance_id:
            raise DataError("empty utterance_id")
        if not self.speaker_id:
            raise DataError(f"{self.utterance_id}: empty speaker_id")
        if not any(ch.isalnum() for ch in self.transcript):
            raise DataError(f"{self.utterance_id}: transcript has no word tokens")

    @property
    def severity_class(self) -> SeverityClass:
        return severity_class(self.severity)

    def to_json(self) -> dict:
        obj = {"utterance_id": self.utterance_id, "speaker_id": self.speaker_id,
               "severity": self.severity.value, "transcript": self.transcript}
        if self.alignment_path is not None:
            obj["alignment_path"] = self.alignment_path
        return obj


def parse_manifest(path, lenient: bool = False,
                   load_alignments: bool = True) -> list[UtteranceRecord]:
    """Read a JSON-lines manifest, validating every record.

    Unknown keys are an error unless ``lenient``. Blank lines are skipped.
    """
    path = Path(path)
    base = path.parent
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from None
    records = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"invalid JSON ({exc.msg})", lineno, path) from None
        if not isinstance(obj, dict):
            raise ManifestError("record must be a JSON object", lineno, path)
        missing = [k for k in MANIFEST_KEYS if k not in obj]
        if missing:
            raise ManifestError(f"missing keys {missing}", lineno, path)
        unknown = sorted(set(obj) - set(MANIFEST_KEYS) - set(OPTIONAL_MANIFEST_KEYS))
        if unknown and not lenient:
            raise ManifestError(f"unknown keys {unknown}", lineno, path)
        for k in MANIFEST_KEYS:
            if not isinstance(obj[k], str):
                raise ManifestError(f"{k} must be a string", lineno, path)
        ali_path = obj.get("alignment_path")
        if ali_path is not None and not isinstance(ali_path, str):
            raise ManifestError("alignment_path must be a string", lineno, path)
        uid = obj["utterance_id"]
        if uid in seen:
            raise ManifestError(f"duplicate utterance_id {uid!r}", lineno, path)
        seen.add(uid)
        try:
            severity = RawSeverity.parse(obj["severity"])
            alignment = None
            if ali_path is not None and load_alignments:
                alignment = load_alignment(base / ali_path)
            records.append(UtteranceRecord(uid, obj["speaker_id"], severity,
                                           obj["transcript"], alignment, ali_path))
        except ManifestError:
            raise
        except (DataError, OSError) as exc:
            raise ManifestError(str(exc), lineno, path) from None
    return records


def write_manifest(records: Iterable[UtteranceRecord], path,
                   write_alignments: bool = True) -> None:
    """Write records as JSON lines; alignment files go next to the manifest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for rec in records:
        lines.append(json.dumps(rec.to_json(), ensure_ascii=False))
        if write_alignments and rec.alignment is not None and rec.alignment_path:
            write_alignment(rec.alignment, path.parent / rec.alignment_path)
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


@dataclass(frozen=True)
class GroupPauseStats:
    mean_pauses: float
    mean_slots: float
    sentence_count: int


PauseStats = dict  # RawSeverity -> GroupPauseStats


def pause_statistics(records: Sequence[UtteranceRecord]) -> dict[RawSeverity, GroupPauseStats]:
    """Mean between-word pauses and mean inter-word slots per raw severity group."""
    sums: dict[RawSeverity, list[int]] = {}
    for rec in records:
        if rec.alignment is None:
            raise DataError(f"utterance {rec.utterance_id!r} has no alignment")
        acc = sums.setdefault(rec.severity, [0, 0, 0])
        acc[0] += rec.alignment.between_word_pauses()
        acc[1] += max(rec.alignment.n_words - 1, 0)
        acc[2] += 1
    # integer totals keep the means independent of record order
    return {
        group: GroupPauseStats(pauses / n, slots / n, n)
        for group, (pauses, slots, n) in sorted(sums.items(), key=lambda kv: severity_order(kv[0]))
    }


def severity_order(label: RawSeverity) -> int:
    return list(RawSeverity).index(label)


def pause_ratio_vs_normal(stats: dict[RawSeverity, GroupPauseStats], group: RawSeverity) -> float:
    """Percent by which ``group`` pauses more often than the normal group."""
    normal = stats.get(RawSeverity.NORMAL)
    if normal is None:
        raise DataError("no normal group in pause statistics")
    if normal.mean_pauses == 0:
        raise DataError("normal group has zero mean pauses; ratio undefined")
    if group not in stats:
        raise DataError(f"no {group.value} group in pause statistics")
    return 100.0 * (stats[group].mean_pauses / normal.mean_pauses - 1.0)


def severity_counts(records: Iterable[UtteranceRecord]) -> dict[str, int]:
    counts = {s.value: 0 for s in RawSeverity}
    for rec in records:
        counts[rec.severity.value] += 1
    return counts
