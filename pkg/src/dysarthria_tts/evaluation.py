"""WER scoring, leave-one-speaker-out splits and severity-group aggregation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import RawSeverity, UtteranceRecord
from .errors import DataError


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    deletions: int
    insertions: int
    ref_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        return self.errors / self.ref_words

    def __add__(self, other: "WerBreakdown") -> "WerBreakdown":
        return WerBreakdown(self.substitutions + other.substitutions, self.deletions + other.deletions,
                            self.insertions + other.insertions, self.ref_words + other.ref_words)

    def to_json(self) -> dict:
        return {"substitutions": self.substitutions, "deletions": self.deletions,
                "insertions": self.insertions, "ref_words": self.ref_words, "wer": self.wer}


def wer(reference: Sequence[str], hypothesis: Sequence[str]) -> WerBreakdown:
    """Levenshtein alignment with unit costs.

    Among minimum-cost alignments the one with the fewest insertions plus
    deletions (that is, the most substitutions) is reported.
    """
    ref = list(reference)
    hyp = list(hypothesis)
    n, m = len(ref), len(hyp)
    if n == 0:
        raise ValueError("reference must contain at least one word")
    # cost = errors * k + indels orders alignments by errors, then indels
    k = n + m + 1
    sub, indel = k, k + 1
    rows = [[j * indel for j in range(m + 1)]]
    prev = rows[0]
    for i in range(1, n + 1):
        r = ref[i - 1]
        cur = [i * indel] * (m + 1)
        for j in range(1, m + 1):
            best = prev[j - 1] + (sub if r != hyp[j - 1] else 0)
            if prev[j] + indel < best:
                best = prev[j] + indel
            if cur[j - 1] + indel < best:
                best = cur[j - 1] + indel
            cur[j] = best
        rows.append(cur)
        prev = cur

    s = d = ins = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            mismatch = ref[i - 1] != hyp[j - 1]
            if rows[i][j] == rows[i - 1][j - 1] + (sub if mismatch else 0):
                s += mismatch
                i -= 1
                j -= 1
                continue
        if i > 0 and rows[i][j] == rows[i - 1][j] + indel:
            d += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return WerBreakdown(s, d, ins, n)


def read_transcripts(path) -> dict[str, str]:
    """``utterance_id<TAB>text`` lines; text may be empty for a hypothesis."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        uid, sep, text = line.partition("\t")
        if not sep:
            raise DataError(f"{path}:{lineno}: expected utterance_id<TAB>text")
        if uid in out:
            raise DataError(f"{path}:{lineno}: duplicate utterance_id {uid!r}")
        out[uid] = text
    return out


def score_transcripts(refs: Mapping[str, str], hyps: Mapping[str, str]) -> dict[str, WerBreakdown]:
    missing = sorted(set(refs) - set(hyps))
    if missing:
        raise DataError(f"no hypothesis for {len(missing)} utterances, e.g. {missing[0]!r}")
    extra = sorted(set(hyps) - set(refs))
    if extra:
        raise DataError(f"hypothesis without reference, e.g. {extra[0]!r}")
    scores = {}
    for uid in sorted(refs):
        ref = refs[uid].split()
        if not ref:
            raise DataError(f"empty reference for {uid!r}")
        scores[uid] = wer(ref, hyps[uid].split())
    return scores


@dataclass(frozen=True)
class LosoSplit:
    test_speaker: str
    train_speakers: frozenset
    # synthetic utterances conditioned on these speakers must stay out of training
    excluded_synthetic_speakers: frozenset = field(default_factory=frozenset)

    def to_json(self) -> dict:
        return {"test_speaker": self.test_speaker, "train_speakers": sorted(self.train_speakers),
                "excluded_synthetic_speakers": sorted(self.excluded_synthetic_speakers)}


def loso_splits(records: Sequence[UtteranceRecord]) -> list[LosoSplit]:
    """One split per dysarthric speaker; training side is every other speaker."""
    speakers: dict[str, RawSeverity] = {}
    for rec in records:
        speakers.setdefault(rec.speaker_id, rec.severity)
    if len(speakers) < 2:
        raise DataError("leave-one-speaker-out needs at least two speakers")
    everyone = frozenset(speakers)
    return [LosoSplit(spk, everyone - {spk}, frozenset({spk}))
            for spk in sorted(speakers) if speakers[spk] is not RawSeverity.NORMAL]


@dataclass(frozen=True)
class GroupReport:
    per_speaker: dict
    per_group: dict
    overall: float

    def to_json(self) -> dict:
        return {"per_speaker": dict(self.per_speaker), "per_group": dict(self.per_group),
                "overall": self.overall}


def group_average(per_speaker: Mapping[str, float], groups: Mapping[str, str]) -> GroupReport:
    """Unweighted mean WER per group and over all speakers."""
    members: dict[str, list[float]] = {}
    for spk, value in per_speaker.items():
        if spk not in groups:
            raise DataError(f"speaker {spk!r} has no group")
        members.setdefault(groups[spk], []).append(value)
    if not per_speaker:
        raise DataError("no speakers to average")
    per_group = {g: _mean(v) for g, v in members.items()}
    return GroupReport(dict(per_speaker), per_group, _mean(per_speaker.values()))


def _mean(values) -> float:
    # sort so the float sum does not depend on input order
    values = sorted(values)
    return sum(values) / len(values)


def relative_improvement(baseline: float, experimental: float) -> float:
    if not baseline > 0:
        raise ValueError("baseline must be positive")
    return 100.0 * (baseline - experimental) / baseline


def display_round(value: float, digits: int = 1) -> float:
    """Round half to even at ``digits`` decimals, ignoring binary representation noise."""
    cleaned = Decimal(repr(round(value, 9)))
    return float(cleaned.quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_EVEN))


def format_group_table(reports: Mapping[str, GroupReport], baseline: str,
                       group_order: Sequence[str] | None = None) -> str:
    """Plain-text table: one row per group plus ``All``; WER columns then improvements."""
    names = list(reports)
    others = [n for n in names if n != baseline]
    groups = list(group_order) if group_order else sorted(reports[baseline].per_group)
    header = ["group"] + names + [f"impr {n}" for n in others]
    rows = [header]
    for g in groups + ["All"]:
        vals = [reports[n].overall if g == "All" else reports[n].per_group[g] for n in names]
        base = vals[names.index(baseline)]
        row = [g] + [f"{display_round(v):.1f}" for v in vals]
        for n in others:
            other = reports[n].overall if g == "All" else reports[n].per_group[g]
            row.append(f"{display_round(relative_improvement(base, other)):.1f}%")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def speaker_report(scores: Mapping[str, WerBreakdown], records: Sequence[UtteranceRecord]) -> GroupReport:
    """Pool utterance scores per speaker (as percentages) and group by severity label."""
    by_uid = {r.utterance_id: r for r in records}
    pooled: dict[str, WerBreakdown] = {}
    groups = {}
    for uid, b in scores.items():
        rec = by_uid.get(uid)
        if rec is None:
            raise DataError(f"utterance {uid!r} not in the group manifest")
        pooled[rec.speaker_id] = pooled[rec.speaker_id] + b if rec.speaker_id in pooled else b
        groups[rec.speaker_id] = rec.severity.value
    return group_average({s: 100.0 * b.wer for s, b in pooled.items()}, groups)


def report_json(report: GroupReport) -> str:
    return json.dumps(report.to_json(), sort_keys=True)
