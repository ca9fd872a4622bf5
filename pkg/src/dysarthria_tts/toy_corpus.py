"""Procedural toy corpus standing in for real dysarthric recordings.

Seven speakers over the four raw severity groups read a shared pool of 100
prompts, so every group has exactly 100 sentences. Phone durations stretch
with severity, between-word pauses are placed so each group's mean pause
count hits a chosen target exactly, and mel/pitch/energy targets are
deterministic functions of (phone, duration, speaker, severity). Because the
targets are computed rather than recorded, this module is also the oracle the
acoustic model is trained against.
"""

from __future__ import annotations

import math
from importlib import resources
from pathlib import Path

import numpy as np
import torch

from .acoustic_model import DTYPE, TrainingExample
from .corpus import Alignment, RawSeverity, UtteranceRecord, parse_manifest, severity_class, write_manifest
from .errors import DataError
from .seeding import derive_seed
from .text_frontend import PAUSE, PAUSE_ID, Lexicon, PhraseSpec, load_lexicon, tokenize

SPEAKERS = (
    ("N01", RawSeverity.NORMAL),
    ("N02", RawSeverity.NORMAL),
    ("V01", RawSeverity.VERY_LOW),
    ("V02", RawSeverity.VERY_LOW),
    ("L01", RawSeverity.LOW),
    ("M01", RawSeverity.MEDIUM),
    ("M02", RawSeverity.MEDIUM),
)

# mean between-word pauses per sentence for each group
PAUSE_TARGETS = {
    RawSeverity.NORMAL: 0.26,
    RawSeverity.VERY_LOW: 0.57,
    RawSeverity.LOW: 1.21,
    RawSeverity.MEDIUM: 2.51,
}

SEVERITY_STRETCH = {
    RawSeverity.NORMAL: 1.0,
    RawSeverity.VERY_LOW: 1.35,
    RawSeverity.LOW: 1.6,
    RawSeverity.MEDIUM: 2.1,
}

SPEAKER_RATE = {"N01": 1.0, "N02": 1.1, "V01": 0.95, "V02": 1.05, "L01": 1.0, "M01": 0.95, "M02": 1.05}
SPEAKER_PITCH = {"N01": 1.1, "N02": 2.0, "V01": 1.3, "V02": 2.2, "L01": 1.2, "M01": 1.0, "M02": 1.9}

VOWELS = frozenset("AA AE AH AO AW AY EH ER EY IH IY OW UH UW".split())
UNVOICED = frozenset("CH F HH K P S SH T TH".split())

N_PROMPTS = 100
HELD_OUT_PROMPTS = (
    "we would like to play volleyball",
    "the green tree saw my friend",
    "please open the window today",
    "she saw the rain today",
    "you need water now",
)

SILENCE_LEVEL = 0.02
EDGE_SILENCE = 4
PAUSE_BASE = 10


def _base_duration(phone: str) -> int:
    if phone in VOWELS:
        return 6
    return 3 + derive_seed("dur", phone) % 2


def phone_duration(phone: str, speaker: str, severity: RawSeverity) -> float:
    base = PAUSE_BASE if phone == PAUSE else _base_duration(phone)
    return base * SEVERITY_STRETCH[severity] * SPEAKER_RATE.get(speaker, 1.0)


def make_prompts(lexicon: Lexicon, n: int = N_PROMPTS, seed: int = 7) -> list[str]:
    rng = np.random.default_rng(seed)
    words = sorted(lexicon.entries)
    held = set(HELD_OUT_PROMPTS)
    prompts, seen = [], set()
    while len(prompts) < n:
        k = int(rng.integers(3, 10))
        text = " ".join(words[i] for i in rng.choice(len(words), size=k, replace=False))
        if text in seen or text in held:
            continue
        seen.add(text)
        prompts.append(text)
    return prompts


def generate_records(lexicon: Lexicon | None = None, seed: int = 7) -> list[UtteranceRecord]:
    lexicon = lexicon or load_lexicon()
    prompts = make_prompts(lexicon, seed=seed)
    records = []
    for group, target in PAUSE_TARGETS.items():
        speakers = [s for s, g in SPEAKERS if g is group]
        n_words = [len(tokenize(p)) for p in prompts]
        all_slots = [(i, s) for i, n in enumerate(n_words) for s in range(n - 1)]
        total = round(target * len(prompts))
        rng = np.random.default_rng(derive_seed(seed, "pauses", group.value))
        picked = rng.choice(len(all_slots), size=total, replace=False)
        paused = {all_slots[i] for i in picked.tolist()}
        for i, prompt in enumerate(prompts):
            speaker = speakers[i % len(speakers)]
            uid = f"{speaker}_{i:03d}"
            slots = {s for (j, s) in paused if j == i}
            ali = _alignment_for(prompt, lexicon, speaker, group, slots, derive_seed(seed, uid))
            records.append(UtteranceRecord(uid, speaker, group, prompt, ali, f"alignments/{uid}.json"))
    return records


def _alignment_for(prompt, lexicon, speaker, group, pause_slots, seed):
    rng = np.random.default_rng(seed)
    entries = [(PAUSE, EDGE_SILENCE, -1)]
    words = tokenize(prompt)
    for w, word in enumerate(words):
        for phone in lexicon.entries[word]:
            d = round(phone_duration(phone, speaker, group)) + int(rng.integers(-1, 2))
            entries.append((phone, max(d, 1), w))
        if w in pause_slots:
            entries.append((PAUSE, round(phone_duration(PAUSE, speaker, group)), -1))
    entries.append((PAUSE, EDGE_SILENCE, -1))
    return Alignment(tuple(entries))


def write_toy_corpus(out_dir, seed: int = 7) -> Path:
    out_dir = Path(out_dir)
    records = generate_records(seed=seed)
    manifest = out_dir / "manifest.jsonl"
    write_manifest(records, manifest)
    return manifest


def bundled_manifest() -> Path:
    return Path(str(resources.files("dysarthria_tts").joinpath("data/toy_corpus/manifest.jsonl")))


def load_toy_corpus() -> list[UtteranceRecord]:
    return parse_manifest(bundled_manifest())


def phone_targets(phone: str, position: int, speaker: str, severity: RawSeverity) -> tuple[float, float]:
    """(pitch, energy) for one phone; pitch 0 on silence and unvoiced phones."""
    cls = int(severity_class(severity))
    if phone == PAUSE:
        return 0.0, 0.05
    energy = (1.0 if phone in VOWELS else 0.5 if phone in UNVOICED else 0.7) * (1.0 - 0.08 * cls)
    if phone in UNVOICED:
        return 0.0, energy
    pitch = SPEAKER_PITCH.get(speaker, 1.5) + (0.15 if phone in VOWELS else 0.0)
    pitch += 0.1 * cls * math.sin(1.7 * position)
    return pitch, energy


def render_mel(phones, durations, pitch, energy, speaker: str, n_mels: int = 80) -> np.ndarray:
    """Deterministic mel-like frames for a phone sequence."""
    k = np.arange(n_mels, dtype=np.float64)
    tilt = 0.02 * (1.0 + np.cos(k / n_mels * math.pi * (1 + derive_seed("tilt", speaker) % 3)))
    frames = []
    for phone, d, f0, e in zip(phones, durations, pitch, energy):
        if d == 0:
            continue
        if phone == PAUSE:
            frames.append(np.full((d, n_mels), SILENCE_LEVEL))
            continue
        centre = 5 + (derive_seed("centre", phone) % (n_mels - 10))
        spectrum = 0.6 * np.exp(-((k - centre) ** 2) / (2 * 6.0 ** 2))
        if f0 > 0:
            spectrum = spectrum + 0.4 * np.exp(-((k - (8 + 20 * f0)) ** 2) / (2 * 3.0 ** 2))
        env = np.sqrt(np.sin(math.pi * (np.arange(d) + 0.5) / d))
        frames.append(e * env[:, None] * spectrum[None, :] + tilt[None, :])
    return np.concatenate(frames, axis=0)


def speaker_index(records) -> dict[str, int]:
    return {s: i for i, s in enumerate(sorted({r.speaker_id for r in records}))}


def training_example(record: UtteranceRecord, lexicon: Lexicon, speakers: dict[str, int],
                     n_mels: int = 80) -> TrainingExample:
    """Turn an aligned record into teacher-forcing targets.

    Edge silences and silences inside a word are dropped (with their frames);
    between-word silences become ``sp`` phones.
    """
    if record.alignment is None:
        raise DataError(f"utterance {record.utterance_id!r} has no alignment")
    entries = list(record.alignment.entries)
    words = [w for _, _, w in entries]
    kept = []
    for i, (phone, dur, w) in enumerate(entries):
        if w == -1:
            prev = next((x for x in reversed(words[:i]) if x != -1), None)
            nxt = next((x for x in words[i + 1:] if x != -1), None)
            if prev is None or nxt is None or prev == nxt:
                continue
            kept.append((PAUSE, dur, -1, prev))
        else:
            kept.append((phone, dur, w, None))
    tokens = tokenize(record.transcript)
    n_words = record.alignment.n_words
    if n_words != len(tokens):
        raise DataError(f"{record.utterance_id}: alignment has {n_words} words, transcript {len(tokens)}")
    for w, word in enumerate(tokens):
        got = tuple(p for p, _, wi, _ in kept if wi == w)
        if lexicon.entries.get(word) != got:
            raise DataError(f"{record.utterance_id}: alignment phones {got} do not match lexicon for {word!r}")

    phones = [p for p, _, _, _ in kept]
    durations = [d for _, d, _, _ in kept]
    targets = [phone_targets(p, i, record.speaker_id, record.severity) for i, p in enumerate(phones)]
    pitch = [t[0] for t in targets]
    energy = [t[1] for t in targets]
    mel = render_mel(phones, durations, pitch, energy, record.speaker_id, n_mels)
    spec = PhraseSpec(
        tuple(PAUSE_ID if p == PAUSE else lexicon.phone_id(p) for p in phones),
        tuple(w for _, _, w, _ in kept),
        n_words,
        frozenset(s for _, _, w, s in kept if w == -1),
    )
    return TrainingExample(
        spec=spec, speaker=speakers[record.speaker_id], severity=record.severity_class,
        mel=torch.tensor(mel, dtype=DTYPE), durations=torch.tensor(durations, dtype=torch.long),
        pitch=torch.tensor(pitch, dtype=DTYPE), energy=torch.tensor(energy, dtype=DTYPE),
        utterance_id=record.utterance_id)
