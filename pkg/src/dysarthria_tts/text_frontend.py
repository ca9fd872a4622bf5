"""Lexicon lookup and inter-word pause slots.

Phones are represented by integer ids into the lexicon's inventory. The pause
symbol ``sp`` is always id 0 and is shared by alignment silences and inserted
pauses.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import LexiconError, OOVError, PauseSlotError

PAUSE = "sp"
PAUSE_ID = 0


@dataclass(frozen=True)
class Lexicon:
    entries: dict  # word -> tuple of phone symbols
    phone_inventory: tuple[str, ...]

    def __post_init__(self):
        if not self.phone_inventory or self.phone_inventory[0] != PAUSE:
            raise LexiconError(f"phone inventory must start with {PAUSE!r}")
        if len(set(self.phone_inventory)) != len(self.phone_inventory):
            raise LexiconError("duplicate phones in inventory")
        known = set(self.phone_inventory)
        for word, phones in self.entries.items():
            if not phones:
                raise LexiconError(f"empty pronunciation for {word!r}")
            if PAUSE in phones:
                raise LexiconError(f"pause symbol inside lexicon entry {word!r}")
            missing = set(phones) - known
            if missing:
                raise LexiconError(f"{word!r} uses phones outside the inventory: {sorted(missing)}")
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(self.phone_inventory)})

    @classmethod
    def from_entries(cls, entries: dict, extra_phones: Iterable[str] = ()) -> "Lexicon":
        entries = {w.lower(): tuple(p) for w, p in entries.items()}
        phones = {p for pron in entries.values() for p in pron} | set(extra_phones)
        phones.discard(PAUSE)
        return cls(entries, (PAUSE,) + tuple(sorted(phones)))

    def phone_id(self, phone: str) -> int:
        try:
            return self._index[phone]
        except KeyError:
            raise LexiconError(f"unknown phone {phone!r}") from None

    def phone(self, phone_id: int) -> str:
        return self.phone_inventory[phone_id]

    def __len__(self):
        return len(self.entries)


def load_lexicon(path=None) -> Lexicon:
    """Parse ``word<TAB>phone phone ...`` lines; ``#`` starts a comment line.

    With no path, the bundled toy lexicon is loaded.
    """
    if path is None:
        text = resources.files("dysarthria_tts").joinpath("data/lexicon.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise LexiconError(f"line {lineno}: expected word<TAB>phones")
        word, pron = line.split("\t", 1)
        word = word.strip().lower()
        phones = tuple(pron.split())
        if not word or not phones:
            raise LexiconError(f"line {lineno}: empty word or pronunciation")
        if word in entries:
            raise LexiconError(f"line {lineno}: duplicate word {word!r}")
        entries[word] = phones
    return Lexicon.from_entries(entries)


def tokenize(transcript: str) -> list[str]:
    words = []
    for tok in transcript.split():
        tok = tok.strip(string.punctuation).lower()
        if tok:
            words.append(tok)
    return words


@dataclass(frozen=True)
class PhraseSpec:
    phones: tuple[int, ...]
    word_of_phone: tuple[int, ...]
    n_words: int
    pause_slots_used: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "phones", tuple(int(p) for p in self.phones))
        object.__setattr__(self, "word_of_phone", tuple(int(w) for w in self.word_of_phone))
        object.__setattr__(self, "pause_slots_used", frozenset(self.pause_slots_used))
        if len(self.phones) != len(self.word_of_phone):
            raise ValueError("phones and word_of_phone differ in length")
        if self.n_words < 1:
            raise ValueError("a phrase needs at least one word")
        words = [w for w in self.word_of_phone if w >= 0]
        if any(b < a for a, b in zip(words, words[1:])):
            raise ValueError("word indices must be nondecreasing")
        if sorted(set(words)) != list(range(self.n_words)):
            raise ValueError("word indices must cover 0..n_words-1")
        for i, w in enumerate(self.word_of_phone):
            if w == -1:
                if self.phones[i] != PAUSE_ID:
                    raise ValueError("word index -1 on a non-pause phone")
                prev = next((x for x in reversed(self.word_of_phone[:i]) if x >= 0), None)
                nxt = next((x for x in self.word_of_phone[i + 1:] if x >= 0), None)
                if prev is None or nxt is None or prev == nxt:
                    raise ValueError("pause phones must sit between two distinct words")
            elif w < -1:
                raise ValueError(f"bad word index {w}")
        for s in self.pause_slots_used:
            if not 0 <= s < self.n_words - 1:
                raise ValueError(f"pause slot {s} out of range")

    def __len__(self):
        return len(self.phones)

    @property
    def is_pause(self) -> tuple[bool, ...]:
        return tuple(w == -1 for w in self.word_of_phone)


def phonemize(transcript: str, lexicon: Lexicon) -> PhraseSpec:
    words = tokenize(transcript)
    if not words:
        raise LexiconError(f"transcript has no words: {transcript!r}")
    phones, word_of_phone = [], []
    for wi, word in enumerate(words):
        pron = lexicon.entries.get(word)
        if pron is None:
            raise OOVError(word)
        phones.extend(lexicon.phone_id(p) for p in pron)
        word_of_phone.extend([wi] * len(pron))
    return PhraseSpec(tuple(phones), tuple(word_of_phone), len(words))


def pause_slots(spec: PhraseSpec) -> int:
    return spec.n_words - 1


def insert_pauses(spec: PhraseSpec, slots: Iterable[int]) -> PhraseSpec:
    """Insert one pause before the first phone of word ``slot + 1`` for each slot."""
    slots = list(slots)
    if len(set(slots)) != len(slots):
        raise PauseSlotError(f"duplicate pause slots {sorted(slots)}")
    for s in slots:
        if not 0 <= s <= spec.n_words - 2:
            raise PauseSlotError(f"pause slot {s} out of range 0..{spec.n_words - 2}")
        if s in spec.pause_slots_used:
            raise PauseSlotError(f"pause slot {s} already used")
    if not slots:
        return spec
    chosen = set(slots)
    phones, words = [], []
    prev_word = None
    for p, w in zip(spec.phones, spec.word_of_phone):
        if w >= 0 and prev_word is not None and w != prev_word and (w - 1) in chosen:
            phones.append(PAUSE_ID)
            words.append(-1)
        phones.append(p)
        words.append(w)
        if w >= 0:
            prev_word = w
    return PhraseSpec(tuple(phones), tuple(words), spec.n_words,
                      spec.pause_slots_used | chosen)
