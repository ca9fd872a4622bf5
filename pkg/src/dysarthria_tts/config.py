"""Flat ``key = value`` run configuration.

Every key has a default; unknown keys are rejected. The first non-comment
line may be ``format = 1``. Values are parsed according to the default's
type, so ``steps = 2000`` becomes an int and ``learning_rate = 1e-3`` a float.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .acoustic_model import ModelConfig, TrainConfig
from .errors import ConfigError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    # model
    d_model: int = 32
    n_blocks_enc: int = 2
    n_blocks_dec: int = 2
    n_heads: int = 2
    ffn_conv_width: int = 3
    d_ffn: int = 64
    n_mels: int = 80
    max_seq: int = 256
    predictor_kernel: int = 3
    predictor_dropout: float = 0.5
    speaker_dropout: float = 0.5
    n_bins: int = 256
    init_seed: int = 0
    # training
    steps: int = 2000
    learning_rate: float = 1e-3
    batch_size: int = 4
    train_seed: int = 0
    grad_clip: float = 1.0
    # data
    lexicon: str = ""  # empty selects the bundled lexicon

    def model_config(self, n_phones: int, n_speakers: int) -> ModelConfig:
        return ModelConfig(
            n_phones=n_phones, n_speakers=n_speakers, d_model=self.d_model,
            n_blocks_enc=self.n_blocks_enc, n_blocks_dec=self.n_blocks_dec, n_heads=self.n_heads,
            ffn_conv_width=self.ffn_conv_width, d_ffn=self.d_ffn, n_mels=self.n_mels,
            max_seq=self.max_seq, predictor_kernel=self.predictor_kernel,
            predictor_dropout=self.predictor_dropout, n_bins=self.n_bins,
            speaker_dropout=self.speaker_dropout)

    def train_config(self) -> TrainConfig:
        return TrainConfig(steps=self.steps, learning_rate=self.learning_rate,
                           batch_size=self.batch_size, seed=self.train_seed, grad_clip=self.grad_clip)


def _convert(key, raw, default):
    try:
        if isinstance(default, bool):
            if raw.lower() not in ("true", "false"):
                raise ValueError(raw)
            return raw.lower() == "true"
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse_config(text: str) -> RunConfig:
    defaults = RunConfig()
    known = {f.name: getattr(defaults, f.name) for f in fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key == "format":
            if raw != str(FORMAT_VERSION):
                raise ConfigError(f"unsupported config format {raw!r}")
            continue
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw, known[key])
    return replace(defaults, **values)


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        return parse_config(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def dump_config(cfg: RunConfig) -> str:
    lines = [f"format = {FORMAT_VERSION}"]
    lines += [f"{f.name} = {getattr(cfg, f.name)}" for f in fields(RunConfig)]
    return "\n".join(lines) + "\n"
