"""Toy multi-speaker non-autoregressive text-to-mel model.

Phoneme embedding + sinusoidal positions -> FFT encoder -> speaker embedding
-> variance adaptor (severity, duration, pitch, energy, length regulation)
-> FFT decoder -> linear projection to mel bins.

Everything runs unbatched in float64 on CPU; the toy configuration trains in
minutes on one core.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import torch
from torch import nn
import torch.nn.functional as F

from .corpus import DEFAULT_FRAME_SECONDS, SeverityClass
from .errors import TrainingDivergedError
from .pause_model import PauseModel, choose_slots, pause_count
from .text_frontend import PhraseSpec, insert_pauses
from .variance_adaptor import LN_EPS, AdaptorOutput, ProsodyControls, VarianceAdaptor

DTYPE = torch.float64


@dataclass(frozen=True)
class ModelConfig:
    n_phones: int
    n_speakers: int
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
    n_bins: int = 256
    speaker_dropout: float = 0.5

    def __post_init__(self):
        for f in fields(self):
            if f.name not in ("predictor_dropout", "speaker_dropout") and getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be positive")
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")
        for name in ("predictor_dropout", "speaker_dropout"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")

    @classmethod
    def full_scale(cls, n_phones, n_speakers, **overrides):
        """Encoder/decoder depth 4 and width 256, 80 mel bins."""
        base = dict(d_model=256, n_blocks_enc=4, n_blocks_dec=4, n_heads=2,
                    ffn_conv_width=9, d_ffn=1024, n_mels=80)
        base.update(overrides)
        return cls(n_phones, n_speakers, **base)

    def to_dict(self):
        return asdict(self)


def sinusoidal_positions(length: int, d_model: int) -> torch.Tensor:
    pos = torch.arange(length, dtype=DTYPE).unsqueeze(1)
    i = torch.arange(0, d_model, 2, dtype=DTYPE)
    angle = pos / torch.pow(10000.0, i / d_model)
    pe = torch.zeros(length, d_model, dtype=DTYPE)
    pe[:, 0::2] = torch.sin(angle)
    pe[:, 1::2] = torch.cos(angle[:, : d_model // 2])
    return pe


class SelfAttention(nn.Module):
    def __init__(self, d_model, n_heads):
        super().__init__()
        self.n_heads = n_heads
        self.qkv = nn.Linear(d_model, 3 * d_model)
        self.out = nn.Linear(d_model, d_model)

    def forward(self, x, return_weights=False):
        T, d = x.shape
        dh = d // self.n_heads
        q, k, v = self.qkv(x).view(T, 3, self.n_heads, dh).permute(1, 2, 0, 3)
        weights = torch.softmax(q @ k.transpose(-1, -2) / math.sqrt(dh), dim=-1)
        y = (weights @ v).permute(1, 0, 2).reshape(T, d)
        y = self.out(y)
        return (y, weights) if return_weights else y


class FFTBlock(nn.Module):
    """Self-attention and a conv feed-forward, each with residual + layer norm."""

    def __init__(self, d_model, n_heads, d_ffn, kernel_size):
        super().__init__()
        self.attn = SelfAttention(d_model, n_heads)
        self.norm1 = nn.LayerNorm(d_model, eps=LN_EPS)
        self.conv1 = nn.Conv1d(d_model, d_ffn, kernel_size, padding=kernel_size // 2)
        self.conv2 = nn.Conv1d(d_ffn, d_model, 1)
        self.norm2 = nn.LayerNorm(d_model, eps=LN_EPS)

    def forward(self, x, return_weights=False):
        a, w = self.attn(x, return_weights=True)
        x = self.norm1(x + a)
        y = self.conv2(F.relu(self.conv1(x.T))).T
        x = self.norm2(x + y)
        return (x, w) if return_weights else x


@dataclass
class TrainingExample:
    spec: PhraseSpec
    speaker: int
    severity: SeverityClass
    mel: torch.Tensor        # (frames, n_mels)
    durations: torch.Tensor  # (T,) long
    pitch: torch.Tensor      # (T,)
    energy: torch.Tensor     # (T,)
    utterance_id: str = ""

    def __post_init__(self):
        if int(self.durations.sum()) != self.mel.shape[0]:
            raise ValueError(f"{self.utterance_id}: durations sum {int(self.durations.sum())} "
                             f"!= mel frames {self.mel.shape[0]}")
        T = len(self.spec)
        if not (self.durations.shape == self.pitch.shape == self.energy.shape == (T,)):
            raise ValueError(f"{self.utterance_id}: per-phone targets do not match {T} phones")


@dataclass
class MelSpectrogram:
    data: np.ndarray  # (frames, n_mels) float32
    frame_seconds: float = DEFAULT_FRAME_SECONDS

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise ValueError("mel data must be 2-D (frames, n_mels)")
        if not np.isfinite(self.data).all():
            raise ValueError("mel contains non-finite values")
        if not self.frame_seconds > 0:
            raise ValueError("frame_seconds must be positive")

    @property
    def n_frames(self):
        return self.data.shape[0]

    @property
    def n_mels(self):
        return self.data.shape[1]


@dataclass
class SynthesisResult:
    mel: MelSpectrogram
    spec: PhraseSpec
    durations: list
    pitch: list
    energy: list
    inserted_slots: list = field(default_factory=list)

    def diagnostics(self) -> dict:
        return {"n_frames": self.mel.n_frames, "durations": self.durations,
                "pitch": self.pitch, "energy": self.energy,
                "inserted_slots": self.inserted_slots}


class AcousticModel(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        c = config
        self.config = c
        self.phone_embedding = nn.Embedding(c.n_phones, c.d_model)
        self.encoder = nn.ModuleList(
            FFTBlock(c.d_model, c.n_heads, c.d_ffn, c.ffn_conv_width) for _ in range(c.n_blocks_enc))
        self.speaker_embedding = nn.Embedding(c.n_speakers, c.d_model)
        self.adaptor = VarianceAdaptor(c.d_model, c.predictor_kernel, c.predictor_dropout, c.n_bins)
        self.decoder = nn.ModuleList(
            FFTBlock(c.d_model, c.n_heads, c.d_ffn, c.ffn_conv_width) for _ in range(c.n_blocks_dec))
        self.mel_linear = nn.Linear(c.d_model, c.n_mels)
        # probability of training an example without its speaker row, so that
        # severity effects cannot hide entirely inside speaker identity
        self.speaker_dropout = c.speaker_dropout

    def encode(self, spec: PhraseSpec, speaker: int, drop_speaker: bool = False) -> torch.Tensor:
        T = len(spec)
        if T == 0:
            raise ValueError("empty phone sequence")
        if T > self.config.max_seq:
            raise ValueError(f"sequence of {T} phones exceeds max_seq {self.config.max_seq}")
        if not 0 <= speaker < self.config.n_speakers:
            raise ValueError(f"speaker index {speaker} out of range")
        phones = torch.tensor(spec.phones, dtype=torch.long)
        if int(phones.max()) >= self.config.n_phones:
            raise ValueError("phone id outside the model's inventory")
        x = self.phone_embedding(phones) + sinusoidal_positions(T, self.config.d_model)
        for block in self.encoder:
            x = block(x)
        if drop_speaker:
            return x
        return x + self.speaker_embedding.weight[speaker]

    def decode(self, frames: torch.Tensor) -> torch.Tensor:
        x = frames + sinusoidal_positions(frames.shape[0], self.config.d_model)
        for block in self.decoder:
            x = block(x)
        return self.mel_linear(x)

    def forward_example(self, ex: TrainingExample, train_mode=False, generator=None):
        """Teacher-forced forward pass; returns (mel prediction, adaptor output)."""
        drop = False
        if train_mode and self.speaker_dropout > 0:
            drop = bool(torch.rand((), generator=generator) < self.speaker_dropout)
        h = self.encode(ex.spec, ex.speaker, drop_speaker=drop)
        controls = ProsodyControls(severity_coef=float(int(ex.severity)))
        out = self.adaptor(h, controls, durations=ex.durations, pitch=ex.pitch, energy=ex.energy,
                           train_mode=train_mode, generator=generator)
        return self.decode(out.hidden), out

    def set_value_ranges(self, examples):
        pitch = torch.cat([ex.pitch for ex in examples])
        energy = torch.cat([ex.energy for ex in examples])
        self.adaptor.set_ranges(_padded_range(pitch), _padded_range(energy))


def _padded_range(values):
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-6:
        hi = lo + 1.0
    return lo, hi


def build_model(config: ModelConfig, seed: int = 0) -> AcousticModel:
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = AcousticModel(config).to(DTYPE)
    return model


def example_losses(model: AcousticModel, ex: TrainingExample, train_mode=False, generator=None) -> dict:
    mel, out = model.forward_example(ex, train_mode, generator)
    target_log_d = torch.log(ex.durations.clamp(min=1).to(DTYPE))
    return {
        "mel": F.l1_loss(mel, ex.mel),
        "duration": F.mse_loss(out.log_durations, target_log_d),
        "pitch": F.mse_loss(out.pitch, ex.pitch),
        "energy": F.mse_loss(out.energy, ex.energy),
        "severity": (out.severity - float(int(ex.severity))) ** 2,
    }


def total_loss(model, examples, train_mode=False, generator=None):
    parts = None
    for ex in examples:
        losses = example_losses(model, ex, train_mode, generator)
        parts = losses if parts is None else {k: parts[k] + v for k, v in losses.items()}
    parts = {k: v / len(examples) for k, v in parts.items()}
    return sum(parts.values()), parts


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 1500
    learning_rate: float = 1e-3
    batch_size: int = 4
    seed: int = 0
    grad_clip: float = 1.0
    train_mode: bool = True  # predictor dropout during training


def train(model: AcousticModel, examples, hyper: TrainConfig, log=None):
    """Adam on the summed mel L1 and predictor losses, teacher-forced durations.

    Returns the per-step total loss. Minibatches are drawn from a generator
    seeded by ``hyper.seed`` so the trajectory is reproducible.
    """
    examples = list(examples)
    if not examples:
        raise ValueError("no training examples")
    model.set_value_ranges(examples)
    gen = torch.Generator().manual_seed(hyper.seed)
    opt = torch.optim.Adam(model.parameters(), lr=hyper.learning_rate)
    curve = []
    for step in range(hyper.steps):
        idx = torch.randint(len(examples), (min(hyper.batch_size, len(examples)),), generator=gen)
        batch = [examples[i] for i in idx.tolist()]
        loss, parts = total_loss(model, batch, hyper.train_mode, gen)
        value = float(loss.detach())
        if not math.isfinite(value):
            raise TrainingDivergedError(step, {k: float(v.detach()) for k, v in parts.items()})
        opt.zero_grad()
        loss.backward()
        if hyper.grad_clip:
            nn.utils.clip_grad_norm_(model.parameters(), hyper.grad_clip)
        opt.step()
        curve.append(value)
        if log is not None and (step % 100 == 0 or step == hyper.steps - 1):
            log(step, value, {k: float(v.detach()) for k, v in parts.items()})
    return curve


def pause_class_for(severity_coef: float) -> SeverityClass:
    """Nearest severity class for a (possibly fractional) coefficient, halves rounding up."""
    return SeverityClass(min(int(math.floor(severity_coef + 0.5)), 2))


@torch.no_grad()
def synthesize(model: AcousticModel, spec: PhraseSpec, speaker: int, controls: ProsodyControls,
               pause_model: PauseModel | None = None, rng: np.random.Generator | None = None,
               frame_seconds: float = DEFAULT_FRAME_SECONDS) -> SynthesisResult:
    inserted = []
    if controls.pause_insertion:
        if pause_model is None or rng is None:
            raise ValueError("pause insertion needs a pause model and a seeded generator")
        if spec.pause_slots_used:
            raise ValueError("pause insertion expects a phrase without pauses")
        count = pause_count(pause_model, spec.n_words, pause_class_for(controls.severity_coef), rng)
        chosen = choose_slots(count, spec, rng)
        spec = insert_pauses(spec, chosen)
        inserted = sorted(chosen)
    h = model.encode(spec, speaker)
    out: AdaptorOutput = model.adaptor(h, controls)
    mel = model.decode(out.hidden)
    return SynthesisResult(
        MelSpectrogram(mel.numpy(), frame_seconds), spec,
        out.durations.tolist(), out.pitch_used.tolist(), out.energy_used.tolist(), inserted)

