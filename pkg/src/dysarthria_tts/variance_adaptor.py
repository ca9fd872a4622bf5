"""Variance adaptor: severity conditioning, prosody predictors and length regulation.

All tensors here are unbatched: a hidden sequence is ``(T, d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn
import torch.nn.functional as F

LN_EPS = 1e-5


@dataclass(frozen=True)
class ProsodyControls:
    pitch_coef: float = 1.0
    energy_coef: float = 1.0
    duration_coef: float = 1.0
    severity_coef: float = 0.0
    pause_insertion: bool = False

    def __post_init__(self):
        for name in ("pitch_coef", "energy_coef", "duration_coef"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        if not 0.0 <= self.severity_coef <= 2.0:
            raise ValueError(f"severity_coef must lie in [0, 2], got {self.severity_coef}")


def severity_vector(table: torch.Tensor, coef: float) -> torch.Tensor:
    """Row of the 3-row severity table, linearly interpolated for fractional coef."""
    if not 0.0 <= coef <= 2.0:
        raise ValueError(f"severity coefficient {coef} outside [0, 2]")
    lo = math.floor(coef)
    if lo == coef:
        return table[int(lo)]
    w = coef - lo
    return (1.0 - w) * table[lo] + w * table[lo + 1]


def inject_severity(h: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
    if h.shape[-1] != v.shape[-1]:
        raise ValueError(f"severity vector width {v.shape[-1]} != hidden width {h.shape[-1]}")
    return h + v


def dropout(x: torch.Tensor, p: float, generator: torch.Generator | None) -> torch.Tensor:
    """Inverted dropout with the mask drawn from an explicit generator."""
    if p == 0.0:
        return x
    keep = torch.rand(x.shape, generator=generator, dtype=x.dtype) >= p
    return x * keep / (1.0 - p)


class VariancePredictor(nn.Module):
    """conv -> ReLU -> LN -> dropout, twice, then a per-step linear projection.

    Shared by the duration, pitch, energy and severity heads.
    """

    def __init__(self, d_in, d_hidden=None, kernel_size=3, dropout=0.5):
        super().__init__()
        if kernel_size % 2 != 1:
            raise ValueError("kernel_size must be odd for same padding")
        d_hidden = d_hidden or d_in
        self.dropout = dropout
        self.conv1 = nn.Conv1d(d_in, d_hidden, kernel_size, padding=kernel_size // 2)
        self.norm1 = nn.LayerNorm(d_hidden, eps=LN_EPS)
        self.conv2 = nn.Conv1d(d_hidden, d_hidden, kernel_size, padding=kernel_size // 2)
        self.norm2 = nn.LayerNorm(d_hidden, eps=LN_EPS)
        self.proj = nn.Linear(d_hidden, 1)

    def forward(self, h, train_mode=False, generator=None):
        if h.dim() != 2 or h.shape[1] != self.conv1.in_channels:
            raise ValueError(f"expected (T, {self.conv1.in_channels}) input, got {tuple(h.shape)}")
        p = self.dropout if train_mode else 0.0
        x = self.conv1(h.T).T
        x = dropout(self.norm1(F.relu(x)), p, generator)
        x = self.conv2(x.T).T
        x = dropout(self.norm2(F.relu(x)), p, generator)
        return self.proj(x).squeeze(-1)


def apply_duration(log_durations: torch.Tensor, coef: float) -> torch.Tensor:
    """Integer frame counts ``max(1, round(exp(log_d) * coef))`` (round half to even)."""
    if not coef > 0:
        raise ValueError("duration coefficient must be positive")
    frames = torch.round(torch.exp(log_durations.detach()) * coef)
    return torch.clamp(frames, min=1).to(torch.long)


def length_regulate(h: torch.Tensor, durations: torch.Tensor) -> torch.Tensor:
    """Repeat row ``i`` of ``h`` ``durations[i]`` times."""
    durations = torch.as_tensor(durations, dtype=torch.long)
    if durations.shape != (h.shape[0],):
        raise ValueError(f"durations shape {tuple(durations.shape)} does not match {h.shape[0]} steps")
    if (durations < 0).any():
        raise ValueError("negative duration")
    if int(durations.sum()) == 0:
        raise ValueError("all durations are zero; regulated sequence would be empty")
    return torch.repeat_interleave(h, durations, dim=0)


@dataclass(frozen=True)
class BinSpec:
    """``n_bins`` equal-width bins spanning [low, high]; out-of-range values clamp."""

    low: float
    high: float
    n_bins: int = 256

    def __post_init__(self):
        if not self.high > self.low:
            raise ValueError("bin range must have high > low")
        if self.n_bins < 1:
            raise ValueError("need at least one bin")

    def index(self, values: torch.Tensor) -> torch.Tensor:
        width = (self.high - self.low) / self.n_bins
        idx = torch.floor((values.detach() - self.low) / width).to(torch.long)
        return idx.clamp(0, self.n_bins - 1)

    def center(self, i: int) -> float:
        return self.low + (i + 0.5) * (self.high - self.low) / self.n_bins


def apply_scalar_embedding(h, values, coef, bins: BinSpec, table: torch.Tensor):
    if values.shape != (h.shape[0],):
        raise ValueError("one value per time step expected")
    if table.shape != (bins.n_bins, h.shape[1]):
        raise ValueError(f"embedding table shape {tuple(table.shape)} does not match bins/hidden width")
    return h + table[bins.index(values * coef)]


@dataclass
class AdaptorOutput:
    hidden: torch.Tensor          # frame-level, after length regulation
    log_durations: torch.Tensor
    pitch: torch.Tensor
    energy: torch.Tensor
    severity: torch.Tensor        # scalar, mean over steps of the severity head
    durations: torch.Tensor       # integer frames actually used
    pitch_used: torch.Tensor
    energy_used: torch.Tensor


class VarianceAdaptor(nn.Module):
    def __init__(self, d_model, kernel_size=3, dropout=0.5, n_bins=256,
                 pitch_range=(0.0, 1.0), energy_range=(0.0, 1.0)):
        super().__init__()
        self.severity_table = nn.Parameter(torch.randn(3, d_model) * 0.1)
        self.duration_predictor = VariancePredictor(d_model, d_model, kernel_size, dropout)
        self.pitch_predictor = VariancePredictor(d_model, d_model, kernel_size, dropout)
        self.energy_predictor = VariancePredictor(d_model, d_model, kernel_size, dropout)
        self.severity_predictor = VariancePredictor(d_model, d_model, kernel_size, dropout)
        self.pitch_table = nn.Parameter(torch.randn(n_bins, d_model) * 0.1)
        self.energy_table = nn.Parameter(torch.randn(n_bins, d_model) * 0.1)
        self.register_buffer("pitch_range", torch.tensor(pitch_range, dtype=torch.float64))
        self.register_buffer("energy_range", torch.tensor(energy_range, dtype=torch.float64))
        self.n_bins = n_bins

    def set_ranges(self, pitch_range, energy_range):
        self.pitch_range.copy_(torch.tensor(pitch_range))
        self.energy_range.copy_(torch.tensor(energy_range))

    @property
    def pitch_bins(self) -> BinSpec:
        lo, hi = self.pitch_range.tolist()
        return BinSpec(lo, hi, self.n_bins)

    @property
    def energy_bins(self) -> BinSpec:
        lo, hi = self.energy_range.tolist()
        return BinSpec(lo, hi, self.n_bins)

    def forward(self, h, controls: ProsodyControls, durations=None, pitch=None, energy=None,
                train_mode=False, generator=None) -> AdaptorOutput:
        """Condition ``h`` (T, d) and expand it to frames.

        Passing ground-truth ``durations``/``pitch``/``energy`` teacher-forces them;
        otherwise predictions are scaled by the control coefficients.
        """
        sev = self.severity_predictor(h, train_mode, generator).mean()
        h = inject_severity(h, severity_vector(self.severity_table, controls.severity_coef))
        log_d = self.duration_predictor(h, train_mode, generator)

        pitch_pred = self.pitch_predictor(h, train_mode, generator)
        if pitch is None:
            pitch, pitch_coef = pitch_pred.detach(), controls.pitch_coef
        else:
            pitch_coef = 1.0
        h = apply_scalar_embedding(h, pitch, pitch_coef, self.pitch_bins, self.pitch_table)

        energy_pred = self.energy_predictor(h, train_mode, generator)
        if energy is None:
            energy, energy_coef = energy_pred.detach(), controls.energy_coef
        else:
            energy_coef = 1.0
        h = apply_scalar_embedding(h, energy, energy_coef, self.energy_bins, self.energy_table)

        if durations is None:
            durations = apply_duration(log_d, controls.duration_coef)
        frames = length_regulate(h, durations)
        return AdaptorOutput(frames, log_d, pitch_pred, energy_pred, sev,
                             torch.as_tensor(durations, dtype=torch.long),
                             pitch * pitch_coef, energy * energy_coef)
