"""Binary containers: MELB mel files and model checkpoints.

MELB layout (little-endian)::

    b"MELB" | u32 version=1 | u32 n_frames | u32 n_mels | f32 frame_seconds
    | n_frames * n_mels float32, row-major

The header is 20 bytes, so frame_seconds is stored at single precision.

Checkpoint layout (little-endian)::

    b"DYSCKPT\\0" | u32 version | u64 header_len | header (UTF-8 JSON)
    | tensor payload | u32 crc32(header + payload)

The JSON header echoes the model config, carries free-form metadata (phone
inventory, speaker ids) and lists every tensor as name/dtype/shape/offset.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np
import torch

from .acoustic_model import AcousticModel, MelSpectrogram, ModelConfig, build_model
from .errors import CheckpointError, ConfigMismatchError, CorruptCheckpointError, MelFormatError

MEL_MAGIC = b"MELB"
MEL_VERSION = 1
_MEL_HEADER = struct.Struct("<4sIIIf")

CKPT_MAGIC = b"DYSCKPT\0"
CKPT_VERSION = 1
_CKPT_PREFIX = struct.Struct("<8sIQ")


def mel_nbytes(n_frames: int, n_mels: int) -> int:
    return _MEL_HEADER.size + 4 * n_frames * n_mels


def mel_to_bytes(mel: MelSpectrogram) -> bytes:
    frames, mels = mel.data.shape
    header = _MEL_HEADER.pack(MEL_MAGIC, MEL_VERSION, frames, mels, float(mel.frame_seconds))
    return header + mel.data.astype("<f4", copy=False).tobytes(order="C")


def mel_from_bytes(buf: bytes) -> MelSpectrogram:
    if len(buf) < _MEL_HEADER.size:
        raise MelFormatError("file shorter than the MELB header")
    magic, version, frames, mels, frame_seconds = _MEL_HEADER.unpack_from(buf)
    if magic != MEL_MAGIC:
        raise MelFormatError(f"bad magic {magic!r}")
    if version != MEL_VERSION:
        raise MelFormatError(f"unsupported MELB version {version}")
    if len(buf) != mel_nbytes(frames, mels):
        raise MelFormatError(f"expected {mel_nbytes(frames, mels)} bytes, found {len(buf)}")
    data = np.frombuffer(buf, dtype="<f4", offset=_MEL_HEADER.size).reshape(frames, mels)
    return MelSpectrogram(data.astype(np.float32), float(frame_seconds))


def write_mel(mel: MelSpectrogram, path) -> None:
    Path(path).write_bytes(mel_to_bytes(mel))


def read_mel(path) -> MelSpectrogram:
    return mel_from_bytes(Path(path).read_bytes())


def save_checkpoint(model: AcousticModel, path, meta: dict | None = None) -> None:
    tensors = []
    chunks = []
    offset = 0
    for name, t in model.state_dict().items():
        arr = t.detach().cpu().numpy()
        arr = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        raw = np.ascontiguousarray(arr).tobytes()
        tensors.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape),
                        "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps({"config": model.config.to_dict(), "meta": meta or {},
                         "tensors": tensors, "payload_bytes": offset},
                        sort_keys=True).encode("utf-8")
    payload = b"".join(chunks)
    crc = zlib.crc32(header + payload)
    blob = _CKPT_PREFIX.pack(CKPT_MAGIC, CKPT_VERSION, len(header)) + header + payload + struct.pack("<I", crc)
    Path(path).write_bytes(blob)


def load_checkpoint(path, config: ModelConfig | None = None):
    """Load ``(model, meta)``; ``config``, if given, must equal the stored one."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    if len(blob) < _CKPT_PREFIX.size:
        raise CorruptCheckpointError("checkpoint truncated before header")
    magic, version, header_len = _CKPT_PREFIX.unpack_from(blob)
    if magic != CKPT_MAGIC:
        raise CorruptCheckpointError("not a checkpoint file (bad magic)")
    if version != CKPT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    start = _CKPT_PREFIX.size
    if len(blob) < start + header_len + 4:
        raise CorruptCheckpointError("checkpoint truncated inside header")
    try:
        header = json.loads(blob[start:start + header_len].decode("utf-8"))
        payload_len = int(header["payload_bytes"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError):
        raise CorruptCheckpointError("unreadable checkpoint header") from None
    body_end = start + header_len + payload_len
    if len(blob) != body_end + 4:
        raise CorruptCheckpointError(f"checkpoint size {len(blob)} != expected {body_end + 4} (truncated?)")
    (crc,) = struct.unpack_from("<I", blob, body_end)
    if zlib.crc32(blob[start:body_end]) != crc:
        raise CorruptCheckpointError("checkpoint checksum mismatch")

    try:
        stored = ModelConfig(**header["config"])
    except TypeError as exc:
        raise CheckpointError(f"checkpoint config not understood: {exc}") from None
    if config is not None and config != stored:
        diff = {k: (v, getattr(config, k)) for k, v in stored.to_dict().items()
                if getattr(config, k) != v}
        raise ConfigMismatchError(f"checkpoint config differs (stored, requested): {diff}")

    model = build_model(stored)
    expected = model.state_dict()
    payload = blob[start + header_len:body_end]
    state = {}
    for t in header["tensors"]:
        raw = payload[t["offset"]:t["offset"] + t["nbytes"]]
        arr = np.frombuffer(raw, dtype=np.dtype(t["dtype"])).reshape(t["shape"])
        state[t["name"]] = torch.from_numpy(arr.copy())
    if set(state) != set(expected):
        raise ConfigMismatchError("checkpoint tensors do not match the model layout")
    for name, ref in expected.items():
        if tuple(state[name].shape) != tuple(ref.shape):
            raise ConfigMismatchError(f"shape mismatch for {name}: {tuple(state[name].shape)} vs {tuple(ref.shape)}")
    model.load_state_dict(state)
    return model, header["meta"]
