import struct

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dysarthria_tts.acoustic_model import MelSpectrogram, build_model, synthesize
from dysarthria_tts.errors import ConfigMismatchError, CorruptCheckpointError, MelFormatError
from dysarthria_tts.io_formats import (
    load_checkpoint,
    mel_from_bytes,
    mel_nbytes,
    mel_to_bytes,
    read_mel,
    save_checkpoint,
    write_mel,
)
from dysarthria_tts.variance_adaptor import ProsodyControls

from helpers import random_spec, tiny_config


class TestMelb:
    def test_size_100_by_80(self, tmp_path):
        mel = MelSpectrogram(np.zeros((100, 80), dtype=np.float32))
        write_mel(mel, tmp_path / "a.mel")
        assert (tmp_path / "a.mel").stat().st_size == 32_020
        assert mel_nbytes(100, 80) == 32_020

    def test_layout(self):
        data = np.array([[1.0, -2.5], [0.125, 3.0], [7.0, 8.0]], dtype=np.float32)
        blob = mel_to_bytes(MelSpectrogram(data, 0.0125))
        expected = (b"MELB" + (1).to_bytes(4, "little") + (3).to_bytes(4, "little")
                    + (2).to_bytes(4, "little") + struct.pack("<f", 0.0125)
                    + b"".join(struct.pack("<f", v) for v in [1.0, -2.5, 0.125, 3.0, 7.0, 8.0]))
        assert blob == expected

    @settings(max_examples=60)
    @given(arrays(np.float32, st.tuples(st.integers(0, 12), st.integers(1, 9)),
                  elements=st.floats(-1e6, 1e6, width=32)),
           st.floats(1e-4, 1.0))
    def test_round_trip(self, data, frame_seconds):
        mel = MelSpectrogram(data, frame_seconds)
        blob = mel_to_bytes(mel)
        back = mel_from_bytes(blob)
        assert len(blob) == 20 + 4 * data.size
        assert back.data.tobytes() == data.tobytes()
        assert back.frame_seconds == float(np.float32(frame_seconds))
        assert mel_to_bytes(back) == blob

    def test_file_round_trip(self, tmp_path):
        data = np.random.default_rng(0).standard_normal((17, 80)).astype(np.float32)
        write_mel(MelSpectrogram(data), tmp_path / "x.mel")
        assert np.array_equal(read_mel(tmp_path / "x.mel").data, data)

    @pytest.mark.parametrize("mangle", [
        lambda b: b[:-1],
        lambda b: b + b"\0",
        lambda b: b"MELX" + b[4:],
        lambda b: b[:4] + (2).to_bytes(4, "little") + b[8:],
        lambda b: b[:10],
    ])
    def test_rejects(self, mangle):
        blob = mel_to_bytes(MelSpectrogram(np.ones((3, 4), dtype=np.float32)))
        with pytest.raises(MelFormatError):
            mel_from_bytes(mangle(blob))


class TestCheckpoint:
    def model(self, **kw):
        model = build_model(tiny_config(**kw), seed=4)
        model.adaptor.set_ranges((80.0, 300.0), (0.1, 2.0))
        return model

    def test_round_trip_bit_exact(self, tmp_path):
        model = self.model()
        save_checkpoint(model, tmp_path / "m.ckpt", {"phones": ["sp", "A"], "speakers": ["x", "y"]})
        loaded, meta = load_checkpoint(tmp_path / "m.ckpt")
        assert meta == {"phones": ["sp", "A"], "speakers": ["x", "y"]}
        assert loaded.config == model.config
        for (n1, a), (n2, b) in zip(model.state_dict().items(), loaded.state_dict().items()):
            assert n1 == n2 and a.dtype == b.dtype and torch.equal(a, b)
        spec = random_spec(np.random.default_rng(1), 6)
        x = synthesize(model, spec, 1, ProsodyControls(duration_coef=1.3))
        y = synthesize(loaded, spec, 1, ProsodyControls(duration_coef=1.3))
        assert x.mel.data.tobytes() == y.mel.data.tobytes()
        save_checkpoint(loaded, tmp_path / "again.ckpt", meta)
        assert (tmp_path / "again.ckpt").read_bytes() == (tmp_path / "m.ckpt").read_bytes()

    @pytest.mark.parametrize("cut", [5, 30, -1, -200])
    def test_truncated(self, tmp_path, cut):
        path = tmp_path / "m.ckpt"
        save_checkpoint(self.model(), path)
        path.write_bytes(path.read_bytes()[:cut])
        with pytest.raises(CorruptCheckpointError):
            load_checkpoint(path)

    def test_bit_flip(self, tmp_path):
        path = tmp_path / "m.ckpt"
        save_checkpoint(self.model(), path)
        blob = bytearray(path.read_bytes())
        blob[-100] ^= 0x01
        path.write_bytes(bytes(blob))
        with pytest.raises(CorruptCheckpointError, match="checksum"):
            load_checkpoint(path)

    def test_config_mismatch(self, tmp_path):
        path = tmp_path / "m.ckpt"
        save_checkpoint(self.model(n_mels=80), path)
        with pytest.raises(ConfigMismatchError, match="n_mels"):
            load_checkpoint(path, tiny_config(n_mels=64))
        load_checkpoint(path, tiny_config(n_mels=80))

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "m.ckpt"
        path.write_bytes(b"hello world, this is not a model checkpoint")
        with pytest.raises(CorruptCheckpointError):
            load_checkpoint(path)
