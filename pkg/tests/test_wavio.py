"""WAV file reading and writing."""

import struct

import numpy as np
import pytest

from weldwatch.audio import read_wav, write_wav
from weldwatch.errors import ConfigError, DataError


class TestRoundTrips:
    def test_float32_round_trip_is_exact_at_f32(self, tmp_path):
        rng = np.random.default_rng(400)
        signal = rng.uniform(-0.9, 0.9, size=1000)
        path = tmp_path / "f32.wav"
        write_wav(path, signal, 16000, encoding="float32")
        back, sr = read_wav(path)
        assert sr == 16000
        np.testing.assert_array_equal(
            back, signal.astype(np.float32).astype(np.float64)
        )

    def test_pcm16_round_trip_within_quantization(self, tmp_path):
        rng = np.random.default_rng(401)
        signal = rng.uniform(-0.9, 0.9, size=1000)
        path = tmp_path / "p16.wav"
        write_wav(path, signal, 44100, encoding="pcm16")
        back, sr = read_wav(path)
        assert sr == 44100
        assert np.abs(back - signal).max() < 1e-4

    def test_pcm24_round_trip_within_quantization(self, tmp_path):
        rng = np.random.default_rng(402)
        signal = rng.uniform(-0.9, 0.9, size=1000)
        path = tmp_path / "p24.wav"
        write_wav(path, signal, 192000, encoding="pcm24")
        back, sr = read_wav(path)
        assert sr == 192000
        assert np.abs(back - signal).max() < 3e-7

    def test_odd_sample_count_padding(self, tmp_path):
        # 24-bit mono with an odd payload exercises the RIFF pad byte.
        signal = np.array([0.5, -0.5, 0.25])
        path = tmp_path / "odd.wav"
        write_wav(path, signal, 8000, encoding="pcm24")
        back, _ = read_wav(path)
        assert back.size == 3


def make_stereo_wav(path, left, right, sample_rate):
    frames = np.stack([left, right], axis=1).ravel()
    payload = np.round(np.clip(frames, -1, 1) * 32767.0).astype("<i2").tobytes()
    fmt = struct.pack("<HHIIHH", 1, 2, sample_rate, sample_rate * 4, 4, 16)
    with open(path, "wb") as fh:
        fh.write(b"RIFF")
        fh.write(struct.pack("<I", 4 + 8 + len(fmt) + 8 + len(payload)))
        fh.write(b"WAVE")
        fh.write(b"fmt " + struct.pack("<I", len(fmt)) + fmt)
        fh.write(b"data" + struct.pack("<I", len(payload)) + payload)


class TestChannelSelection:
    def test_multichannel_without_selector_rejected(self, tmp_path):
        path = tmp_path / "stereo.wav"
        make_stereo_wav(path, np.zeros(10), np.ones(10) * 0.5, 16000)
        with pytest.raises(DataError):
            read_wav(path)

    def test_channel_selector_picks_channel(self, tmp_path):
        path = tmp_path / "stereo.wav"
        left = np.full(10, 0.25)
        right = np.full(10, -0.5)
        make_stereo_wav(path, left, right, 16000)
        got_left, _ = read_wav(path, channel=0)
        got_right, _ = read_wav(path, channel=1)
        np.testing.assert_allclose(got_left, left, atol=1e-4)
        np.testing.assert_allclose(got_right, right, atol=1e-4)

    def test_out_of_range_channel_rejected(self, tmp_path):
        path = tmp_path / "stereo.wav"
        make_stereo_wav(path, np.zeros(4), np.zeros(4), 16000)
        with pytest.raises(DataError):
            read_wav(path, channel=2)


class TestMalformedFiles:
    def test_non_riff_rejected(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"OGGS" + b"\x00" * 40)
        with pytest.raises(DataError):
            read_wav(path)

    def test_truncated_data_chunk_rejected(self, tmp_path):
        path = tmp_path / "trunc.wav"
        write_wav(path, np.zeros(100), 16000, encoding="pcm16")
        blob = path.read_bytes()
        path.write_bytes(blob[:-20])
        with pytest.raises(DataError):
            read_wav(path)

    def test_unknown_chunks_are_skipped(self, tmp_path):
        path = tmp_path / "extra.wav"
        write_wav(path, np.full(8, 0.5), 16000, encoding="pcm16")
        blob = path.read_bytes()
        extra = b"LIST" + struct.pack("<I", 5) + b"junk!" + b"\x00"
        patched = blob[:12] + extra + blob[12:]
        patched = patched[:4] + struct.pack("<I", len(patched) - 8) + patched[8:]
        path.write_bytes(patched)
        back, sr = read_wav(path)
        assert sr == 16000
        np.testing.assert_allclose(back, 0.5, atol=1e-4)

    def test_unsupported_encoding_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            write_wav(tmp_path / "x.wav", np.zeros(4), 16000, encoding="pcm8")
