"""Bridge tests: format conformance against the consumer package,
window semantics, decoding, encoder plumbing, and the CLI."""

import struct
import warnings

import numpy as np
import pytest

from weldbridge import (
    BridgeConfig,
    ConfigError,
    DecodeError,
    extract_embeddings,
)
from weldbridge.cli import main as cli_main
from weldbridge.encoders import ProjectionEncoder, resolve_encoder, window_indices
from weldbridge.errors import BackboneError
from weldbridge.video import decode_video
from weldbridge.writer import write_embeddings

from weldwatch.video.embeddings import load_embeddings


def write_y4m(path, frames, fps=30, colorspace="mono"):
    """Write grayscale frames, (n, h, w) uint8, as an uncompressed
    YUV4MPEG2 stream."""
    frames = np.asarray(frames, dtype=np.uint8)
    n, h, w = frames.shape
    header = f"YUV4MPEG2 W{w} H{h} F{fps}:1 Ip A1:1 C{colorspace}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        for i in range(n):
            fh.write(b"FRAME\n")
            fh.write(frames[i].tobytes())
            if colorspace.startswith("420"):
                fh.write(bytes([128] * ((h // 2) * (w // 2) * 2)))


def moving_pattern(n_frames, height=48, width=64, seed=0):
    """A bright blob drifting over seeded noise; deterministic."""
    rng = np.random.default_rng(seed)
    base = rng.integers(0, 80, size=(height, width), dtype=np.uint8)
    ys, xs = np.mgrid[0:height, 0:width]
    frames = np.empty((n_frames, height, width), dtype=np.uint8)
    for t in range(n_frames):
        cy = height * (0.3 + 0.4 * np.sin(2 * np.pi * t / n_frames))
        cx = width * t / n_frames
        blob = 170.0 * np.exp(-(((ys - cy) / 6.0) ** 2 +
                                ((xs - cx) / 9.0) ** 2))
        frames[t] = np.clip(base + blob, 0, 255).astype(np.uint8)
    return frames


@pytest.fixture(scope="module")
def clip_3s(tmp_path_factory):
    path = tmp_path_factory.mktemp("clips") / "weld.y4m"
    write_y4m(path, moving_pattern(90), fps=30)
    return path


class TestCriterion10FormatConformance:
    def test_three_second_clip_round_trips(self, clip_3s, tmp_path):
        out = tmp_path / "weld.emb"
        config = BridgeConfig(video=clip_3s, output=out,
                              checkpoint="projection:7")
        result = extract_embeddings(config)
        assert result.n_frames == 90

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            sequence = load_embeddings(out)
        assert sequence.sample_id == "weld"
        assert sequence.dim == 2304
        assert sequence.n_frames == 90
        assert sequence.fps == 30.0
        assert np.all(np.isfinite(sequence.vectors))

    def test_repeated_extraction_is_bit_identical(self, clip_3s, tmp_path):
        outs = []
        for name in ("a.emb", "b.emb"):
            out = tmp_path / name
            extract_embeddings(BridgeConfig(video=clip_3s, output=out,
                                            checkpoint="projection:7"))
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestWindowing:
    def test_window_indices_center_and_clamp(self):
        idx = window_indices(6, window=4, half=2)
        assert idx.shape == (6, 4)
        assert idx[0].tolist() == [0, 1, 2, 3]
        assert idx[2].tolist() == [0, 1, 2, 3]
        assert idx[3].tolist() == [1, 2, 3, 4]
        assert idx[5].tolist() == [2, 3, 4, 5]

    def test_short_clip_repeats_last_frame(self):
        idx = window_indices(3, window=4, half=2)
        assert idx[0].tolist() == [0, 1, 2, 2]
        assert (idx == idx[0]).all()

    def test_single_window_video_yields_identical_vectors(self, tmp_path):
        path = tmp_path / "short.y4m"
        write_y4m(path, moving_pattern(64, seed=3), fps=30)
        out = tmp_path / "short.emb"
        extract_embeddings(BridgeConfig(video=path, output=out,
                                        checkpoint="projection:0"))
        sequence = load_embeddings(out)
        assert sequence.n_frames == 64
        assert (sequence.vectors == sequence.vectors[0]).all()

    def test_300_frame_clip(self, tmp_path):
        path = tmp_path / "long.y4m"
        write_y4m(path, moving_pattern(300, height=16, width=24, seed=4),
                  fps=30)
        out = tmp_path / "long.emb"
        result = extract_embeddings(BridgeConfig(
            video=path, output=out, checkpoint="projection:0"))
        assert result.n_frames == 300
        sequence = load_embeddings(out)
        assert sequence.n_frames == 300
        assert sequence.fps == 30.0


class TestDecoding:
    def test_mono_and_420_agree_on_gray_content(self, tmp_path):
        frames = moving_pattern(5, height=16, width=16, seed=6)
        mono = tmp_path / "m.y4m"
        sub = tmp_path / "s.y4m"
        write_y4m(mono, frames, colorspace="mono")
        write_y4m(sub, frames, colorspace="420")
        a = decode_video(mono)
        b = decode_video(sub)
        assert a.pixels.shape == b.pixels.shape == (5, 16, 16, 3)
        assert a.fps == b.fps == 30.0
        # Neutral chroma means the 4:2:0 stream is gray too.
        np.testing.assert_allclose(a.pixels.astype(int),
                                   b.pixels.astype(int), atol=1)

    def test_missing_file_and_bad_magic(self, tmp_path):
        with pytest.raises(DecodeError, match="not found"):
            decode_video(tmp_path / "nope.y4m")
        bad = tmp_path / "bad.y4m"
        bad.write_bytes(b"RIFFnope\n")
        with pytest.raises(DecodeError, match="YUV4MPEG2"):
            decode_video(bad)

    def test_truncated_frame(self, tmp_path):
        path = tmp_path / "t.y4m"
        write_y4m(path, moving_pattern(2, height=16, width=16))
        blob = path.read_bytes()
        path.write_bytes(blob[:-7])
        with pytest.raises(DecodeError, match="truncated"):
            decode_video(path)


class TestEncoders:
    def test_projection_identifier_forms(self):
        assert resolve_encoder("projection").seed == 0
        assert resolve_encoder("projection:9").seed == 9
        with pytest.raises(BackboneError, match="integer"):
            resolve_encoder("projection:x")

    def test_missing_backbone_checkpoint_is_structured(self):
        with pytest.raises(BackboneError, match="not found"):
            resolve_encoder("slowfast_r101_4x16x1_256e_kinetics400_rgb_"
                            "20210218-d8b58813.pth")

    def test_projection_rejects_tiny_frames(self):
        enc = ProjectionEncoder()
        pixels = np.zeros((3, 4, 4, 3), dtype=np.uint8)
        with pytest.raises(BackboneError, match="at least"):
            enc.embed_windows(pixels, window_indices(3))

    def test_torchscript_module_round_trips(self, tmp_path):
        torch = pytest.importorskip("torch")

        class Tiny(torch.nn.Module):
            def __init__(self):
                super().__init__()
                self.proj = torch.nn.Linear(3, 2304)

            def forward(self, x):
                return self.proj(x.mean(dim=(2, 3, 4)))

        module = torch.jit.script(Tiny().eval())
        ckpt = tmp_path / "tiny.pt"
        module.save(str(ckpt))

        clip = tmp_path / "c.y4m"
        write_y4m(clip, moving_pattern(10, height=16, width=16, seed=8))
        out = tmp_path / "c.emb"
        result = extract_embeddings(BridgeConfig(
            video=clip, output=out, checkpoint=str(ckpt)))
        assert result.n_frames == 10
        sequence = load_embeddings(out)
        assert sequence.dim == 2304
        assert np.all(np.isfinite(sequence.vectors))

    def test_torchscript_wrong_dim_is_structured(self, tmp_path):
        torch = pytest.importorskip("torch")

        class Wrong(torch.nn.Module):
            def forward(self, x):
                return x.mean(dim=(2, 3, 4))

        ckpt = tmp_path / "wrong.pt"
        torch.jit.script(Wrong().eval()).save(str(ckpt))
        clip = tmp_path / "c.y4m"
        write_y4m(clip, moving_pattern(3, height=16, width=16))
        with pytest.raises(BackboneError, match="2304"):
            extract_embeddings(BridgeConfig(video=clip,
                                            output=tmp_path / "c.emb",
                                            checkpoint=str(ckpt)))


class TestConfigAndWriter:
    def test_window_and_stride_are_pinned(self):
        with pytest.raises(ConfigError, match="64-frame"):
            BridgeConfig(video="v", output="o", window_frames=32)
        with pytest.raises(ConfigError, match="stride"):
            BridgeConfig(video="v", output="o", stride=2)

    def test_writer_layout_is_the_documented_bytes(self, tmp_path):
        vectors = np.arange(2 * 2304, dtype=np.float64).reshape(2, 2304)
        path = tmp_path / "w.emb"
        write_embeddings(path, "id7", vectors, fps=30.0)
        blob = path.read_bytes()
        magic, version, id_len = struct.unpack_from("<4sII", blob, 0)
        assert (magic, version, id_len) == (b"WWEB", 1, 3)
        assert blob[12:15] == b"id7"
        n, dim, fps = struct.unpack_from("<IIf", blob, 15)
        assert (n, dim, fps) == (2, 2304, 30.0)
        payload = np.frombuffer(blob, dtype="<f4", offset=27)
        assert payload.shape == (2 * 2304,)
        np.testing.assert_array_equal(payload[:4], [0, 1, 2, 3])

    def test_writer_rejects_bad_input(self, tmp_path):
        path = tmp_path / "w.emb"
        with pytest.raises(BackboneError, match="2304"):
            write_embeddings(path, "x", np.zeros((2, 7)), fps=30.0)
        bad = np.zeros((1, 2304))
        bad[0, 0] = np.nan
        with pytest.raises(BackboneError, match="non-finite"):
            write_embeddings(path, "x", bad, fps=30.0)


class TestCli:
    def test_happy_path(self, clip_3s, tmp_path, capsys):
        out = tmp_path / "cli.emb"
        code = cli_main(["--video", str(clip_3s), "--output", str(out),
                         "--checkpoint", "projection:7",
                         "--sample-id", "weld-001"])
        assert code == 0
        assert "90 frame vectors" in capsys.readouterr().out
        assert load_embeddings(out).sample_id == "weld-001"

    def test_exit_codes(self, clip_3s, tmp_path, capsys):
        out = str(tmp_path / "o.emb")
        assert cli_main(["--video", str(tmp_path / "no.y4m"),
                         "--output", out,
                         "--checkpoint", "projection"]) == 3
        assert cli_main(["--video", str(clip_3s), "--output", out,
                         "--window-frames", "16",
                         "--checkpoint", "projection"]) == 2
        assert cli_main(["--video", str(clip_3s), "--output", out]) == 4
        capsys.readouterr()
