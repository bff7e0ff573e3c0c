"""Acceptance gate: one test per numbered criterion.

Each test prints one pass/fail line under pytest -v, asserts the
criterion at its stated tolerance, and holds its runtime budget. The
heavy end-to-end criteria (6 and 9) train real models on synthetic
corpora with fixed published seeds.
"""

import json
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from gradcheck import check_layer_gradients, nudge_off_kink
from weldwatch.audio.model import AudioAeConfig, AudioTrainRecipe, build_audio_ae
from weldwatch.audio.stft import (
    STANDARD_FFT_WINDOWS,
    StftConfig,
    buffer_size,
    model_latency_ms,
)
from weldwatch.audio.wavio import write_wav
from weldwatch.cli import main as cli_main
from weldwatch.dataset import DEFECT_CATEGORIES
from weldwatch.errors import ShapeError
from weldwatch.evaluation import auc, auc_exact, auc_trapezoid
from weldwatch.nn.layers import (
    BatchNorm1d,
    Conv1d,
    ConvTranspose1d,
    Dropout,
    LeakyReLU,
    Linear,
    PReLU,
    ReLU,
)
from weldwatch.pipeline import run_end_to_end
from weldwatch.scoring import AggregationMethod, ScoreSeries, aggregate
from weldwatch.synth import SynthSpec, generate_corpus
from weldwatch.video.model import VideoAeConfig, VideoTrainRecipe, build_video_ae

GRAD_TOL = 1e-4

# Published seeds for the end-to-end criteria; changing either changes
# every derived artifact.
END_TO_END_SEED = 20260815
GRID_SEED = 3


def run_cli(*argv):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return cli_main(list(argv))


def test_criterion_1_auc_oracle_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(2, 501))
        labels = rng.random(n) < rng.uniform(0.2, 0.8)
        labels[0] = True
        labels[-1] = False
        # One-decimal rounding forces heavy score ties.
        scores = np.round(rng.normal(size=n) * 2.0, 1)
        rank_route = auc(scores, labels)
        trapezoid_route = auc_trapezoid(scores, labels)
        assert abs(rank_route - trapezoid_route) <= 1e-12
        total = auc_exact(scores, labels) + auc_exact(-scores, labels)
        assert total == Fraction(1)
    assert time.perf_counter() - started < 5.0


def test_criterion_2_gradient_suite():
    started = time.perf_counter()
    rng = np.random.default_rng(2)
    for trial in range(50):
        b = int(rng.integers(1, 4))
        q = int(rng.integers(1, 5))
        p = int(rng.integers(1, 5))
        t = int(rng.integers(3, 9))

        x3 = rng.normal(size=(b, q, t))
        assert check_layer_gradients(
            Conv1d(q, p, 3, rng=rng), x3.copy(), rng) < GRAD_TOL
        assert check_layer_gradients(
            ConvTranspose1d(q, p, 3, rng=rng), x3.copy(), rng) < GRAD_TOL
        assert check_layer_gradients(
            BatchNorm1d(q), rng.normal(size=(max(b, 2), q, t)), rng) < GRAD_TOL

        x2 = rng.normal(size=(b, q))
        assert check_layer_gradients(
            Linear(q, p, rng=rng), x2.copy(), rng) < GRAD_TOL

        def reseed(drop, _seed=trial):
            drop.rng = np.random.default_rng(_seed)

        assert check_layer_gradients(
            Dropout(0.5, rng=np.random.default_rng(trial)), x2.copy(), rng,
            reset=reseed) < GRAD_TOL

        kinked = nudge_off_kink(rng.normal(size=(b, q, t)))
        assert check_layer_gradients(LeakyReLU(), kinked.copy(), rng) < GRAD_TOL
        assert check_layer_gradients(PReLU(), kinked.copy(), rng) < GRAD_TOL
        assert check_layer_gradients(ReLU(), kinked.copy(), rng) < GRAD_TOL
    assert time.perf_counter() - started < 30.0


def test_criterion_3_audio_shape_contract():
    started = time.perf_counter()
    n_bins = 9
    model = build_audio_ae(AudioAeConfig(n_bins=n_bins, width=12,
                                         bottleneck=6), seed=0)
    rng = np.random.default_rng(3)
    for t in (11, 12, 32, 64):
        x = rng.normal(size=(1, n_bins, t))
        assert model.reconstruct(x).shape == (1, n_bins, t)
        assert model.encode(x).shape == (1, 6, t - 10)
    with pytest.raises(ShapeError, match="inputs must have more than 10 "
                                         "frames"):
        model.reconstruct(rng.normal(size=(1, n_bins, 10)))
    assert time.perf_counter() - started < 1.0


def test_criterion_4_buffer_and_latency():
    assert buffer_size(8192, 16384) == 98304
    assert 42.6 <= model_latency_ms(8192, 192000) <= 42.8
    latencies = [model_latency_ms(fft // 2, 192000)
                 for fft in STANDARD_FFT_WINDOWS]
    assert round(min(latencies), 1) == 10.7
    assert round(max(latencies), 1) == 170.7


def test_criterion_5_video_structure():
    started = time.perf_counter()
    config = VideoAeConfig()
    chain = (config.input_dim,) + config.hidden_dims
    linears = list(zip(chain[:-1], chain[1:]))
    linears += [(config.latent_dim, config.latent_dim)] * 2
    reverse = chain[::-1]
    linears += list(zip(reverse[:-1], reverse[1:]))
    closed_form = sum(fan_in * fan_out + fan_out
                      for fan_in, fan_out in linears)

    model = build_video_ae(config, seed=0)
    enumerated = sum(p.data.size for p in model.net.parameters())
    assert closed_form == enumerated == model.param_count() == 2_715_840

    x = np.random.default_rng(5).normal(size=(2, config.input_dim))
    out = model.reconstruct(x, training=False)
    assert out.shape == (2, 2304)
    np.testing.assert_array_equal(out, model.reconstruct(x, training=False))
    twin = build_video_ae(config, seed=0)
    np.testing.assert_array_equal(out, twin.reconstruct(x, training=False))
    assert time.perf_counter() - started < 1.0


def test_criterion_6_synthetic_end_to_end(tmp_path):
    started = time.perf_counter()
    defect_counts = {category: 11 if i < 10 else 10
                     for i, category in enumerate(DEFECT_CATEGORIES)}
    spec = SynthSpec(n_good=120, defect_counts=defect_counts,
                     seed=END_TO_END_SEED, duration_s=2.0,
                     sample_rate=16000, intensity=1.0)
    assert sum(defect_counts.values()) == 120
    corpus = tmp_path / "corpus"
    generate_corpus(spec, corpus)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        stft = StftConfig(sample_rate=16000, fft_window=1024, hop_length=512,
                          log_magnitude=True)
    result = run_end_to_end(
        corpus, stft,
        AudioAeConfig(n_bins=stft.n_bins, width=64, bottleneck=48),
        AudioTrainRecipe(epochs=10, peak_lr=5e-3, batch_size=8,
                         segment_frames=32, seed=0),
        VideoAeConfig(),
        VideoTrainRecipe(epochs=200, batch_size=64, seed=0,
                         frames_per_sample=8),
        AggregationMethod("max_over_ma", ma_window_s=0.4),
        AggregationMethod("mean"),
        split_seed=0)

    assert result["split"] == {"train": 84, "val": 78, "test": 78}
    fusion = result["fusion"]
    assert fusion["test_auc"]["audio"] >= 0.85
    assert fusion["test_auc"]["video"] >= 0.85
    assert fusion["test_auc"]["fused"] >= max(
        fusion["test_auc"]["audio"], fusion["test_auc"]["video"]) - 0.02
    assert fusion["val_auc"]["fused"] >= max(
        fusion["val_auc"]["audio"], fusion["val_auc"]["video"])
    assert time.perf_counter() - started < 600.0


def test_criterion_7_streaming_equivalence(tmp_path):
    started = time.perf_counter()
    ckpt = tmp_path / "audio_ae.ckpt"
    build_audio_ae(AudioAeConfig(n_bins=129, width=8, bottleneck=4),
                   seed=0).save(ckpt)
    rng = np.random.default_rng(7)
    stft_flags = ["--sample-rate", "8000", "--fft-window", "256",
                  "--hop-length", "128", "--log-magnitude"]
    for i in range(20):
        wav = tmp_path / f"clip{i}.wav"
        n = int(rng.integers(4000, 12001))
        write_wav(wav, rng.normal(0.0, 0.2, size=n), 8000,
                  encoding="float32")
        offline = tmp_path / f"off{i}"
        streamed = tmp_path / f"str{i}"
        chunk = str(int(rng.integers(32, 2049)))
        assert run_cli("score", "--checkpoint", str(ckpt), "--wav", str(wav),
                       "--out-dir", str(offline), *stft_flags) == 0
        assert run_cli("stream", "--checkpoint", str(ckpt), "--wav", str(wav),
                       "--chunk-samples", chunk,
                       "--out-dir", str(streamed), *stft_flags) == 0
        assert (offline / "frame_scores.jsonl").read_bytes() == \
            (streamed / "frame_scores.jsonl").read_bytes()
    assert time.perf_counter() - started < 30.0


def test_criterion_8_aggregation_algebra():
    def series(values, period=1.0):
        return ScoreSeries("s", "audio", np.array(values, dtype=float),
                           frame_period_s=period)

    hand = series([1.0, 2.0, 3.0, 4.0])
    assert aggregate(hand, AggregationMethod("mean")) == 2.5
    assert aggregate(hand, AggregationMethod("max")) == 4.0
    assert aggregate(hand, AggregationMethod("max_over_ma",
                                             ma_window_s=2.0)) == 3.5

    # A window at or below one frame degenerates to the plain max.
    for window in (1.0, 0.6):
        assert aggregate(hand, AggregationMethod(
            "max_over_ma", ma_window_s=window)) == 4.0

    constant = series([0.7] * 9)
    for method in (AggregationMethod("mean"), AggregationMethod("max"),
                   AggregationMethod("max_over_ma", ma_window_s=3.0)):
        assert aggregate(constant, method) == pytest.approx(0.7)


def test_criterion_9_grid_determinism(tmp_path):
    started = time.perf_counter()
    spec = SynthSpec(n_good=12,
                     defect_counts={"Spatter": 2, "Warping": 2,
                                    "Undercut": 2},
                     seed=11, duration_s=2.5, sample_rate=192000,
                     intensity=1.5)
    corpus = tmp_path / "corpus"
    generate_corpus(spec, corpus)

    flags = ["--corpus", str(corpus), "--seed", str(GRID_SEED),
             "--width", "72", "--epochs", "2", "--batch-size", "4",
             "--segment-frames", "12", "--peak-lr", "2e-3",
             "--method", "max_over_ma", "--ma-window-s", "0.4"]
    first = tmp_path / "grid_a"
    second = tmp_path / "grid_b"
    assert run_cli("grid", "--out-dir", str(first), *flags) == 0
    assert run_cli("grid", "--out-dir", str(second), *flags) == 0

    report_a = (first / "grid_report.json").read_bytes()
    report_b = (second / "grid_report.json").read_bytes()
    assert report_a == report_b

    trials = json.loads(report_a)["trials"]
    assert [(t["fft_window"], t["bottleneck"]) for t in trials] == [
        (fft, bn) for fft in (4096, 16384, 32768, 65536)
        for bn in (16, 32, 48, 64)]
    for trial in trials:
        ckpt_a = first / "checkpoints" / trial["checkpoint"]
        ckpt_b = second / "checkpoints" / trial["checkpoint"]
        assert ckpt_a.read_bytes() == ckpt_b.read_bytes()
    assert time.perf_counter() - started < 900.0
