"""Orchestration: join manifests, models, scoring, and evaluation.

These helpers own the dataflow between modules (load corpus, train on
the good-only split, aggregate per-sample scores, standardize, fuse,
report) while the CLI owns argument parsing and artifact layout.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio.model import (
    MIN_INPUT_FRAMES,
    audio_frame_scores,
    build_audio_ae,
    train_audio_ae,
)
from .audio.stft import Spectrogram, stft_magnitude
from .audio.stream import StreamingStft
from .audio.wavio import read_wav
from .dataset import load_manifest
from .errors import ConfigError, DataError
from .evaluation import apply_split, auc, eer, per_category_auc
from .scoring import (
    ScoreRow,
    aggregate,
    fit_standardizer,
    grid_search_weight,
)
from .video.model import (
    build_video_ae,
    train_video_ae,
    video_frame_scores,
)
from .video.embeddings import load_embeddings


def spectrogram_for(wav_path, stft_config, channel=None):
    samples, sample_rate = read_wav(wav_path, channel=channel)
    if sample_rate != stft_config.sample_rate:
        raise DataError(
            f"{wav_path}: sample rate {sample_rate} does not match the "
            f"configured {stft_config.sample_rate}"
        )
    return stft_magnitude(samples, stft_config)


def stream_frame_scores(model, samples, stft_config, chunk_samples=None,
                        capacity=None):
    """Yield (frame_index, score) pairs while replaying a signal.

    Values are bit-identical to the offline audio_frame_scores route: a
    frame's score is final only once ten further frames exist to its
    right (the decoder's edge reach), so interior frames are emitted
    with a ten-frame lag and the last ten flush at end of stream.
    """
    stream = StreamingStft(stft_config, capacity=capacity)
    if chunk_samples is None:
        chunk_samples = stft_config.hop_length
    if chunk_samples < 1:
        raise ConfigError(f"chunk_samples must be >= 1, got {chunk_samples}")
    samples = np.asarray(samples, dtype=np.float64)
    frames = np.zeros((stft_config.n_bins, 0))
    emitted = 0
    pos = 0
    while pos < samples.size:
        take = min(chunk_samples, stream.capacity - stream.pending_samples())
        stream.feed(samples[pos:pos + take])
        pos += take
        fresh = stream.poll()
        if fresh.shape[1] == 0:
            continue
        frames = np.concatenate([frames, fresh], axis=1)
        stable = frames.shape[1] - 10
        if stable > emitted and frames.shape[1] >= MIN_INPUT_FRAMES:
            series = audio_frame_scores(
                model, Spectrogram(frames, stft_config))
            for t in range(emitted, stable):
                yield t, float(series.scores[t])
            emitted = stable
    if frames.shape[1] < MIN_INPUT_FRAMES:
        raise DataError(
            f"signal yields {frames.shape[1]} frames; scoring needs at "
            f"least {MIN_INPUT_FRAMES}"
        )
    series = audio_frame_scores(model, Spectrogram(frames, stft_config))
    for t in range(emitted, frames.shape[1]):
        yield t, float(series.scores[t])


def corpus_spectrograms(manifest, base_dir, stft_config, sample_ids=None):
    base = Path(base_dir)
    wanted = set(sample_ids) if sample_ids is not None else None
    out = {}
    for sample in manifest.samples:
        if wanted is not None and sample.sample_id not in wanted:
            continue
        out[sample.sample_id] = spectrogram_for(
            base / sample.audio_path, stft_config)
    return out


def corpus_embeddings(manifest, base_dir, sample_ids=None):
    base = Path(base_dir)
    wanted = set(sample_ids) if sample_ids is not None else None
    out = {}
    for sample in manifest.samples:
        if wanted is not None and sample.sample_id not in wanted:
            continue
        out[sample.sample_id] = load_embeddings(base / sample.embedding_path)
    return out


def _train_labels(samples):
    return [s.label if s.is_defect else "good" for s in samples]


def train_audio_stage(split, spectrograms, config, recipe, seed=0):
    """Build and train the audio autoencoder on the train split."""
    corpus = [spectrograms[s.sample_id] for s in split.train]
    model = build_audio_ae(config, seed=seed)
    history = train_audio_ae(model, corpus, recipe,
                             labels=_train_labels(split.train))
    return model, history


def train_video_stage(split, embeddings, config, recipe, seed=0,
                      validation_scorer=None):
    """Build and train the video autoencoder on the train split."""
    corpus = [embeddings[s.sample_id] for s in split.train]
    model = build_video_ae(config, seed=seed)
    history = train_video_ae(model, corpus, recipe,
                             labels=_train_labels(split.train),
                             validation_scorer=validation_scorer)
    return model, history


def audio_sample_scores(model, spectrograms, samples, method):
    """Aggregate per-frame audio scores into one raw score per sample."""
    out = {}
    for sample in samples:
        series = audio_frame_scores(model, spectrograms[sample.sample_id],
                                    sample_id=sample.sample_id)
        out[sample.sample_id] = aggregate(series, method)
    return out


def video_sample_scores(model, embeddings, samples, method):
    """Aggregate per-frame video scores into one raw score per sample."""
    out = {}
    for sample in samples:
        series = video_frame_scores(model, embeddings[sample.sample_id])
        out[sample.sample_id] = aggregate(series, method)
    return out


def labels_for(samples):
    return np.array([s.is_defect for s in samples], dtype=bool)


def score_rows_for(samples, raw_scores, z_scores, modality):
    rows = []
    for sample in samples:
        z = None if z_scores is None else float(z_scores[sample.sample_id])
        rows.append(ScoreRow(
            sample_id=sample.sample_id,
            modality=modality,
            label=sample.label,
            category=sample.category,
            raw_score=float(raw_scores[sample.sample_id]),
            z_score=z,
        ))
    return rows


@dataclass
class FusionSummary:
    w_audio: float
    val_auc_audio: float
    val_auc_video: float
    val_auc_fused: float
    test_auc_audio: float
    test_auc_video: float
    test_auc_fused: float
    fused_test_scores: dict
    z_val: dict
    z_test: dict
    trace: list

    def to_dict(self):
        return {
            "w_audio": self.w_audio,
            "w_video": 1.0 - self.w_audio,
            "val_auc": {"audio": self.val_auc_audio,
                        "video": self.val_auc_video,
                        "fused": self.val_auc_fused},
            "test_auc": {"audio": self.test_auc_audio,
                         "video": self.test_auc_video,
                         "fused": self.test_auc_fused},
        }


def fuse_stage(val_samples, test_samples, raw_val, raw_test, step=0.01):
    """Standardize on validation, pick the fusion weight there, apply to
    test.

    raw_val and raw_test map modality -> {sample_id: raw score}. The
    weight grid includes both endpoints, so the fused validation AUC is
    never below either unimodal validation AUC.
    """
    z_val, z_test = {}, {}
    for modality in ("audio", "video"):
        train_scores = [raw_val[modality][s.sample_id] for s in val_samples]
        standardizer = fit_standardizer(train_scores)
        z_val[modality] = {
            s.sample_id: standardizer.apply(raw_val[modality][s.sample_id])
            for s in val_samples}
        z_test[modality] = {
            s.sample_id: standardizer.apply(raw_test[modality][s.sample_id])
            for s in test_samples}

    val_labels = labels_for(val_samples)
    test_labels = labels_for(test_samples)

    def vec(mapping, samples):
        return np.array([mapping[s.sample_id] for s in samples])

    za_val = vec(z_val["audio"], val_samples)
    zv_val = vec(z_val["video"], val_samples)
    za_test = vec(z_test["audio"], test_samples)
    zv_test = vec(z_test["video"], test_samples)

    result = grid_search_weight(za_val, zv_val, val_labels, step=step)
    w = result.weight.w_audio
    fused_test = w * za_test + (1.0 - w) * zv_test

    return FusionSummary(
        w_audio=w,
        val_auc_audio=auc(za_val, val_labels),
        val_auc_video=auc(zv_val, val_labels),
        val_auc_fused=result.auc,
        test_auc_audio=auc(za_test, test_labels),
        test_auc_video=auc(zv_test, test_labels),
        test_auc_fused=auc(fused_test, test_labels),
        fused_test_scores={s.sample_id: float(v)
                           for s, v in zip(test_samples, fused_test)},
        z_val=z_val,
        z_test=z_test,
        trace=result.trace,
    )


def category_report(sample_scores, samples, expected_categories=None):
    """Per-category AUC plus EER for one set of per-sample scores."""
    scores = np.array([sample_scores[s.sample_id] for s in samples])
    labels = labels_for(samples)
    categories = [s.category for s in samples]
    report = {
        "n_good": int((~labels).sum()),
        "n_defect": int(labels.sum()),
        "auc": per_category_auc(scores, labels, categories,
                                expected_categories=expected_categories),
    }
    result = eer(scores, labels)
    report["eer"] = result.rate
    return report


def run_end_to_end(corpus_dir, stft_config, audio_config, audio_recipe,
                   video_config, video_recipe, audio_method, video_method,
                   split_seed=0, grid_step=0.01, model_seed=0):
    """Train both modalities on a corpus directory, fuse, and report.

    Returns a dict with unimodal and fused AUCs, the chosen weight, the
    training histories, and a per-category report of the fused test
    scores.
    """
    corpus_dir = Path(corpus_dir)
    if audio_config.n_bins != stft_config.n_bins:
        raise ConfigError(
            f"audio config expects {audio_config.n_bins} bins but the STFT "
            f"yields {stft_config.n_bins}"
        )
    manifest = load_manifest(corpus_dir / "manifest.jsonl")
    split = apply_split(manifest.samples, split_seed)

    spectrograms = corpus_spectrograms(manifest, corpus_dir, stft_config)
    audio_model, audio_history = train_audio_stage(
        split, spectrograms, audio_config, audio_recipe, seed=model_seed)

    embeddings = corpus_embeddings(manifest, corpus_dir)
    video_model, video_history = train_video_stage(
        split, embeddings, video_config, video_recipe, seed=model_seed)

    raw_val = {
        "audio": audio_sample_scores(audio_model, spectrograms, split.val,
                                     audio_method),
        "video": video_sample_scores(video_model, embeddings, split.val,
                                     video_method),
    }
    raw_test = {
        "audio": audio_sample_scores(audio_model, spectrograms, split.test,
                                     audio_method),
        "video": video_sample_scores(video_model, embeddings, split.test,
                                     video_method),
    }
    fusion = fuse_stage(split.val, split.test, raw_val, raw_test,
                        step=grid_step)
    report = category_report(fusion.fused_test_scores, split.test)

    return {
        "fusion": fusion.to_dict(),
        "report": report,
        "split": {"train": len(split.train), "val": len(split.val),
                  "test": len(split.test)},
        "audio_history": audio_history,
        "video_history": video_history,
        "models": {"audio": audio_model, "video": video_model},
        "raw_scores": {"val": raw_val, "test": raw_test},
    }
