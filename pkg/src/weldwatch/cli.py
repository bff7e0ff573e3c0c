"""Operator-facing command line binding all modules into workflows.

Subcommands: synth, train-audio, train-video, score, fuse, eval,
stream, grid. Every option resolves through three layers: built-in
defaults, then the --config document (TOML or JSON, tables named after
the option groups), then explicit flags. Logs go to stderr; data goes
to files or stdout. A run with an output directory writes
run_manifest.json into it (inputs, resolved config and its hash, seed,
outputs, wall time); all other artifacts are timestamp-free so
repeated runs with one seed are byte-identical. Exit codes follow the
error hierarchy: 2 configuration, 3 data, 4 numeric, 0 success.
"""

import argparse
import concurrent.futures
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .audio.model import (
    STANDARD_BOTTLENECKS,
    AudioAeConfig,
    AudioAutoencoder,
    AudioTrainRecipe,
    audio_frame_scores,
)
from .audio.stft import (
    STANDARD_FFT_WINDOWS,
    WINDOW_KINDS,
    StftConfig,
    model_latency_ms,
    stft_magnitude,
)
from .audio.wavio import read_wav
from .dataset import load_manifest
from .errors import ConfigError, DataError, WeldwatchError
from .evaluation import apply_split, auc, det_curve, roc_curve
from .nn.checkpoint import load_checkpoint
from .pipeline import (
    audio_sample_scores,
    category_report,
    corpus_embeddings,
    corpus_spectrograms,
    fuse_stage,
    labels_for,
    score_rows_for,
    spectrogram_for,
    stream_frame_scores,
    train_audio_stage,
    train_video_stage,
    video_sample_scores,
)
from .scoring import (
    AGGREGATION_KINDS,
    AggregationMethod,
    ScoreRow,
    read_score_rows,
    write_score_rows,
)
from .synth import SynthSpec, generate_corpus
from .video.model import VideoAeConfig, VideoAutoencoder, VideoTrainRecipe

log = logging.getLogger("weldwatch")

RUN_MANIFEST_SCHEMA_VERSION = 1


class Options:
    """Layered option lookup: explicit flag, config table, default."""

    def __init__(self, args, doc):
        self.args = args
        self.doc = doc

    def get(self, dest, table, field=None, default=None):
        value = getattr(self.args, dest, None)
        if value is not None:
            return value
        section = self.doc.get(table, {})
        if not isinstance(section, dict):
            raise ConfigError(f"config section {table!r} must be a table")
        return section.get(field or dest, default)


def _load_config_doc(path):
    path = Path(path)
    text = path.read_bytes()
    try:
        if path.suffix == ".json":
            return json.loads(text.decode("utf-8"))
        if path.suffix == ".toml":
            return tomllib.loads(text.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: cannot parse config: {exc}") from exc
    raise ConfigError(
        f"{path}: config files must end in .toml or .json"
    )


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _write_json(path, doc):
    Path(path).write_text(
        json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def write_run_manifest(out_dir, subcommand, resolved, seed, inputs,
                       outputs, started):
    """Record what a run did; wall time makes this file non-reproducible,
    every other artifact of a run is byte-stable."""
    resolved = _jsonable(resolved)
    digest = hashlib.sha256(
        json.dumps(resolved, sort_keys=True).encode("utf-8")
    ).hexdigest()
    doc = {
        "schema_version": RUN_MANIFEST_SCHEMA_VERSION,
        "subcommand": subcommand,
        "config": resolved,
        "config_sha256": digest,
        "seed": seed,
        "inputs": sorted(str(p) for p in inputs),
        "outputs": sorted(str(p) for p in outputs),
        "wall_time_s": round(time.monotonic() - started, 3),
    }
    path = Path(out_dir) / "run_manifest.json"
    _write_json(path, doc)
    return path


def _out_dir(opts, required=True):
    value = opts.get("out_dir", "run", field="out_dir")
    if value is None:
        if required:
            raise ConfigError("an output directory is required (--out-dir)")
        return None
    out = Path(value)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _render_table(headers, rows):
    columns = [[h] + [r[i] for r in rows] for i, h in enumerate(headers)]
    widths = [max(len(cell) for cell in col) for col in columns]
    lines = []
    for r in [headers] + rows:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines)


def _frame_score_line(frame, score, stft_config):
    record = {
        "frame": int(frame),
        "score": float(score),
        "time_s": frame * stft_config.hop_length / stft_config.sample_rate,
    }
    return json.dumps(record, sort_keys=True)


def _corpus_manifest(opts):
    corpus = opts.get("corpus", "run")
    if corpus is None:
        raise ConfigError("a corpus directory is required (--corpus)")
    corpus = Path(corpus)
    manifest = load_manifest(corpus / "manifest.jsonl")
    if not manifest.samples:
        raise DataError(f"{corpus}: corpus manifest is empty")
    return corpus, manifest


def _corpus_sample_rate(corpus, manifest):
    _, sample_rate = read_wav(corpus / manifest.samples[0].audio_path)
    return sample_rate


def _stft_from(opts, default_sample_rate=None):
    sample_rate = opts.get("sample_rate", "stft", default=default_sample_rate)
    if sample_rate is None:
        raise ConfigError(
            "sample_rate is required (flag, [stft] config table, or input "
            "audio to derive it from)"
        )
    fft_window = int(opts.get("fft_window", "stft", default=4096))
    hop = int(opts.get("hop_length", "stft", default=fft_window // 2))
    window = opts.get("window", "stft", default="hann")
    log_magnitude = opts.get("log_magnitude", "stft", default=False)
    return StftConfig(sample_rate=int(sample_rate), fft_window=fft_window,
                      hop_length=hop, window=window,
                      log_magnitude=bool(log_magnitude))


def _split_seed(opts):
    return int(opts.get("split_seed", "split", field="seed", default=0))


def _split_samples(split, name):
    if name == "all":
        return split.train + split.val + split.test
    return getattr(split, name)


def _method_from(opts):
    kind = opts.get("method", "score", default="mean")
    ma_window_s = float(opts.get("ma_window_s", "score", default=0.4))
    return AggregationMethod(kind, ma_window_s=ma_window_s)


def _load_any_model(path):
    header, _ = load_checkpoint(path)
    kind = header.get("kind")
    if kind == "audio-ae":
        return "audio", AudioAutoencoder.load(path)
    if kind == "video-ae":
        return "video", VideoAutoencoder.load(path)
    raise DataError(f"{path}: unknown checkpoint kind {kind!r}")


def _check_bins(model, stft_config):
    if model.config.n_bins != stft_config.n_bins:
        raise ConfigError(
            f"checkpoint expects {model.config.n_bins} bins but the STFT "
            f"yields {stft_config.n_bins}"
        )


# --------------------------------------------------------------------------
# synth


def _parse_defects(opts):
    pairs = getattr(opts.args, "defect", None)
    if pairs is not None:
        counts = {}
        for pair in pairs:
            name, sep, count = pair.rpartition("=")
            if not sep or not name:
                raise ConfigError(
                    f"--defect expects 'Category=count', got {pair!r}"
                )
            try:
                counts[name] = int(count)
            except ValueError as exc:
                raise ConfigError(
                    f"--defect count must be an integer, got {pair!r}"
                ) from exc
        return counts
    section = opts.doc.get("synth", {})
    return dict(section.get("defect_counts", {}))


def _cmd_synth(opts):
    started = time.monotonic()
    out = _out_dir(opts)
    fields = {"n_good": int, "seed": int, "duration_s": float,
              "sample_rate": int, "fps": float, "intensity": float}
    kwargs = {}
    for field, cast in fields.items():
        value = opts.get(field, "synth")
        if value is not None:
            kwargs[field] = cast(value)
    spec = SynthSpec(defect_counts=_parse_defects(opts), **kwargs)
    manifest = generate_corpus(spec, out)
    log.info("wrote %d samples under %s", len(manifest.samples), out)
    write_run_manifest(
        out, "synth", spec.to_dict(), spec.seed, inputs=[],
        outputs=[out / "manifest.jsonl", out / "audio", out / "embeddings"],
        started=started)
    return 0


# --------------------------------------------------------------------------
# training


def _audio_recipe_from(opts, seed):
    return AudioTrainRecipe(
        epochs=int(opts.get("epochs", "audio_recipe", default=50)),
        peak_lr=float(opts.get("peak_lr", "audio_recipe", default=1e-4)),
        batch_size=int(opts.get("batch_size", "audio_recipe", default=16)),
        segment_frames=int(
            opts.get("segment_frames", "audio_recipe", default=32)),
        seed=seed,
    )


def _cmd_train_audio(opts):
    started = time.monotonic()
    out = _out_dir(opts)
    corpus, manifest = _corpus_manifest(opts)
    split = apply_split(manifest.samples, _split_seed(opts))
    stft = _stft_from(opts, _corpus_sample_rate(corpus, manifest))
    seed = int(opts.get("seed", "audio_recipe", field="seed", default=0))
    config = AudioAeConfig(
        n_bins=stft.n_bins,
        width=int(opts.get("width", "audio", default=1024)),
        bottleneck=int(opts.get("bottleneck", "audio", default=64)),
    )
    recipe = _audio_recipe_from(opts, seed)
    train_ids = [s.sample_id for s in split.train]
    spectrograms = corpus_spectrograms(manifest, corpus, stft,
                                       sample_ids=train_ids)
    log.info("training audio autoencoder on %d samples", len(train_ids))
    model, history = train_audio_stage(split, spectrograms, config, recipe,
                                       seed=seed)
    ckpt = out / "audio_ae.ckpt"
    model.save(ckpt)
    report_path = out / "training_report.json"
    resolved = {
        "stft": stft.to_dict(), "model": config.to_dict(),
        "recipe": {"epochs": recipe.epochs, "peak_lr": recipe.peak_lr,
                   "batch_size": recipe.batch_size,
                   "segment_frames": recipe.segment_frames, "seed": seed},
        "split_seed": _split_seed(opts),
    }
    _write_json(report_path, {
        "kind": "train-audio", "config": resolved,
        "split": {"train": len(split.train), "val": len(split.val),
                  "test": len(split.test)},
        "history": history,
    })
    write_run_manifest(out, "train-audio", resolved, seed,
                       inputs=[corpus / "manifest.jsonl"],
                       outputs=[ckpt, report_path], started=started)
    return 0


def _video_recipe_from(opts, seed):
    return VideoTrainRecipe(
        epochs=int(opts.get("epochs", "video_recipe", default=1000)),
        lr=float(opts.get("lr", "video_recipe", default=5e-4)),
        batch_size=int(opts.get("batch_size", "video_recipe", default=64)),
        frames_per_sample=int(
            opts.get("frames_per_sample", "video_recipe", default=0)),
        eval_every=int(opts.get("eval_every", "video_recipe", default=0)),
        seed=seed,
    )


def _cmd_train_video(opts):
    started = time.monotonic()
    out = _out_dir(opts)
    corpus, manifest = _corpus_manifest(opts)
    split = apply_split(manifest.samples, _split_seed(opts))
    seed = int(opts.get("seed", "video_recipe", field="seed", default=0))
    section = opts.doc.get("video", {})
    config = VideoAeConfig(
        hidden_dims=tuple(section.get("hidden_dims",
                                      VideoAeConfig().hidden_dims)),
        dropout=float(opts.get("dropout", "video", default=0.5)),
    )
    recipe = _video_recipe_from(opts, seed)
    wanted = [s.sample_id for s in split.train]
    scorer = None
    if recipe.eval_every > 0:
        wanted = wanted + [s.sample_id for s in split.val]
        method = AggregationMethod("mean")
        val_labels = labels_for(split.val)

        def scorer(model, _split=split, _method=method, _labels=val_labels):
            raw = video_sample_scores(model, embeddings, _split.val, _method)
            values = np.array([raw[s.sample_id] for s in _split.val])
            return auc(values, _labels)

    embeddings = corpus_embeddings(manifest, corpus, sample_ids=wanted)
    log.info("training video autoencoder on %d samples", len(split.train))
    model, history = train_video_stage(split, embeddings, config, recipe,
                                       seed=seed, validation_scorer=scorer)
    ckpt = out / "video_ae.ckpt"
    model.save(ckpt)
    report_path = out / "training_report.json"
    resolved = {
        "model": config.to_dict(),
        "recipe": {"epochs": recipe.epochs, "lr": recipe.lr,
                   "batch_size": recipe.batch_size,
                   "frames_per_sample": recipe.frames_per_sample,
                   "eval_every": recipe.eval_every, "seed": seed},
        "split_seed": _split_seed(opts),
    }
    _write_json(report_path, {
        "kind": "train-video", "config": resolved,
        "split": {"train": len(split.train), "val": len(split.val),
                  "test": len(split.test)},
        "history": history,
    })
    write_run_manifest(out, "train-video", resolved, seed,
                       inputs=[corpus / "manifest.jsonl"],
                       outputs=[ckpt, report_path], started=started)
    return 0


# --------------------------------------------------------------------------
# scoring


def _cmd_score(opts):
    started = time.monotonic()
    ckpt_path = opts.get("checkpoint", "score")
    if ckpt_path is None:
        raise ConfigError("a model checkpoint is required (--checkpoint)")
    modality, model = _load_any_model(ckpt_path)
    wav = getattr(opts.args, "wav", None)
    if wav is not None:
        return _score_wav(opts, modality, model, ckpt_path, started)
    return _score_corpus(opts, modality, model, ckpt_path, started)


def _score_wav(opts, modality, model, ckpt_path, started):
    if modality != "audio":
        raise ConfigError("per-frame WAV scoring applies to audio "
                          "checkpoints only")
    wav = Path(opts.args.wav)
    samples, wav_rate = read_wav(wav, channel=getattr(opts.args, "channel",
                                                      None))
    stft = _stft_from(opts, default_sample_rate=wav_rate)
    if stft.sample_rate != wav_rate:
        raise DataError(
            f"{wav}: sample rate {wav_rate} does not match the configured "
            f"{stft.sample_rate}"
        )
    _check_bins(model, stft)
    series = audio_frame_scores(model, stft_magnitude(samples, stft))
    out = _out_dir(opts, required=False)
    lines = [_frame_score_line(t, s, stft)
             for t, s in enumerate(series.scores)]
    if out is None:
        for line in lines:
            print(line)
        return 0
    path = out / "frame_scores.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_run_manifest(out, "score", {"stft": stft.to_dict(),
                                      "checkpoint": str(ckpt_path),
                                      "wav": str(wav)},
                       model.seed, inputs=[ckpt_path, wav], outputs=[path],
                       started=started)
    return 0


def _score_corpus(opts, modality, model, ckpt_path, started):
    out = _out_dir(opts)
    corpus, manifest = _corpus_manifest(opts)
    split_name = opts.get("split", "score", default="test")
    split = apply_split(manifest.samples, _split_seed(opts))
    samples = _split_samples(split, split_name)
    method = _method_from(opts)
    resolved = {"checkpoint": str(ckpt_path), "split": split_name,
                "split_seed": _split_seed(opts),
                "method": {"kind": method.kind,
                           "ma_window_s": method.ma_window_s}}
    ids = [s.sample_id for s in samples]
    if modality == "audio":
        stft = _stft_from(opts, _corpus_sample_rate(corpus, manifest))
        _check_bins(model, stft)
        resolved["stft"] = stft.to_dict()
        data = corpus_spectrograms(manifest, corpus, stft, sample_ids=ids)
        raw = audio_sample_scores(model, data, samples, method)
    else:
        data = corpus_embeddings(manifest, corpus, sample_ids=ids)
        raw = video_sample_scores(model, data, samples, method)
    rows = score_rows_for(samples, raw, None, modality)
    fmt = opts.get("format", "score", default="jsonl")
    extension = "csv" if fmt == "csv" else "jsonl"
    path = out / f"scores.{extension}"
    write_score_rows(path, rows, fmt=fmt)
    log.info("scored %d samples (%s, %s split)", len(rows), modality,
             split_name)
    write_run_manifest(out, "score", resolved, model.seed,
                       inputs=[ckpt_path, corpus / "manifest.jsonl"],
                       outputs=[path], started=started)
    return 0


def _cmd_stream(opts):
    started = time.monotonic()
    ckpt_path = opts.get("checkpoint", "score")
    if ckpt_path is None:
        raise ConfigError("a model checkpoint is required (--checkpoint)")
    modality, model = _load_any_model(ckpt_path)
    if modality != "audio":
        raise ConfigError("stream applies to audio checkpoints only")
    wav_arg = getattr(opts.args, "wav", None)
    if wav_arg is None:
        raise ConfigError("a WAV file is required (--wav)")
    wav = Path(wav_arg)
    samples, wav_rate = read_wav(wav, channel=getattr(opts.args, "channel",
                                                      None))
    stft = _stft_from(opts, default_sample_rate=wav_rate)
    if stft.sample_rate != wav_rate:
        raise DataError(
            f"{wav}: sample rate {wav_rate} does not match the configured "
            f"{stft.sample_rate}"
        )
    _check_bins(model, stft)
    chunk = opts.get("chunk_samples", "stream", default=stft.hop_length)
    capacity = opts.get("capacity", "stream")
    realtime = bool(getattr(opts.args, "realtime", False))
    out = _out_dir(opts, required=False)
    sink = None
    path = None
    if out is not None:
        path = out / "frame_scores.jsonl"
        sink = open(path, "w", encoding="utf-8")
    try:
        for frame, score in stream_frame_scores(
                model, samples, stft, chunk_samples=int(chunk),
                capacity=None if capacity is None else int(capacity)):
            if realtime:
                time.sleep(stft.hop_length / stft.sample_rate)
            line = _frame_score_line(frame, score, stft)
            if sink is None:
                print(line, flush=realtime)
            else:
                sink.write(line + "\n")
    finally:
        if sink is not None:
            sink.close()
    if out is not None:
        write_run_manifest(out, "stream",
                           {"stft": stft.to_dict(), "chunk_samples": int(chunk),
                            "checkpoint": str(ckpt_path), "wav": str(wav)},
                           model.seed, inputs=[ckpt_path, wav],
                           outputs=[path], started=started)
    return 0


# --------------------------------------------------------------------------
# fusion and evaluation


class _RowSample:
    """Sample view reconstructed from score-file rows."""

    __slots__ = ("sample_id", "category", "label")

    def __init__(self, sample_id, category, label):
        self.sample_id = sample_id
        self.category = category
        self.label = label

    @property
    def is_defect(self):
        return self.label == "defect"


def _samples_from_rows(audio_rows, video_rows, which):
    by_id = {}
    for rows in (audio_rows, video_rows):
        for row in rows:
            seen = by_id.get(row.sample_id)
            if seen is None:
                by_id[row.sample_id] = _RowSample(row.sample_id, row.category,
                                                  row.label)
            elif (seen.category, seen.label) != (row.category, row.label):
                raise DataError(
                    f"{which}: sample {row.sample_id!r} has conflicting "
                    f"metadata across modalities"
                )
    audio_ids = {r.sample_id for r in audio_rows}
    video_ids = {r.sample_id for r in video_rows}
    if audio_ids != video_ids:
        missing = sorted(audio_ids ^ video_ids)[:5]
        raise DataError(
            f"{which}: audio and video score files cover different samples "
            f"(for example {missing})"
        )
    return [by_id[i] for i in sorted(by_id)]


def _raw_by_modality(audio_rows, video_rows):
    return {
        "audio": {r.sample_id: r.raw_score for r in audio_rows},
        "video": {r.sample_id: r.raw_score for r in video_rows},
    }


def _cmd_fuse(opts):
    started = time.monotonic()
    out = _out_dir(opts)
    paths = {}
    for name in ("val_audio", "val_video", "test_audio", "test_video"):
        value = opts.get(name, "fuse")
        if value is None:
            flag = "--" + name.replace("_", "-")
            raise ConfigError(f"a score file is required ({flag})")
        paths[name] = Path(value)
    rows = {name: read_score_rows(path) for name, path in paths.items()}
    val_samples = _samples_from_rows(rows["val_audio"], rows["val_video"],
                                     "validation")
    test_samples = _samples_from_rows(rows["test_audio"], rows["test_video"],
                                      "test")
    raw_val = _raw_by_modality(rows["val_audio"], rows["val_video"])
    raw_test = _raw_by_modality(rows["test_audio"], rows["test_video"])
    step = float(opts.get("step", "fuse", default=0.01))
    summary = fuse_stage(val_samples, test_samples, raw_val, raw_test,
                         step=step)

    fused_val = {
        s.sample_id: summary.w_audio * summary.z_val["audio"][s.sample_id]
        + (1.0 - summary.w_audio) * summary.z_val["video"][s.sample_id]
        for s in val_samples
    }
    report = dict(summary.to_dict())
    report.update({"step": step, "n_val": len(val_samples),
                   "n_test": len(test_samples)})
    report_path = out / "fusion.json"
    _write_json(report_path, report)
    val_rows = [
        ScoreRow(s.sample_id, "fused", s.label, s.category,
                 raw_score=float(fused_val[s.sample_id]),
                 z_score=float(fused_val[s.sample_id]))
        for s in val_samples
    ]
    test_rows = [
        ScoreRow(s.sample_id, "fused", s.label, s.category,
                 raw_score=float(summary.fused_test_scores[s.sample_id]),
                 z_score=float(summary.fused_test_scores[s.sample_id]))
        for s in test_samples
    ]
    val_path = out / "fused_val.jsonl"
    test_path = out / "fused_test.jsonl"
    write_score_rows(val_path, val_rows)
    write_score_rows(test_path, test_rows)
    log.info("fused with w_audio=%.2f (val AUC %.4f)", summary.w_audio,
             summary.val_auc_fused)
    write_run_manifest(out, "fuse",
                       {"step": step,
                        "inputs": {k: str(v) for k, v in paths.items()}},
                       0, inputs=list(paths.values()),
                       outputs=[report_path, val_path, test_path],
                       started=started)
    return 0


def _svg_curve(path, xs, ys, title, xlabel, ylabel, diagonal=False):
    size, margin = 480, 56
    span = size - 2 * margin

    def px(x):
        return margin + x * span

    def py(y):
        return size - margin - y * span

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
        f'height="{size}" viewBox="0 0 {size} {size}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{size / 2:.0f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<line x1="{px(tick):.2f}" y1="{py(0):.2f}" x2="{px(tick):.2f}" '
            f'y2="{py(1):.2f}" stroke="#dddddd" stroke-width="1"/>')
        parts.append(
            f'<line x1="{px(0):.2f}" y1="{py(tick):.2f}" x2="{px(1):.2f}" '
            f'y2="{py(tick):.2f}" stroke="#dddddd" stroke-width="1"/>')
        parts.append(
            f'<text x="{px(tick):.2f}" y="{py(0) + 18:.2f}" '
            f'text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">{tick:g}</text>')
        parts.append(
            f'<text x="{px(0) - 8:.2f}" y="{py(tick) + 4:.2f}" '
            f'text-anchor="end" font-family="sans-serif" '
            f'font-size="11">{tick:g}</text>')
    if diagonal:
        parts.append(
            f'<line x1="{px(0):.2f}" y1="{py(0):.2f}" x2="{px(1):.2f}" '
            f'y2="{py(1):.2f}" stroke="#bbbbbb" stroke-width="1" '
            f'stroke-dasharray="4 3"/>')
    points = " ".join(f"{px(float(x)):.2f},{py(float(y)):.2f}"
                      for x, y in zip(xs, ys))
    parts.append(
        f'<polyline fill="none" stroke="#1f6f8b" stroke-width="1.5" '
        f'points="{points}"/>')
    parts.append(
        f'<text x="{size / 2:.0f}" y="{size - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{xlabel}</text>')
    parts.append(
        f'<text x="16" y="{size / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {size / 2:.0f})">{ylabel}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def _cmd_eval(opts):
    started = time.monotonic()
    scores_path = opts.get("scores", "eval")
    if scores_path is None:
        raise ConfigError("a score file is required (--scores)")
    scores_path = Path(scores_path)
    rows = read_score_rows(scores_path)
    if not rows:
        raise DataError(f"{scores_path}: score file is empty")
    field = opts.get("field", "eval", default="raw")
    values = {}
    for row in rows:
        if field == "z":
            if row.z_score is None:
                raise DataError(
                    f"{scores_path}: row {row.sample_id!r} has no z score"
                )
            values[row.sample_id] = row.z_score
        else:
            values[row.sample_id] = row.raw_score
    samples = [_RowSample(r.sample_id, r.category, r.label) for r in rows]
    report = category_report(values, samples)

    counts = {}
    for s in samples:
        if s.is_defect:
            counts[s.category] = counts.get(s.category, 0) + 1
    table_rows = [[name, str(counts[name]), f"{report['auc'][name]:.4f}"]
                  for name in sorted(counts)]
    table_rows.append(["All", str(report["n_defect"]),
                       f"{report['auc']['All']:.4f}"])
    print(_render_table(["category", "n_defect", "auc_vs_good"], table_rows))
    print(f"samples: {len(samples)} ({report['n_good']} good, "
          f"{report['n_defect']} defect)")
    print(f"eer: {report['eer']:.4f}")

    out = _out_dir(opts, required=False)
    if out is not None:
        report_path = out / "report.json"
        _write_json(report_path, report)
        ordered = sorted(values)
        series = np.array([values[i] for i in ordered])
        labels = np.array([by.is_defect for by in
                           sorted(samples, key=lambda s: s.sample_id)])
        roc = roc_curve(series, labels)
        det = det_curve(series, labels)
        roc_path = out / "roc.svg"
        det_path = out / "det.svg"
        _svg_curve(roc_path, roc.fpr, roc.tpr, "ROC",
                   "false positive rate", "true positive rate",
                   diagonal=True)
        _svg_curve(det_path, det.fpr, det.fnr, "DET",
                   "false positive rate", "false negative rate")
        write_run_manifest(out, "eval",
                           {"scores": str(scores_path), "field": field},
                           0, inputs=[scores_path],
                           outputs=[report_path, roc_path, det_path],
                           started=started)
    return 0


# --------------------------------------------------------------------------
# grid


def _trial_seed(base_seed, fft_window, bottleneck):
    state = np.random.SeedSequence(
        [base_seed, fft_window, bottleneck]).generate_state(1)[0]
    return int(state)


def _grid_trial(payload):
    corpus = Path(payload["corpus"])
    manifest = load_manifest(corpus / "manifest.jsonl")
    split = apply_split(manifest.samples, payload["split_seed"])
    stft = StftConfig(
        sample_rate=payload["sample_rate"],
        fft_window=payload["fft_window"],
        hop_length=payload["fft_window"] // 2,
        window=payload["window"],
        log_magnitude=payload["log_magnitude"],
    )
    seed = payload["trial_seed"]
    config = AudioAeConfig(n_bins=stft.n_bins, width=payload["width"],
                           bottleneck=payload["bottleneck"])
    recipe = AudioTrainRecipe(
        epochs=payload["epochs"], peak_lr=payload["peak_lr"],
        batch_size=payload["batch_size"],
        segment_frames=payload["segment_frames"], seed=seed)
    spectrograms = corpus_spectrograms(manifest, corpus, stft)
    model, _ = train_audio_stage(split, spectrograms, config, recipe,
                                 seed=seed)
    method = AggregationMethod(payload["method_kind"],
                               ma_window_s=payload["ma_window_s"])
    raw_val = audio_sample_scores(model, spectrograms, split.val, method)
    raw_test = audio_sample_scores(model, spectrograms, split.test, method)
    val_auc = auc(np.array([raw_val[s.sample_id] for s in split.val]),
                  labels_for(split.val))
    test_auc = auc(np.array([raw_test[s.sample_id] for s in split.test]),
                   labels_for(split.test))
    ckpt = Path(payload["checkpoint"])
    model.save(ckpt)
    return {
        "fft_window": payload["fft_window"],
        "bottleneck": payload["bottleneck"],
        "hop_length": payload["fft_window"] // 2,
        "latency_ms": model_latency_ms(payload["fft_window"] // 2,
                                       payload["sample_rate"]),
        "seed": seed,
        "val_auc": float(val_auc),
        "test_auc": float(test_auc),
        "checkpoint": ckpt.name,
    }


def _cmd_grid(opts):
    started = time.monotonic()
    out = _out_dir(opts)
    corpus, manifest = _corpus_manifest(opts)
    seed = int(opts.get("seed", "grid", default=0))
    split_seed = _split_seed(opts)
    sample_rate = int(opts.get("sample_rate", "stft",
                               default=_corpus_sample_rate(corpus, manifest)))
    window = opts.get("window", "stft", default="hann")
    log_magnitude = bool(opts.get("log_magnitude", "stft", default=False))
    width = int(opts.get("width", "audio", default=1024))
    method = _method_from(opts)
    recipe_fields = {
        "epochs": int(opts.get("epochs", "audio_recipe", default=50)),
        "peak_lr": float(opts.get("peak_lr", "audio_recipe", default=1e-4)),
        "batch_size": int(opts.get("batch_size", "audio_recipe", default=16)),
        "segment_frames": int(
            opts.get("segment_frames", "audio_recipe", default=32)),
    }
    workers = int(opts.get("workers", "grid", default=1))
    ckpt_dir = out / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)

    payloads = []
    for fft_window in STANDARD_FFT_WINDOWS:
        for bottleneck in STANDARD_BOTTLENECKS:
            payloads.append({
                "corpus": str(corpus), "split_seed": split_seed,
                "sample_rate": sample_rate, "window": window,
                "log_magnitude": log_magnitude, "width": width,
                "fft_window": fft_window, "bottleneck": bottleneck,
                "trial_seed": _trial_seed(seed, fft_window, bottleneck),
                "method_kind": method.kind,
                "ma_window_s": method.ma_window_s,
                "checkpoint": str(
                    ckpt_dir / f"fft{fft_window}_bn{bottleneck}.ckpt"),
                **recipe_fields,
            })

    log.info("running %d grid trials (%d worker%s)", len(payloads), workers,
             "" if workers == 1 else "s")
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(workers) as pool:
            trials = list(pool.map(_grid_trial, payloads))
    else:
        trials = [_grid_trial(p) for p in payloads]
    trials.sort(key=lambda t: (t["fft_window"], t["bottleneck"]))

    resolved = {
        "seed": seed, "split_seed": split_seed, "width": width,
        "recipe": recipe_fields,
        "stft": {"sample_rate": sample_rate, "window": window,
                 "log_magnitude": log_magnitude},
        "method": {"kind": method.kind, "ma_window_s": method.ma_window_s},
    }
    report_path = out / "grid_report.json"
    _write_json(report_path, {"schema_version": 1, "config": resolved,
                              "trials": trials})
    table = [[str(t["fft_window"]), str(t["bottleneck"]),
              f"{t['latency_ms']:.1f}", f"{t['val_auc']:.4f}",
              f"{t['test_auc']:.4f}"] for t in trials]
    print(_render_table(
        ["fft_window", "bottleneck", "latency_ms", "val_auc", "test_auc"],
        table))
    write_run_manifest(
        out, "grid", resolved, seed,
        inputs=[corpus / "manifest.jsonl"],
        outputs=[report_path] + [ckpt_dir / t["checkpoint"] for t in trials],
        started=started)
    return 0


# --------------------------------------------------------------------------
# parser


def _add_out_dir(sp, required_hint=True):
    sp.add_argument("--out-dir", dest="out_dir", metavar="DIR",
                    help="output directory"
                    + ("" if required_hint else " (default: stdout only)"))


def _add_stft_flags(sp):
    group = sp.add_argument_group("stft")
    group.add_argument("--sample-rate", dest="sample_rate", type=int)
    group.add_argument("--fft-window", dest="fft_window", type=int)
    group.add_argument("--hop-length", dest="hop_length", type=int)
    group.add_argument("--stft-window", dest="window", choices=WINDOW_KINDS)
    group.add_argument("--log-magnitude", dest="log_magnitude",
                       action=argparse.BooleanOptionalAction, default=None)


def _add_split_flag(sp):
    sp.add_argument("--split-seed", dest="split_seed", type=int,
                    help="seed for the train/val/test partition")


def _add_method_flags(sp):
    sp.add_argument("--method", choices=AGGREGATION_KINDS,
                    help="per-sample aggregation of frame scores")
    sp.add_argument("--ma-window-s", dest="ma_window_s", type=float,
                    help="moving-average window for max_over_ma, seconds")


def _add_audio_recipe_flags(sp):
    group = sp.add_argument_group("audio training")
    group.add_argument("--epochs", type=int)
    group.add_argument("--peak-lr", dest="peak_lr", type=float)
    group.add_argument("--batch-size", dest="batch_size", type=int)
    group.add_argument("--segment-frames", dest="segment_frames", type=int)
    group.add_argument("--seed", type=int)
    group.add_argument("--width", type=int)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="weldwatch",
        description="Unsupervised weld defect detection from audio and "
                    "video embeddings.",
    )
    parser.add_argument("--config", metavar="FILE",
                        help="TOML or JSON config document; flags override "
                             "its values")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="log more (repeatable)")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    sp = sub.add_parser("synth", help="generate a synthetic corpus")
    _add_out_dir(sp)
    sp.add_argument("--n-good", dest="n_good", type=int)
    sp.add_argument("--defect", action="append", metavar="CATEGORY=COUNT",
                    help="defect sample count, repeatable")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--duration-s", dest="duration_s", type=float)
    sp.add_argument("--sample-rate", dest="sample_rate", type=int)
    sp.add_argument("--fps", type=float)
    sp.add_argument("--intensity", type=float)
    sp.set_defaults(handler=_cmd_synth)

    sp = sub.add_parser("train-audio", help="train the audio autoencoder "
                                            "on the good-only train split")
    _add_out_dir(sp)
    sp.add_argument("--corpus", metavar="DIR")
    _add_stft_flags(sp)
    _add_split_flag(sp)
    _add_audio_recipe_flags(sp)
    sp.add_argument("--bottleneck", type=int)
    sp.set_defaults(handler=_cmd_train_audio)

    sp = sub.add_parser("train-video", help="train the video autoencoder "
                                            "on the good-only train split")
    _add_out_dir(sp)
    sp.add_argument("--corpus", metavar="DIR")
    _add_split_flag(sp)
    group = sp.add_argument_group("video training")
    group.add_argument("--epochs", type=int)
    group.add_argument("--lr", type=float)
    group.add_argument("--batch-size", dest="batch_size", type=int)
    group.add_argument("--frames-per-sample", dest="frames_per_sample",
                       type=int)
    group.add_argument("--eval-every", dest="eval_every", type=int,
                       help="epochs between validation AUC probes (0 "
                            "disables early stopping)")
    group.add_argument("--seed", type=int)
    group.add_argument("--dropout", type=float)
    sp.set_defaults(handler=_cmd_train_video)

    sp = sub.add_parser("score", help="score a corpus split or one WAV")
    _add_out_dir(sp, required_hint=False)
    sp.add_argument("--checkpoint", metavar="FILE")
    sp.add_argument("--corpus", metavar="DIR")
    sp.add_argument("--wav", metavar="FILE",
                    help="score one WAV per frame instead of a corpus")
    sp.add_argument("--channel", type=int)
    sp.add_argument("--split", choices=("train", "val", "test", "all"))
    _add_split_flag(sp)
    _add_method_flags(sp)
    sp.add_argument("--format", choices=("jsonl", "csv"))
    _add_stft_flags(sp)
    sp.set_defaults(handler=_cmd_score)

    sp = sub.add_parser("fuse", help="fuse audio and video score files")
    _add_out_dir(sp)
    sp.add_argument("--val-audio", dest="val_audio", metavar="FILE")
    sp.add_argument("--val-video", dest="val_video", metavar="FILE")
    sp.add_argument("--test-audio", dest="test_audio", metavar="FILE")
    sp.add_argument("--test-video", dest="test_video", metavar="FILE")
    sp.add_argument("--step", type=float,
                    help="fusion weight grid step (default 0.01)")
    sp.set_defaults(handler=_cmd_fuse)

    sp = sub.add_parser("eval", help="per-category report for a score file")
    _add_out_dir(sp, required_hint=False)
    sp.add_argument("--scores", metavar="FILE")
    sp.add_argument("--field", choices=("raw", "z"))
    sp.set_defaults(handler=_cmd_eval)

    sp = sub.add_parser("stream", help="replay a WAV through the streaming "
                                       "frontend and print frame scores")
    _add_out_dir(sp, required_hint=False)
    sp.add_argument("--checkpoint", metavar="FILE")
    sp.add_argument("--wav", metavar="FILE")
    sp.add_argument("--channel", type=int)
    sp.add_argument("--chunk-samples", dest="chunk_samples", type=int)
    sp.add_argument("--capacity", type=int,
                    help="stream buffer capacity in samples (default: the "
                         "minimum for the configured framing)")
    sp.add_argument("--realtime", action="store_true",
                    help="pace emission at roughly one hop per frame")
    _add_stft_flags(sp)
    sp.set_defaults(handler=_cmd_stream)

    sp = sub.add_parser("grid", help="sweep fft windows x bottlenecks and "
                                     "compare AUCs")
    _add_out_dir(sp)
    sp.add_argument("--corpus", metavar="DIR")
    _add_split_flag(sp)
    _add_method_flags(sp)
    _add_audio_recipe_flags(sp)
    sp.add_argument("--workers", type=int,
                    help="parallel trial slots (default 1)")
    sp.add_argument("--sample-rate", dest="sample_rate", type=int)
    sp.add_argument("--stft-window", dest="window", choices=WINDOW_KINDS)
    sp.add_argument("--log-magnitude", dest="log_magnitude",
                    action=argparse.BooleanOptionalAction, default=None)
    sp.set_defaults(handler=_cmd_grid)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = getattr(args, "handler", None)
    if handler is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        doc = _load_config_doc(args.config) if args.config else {}
        return handler(Options(args, doc))
    except WeldwatchError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except OSError as exc:
        log.error("%s", exc)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
