"""Frame-score aggregation, standardization, and convex late fusion.

Each modality reduces a per-frame score series to one scalar per sample,
standardizes it by training-set statistics, and the two z-scores are
fused as w*z_audio + (1-w)*z_video with w chosen on validation AUC.
"""

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .evaluation import auc

MODALITIES = ("audio", "video")

AGGREGATION_KINDS = ("mean", "max", "max_over_ma")


@dataclass
class ScoreSeries:
    """Per-frame anomaly scores for one sample of one modality."""

    sample_id: str
    modality: str
    scores: np.ndarray
    frame_period_s: float

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise DataError(f"unknown modality {self.modality!r}")
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 1 or self.scores.size == 0:
            raise DataError("score series must be a nonempty 1-D array")
        if (self.scores < 0).any():
            raise DataError("reconstruction-error scores must be nonnegative")
        if self.frame_period_s <= 0:
            raise DataError("frame period must be positive")


@dataclass(frozen=True)
class AggregationMethod:
    """kind 'mean', 'max', or 'max_over_ma' (ma_window in seconds)."""

    kind: str
    ma_window_s: float = 0.0

    def __post_init__(self):
        if self.kind not in AGGREGATION_KINDS:
            raise ConfigError(
                f"aggregation kind must be one of {AGGREGATION_KINDS}, "
                f"got {self.kind!r}"
            )
        if self.kind == "max_over_ma" and self.ma_window_s <= 0:
            raise ConfigError("max_over_ma needs ma_window_s > 0")


def aggregate(series, method):
    """Reduce a ScoreSeries to one sample-level scalar.

    max_over_ma takes the maximum over all full-length moving-average
    windows; the window length in frames is the window duration divided
    by the frame period, rounded half up, at least one frame, and
    truncated to the series length when the series is shorter.
    """
    scores = series.scores
    if scores.size == 0:
        raise DataError("cannot aggregate an empty score series")
    if method.kind == "mean":
        return float(scores.mean())
    if method.kind == "max":
        return float(scores.max())
    w = max(1, int(np.floor(method.ma_window_s / series.frame_period_s + 0.5)))
    w = min(w, scores.size)
    averages = np.convolve(scores, np.ones(w) / w, mode="valid")
    return float(averages.max())


@dataclass(frozen=True)
class Standardizer:
    """Shift/scale from training-set sample scores: z = (x - mean)/std.

    A zero-std (all-equal) fit is degenerate: apply() maps everything
    to 0 so downstream fusion stays defined.
    """

    mean: float
    std: float

    def apply(self, x):
        if self.std == 0.0:
            return np.zeros_like(np.asarray(x, dtype=np.float64))[()]
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std


def fit_standardizer(training_scores):
    scores = np.asarray(training_scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size < 2:
        raise DataError("standardizer needs at least 2 training scores")
    mean = float(scores.mean())
    std = float(scores.std())
    if std == 0.0:
        warnings.warn(
            "all training scores equal; degenerate standardizer maps "
            "every score to 0",
            stacklevel=2,
        )
    return Standardizer(mean=mean, std=std)


@dataclass(frozen=True)
class FusionWeight:
    w_audio: float

    def __post_init__(self):
        if not 0.0 <= self.w_audio <= 1.0:
            raise ConfigError(f"w_audio must be in [0, 1], got {self.w_audio}")

    @property
    def w_video(self):
        return 1.0 - self.w_audio


def fuse(z_audio, z_video, w_audio):
    """Convex combination w*z_audio + (1-w)*z_video; scalars or arrays."""
    if not 0.0 <= w_audio <= 1.0:
        raise ConfigError(f"fusion weight must be in [0, 1], got {w_audio}")
    z_audio = np.asarray(z_audio, dtype=np.float64)
    z_video = np.asarray(z_video, dtype=np.float64)
    return (w_audio * z_audio + (1.0 - w_audio) * z_video)[()]


@dataclass
class GridSearchResult:
    weight: FusionWeight
    auc: float
    trace: list = field(repr=False)


def grid_search_weight(z_audio, z_video, labels, step=0.01):
    """Best fusion weight over the grid {0, step, ..., 1} by validation AUC.

    Scans weights in ascending order and keeps a strictly better AUC
    only, so ties resolve to the smallest weight. Both endpoints are in
    the grid, hence the fused AUC is never below either unimodal AUC.
    Returns the chosen weight, its AUC, and the full (w, AUC) trace.
    """
    z_audio = np.asarray(z_audio, dtype=np.float64)
    z_video = np.asarray(z_video, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if not (z_audio.shape == z_video.shape == labels.shape):
        raise DataError("z_audio, z_video, and labels must align")
    if not 0.0 < step <= 1.0:
        raise ConfigError(f"step must be in (0, 1], got {step}")
    n = int(round(1.0 / step))
    best_w = None
    best_auc = -np.inf
    trace = []
    for i in range(n + 1):
        w = i / n
        value = auc(fuse(z_audio, z_video, w), labels)
        trace.append((w, value))
        if value > best_auc:
            best_auc = value
            best_w = w
    return GridSearchResult(
        weight=FusionWeight(w_audio=best_w), auc=best_auc, trace=trace
    )


@dataclass(frozen=True)
class ScoreRow:
    """One line of a score file.

    z_score is None before standardization (raw score files written by
    the score subcommand); fusion fills it in.
    """

    sample_id: str
    modality: str
    label: str
    category: str
    raw_score: float
    z_score: float | None


_SCORE_FIELDS = ("sample_id", "modality", "label", "category",
                 "raw_score", "z_score")


def write_score_rows(path, rows, fmt=None):
    """Write score rows as JSONL (default) or CSV, by fmt or extension."""
    path = str(path)
    if fmt is None:
        fmt = "csv" if path.endswith(".csv") else "jsonl"
    if fmt not in ("jsonl", "csv"):
        raise ConfigError(f"unknown score file format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            writer = csv.DictWriter(fh, fieldnames=_SCORE_FIELDS)
            writer.writeheader()
            for r in rows:
                writer.writerow({k: getattr(r, k) for k in _SCORE_FIELDS})
        else:
            for r in rows:
                fh.write(json.dumps(
                    {k: getattr(r, k) for k in _SCORE_FIELDS}, sort_keys=True
                ))
                fh.write("\n")


def read_score_rows(path, fmt=None):
    path = str(path)
    if fmt is None:
        fmt = "csv" if path.endswith(".csv") else "jsonl"
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            for record in csv.DictReader(fh):
                rows.append(_row_from_record(record, path))
        else:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
                rows.append(_row_from_record(record, f"{path}:{lineno}"))
    return rows


def _row_from_record(record, where):
    try:
        z = record["z_score"]
        return ScoreRow(
            sample_id=str(record["sample_id"]),
            modality=str(record["modality"]),
            label=str(record["label"]),
            category=str(record["category"]),
            raw_score=float(record["raw_score"]),
            z_score=None if z in (None, "") else float(z),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{where}: malformed score row: {exc}") from exc
