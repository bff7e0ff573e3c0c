"""Deterministic synthetic multimodal corpus generator.

Good welds get a harmonic stack (jittered f0) over pink noise for audio
and a fixed Gaussian cluster for video embeddings. Defect categories
map onto archetype families, each perturbing one time window that is
shared between the modalities:

    bursts       impulsive band-limited clicks inside the window
    attenuation  a suppressed band around the harmonics
    drift        the fundamental slides upward inside the window
    jump         a broadband level step

Video embeddings of defect samples shift their in-window frames along a
per-category direction. Everything derives from the SynthSpec seed:
corpus
wide draws come from (seed, 0) and each sample's stream is keyed by
(seed, sample id bytes), so generation order and parallelism cannot
change the output.
"""

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio.wavio import write_wav
from .dataset import (
    DEFECT_CATEGORIES,
    GOOD_CATEGORY,
    MATERIALS,
    WELD_TYPES,
    DatasetManifest,
    Sample,
    save_manifest,
)
from .errors import ConfigError
from .video.embeddings import EMBEDDING_DIM, EmbeddingSequence, save_embeddings

BURST_FAMILY = (
    "Spatter", "Crater Cracks", "Porosity", "Porosity w/Excessive Penetration",
)
ATTENUATION_FAMILY = ("Lack Of Fusion", "Undercut")
DRIFT_FAMILY = ("Warping", "Overlap", "Excessive Convexity")
JUMP_FAMILY = ("Burnthrough", "Excessive Penetration")

_FAMILY_BY_CATEGORY = {}
for _family, _members in (
    ("burst", BURST_FAMILY),
    ("attenuation", ATTENUATION_FAMILY),
    ("drift", DRIFT_FAMILY),
    ("jump", JUMP_FAMILY),
):
    for _name in _members:
        _FAMILY_BY_CATEGORY[_name] = _family

# Embedding cluster spread, and the defect shift per unit intensity as
# a fraction of the cluster radius (spread * sqrt(dim)); in high
# dimension only radius-relative shifts are detectable.
CLUSTER_SPREAD = 0.15
SHIFT_SCALE = 0.8


@dataclass(frozen=True)
class SynthSpec:
    n_good: int = 10
    defect_counts: dict = field(default_factory=dict)
    seed: int = 0
    duration_s: float = 2.0
    sample_rate: int = 192000
    fps: float = 30.0
    intensity: float = 1.0

    def __post_init__(self):
        if self.n_good < 0:
            raise ConfigError(f"n_good must be >= 0, got {self.n_good}")
        for category, count in self.defect_counts.items():
            if category not in DEFECT_CATEGORIES:
                raise ConfigError(f"unknown defect category {category!r}")
            if count < 0:
                raise ConfigError(
                    f"count for {category!r} must be >= 0, got {count}"
                )
        if not self.duration_s > 0:
            raise ConfigError(f"duration_s must be positive, got {self.duration_s}")
        if self.sample_rate < 1:
            raise ConfigError(f"sample_rate must be >= 1, got {self.sample_rate}")
        if not self.fps > 0:
            raise ConfigError(f"fps must be positive, got {self.fps}")
        if not self.intensity > 0:
            raise ConfigError(f"intensity must be positive, got {self.intensity}")

    def to_dict(self):
        return {
            "n_good": self.n_good,
            "defect_counts": dict(self.defect_counts),
            "seed": self.seed,
            "duration_s": self.duration_s,
            "sample_rate": self.sample_rate,
            "fps": self.fps,
            "intensity": self.intensity,
        }

    @classmethod
    def from_dict(cls, d):
        known = {f: d[f] for f in (
            "n_good", "defect_counts", "seed", "duration_s", "sample_rate",
            "fps", "intensity",
        ) if f in d}
        return cls(**known)


def _slug(category):
    return re.sub(r"[^a-z0-9]+", "-", category.lower()).strip("-")


def _sample_rng(seed, sample_id):
    return np.random.default_rng([seed] + list(sample_id.encode("utf-8")))


def _pink_noise(rng, n, sample_rate):
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    spectrum *= 1.0 / np.sqrt(np.maximum(freqs, 20.0))
    noise = np.fft.irfft(spectrum, n)
    return noise / max(np.std(noise), 1e-12)


def _smooth_gate(t, t0, t1, ramp_s=0.01):
    """1 inside [t0, t1), 0 outside, raised-cosine edges of ramp_s."""
    rise = np.clip((t - t0) / ramp_s, 0.0, 1.0)
    fall = np.clip((t1 - t) / ramp_s, 0.0, 1.0)
    gate = np.minimum(rise, fall)
    return 0.5 - 0.5 * np.cos(np.pi * gate)


def _render_audio(rng, spec, family, window):
    sr = spec.sample_rate
    n = int(round(spec.duration_s * sr))
    t = np.arange(n) / sr

    f0 = rng.uniform(200.0, 240.0)
    n_ctrl = int(math.ceil(spec.duration_s / 0.05)) + 2
    ctrl = rng.standard_normal(n_ctrl)
    ctrl_t = np.linspace(0.0, spec.duration_s, n_ctrl)
    f0_t = f0 * (1.0 + 0.01 * np.interp(t, ctrl_t, ctrl))
    if family == "drift" and window is not None:
        f0_t = f0_t * (1.0 + 0.4 * spec.intensity
                       * _smooth_gate(t, window[0], window[1], ramp_s=0.02))
    phase = 2.0 * np.pi * np.cumsum(f0_t) / sr

    harmonics = np.zeros(n)
    for k in range(1, 7):
        harmonics += np.sin(k * phase + rng.uniform(0.0, 2.0 * np.pi)) / k
    harmonics /= max(np.std(harmonics), 1e-12)

    x = 0.7 * harmonics + 0.3 * _pink_noise(rng, n, sr)

    if window is not None:
        i0 = int(window[0] * sr)
        i1 = min(int(window[1] * sr), n)
        if family == "burst":
            x = _inject_bursts(rng, x, sr, i0, i1, spec.intensity)
        elif family == "attenuation":
            x = _attenuate_band(x, sr, i0, i1, f0, spec.intensity)
        elif family == "jump":
            x = x * (1.0 + 2.0 * spec.intensity
                     * _smooth_gate(t, window[0], window[1]))

    return 0.5 * x / max(np.max(np.abs(x)), 1e-12)


def _inject_bursts(rng, x, sr, i0, i1, intensity):
    x = x.copy()
    length = max(8, int(0.02 * sr))
    n_bursts = max(3, int(round(8.0 * (i1 - i0) / sr)))
    rms = max(float(np.std(x)), 1e-12)
    for _ in range(n_bursts):
        start = int(rng.integers(i0, max(i0 + 1, i1 - length)))
        k = np.arange(min(length, len(x) - start))
        carrier = np.sin(2.0 * np.pi * rng.uniform(0.15, 0.35) * k
                         + rng.uniform(0.0, 2.0 * np.pi))
        envelope = np.exp(-4.0 * k / length)
        x[start : start + k.size] += 6.0 * intensity * rms * envelope * carrier
    return x


def _attenuate_band(x, sr, i0, i1, f0, intensity):
    x = x.copy()
    segment = x[i0:i1]
    spectrum = np.fft.rfft(segment)
    freqs = np.fft.rfftfreq(segment.size, 1.0 / sr)
    lo, hi = 1.5 * f0, 5.5 * f0
    width = 0.1 * (hi - lo)
    inside = np.minimum((freqs - lo) / width, (hi - freqs) / width)
    depth = np.clip(inside, 0.0, 1.0)
    factor = 1.0 - depth * (1.0 - 1.0 / (1.0 + 15.0 * intensity))
    filtered = np.fft.irfft(spectrum * factor, segment.size)
    fade = _smooth_gate(np.arange(segment.size) / sr,
                        0.005, segment.size / sr - 0.005, ramp_s=0.005)
    x[i0:i1] = segment * (1.0 - fade) + filtered * fade
    return x


def _render_embeddings(rng, spec, window, center, direction):
    n_frames = max(1, int(round(spec.duration_s * spec.fps)))
    vectors = center + CLUSTER_SPREAD * rng.standard_normal(
        (n_frames, EMBEDDING_DIM))
    if window is not None:
        times = (np.arange(n_frames) + 0.5) / spec.fps
        hit = (times >= window[0]) & (times < window[1])
        radius = CLUSTER_SPREAD * math.sqrt(EMBEDDING_DIM)
        vectors[hit] += SHIFT_SCALE * spec.intensity * radius * direction
    return vectors


def generate_corpus(spec, out_dir):
    """Write WAVs, embedding files, and manifest.jsonl under out_dir;
    returns the manifest. Paths in the manifest are relative to out_dir.
    """
    out_dir = Path(out_dir)
    audio_dir = out_dir / "audio"
    emb_dir = out_dir / "embeddings"
    audio_dir.mkdir(parents=True, exist_ok=True)
    emb_dir.mkdir(parents=True, exist_ok=True)

    corpus_rng = np.random.default_rng([spec.seed, 0])
    center = corpus_rng.standard_normal(EMBEDDING_DIM)
    directions = {}
    for category in DEFECT_CATEGORIES:
        direction = corpus_rng.standard_normal(EMBEDDING_DIM)
        directions[category] = direction / np.linalg.norm(direction)

    plan = [(GOOD_CATEGORY, spec.n_good)]
    plan += [(c, spec.defect_counts.get(c, 0)) for c in DEFECT_CATEGORIES]

    samples = []
    for category, count in plan:
        family = _FAMILY_BY_CATEGORY.get(category)
        for i in range(count):
            sample_id = f"{_slug(category)}-{i:04d}"
            rng = _sample_rng(spec.seed, sample_id)

            window = None
            if category != GOOD_CATEGORY:
                start = rng.uniform(0.30, 0.45) * spec.duration_s
                length = rng.uniform(0.20, 0.35) * spec.duration_s
                window = (start, min(start + length, spec.duration_s))

            audio = _render_audio(rng, spec, family, window)
            wav_path = audio_dir / f"{sample_id}.wav"
            write_wav(wav_path, audio, spec.sample_rate, encoding="float32")

            direction = directions.get(category)
            vectors = _render_embeddings(rng, spec, window, center, direction)
            emb_path = emb_dir / f"{sample_id}.emb"
            save_embeddings(emb_path,
                            EmbeddingSequence(sample_id, vectors, spec.fps))

            samples.append(Sample(
                sample_id=sample_id,
                category=category,
                weld_type=WELD_TYPES[int(rng.integers(len(WELD_TYPES)))],
                material=MATERIALS[int(rng.integers(len(MATERIALS)))],
                audio_path=str(wav_path.relative_to(out_dir)),
                embedding_path=str(emb_path.relative_to(out_dir)),
                duration_s=spec.duration_s,
            ))

    manifest = DatasetManifest(samples=samples)
    save_manifest(out_dir / "manifest.jsonl", manifest)
    return manifest
