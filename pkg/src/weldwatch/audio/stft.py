"""Magnitude spectrograms with the ring-buffer sizing and latency rules.

Frame f covers samples [f*hop, f*hop + fft_window); the trailing partial
window is dropped, so n_frames = floor((N - fft_window)/hop) + 1. Both
the offline and streaming paths compute each frame through the same
single-frame transform, which keeps their outputs bit-identical.
"""

import json
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError

# FFT window sizes explored by the reference experiments; other sizes
# work but are flagged so configuration typos surface early.
STANDARD_FFT_WINDOWS = (4096, 16384, 32768, 65536)

WINDOW_KINDS = ("hann", "rectangular")

CACHE_MAGIC = b"WWSG"
CACHE_VERSION = 1


@dataclass(frozen=True)
class StftConfig:
    """Sampling and framing parameters for the spectrogram frontend."""

    sample_rate: int
    fft_window: int
    hop_length: int
    window: str = "hann"
    log_magnitude: bool = False

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.fft_window <= 0 or self.hop_length <= 0:
            raise ConfigError("fft_window and hop_length must be positive")
        if self.fft_window % self.hop_length != 0:
            raise ConfigError(
                f"hop_length {self.hop_length} must divide fft_window "
                f"{self.fft_window}"
            )
        if self.window not in WINDOW_KINDS:
            raise ConfigError(
                f"window must be one of {WINDOW_KINDS}, got {self.window!r}"
            )
        if self.fft_window not in STANDARD_FFT_WINDOWS:
            warnings.warn(
                f"fft_window {self.fft_window} is outside the standard grid "
                f"{STANDARD_FFT_WINDOWS}",
                stacklevel=2,
            )

    @property
    def n_bins(self):
        return self.fft_window // 2 + 1

    def to_dict(self):
        return {
            "sample_rate": self.sample_rate,
            "fft_window": self.fft_window,
            "hop_length": self.hop_length,
            "window": self.window,
            "log_magnitude": self.log_magnitude,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            sample_rate=int(d["sample_rate"]),
            fft_window=int(d["fft_window"]),
            hop_length=int(d["hop_length"]),
            window=str(d.get("window", "hann")),
            log_magnitude=bool(d.get("log_magnitude", False)),
        )


@dataclass
class Spectrogram:
    """Magnitudes shaped (n_bins, n_frames) plus the config that made them."""

    magnitudes: np.ndarray
    config: StftConfig = field(repr=False)

    def __post_init__(self):
        self.magnitudes = np.asarray(self.magnitudes, dtype=np.float64)
        if self.magnitudes.ndim != 2:
            raise DataError(
                f"spectrogram must be 2-D, got shape {self.magnitudes.shape}"
            )
        if self.magnitudes.shape[0] != self.config.n_bins:
            raise DataError(
                f"spectrogram has {self.magnitudes.shape[0]} bins, config "
                f"implies {self.config.n_bins}"
            )

    @property
    def n_bins(self):
        return self.magnitudes.shape[0]

    @property
    def n_frames(self):
        return self.magnitudes.shape[1]


def window_array(config):
    """The analysis window as float64 samples.

    Hann is periodic (denominator fft_window, not fft_window-1), the
    customary form for STFT analysis.
    """
    n = config.fft_window
    if config.window == "hann":
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    return np.ones(n)


def frame_magnitude(frame, window, log_magnitude):
    """Magnitude of the one-sided DFT of a single windowed frame.

    Shared by the offline and streaming paths so the two stay
    bit-identical. Log compression uses log1p, which preserves
    non-negativity.
    """
    mag = np.abs(np.fft.rfft(frame * window))
    if log_magnitude:
        mag = np.log1p(mag)
    return mag


def stft_magnitude(signal, config):
    """Magnitude spectrogram of a mono signal."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise DataError(
            f"stft_magnitude expects a mono 1-D signal, got shape {signal.shape}; "
            "select a channel first"
        )
    n = signal.shape[0]
    fft, hop = config.fft_window, config.hop_length
    if n < fft:
        raise DataError(
            f"signal length {n} is shorter than one fft_window ({fft})"
        )
    n_frames = (n - fft) // hop + 1
    window = window_array(config)
    mags = np.empty((config.n_bins, n_frames))
    for f in range(n_frames):
        start = f * hop
        mags[:, f] = frame_magnitude(
            signal[start : start + fft], window, config.log_magnitude
        )
    return Spectrogram(mags, config)


def buffer_size(hop_length, fft_window):
    """Ring-buffer sample count: hop_length * (10 + fft_window/hop_length)."""
    if hop_length <= 0 or fft_window <= 0:
        raise ConfigError("hop_length and fft_window must be positive")
    if fft_window % hop_length != 0:
        raise ConfigError(
            f"fft_window {fft_window} must be an integer multiple of "
            f"hop_length {hop_length}"
        )
    return hop_length * (10 + fft_window // hop_length)


def model_latency_ms(hop_length, sample_rate):
    """End-to-end model latency: one hop of audio, in milliseconds."""
    if hop_length <= 0 or sample_rate <= 0:
        raise ConfigError("hop_length and sample_rate must be positive")
    return 1000.0 * hop_length / sample_rate


def save_spectrogram(path, spec):
    """Write a spectrogram cache file.

    Layout (documented in docs/formats.md): magic "WWSG", u32 version,
    u32 header length, UTF-8 JSON header (config + shape), then the
    magnitude matrix as float32 little-endian in column-major order
    (frame after frame).
    """
    header = {
        "format_version": CACHE_VERSION,
        "config": spec.config.to_dict(),
        "n_bins": spec.n_bins,
        "n_frames": spec.n_frames,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode(
        "utf-8"
    )
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<II", CACHE_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        fh.write(np.asfortranarray(spec.magnitudes, dtype="<f4").tobytes(order="F"))


def load_spectrogram(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CACHE_MAGIC:
        raise DataError(f"{path}: not a spectrogram cache file (bad magic)")
    version, header_len = struct.unpack_from("<II", blob, 4)
    if version != CACHE_VERSION:
        raise DataError(f"{path}: unsupported cache version {version}")
    header_end = 12 + header_len
    try:
        header = json.loads(blob[12:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: corrupt cache header: {exc}") from exc
    config = StftConfig.from_dict(header["config"])
    n_bins, n_frames = int(header["n_bins"]), int(header["n_frames"])
    count = n_bins * n_frames
    if header_end + 4 * count != len(blob):
        raise DataError(f"{path}: cache payload size mismatch")
    flat = np.frombuffer(blob, dtype="<f4", count=count, offset=header_end)
    mags = flat.reshape((n_bins, n_frames), order="F").astype(np.float64)
    return Spectrogram(mags, config)
