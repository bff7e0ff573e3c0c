"""Streaming spectrogram frames over a bounded sample buffer.

Two-phase API: feed(samples) absorbs arriving PCM, poll() returns every
frame that has become computable and releases the samples it consumed.
A feed that would exceed the buffer capacity raises OverrunError before
absorbing anything; samples are never dropped silently.
"""

import numpy as np

from ..errors import ConfigError, OverrunError
from .stft import buffer_size, frame_magnitude, window_array


class StreamingStft:
    """Incremental equivalent of stft_magnitude.

    Frames are emitted in the same order and with bit-identical values
    to the offline transform of the concatenated input: both paths run
    the same single-frame transform on the same float64 samples.
    """

    def __init__(self, config, capacity=None):
        required = buffer_size(config.hop_length, config.fft_window)
        if capacity is None:
            capacity = required
        elif capacity < required:
            raise ConfigError(
                f"stream capacity {capacity} is below the required buffer "
                f"size {required}"
            )
        self.config = config
        self.capacity = int(capacity)
        self._window = window_array(config)
        self._pending = np.zeros(0)
        self.frames_emitted = 0

    def pending_samples(self):
        return self._pending.size

    def feed(self, samples):
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ConfigError(
                f"feed expects mono 1-D samples, got shape {samples.shape}"
            )
        if self._pending.size + samples.size > self.capacity:
            raise OverrunError(
                f"feeding {samples.size} samples would exceed buffer capacity "
                f"{self.capacity} ({self._pending.size} pending); poll() first"
            )
        self._pending = np.concatenate([self._pending, samples])

    def poll(self):
        """All frames computable from pending samples, shaped (n_bins, k)."""
        fft = self.config.fft_window
        hop = self.config.hop_length
        frames = []
        while self._pending.size >= fft:
            frames.append(
                frame_magnitude(
                    self._pending[:fft], self._window, self.config.log_magnitude
                )
            )
            self._pending = self._pending[hop:]
        self.frames_emitted += len(frames)
        if frames:
            return np.stack(frames, axis=1)
        return np.zeros((self.config.n_bins, 0))
