"""1D-CNN spectrogram autoencoder: build, train, score.

The stack is BatchNorm over bins, five stride-1 valid convolutions down
to the bottleneck (each shortens time by 2), five transpose convolutions
back up (each extends by 2), leaky-ReLU between layers and a PReLU as
the last activation before the output layer. Inputs therefore need more
than 10 frames, and the reconstruction has exactly the input's shape.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError, ShapeError, UnsupervisedGuardError
from ..nn import (
    Adam,
    BatchNorm1d,
    Conv1d,
    ConvTranspose1d,
    LeakyReLU,
    OneCycleSchedule,
    PReLU,
    Sequential,
    mse_loss,
)
from ..nn.checkpoint import load_checkpoint, save_checkpoint
from ..scoring import ScoreSeries
from .stft import Spectrogram

# Five k=3 valid conv layers each drop 2 frames; the bottleneck needs
# at least 1 frame, so inputs must have more than 10.
MIN_INPUT_FRAMES = 11

# Bottleneck sizes explored by the reference experiments.
STANDARD_BOTTLENECKS = (16, 32, 48, 64)


@dataclass(frozen=True)
class AudioAeConfig:
    n_bins: int
    width: int = 1024
    bottleneck: int = 64

    def __post_init__(self):
        if self.n_bins < 1:
            raise ConfigError(f"n_bins must be >= 1, got {self.n_bins}")
        if self.width < 2:
            raise ConfigError(f"width must be >= 2, got {self.width}")
        if not 1 <= self.bottleneck < self.width:
            raise ConfigError(
                f"bottleneck must satisfy 1 <= bottleneck < width, got "
                f"bottleneck={self.bottleneck}, width={self.width}"
            )

    def to_dict(self):
        return {
            "n_bins": self.n_bins,
            "width": self.width,
            "bottleneck": self.bottleneck,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(n_bins=int(d["n_bins"]), width=int(d["width"]),
                   bottleneck=int(d["bottleneck"]))


@dataclass(frozen=True)
class AudioTrainRecipe:
    epochs: int = 50
    peak_lr: float = 1e-4
    batch_size: int = 16
    segment_frames: int = 32
    seed: int = 0
    warmup_frac: float = 0.3
    div_initial: float = 25.0
    div_final: float = 1e4

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.segment_frames <= 10:
            raise ConfigError(
                f"segment_frames must exceed 10, got {self.segment_frames}"
            )


class AudioAutoencoder:
    """The model plus its identifying config and init seed."""

    ENCODER_LAYERS = 11  # batchnorm + 5 x (conv, activation)

    def __init__(self, config, seed=0):
        self.config = config
        self.seed = seed
        rng = np.random.default_rng(seed)
        nb, w, b = config.n_bins, config.width, config.bottleneck
        layers = [BatchNorm1d(nb)]
        encoder_channels = [(nb, w), (w, w), (w, w), (w, w), (w, b)]
        for cin, cout in encoder_channels:
            layers.append(Conv1d(cin, cout, kernel_size=3, rng=rng))
            layers.append(LeakyReLU())
        decoder_channels = [(b, w), (w, w), (w, w), (w, w)]
        for i, (cin, cout) in enumerate(decoder_channels):
            layers.append(ConvTranspose1d(cin, cout, kernel_size=3, rng=rng))
            layers.append(PReLU() if i == len(decoder_channels) - 1
                          else LeakyReLU())
        layers.append(ConvTranspose1d(w, nb, kernel_size=3, rng=rng))
        self.net = Sequential(layers)

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[1] != self.config.n_bins:
            raise ShapeError(
                f"expected (batch, {self.config.n_bins}, frames), got {x.shape}"
            )
        if x.shape[2] < MIN_INPUT_FRAMES:
            raise ShapeError(
                f"inputs must have more than 10 frames, got {x.shape[2]}"
            )
        return x

    def reconstruct(self, x, training=False):
        return self.net.forward(self._check_input(x), training=training)

    def encode(self, x):
        """Bottleneck activation, shaped (batch, bottleneck, frames - 10)."""
        x = self._check_input(x)
        out = x
        for layer in self.net.layers[: self.ENCODER_LAYERS]:
            out = layer.forward(out, training=False)
        return out

    def param_count(self):
        return self.net.param_count()

    def save(self, path):
        save_checkpoint(path, "audio-ae", self.config.to_dict(), self.seed,
                        self.net.named_arrays())

    @classmethod
    def load(cls, path):
        header, arrays = load_checkpoint(path)
        if header.get("kind") != "audio-ae":
            raise DataError(
                f"{path}: checkpoint kind {header.get('kind')!r} is not 'audio-ae'"
            )
        model = cls(AudioAeConfig.from_dict(header["arch"]),
                    seed=header.get("seed", 0))
        model.net.load_arrays(arrays)
        return model


def build_audio_ae(config, seed=0):
    return AudioAutoencoder(config, seed=seed)


def _corpus_matrices(corpus, n_bins, segment_frames):
    mats = []
    for i, item in enumerate(corpus):
        mat = item.magnitudes if isinstance(item, Spectrogram) else \
            np.asarray(item, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != n_bins:
            raise DataError(
                f"corpus sample {i} has shape {mat.shape}, expected "
                f"({n_bins}, frames)"
            )
        if mat.shape[1] < segment_frames:
            raise DataError(
                f"corpus sample {i} has {mat.shape[1]} frames, fewer than "
                f"segment_frames={segment_frames}"
            )
        mats.append(mat)
    return mats


def train_audio_ae(model, corpus, recipe, labels=None):
    """Train on good welds only; returns a history dict.

    corpus: Spectrogram objects or (n_bins, frames) arrays. labels, when
    given, must all be falsy ('good'); any defect label trips the
    unsupervised guard. Deterministic for a fixed recipe seed.
    """
    if labels is not None:
        labels = list(labels)
        if len(labels) != len(corpus):
            raise DataError("labels must align with corpus")
        for i, label in enumerate(labels):
            if label in (0, False, "good", None):
                continue
            raise UnsupervisedGuardError(
                f"corpus sample {i} is labeled {label!r}; training data "
                "must contain good welds only"
            )
    mats = _corpus_matrices(corpus, model.config.n_bins, recipe.segment_frames)
    if not mats:
        raise DataError("training corpus is empty")

    seg = recipe.segment_frames
    probe_count = min(recipe.batch_size, len(mats))
    probe = np.stack([
        m[:, (m.shape[1] - seg) // 2 : (m.shape[1] - seg) // 2 + seg]
        for m in mats[:probe_count]
    ])

    def probe_mse():
        recon = model.reconstruct(probe, training=False)
        return float(np.mean((recon - probe) ** 2))

    history = {"probe_mse_initial": probe_mse(), "epoch_loss": []}

    n = len(mats)
    n_batches = math.ceil(n / recipe.batch_size)
    total_steps = recipe.epochs * n_batches
    if total_steps >= 2:
        schedule = OneCycleSchedule(
            total_steps, recipe.peak_lr, warmup_frac=recipe.warmup_frac,
            div_initial=recipe.div_initial, div_final=recipe.div_final,
        )
        lr_at = schedule.lr
    else:
        lr_at = lambda step: recipe.peak_lr

    # The training stream is derived from (seed, 1) so it never collides
    # with the (seed)-keyed init stream.
    rng = np.random.default_rng([recipe.seed, 1])
    optimizer = Adam([p for p in model.net.parameters()], lr=recipe.peak_lr)
    step = 0
    for _ in range(recipe.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, recipe.batch_size):
            idx = order[start : start + recipe.batch_size]
            batch = np.stack([
                _random_crop(mats[i], seg, rng) for i in idx
            ])
            recon = model.reconstruct(batch, training=True)
            loss, grad = mse_loss(recon, batch)
            optimizer.zero_grad()
            model.net.backward(grad)
            optimizer.step(lr=lr_at(step))
            step += 1
            epoch_losses.append(loss)
        history["epoch_loss"].append(float(np.mean(epoch_losses)))
    history["probe_mse_final"] = probe_mse()
    history["steps"] = step
    return history


def _random_crop(mat, segment_frames, rng):
    start = int(rng.integers(0, mat.shape[1] - segment_frames + 1))
    return mat[:, start : start + segment_frames]


def audio_frame_scores(model, spectrogram, sample_id="sample"):
    """Per-frame anomaly scores: MSE over bins between input and
    reconstruction at each frame."""
    mags = spectrogram.magnitudes
    recon = model.reconstruct(mags[None, :, :], training=False)[0]
    scores = np.mean((recon - mags) ** 2, axis=0)
    frame_period = spectrogram.config.hop_length / spectrogram.config.sample_rate
    return ScoreSeries(
        sample_id=sample_id,
        modality="audio",
        scores=scores,
        frame_period_s=frame_period,
    )
