"""MLP autoencoder over per-frame video embeddings: build, train, score.

The encoder halves the feature dimension per linear layer from 2304
down to a 64-d latent, a pair of 64-to-64 bridge layers sits at the
bottleneck, and the decoder mirrors the encoder back up to 2304. ReLU
follows every linear layer except the output one; dropout follows the
ReLU of every encoder layer but the first, and once more before the
output layer.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError, ShapeError, UnsupervisedGuardError
from ..nn import Adam, Dropout, Linear, ReLU, Sequential, mse_loss
from ..nn.checkpoint import load_checkpoint, save_checkpoint
from ..scoring import ScoreSeries
from .embeddings import EMBEDDING_DIM, EmbeddingSequence

# Stage one encodes a 64-frame window centered on each frame, so the
# real-time score for a frame lags it by half a window.
WINDOW_FRAMES = 64
HALF_WINDOW = WINDOW_FRAMES // 2


@dataclass(frozen=True)
class VideoAeConfig:
    input_dim: int = EMBEDDING_DIM
    hidden_dims: tuple = (512, 256, 128, 64)
    dropout: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        if self.input_dim < 1:
            raise ConfigError(f"input_dim must be >= 1, got {self.input_dim}")
        if not self.hidden_dims:
            raise ConfigError("hidden_dims must not be empty")
        chain = (self.input_dim,) + self.hidden_dims
        for prev, cur in zip(chain, chain[1:]):
            if cur < 1 or cur * 2 > prev:
                raise ConfigError(
                    f"each encoder layer must halve the dimension or better, "
                    f"got {prev} -> {cur}"
                )
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def latent_dim(self):
        return self.hidden_dims[-1]

    def to_dict(self):
        return {
            "input_dim": self.input_dim,
            "hidden_dims": list(self.hidden_dims),
            "dropout": self.dropout,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(input_dim=int(d["input_dim"]),
                   hidden_dims=tuple(d["hidden_dims"]),
                   dropout=float(d["dropout"]))


@dataclass(frozen=True)
class VideoTrainRecipe:
    epochs: int = 1000
    lr: float = 5e-4
    batch_size: int = 64
    seed: int = 0
    frames_per_sample: int = 0
    eval_every: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.frames_per_sample < 0:
            raise ConfigError(
                f"frames_per_sample must be >= 0, got {self.frames_per_sample}"
            )
        if self.eval_every < 0:
            raise ConfigError(f"eval_every must be >= 0, got {self.eval_every}")


class VideoAutoencoder:
    """The model plus its identifying config and init seed."""

    def __init__(self, config, seed=0):
        self.config = config
        self.seed = seed
        rng = np.random.default_rng(seed)
        dims = (config.input_dim,) + config.hidden_dims
        latent = config.latent_dim
        layers = []
        for i, (din, dout) in enumerate(zip(dims, dims[1:])):
            layers.append(Linear(din, dout, rng=rng))
            layers.append(ReLU())
            if i > 0:
                layers.append(Dropout(config.dropout))
        layers.append(Linear(latent, latent, rng=rng))
        layers.append(ReLU())
        self._encoder_layers = len(layers)
        layers.append(Linear(latent, latent, rng=rng))
        layers.append(ReLU())
        up = tuple(reversed(dims))
        for din, dout in zip(up[:-1], up[1:-1]):
            layers.append(Linear(din, dout, rng=rng))
            layers.append(ReLU())
        layers.append(Dropout(config.dropout))
        layers.append(Linear(up[-2], up[-1], rng=rng))
        self.net = Sequential(layers)

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.config.input_dim:
            raise ShapeError(
                f"expected (batch, {self.config.input_dim}), got {x.shape}"
            )
        return x

    def reconstruct(self, x, training=False):
        return self.net.forward(self._check_input(x), training=training)

    def encode(self, x):
        """Latent activation after the first bridge layer, (batch, latent)."""
        out = self._check_input(x)
        for layer in self.net.layers[: self._encoder_layers]:
            out = layer.forward(out, training=False)
        return out

    def param_count(self):
        return self.net.param_count()

    def save(self, path):
        save_checkpoint(path, "video-ae", self.config.to_dict(), self.seed,
                        self.net.named_arrays())

    @classmethod
    def load(cls, path):
        header, arrays = load_checkpoint(path)
        if header.get("kind") != "video-ae":
            raise DataError(
                f"{path}: checkpoint kind {header.get('kind')!r} is not 'video-ae'"
            )
        model = cls(VideoAeConfig.from_dict(header["arch"]),
                    seed=header.get("seed", 0))
        model.net.load_arrays(arrays)
        return model


def build_video_ae(config, seed=0):
    return VideoAutoencoder(config, seed=seed)


def _corpus_vectors(corpus, input_dim):
    mats = []
    for i, item in enumerate(corpus):
        mat = item.vectors if isinstance(item, EmbeddingSequence) else \
            np.asarray(item, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[1] != input_dim:
            raise DataError(
                f"corpus sample {i} has shape {mat.shape}, expected "
                f"(frames, {input_dim})"
            )
        if mat.shape[0] < 1:
            raise DataError(f"corpus sample {i} has no frames")
        mats.append(mat)
    return mats


def train_video_ae(model, corpus, recipe, labels=None, validation_scorer=None):
    """Train on good welds only; returns a history dict.

    corpus: EmbeddingSequence objects or (frames, dim) arrays. labels,
    when given, must all be falsy ('good'); any defect label trips the
    unsupervised guard. The embeddings themselves are fixed inputs and
    are never modified. When validation_scorer is given it is called
    every eval_every epochs with the model and must return a figure of
    merit (larger is better, e.g. validation AUC); the parameters from
    the best-scoring evaluation are restored at the end. Deterministic
    for a fixed recipe seed.
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
    if validation_scorer is not None and recipe.eval_every < 1:
        raise ConfigError(
            "eval_every must be >= 1 when a validation scorer is provided"
        )
    mats = _corpus_vectors(corpus, model.config.input_dim)
    if not mats:
        raise DataError("training corpus is empty")

    probe_count = min(recipe.batch_size, len(mats))
    probe = np.stack([m[m.shape[0] // 2] for m in mats[:probe_count]])

    def probe_mse():
        recon = model.reconstruct(probe, training=False)
        return float(np.mean((recon - probe) ** 2))

    history = {"probe_mse_initial": probe_mse(), "epoch_loss": []}

    # The training stream is derived from (seed, 1) so it never collides
    # with the (seed)-keyed init stream. Dropout masks get their own
    # recipe-keyed streams so repeated train calls are reproducible.
    rng = np.random.default_rng([recipe.seed, 1])
    for i, layer in enumerate(
        l for l in model.net.layers if isinstance(l, Dropout)
    ):
        layer.rng = np.random.default_rng([recipe.seed, 2, i])
    params = list(model.net.parameters())
    optimizer = Adam(params, lr=recipe.lr)
    best = None
    evals = []
    step = 0
    for epoch in range(recipe.epochs):
        pooled = np.concatenate([_epoch_frames(m, recipe, rng) for m in mats])
        order = rng.permutation(pooled.shape[0])
        epoch_losses = []
        for start in range(0, pooled.shape[0], recipe.batch_size):
            batch = pooled[order[start : start + recipe.batch_size]]
            recon = model.reconstruct(batch, training=True)
            loss, grad = mse_loss(recon, batch)
            optimizer.zero_grad()
            model.net.backward(grad)
            optimizer.step()
            step += 1
            epoch_losses.append(loss)
        history["epoch_loss"].append(float(np.mean(epoch_losses)))
        if validation_scorer is not None and (
            (epoch + 1) % recipe.eval_every == 0 or epoch == recipe.epochs - 1
        ):
            merit = float(validation_scorer(model))
            evals.append((epoch + 1, merit))
            if best is None or merit > best[1]:
                best = (epoch + 1, merit, [p.data.copy() for p in params])
    if best is not None:
        for param, data in zip(params, best[2]):
            param.data[...] = data
        history["val_merit"] = evals
        history["best_epoch"] = best[0]
    history["probe_mse_final"] = probe_mse()
    history["steps"] = step
    return history


def _epoch_frames(mat, recipe, rng):
    if recipe.frames_per_sample == 0 or recipe.frames_per_sample >= mat.shape[0]:
        return mat
    idx = rng.choice(mat.shape[0], size=recipe.frames_per_sample, replace=False)
    return mat[idx]


def video_frame_scores(model, sequence):
    """Per-frame anomaly scores: MSE over the embedding dimensions
    between each input vector and its reconstruction."""
    recon = model.reconstruct(sequence.vectors, training=False)
    scores = np.mean((recon - sequence.vectors) ** 2, axis=1)
    return ScoreSeries(
        sample_id=sequence.sample_id,
        modality="video",
        scores=scores,
        frame_period_s=1.0 / sequence.fps,
    )


@dataclass
class WindowPlan:
    """Stage-one sliding windows: one 64-frame window per frame, centered
    on it, with starts clamped so edge frames reuse the nearest full
    window."""

    n_frames: int
    fps: float
    starts: np.ndarray

    @property
    def centers(self):
        return np.arange(self.n_frames)

    @property
    def stops(self):
        return self.starts + WINDOW_FRAMES

    @property
    def latency_s(self):
        return HALF_WINDOW / self.fps


def sliding_window_spec(n_video_frames, fps):
    if not fps > 0:
        raise ConfigError(f"fps must be positive, got {fps}")
    n = int(n_video_frames)
    if n < WINDOW_FRAMES:
        raise DataError(
            f"video has {n} frames, shorter than the {WINDOW_FRAMES}-frame window"
        )
    starts = np.clip(np.arange(n) - HALF_WINDOW, 0, n - WINDOW_FRAMES)
    return WindowPlan(n_frames=n, fps=float(fps), starts=starts)
