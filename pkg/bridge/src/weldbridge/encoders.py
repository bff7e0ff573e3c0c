"""Window encoders.

A checkpoint identifier selects the encoder:

  "projection" or "projection:<seed>"
      Codec-free deterministic encoder: each frame is reduced to an
      8x8 luminance grid, the 64 grids of a window are concatenated
      into a 4096-d feature, and a fixed seeded Gaussian projection
      maps it to 2304 dimensions. No learned weights; useful for
      format conformance tests and pipeline plumbing.

  anything else
      Treated as a TorchScript artifact. The identifier is resolved to
      a file (as given, then under $WELDBRIDGE_CHECKPOINT_DIR, then the
      working directory) and loaded with torch.jit.load. The module
      must map a float32 tensor shaped (batch, 3, 64, crop, crop),
      normalized per the pinned recipe, to (batch, 2304). The default
      identifier names the published action-recognition backbone
      checkpoint; any export honoring the contract plugs in behind the
      same flag.
"""

import os
from pathlib import Path

import numpy as np

from .config import EMBEDDING_DIM, WINDOW_FRAMES
from .errors import BackboneError
from .video import grayscale

_GRID = 8

# Pinned preprocessing recipe for torch backbones: bilinear resize of
# the short side, center crop, then per-channel normalization with the
# Kinetics statistics (RGB, 0-255 scale).
RESIZE_SHORT = 256
CROP = 224
KINETICS_MEAN = (123.675, 116.28, 103.53)
KINETICS_STD = (58.395, 57.12, 57.375)


def window_indices(n_frames, window=WINDOW_FRAMES, half=None):
    """Per-frame window membership, shaped (n_frames, window).

    The window for frame t is centered on t and clamped to the clip,
    so every frame of a clip no longer than one window shares the
    single full window. Clips shorter than the window repeat their
    last frame to fill it.
    """
    if n_frames < 1:
        raise BackboneError("cannot window an empty clip")
    half = window // 2 if half is None else half
    t = np.arange(n_frames)
    starts = np.clip(t - half, 0, max(n_frames - window, 0))
    idx = starts[:, None] + np.arange(window)[None, :]
    return np.minimum(idx, n_frames - 1)


class ProjectionEncoder:
    dim = EMBEDDING_DIM

    def __init__(self, seed=0):
        self.seed = int(seed)
        self.name = f"projection:{self.seed}"
        n_features = WINDOW_FRAMES * _GRID * _GRID
        rng = np.random.default_rng(self.seed)
        self._projection = rng.standard_normal(
            (n_features, self.dim)) / np.sqrt(n_features)

    @staticmethod
    def _frame_grids(pixels):
        n, h, w = pixels.shape[0], pixels.shape[1], pixels.shape[2]
        if h < _GRID or w < _GRID:
            raise BackboneError(
                f"frames must be at least {_GRID}x{_GRID} pixels, "
                f"got {h}x{w}"
            )
        gray = grayscale(pixels)
        rows = (np.arange(_GRID) * h) // _GRID
        cols = (np.arange(_GRID) * w) // _GRID
        sums = np.add.reduceat(np.add.reduceat(gray, rows, axis=1),
                               cols, axis=2)
        heights = np.diff(np.append(rows, h))
        widths = np.diff(np.append(cols, w))
        cells = heights[:, None] * widths[None, :]
        return (sums / cells).reshape(n, _GRID * _GRID)

    def embed_windows(self, pixels, indices):
        grids = self._frame_grids(pixels)
        features = grids[indices].reshape(indices.shape[0], -1)
        return features @ self._projection


class TorchscriptEncoder:
    dim = EMBEDDING_DIM

    def __init__(self, path, device="cpu", batch_windows=8):
        self.name = Path(path).name
        self.device = device
        self.batch_windows = max(1, int(batch_windows))
        try:
            import torch
        except ImportError as exc:
            raise BackboneError(
                "torch backbones need the 'torch' package; install it or "
                "use a projection encoder (--checkpoint projection:<seed>)"
            ) from exc
        self._torch = torch
        try:
            self._module = torch.jit.load(str(path), map_location=device)
        except Exception as exc:
            raise BackboneError(
                f"{path}: not a loadable TorchScript module ({exc}); export "
                f"the backbone with torch.jit.script or torch.jit.trace"
            ) from exc
        self._module.eval()

    def _preprocess(self, windows):
        torch = self._torch
        batch, frames = windows.shape[0], windows.shape[1]
        x = torch.from_numpy(
            np.ascontiguousarray(windows, dtype=np.float32))
        x = x.permute(0, 1, 4, 2, 3).reshape(batch * frames, 3,
                                             windows.shape[2],
                                             windows.shape[3])
        h, w = x.shape[2], x.shape[3]
        scale = RESIZE_SHORT / min(h, w)
        size = (max(CROP, round(h * scale)), max(CROP, round(w * scale)))
        x = torch.nn.functional.interpolate(x, size=size, mode="bilinear",
                                            align_corners=False)
        top = (size[0] - CROP) // 2
        left = (size[1] - CROP) // 2
        x = x[:, :, top : top + CROP, left : left + CROP]
        mean = torch.tensor(KINETICS_MEAN).view(1, 3, 1, 1)
        std = torch.tensor(KINETICS_STD).view(1, 3, 1, 1)
        x = (x - mean) / std
        return x.reshape(batch, frames, 3, CROP, CROP).permute(0, 2, 1, 3, 4)

    def embed_windows(self, pixels, indices):
        torch = self._torch
        outputs = []
        with torch.inference_mode():
            for lo in range(0, indices.shape[0], self.batch_windows):
                windows = pixels[indices[lo : lo + self.batch_windows]]
                out = self._module(self._preprocess(windows).to(self.device))
                if out.ndim != 2 or out.shape[1] != self.dim:
                    raise BackboneError(
                        f"backbone emitted shape {tuple(out.shape)}, the "
                        f"format requires (batch, {self.dim})"
                    )
                outputs.append(out.detach().cpu().numpy().astype(np.float64))
        return np.concatenate(outputs, axis=0)


def _resolve_checkpoint_path(identifier):
    candidates = [Path(identifier)]
    search_dir = os.environ.get("WELDBRIDGE_CHECKPOINT_DIR")
    if search_dir:
        candidates.append(Path(search_dir) / identifier)
    candidates.append(Path.cwd() / identifier)
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    searched = ", ".join(str(c) for c in candidates)
    raise BackboneError(
        f"backbone checkpoint {identifier!r} not found (searched "
        f"{searched}); download the published file and point --checkpoint "
        f"at it, set WELDBRIDGE_CHECKPOINT_DIR, or use a projection "
        f"encoder (--checkpoint projection:<seed>)"
    )


def resolve_encoder(identifier, device="cpu"):
    if identifier == "projection" or identifier.startswith("projection:"):
        _, _, seed = identifier.partition(":")
        try:
            return ProjectionEncoder(seed=int(seed) if seed else 0)
        except ValueError as exc:
            raise BackboneError(
                f"projection seed must be an integer, got {seed!r}"
            ) from exc
    return TorchscriptEncoder(_resolve_checkpoint_path(identifier),
                              device=device)
