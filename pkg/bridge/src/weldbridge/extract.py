"""End-to-end extraction: decode, window, encode, write."""

import logging
from dataclasses import dataclass
from pathlib import Path

from .encoders import resolve_encoder, window_indices
from .errors import BackboneError
from .video import decode_video
from .writer import write_embeddings

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtractionResult:
    path: Path
    sample_id: str
    n_frames: int
    dim: int
    fps: float


def extract_embeddings(config):
    """Run the configured encoder over a video; returns an
    ExtractionResult.

    One vector per frame, ordered by frame index. The output depends
    only on the video bytes and the encoder, so repeated runs write
    identical files.
    """
    video = decode_video(config.video)
    encoder = resolve_encoder(config.checkpoint, device=config.device)
    log.info("encoding %d frames of %s with %s", video.n_frames,
             config.video, encoder.name)
    indices = window_indices(video.n_frames, window=config.window_frames)
    vectors = encoder.embed_windows(video.pixels, indices)
    if vectors.shape != (video.n_frames, encoder.dim):
        raise BackboneError(
            f"encoder produced shape {vectors.shape}, expected "
            f"({video.n_frames}, {encoder.dim})"
        )
    sample_id = config.resolved_sample_id()
    write_embeddings(config.output, sample_id, vectors, video.fps)
    return ExtractionResult(path=Path(config.output), sample_id=sample_id,
                            n_frames=video.n_frames, dim=encoder.dim,
                            fps=video.fps)
