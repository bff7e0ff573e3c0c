"""Video-path anomaly detection over precomputed frame embeddings."""

from .embeddings import (
    EMBEDDING_DIM,
    EmbeddingSequence,
    load_embeddings,
    save_embeddings,
)
from .model import (
    HALF_WINDOW,
    WINDOW_FRAMES,
    VideoAeConfig,
    VideoAutoencoder,
    VideoTrainRecipe,
    WindowPlan,
    build_video_ae,
    sliding_window_spec,
    train_video_ae,
    video_frame_scores,
)

__all__ = [
    "EMBEDDING_DIM",
    "EmbeddingSequence",
    "load_embeddings",
    "save_embeddings",
    "HALF_WINDOW",
    "WINDOW_FRAMES",
    "VideoAeConfig",
    "VideoAutoencoder",
    "VideoTrainRecipe",
    "WindowPlan",
    "build_video_ae",
    "sliding_window_spec",
    "train_video_ae",
    "video_frame_scores",
]
