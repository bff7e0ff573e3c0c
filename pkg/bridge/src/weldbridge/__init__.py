"""weldbridge: stage-one video embedding extractor.

Runs a pluggable backbone over sliding 64-frame windows of a video and
writes per-frame 2304-d vectors in the embedding file format consumed
by weldwatch.
"""

from .config import DEFAULT_CHECKPOINT, EMBEDDING_DIM, WINDOW_FRAMES, BridgeConfig
from .errors import BackboneError, BridgeError, ConfigError, DecodeError
from .extract import ExtractionResult, extract_embeddings

__version__ = "1.0.0"

__all__ = [
    "BridgeConfig",
    "BridgeError",
    "ConfigError",
    "DecodeError",
    "BackboneError",
    "ExtractionResult",
    "extract_embeddings",
    "DEFAULT_CHECKPOINT",
    "EMBEDDING_DIM",
    "WINDOW_FRAMES",
    "__version__",
]
