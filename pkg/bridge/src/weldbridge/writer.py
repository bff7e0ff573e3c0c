"""Embedding file writer.

Implements the shared byte layout independently of the consumer
package so either side can validate the other:

    magic b"WWEB", u32 version (1), u32 sample-id length, sample id
    (UTF-8), u32 n_frames, u32 dim, f32 fps, then n_frames * dim
    float32 values, frame-major. All integers and floats little-endian.
"""

import struct

import numpy as np

from .config import EMBEDDING_DIM
from .errors import BackboneError

MAGIC = b"WWEB"
VERSION = 1

_HEAD = struct.Struct("<4sII")
_DIMS = struct.Struct("<IIf")


def write_embeddings(path, sample_id, vectors, fps):
    vectors = np.asarray(vectors)
    if vectors.ndim != 2 or vectors.shape[1] != EMBEDDING_DIM:
        raise BackboneError(
            f"embedding matrix must be (n_frames, {EMBEDDING_DIM}), "
            f"got {vectors.shape}"
        )
    if not np.all(np.isfinite(vectors)):
        raise BackboneError("embeddings contain non-finite values")
    if not fps > 0:
        raise BackboneError(f"fps must be positive, got {fps}")
    sid = sample_id.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, len(sid)))
        fh.write(sid)
        fh.write(_DIMS.pack(vectors.shape[0], vectors.shape[1], float(fps)))
        fh.write(np.ascontiguousarray(vectors, dtype="<f4").tobytes())
