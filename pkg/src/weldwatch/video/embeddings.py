"""Per-frame video embedding sequences and their on-disk format.

Stage one of the video path (a fixed pretrained backbone over sliding
64-frame windows) lives outside this package; it communicates through
embedding files. The byte layout is fixed so independent extractors can
produce files this package reads:

    bytes 0-3   magic b"WWEB"
    u32 LE      format version (currently 1)
    u32 LE      sample id length in bytes
    ...         sample id, UTF-8
    u32 LE      n_frames
    u32 LE      dim
    f32 LE      nominal frames per second
    ...         n_frames * dim float32 LE values, row-major (frame-major)
"""

import struct
from dataclasses import dataclass

import numpy as np

from ..errors import DataError

EMBEDDING_DIM = 2304

MAGIC = b"WWEB"
VERSION = 1

_HEAD = struct.Struct("<4sII")
_DIMS = struct.Struct("<IIf")


@dataclass
class EmbeddingSequence:
    """One sample's per-frame feature vectors, shaped (n_frames, 2304)."""

    sample_id: str
    vectors: np.ndarray
    fps: float

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise DataError(
                f"vectors must be 2-D (n_frames, dim), got shape {vectors.shape}"
            )
        if vectors.shape[0] < 1:
            raise DataError("embedding sequence has no frames")
        if vectors.shape[1] != EMBEDDING_DIM:
            raise DataError(
                f"embedding dim must be {EMBEDDING_DIM}, got {vectors.shape[1]}"
            )
        if not np.all(np.isfinite(vectors)):
            raise DataError(f"{self.sample_id}: embeddings contain non-finite values")
        if not self.fps > 0:
            raise DataError(f"fps must be positive, got {self.fps}")
        self.vectors = vectors
        self.fps = float(self.fps)

    @property
    def n_frames(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]


def save_embeddings(path, sequence):
    """Write an EmbeddingSequence in the documented byte layout.

    Values are stored as float32; writes are byte-deterministic for a
    given sequence.
    """
    sid = sequence.sample_id.encode("utf-8")
    payload = np.ascontiguousarray(sequence.vectors, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, len(sid)))
        fh.write(sid)
        fh.write(_DIMS.pack(sequence.n_frames, sequence.dim, sequence.fps))
        fh.write(payload)


def load_embeddings(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEAD.size or blob[:4] != MAGIC:
        raise DataError(f"{path}: not an embedding file (bad magic)")
    magic, version, id_len = _HEAD.unpack_from(blob, 0)
    if version != VERSION:
        raise DataError(f"{path}: unsupported embedding format version {version}")
    offset = _HEAD.size
    if len(blob) < offset + id_len + _DIMS.size:
        raise DataError(f"{path}: truncated embedding header")
    sample_id = blob[offset : offset + id_len].decode("utf-8")
    offset += id_len
    n_frames, dim, fps = _DIMS.unpack_from(blob, offset)
    offset += _DIMS.size
    expected = n_frames * dim * 4
    if len(blob) - offset != expected:
        raise DataError(
            f"{path}: payload is {len(blob) - offset} bytes, expected {expected}"
        )
    vectors = np.frombuffer(blob, dtype="<f4", count=n_frames * dim,
                            offset=offset).reshape(n_frames, dim)
    return EmbeddingSequence(sample_id=sample_id,
                             vectors=vectors.astype(np.float64), fps=fps)
