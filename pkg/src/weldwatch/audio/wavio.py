"""RIFF WAV reading and writing.

Supports the PCM encodings the corpus uses: 16-bit and 24-bit integer
and 32-bit IEEE float, mono or interleaved multichannel on read (the
caller selects one channel), mono on write. Unknown RIFF chunks are
skipped. Samples are returned as float64 in [-1, 1) nominal range.
"""

import struct

import numpy as np

from ..errors import ConfigError, DataError

_PCM_INT = 1
_PCM_FLOAT = 3


def read_wav(path, channel=None):
    """Read a WAV file; returns (samples, sample_rate).

    Multichannel files require an explicit channel index; mono files
    ignore it (index 0 is allowed).
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise DataError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    offset = 12
    while offset + 8 <= len(blob):
        chunk_id = blob[offset : offset + 4]
        (chunk_size,) = struct.unpack_from("<I", blob, offset + 4)
        body = blob[offset + 8 : offset + 8 + chunk_size]
        if len(body) < chunk_size:
            raise DataError(f"{path}: truncated {chunk_id!r} chunk")
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise DataError(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            data = body
        # Chunks are word-aligned: odd sizes carry one pad byte.
        offset += 8 + chunk_size + (chunk_size & 1)

    if fmt is None or data is None:
        raise DataError(f"{path}: missing fmt or data chunk")
    audio_format, n_channels, sample_rate, _, _, bits = fmt
    if n_channels < 1:
        raise DataError(f"{path}: invalid channel count {n_channels}")

    if audio_format == _PCM_INT and bits == 16:
        flat = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    elif audio_format == _PCM_INT and bits == 24:
        raw = np.frombuffer(data, dtype=np.uint8)
        if raw.size % 3 != 0:
            raise DataError(f"{path}: 24-bit data size not a multiple of 3")
        triples = raw.reshape(-1, 3).astype(np.int64)
        values = triples[:, 0] | (triples[:, 1] << 8) | (triples[:, 2] << 16)
        values = np.where(values >= 1 << 23, values - (1 << 24), values)
        flat = values.astype(np.float64) / float(1 << 23)
    elif audio_format == _PCM_FLOAT and bits == 32:
        flat = np.frombuffer(data, dtype="<f4").astype(np.float64)
    else:
        raise DataError(
            f"{path}: unsupported encoding (format {audio_format}, {bits}-bit)"
        )

    if flat.size % n_channels != 0:
        raise DataError(f"{path}: data size not divisible by channel count")
    frames = flat.reshape(-1, n_channels)
    if n_channels == 1:
        return frames[:, 0].copy(), sample_rate
    if channel is None:
        raise DataError(
            f"{path}: {n_channels} channels; pass channel=<index> to select one"
        )
    if not 0 <= channel < n_channels:
        raise DataError(
            f"{path}: channel {channel} out of range (file has {n_channels})"
        )
    return frames[:, channel].copy(), sample_rate


def write_wav(path, samples, sample_rate, encoding="float32"):
    """Write a mono WAV file. encoding: 'float32', 'pcm16', or 'pcm24'."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise ConfigError(f"write_wav expects mono 1-D samples, got {samples.shape}")
    if encoding == "float32":
        payload = samples.astype("<f4").tobytes()
        audio_format, bits = _PCM_FLOAT, 32
    elif encoding == "pcm16":
        clipped = np.clip(samples, -1.0, 1.0)
        payload = np.round(clipped * 32767.0).astype("<i2").tobytes()
        audio_format, bits = _PCM_INT, 16
    elif encoding == "pcm24":
        clipped = np.clip(samples, -1.0, 1.0)
        values = np.round(clipped * float((1 << 23) - 1)).astype(np.int64)
        values = np.where(values < 0, values + (1 << 24), values)
        triples = np.empty((values.size, 3), dtype=np.uint8)
        triples[:, 0] = values & 0xFF
        triples[:, 1] = (values >> 8) & 0xFF
        triples[:, 2] = (values >> 16) & 0xFF
        payload = triples.tobytes()
        audio_format, bits = _PCM_INT, 24
    else:
        raise ConfigError(f"unsupported encoding {encoding!r}")

    block_align = bits // 8
    byte_rate = sample_rate * block_align
    fmt_chunk = struct.pack(
        "<HHIIHH", audio_format, 1, sample_rate, byte_rate, block_align, bits
    )
    pad = b"\x00" if len(payload) % 2 else b""
    riff_size = 4 + (8 + len(fmt_chunk)) + (8 + len(payload) + len(pad))
    with open(path, "wb") as fh:
        fh.write(b"RIFF")
        fh.write(struct.pack("<I", riff_size))
        fh.write(b"WAVE")
        fh.write(b"fmt ")
        fh.write(struct.pack("<I", len(fmt_chunk)))
        fh.write(fmt_chunk)
        fh.write(b"data")
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)
        fh.write(pad)
