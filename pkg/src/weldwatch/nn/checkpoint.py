"""Binary checkpoint container.

Layout (all integers little-endian, documented in docs/formats.md):

    bytes 0..3   magic b"WWCK"
    bytes 4..7   u32 container version (currently 1)
    bytes 8..11  u32 header length in bytes
    header       UTF-8 JSON: format version, model kind, architecture
                 spec, RNG seed, and the array table (name + shape,
                 in declaration order)
    blobs        for each array-table entry, row-major float32
                 little-endian values, concatenated in table order

The header JSON is serialized with sorted keys and fixed separators, so
a checkpoint's bytes depend only on its contents. No timestamps.
"""

import json
import struct

import numpy as np

from ..errors import DataError

MAGIC = b"WWCK"
VERSION = 1


def save_checkpoint(path, kind, arch, seed, arrays):
    """Write a checkpoint.

    arrays: iterable of (name, ndarray) in declaration order, e.g. from
    Sequential.named_arrays(). Values are stored as float32.
    """
    arrays = [(name, np.asarray(a)) for name, a in arrays]
    header = {
        "format_version": VERSION,
        "kind": kind,
        "arch": arch,
        "seed": seed,
        "arrays": [
            {"name": name, "shape": list(a.shape)} for name, a in arrays
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode(
        "utf-8"
    )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for _, a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f4").tobytes())


def load_checkpoint(path):
    """Read a checkpoint; returns (header dict, {name: float64 array})."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise DataError(f"{path}: not a checkpoint file (bad magic)")
    version, header_len = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    header_end = 12 + header_len
    if header_end > len(blob):
        raise DataError(f"{path}: truncated checkpoint header")
    try:
        header = json.loads(blob[12:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: corrupt checkpoint header: {exc}") from exc
    arrays = {}
    offset = header_end
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if offset + nbytes > len(blob):
            raise DataError(f"{path}: truncated array blob {entry['name']!r}")
        flat = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        arrays[entry["name"]] = flat.reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(blob):
        raise DataError(f"{path}: trailing bytes after array blobs")
    return header, arrays
