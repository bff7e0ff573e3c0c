"""Video decoding.

Y4M (YUV4MPEG2) is parsed natively: it is uncompressed, so decoding is
trivially deterministic and needs no codec library. Every other
container is delegated to OpenCV when it is installed.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DecodeError

# BT.601 luma weights, used both for RGB conversion and grayscale.
_KR, _KG, _KB = 0.299, 0.587, 0.114


@dataclass
class DecodedVideo:
    """Frames as (n_frames, height, width, 3) uint8 RGB plus the
    container-reported frame rate."""

    pixels: np.ndarray
    fps: float

    @property
    def n_frames(self):
        return self.pixels.shape[0]


def decode_video(path):
    path = Path(path)
    if not path.is_file():
        raise DecodeError(f"video file not found: {path}")
    if path.suffix.lower() == ".y4m":
        return _decode_y4m(path)
    return _decode_opencv(path)


def _parse_y4m_header(line, path):
    fields = line.decode("ascii", "replace").split()
    if not fields or fields[0] != "YUV4MPEG2":
        raise DecodeError(f"{path}: not a YUV4MPEG2 stream")
    width = height = 0
    fps = 0.0
    colorspace = "420"
    for field in fields[1:]:
        tag, value = field[0], field[1:]
        if tag == "W":
            width = int(value)
        elif tag == "H":
            height = int(value)
        elif tag == "F":
            num, _, den = value.partition(":")
            fps = float(num) / float(den)
        elif tag == "C":
            colorspace = value
    if width < 1 or height < 1:
        raise DecodeError(f"{path}: missing frame dimensions in Y4M header")
    if fps <= 0:
        raise DecodeError(f"{path}: missing frame rate in Y4M header")
    return width, height, fps, colorspace


def _ycbcr_to_rgb(y, cb, cr):
    y = y.astype(np.float64)
    cb = cb.astype(np.float64) - 128.0
    cr = cr.astype(np.float64) - 128.0
    r = y + 1.402 * cr
    g = y - (_KB / _KG) * 1.772 * cb - (_KR / _KG) * 1.402 * cr
    b = y + 1.772 * cb
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def _decode_y4m(path):
    blob = path.read_bytes()
    newline = blob.find(b"\n")
    if newline < 0:
        raise DecodeError(f"{path}: truncated Y4M header")
    width, height, fps, colorspace = _parse_y4m_header(blob[:newline], path)

    luma = width * height
    if colorspace.startswith("420"):
        chroma_shape = (height // 2, width // 2)
    elif colorspace.startswith("444"):
        chroma_shape = (height, width)
    elif colorspace.startswith("mono"):
        chroma_shape = None
    else:
        raise DecodeError(f"{path}: unsupported Y4M colorspace C{colorspace}")
    frame_bytes = luma + (0 if chroma_shape is None
                          else 2 * chroma_shape[0] * chroma_shape[1])

    frames = []
    offset = newline + 1
    while offset < len(blob):
        marker_end = blob.find(b"\n", offset)
        if marker_end < 0 or not blob.startswith(b"FRAME", offset):
            raise DecodeError(f"{path}: corrupt FRAME marker at byte {offset}")
        offset = marker_end + 1
        if offset + frame_bytes > len(blob):
            raise DecodeError(f"{path}: truncated frame payload")
        planes = np.frombuffer(blob, dtype=np.uint8, count=frame_bytes,
                               offset=offset)
        offset += frame_bytes
        y = planes[:luma].reshape(height, width)
        if chroma_shape is None:
            frames.append(np.repeat(y[:, :, None], 3, axis=2))
            continue
        ch, cw = chroma_shape
        cb = planes[luma : luma + ch * cw].reshape(ch, cw)
        cr = planes[luma + ch * cw :].reshape(ch, cw)
        if chroma_shape != (height, width):
            cb = cb.repeat(2, axis=0).repeat(2, axis=1)[:height, :width]
            cr = cr.repeat(2, axis=0).repeat(2, axis=1)[:height, :width]
        frames.append(_ycbcr_to_rgb(y, cb, cr))
    if not frames:
        raise DecodeError(f"{path}: video contains no frames")
    return DecodedVideo(pixels=np.stack(frames), fps=fps)


def _decode_opencv(path):
    try:
        import cv2
    except ImportError as exc:
        raise DecodeError(
            f"decoding {path.suffix!r} containers needs opencv-python; "
            f"install it or provide the clip as .y4m"
        ) from exc
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise DecodeError(f"{path}: container not recognized by OpenCV")
    fps = float(capture.get(cv2.CAP_PROP_FPS))
    frames = []
    while True:
        ok, frame = capture.read()
        if not ok:
            break
        frames.append(frame[:, :, ::-1].copy())
    capture.release()
    if not frames:
        raise DecodeError(f"{path}: video contains no frames")
    if fps <= 0:
        fps = 30.0
    return DecodedVideo(pixels=np.stack(frames), fps=fps)


def grayscale(pixels):
    """(n, h, w, 3) uint8 RGB to (n, h, w) float64 luminance in [0, 1]."""
    weights = np.array([_KR, _KG, _KB])
    return (pixels.astype(np.float64) @ weights) / 255.0
