"""Grayscale fragments, label masks, and Netpbm (PGM/PBM) reading and writing.

Only the plain (P1, P2) and raw (P5) variants with ``maxval <= 255`` are
supported. Fragments hold brightness in 1..255; a stored 0 is lifted to 1 on
load. Masks decode 0 as background and anything nonzero as filament, and are
always written as raw PGM with filament = 255.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ShapeError

__all__ = [
    "ImageFragment",
    "LabelMask",
    "DetectionMask",
    "load_image",
    "load_mask",
    "save_image",
    "save_mask",
    "read_netpbm",
]

_WHITESPACE = b" \t\n\r\v\f"
_TOKEN_RE = re.compile(rb"#[^\n\r]*|[^\s#]+")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ImageFragment:
    """An n x m grayscale image with brightness in 1..255."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ShapeError(f"fragment must be a non-empty 2-D array, got shape {p.shape}")
        if p.size and (p.min() < 1 or p.max() > 255):
            raise ValueError("fragment pixels must lie in 1..255")
        object.__setattr__(self, "pixels", _frozen(p.astype(np.uint8, copy=True)))

    @classmethod
    def from_array(cls, values) -> "ImageFragment":
        """Build a fragment from arbitrary numbers, rounding and clamping into 1..255."""
        a = np.rint(np.asarray(values, dtype=float))
        return cls(np.clip(a, 1, 255).astype(np.uint8))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other):
        if not isinstance(other, ImageFragment):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class LabelMask:
    """Per-pixel class labels; ``True`` marks filament."""

    labels: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.labels)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ShapeError(f"mask must be a non-empty 2-D array, got shape {a.shape}")
        object.__setattr__(self, "labels", _frozen(a.astype(bool, copy=True)))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def interior(self, k: int) -> np.ndarray:
        """Labels of the pixels that own a full k x k window."""
        h = k // 2
        n, m = self.shape
        if n < k or m < k:
            raise ShapeError(f"mask {n}x{m} is smaller than the {k}x{k} window")
        return self.labels[h:n - h, h:m - h]

    def __eq__(self, other):
        if not isinstance(other, (LabelMask, DetectionMask)):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)


@dataclass(frozen=True, eq=False)
class DetectionMask:
    """Network decisions over the interior region of a fragment.

    ``labels`` has shape ``(n - k + 1, m - k + 1)`` and its element ``[0, 0]``
    sits at image pixel ``(offset, offset)`` (0-based), ``offset = k // 2``.
    """

    labels: np.ndarray
    offset: int
    source_shape: tuple[int, int] = field(default=(0, 0))

    def __post_init__(self):
        a = np.asarray(self.labels)
        if a.ndim != 2:
            raise ShapeError("detection labels must be 2-D")
        n, m = self.source_shape
        if (a.shape[0] + 2 * self.offset, a.shape[1] + 2 * self.offset) != (n, m):
            raise ShapeError(
                f"detection mask {a.shape} with offset {self.offset} "
                f"does not fit a {n}x{m} source image"
            )
        object.__setattr__(self, "labels", _frozen(a.astype(bool, copy=True)))
        object.__setattr__(self, "source_shape", (int(n), int(m)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    @property
    def k(self) -> int:
        return 2 * self.offset + 1

    def padded(self) -> LabelMask:
        """Full-size mask with a non-filament border ring."""
        full = np.zeros(self.source_shape, dtype=bool)
        o = self.offset
        full[o:o + self.shape[0], o:o + self.shape[1]] = self.labels
        return LabelMask(full)

    def __eq__(self, other):
        if not isinstance(other, (LabelMask, DetectionMask)):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)


# --------------------------------------------------------------------------
# Netpbm decoding


def _skip_space(data: bytes, pos: int) -> int:
    while pos < len(data):
        c = data[pos:pos + 1]
        if c in _WHITESPACE and c:
            pos += 1
        elif c == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    return pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int, int]:
    """Return (value, token_start, position after token)."""
    pos = _skip_space(data, pos)
    start = pos
    while pos < len(data) and data[pos:pos + 1] not in _WHITESPACE and data[pos:pos + 1] != b"#":
        pos += 1
    token = data[start:pos]
    if not token:
        raise FormatError(f"truncated header: missing {what}", start)
    if not token.isdigit():
        raise FormatError(f"malformed header: {what} {token[:16]!r} is not a decimal integer", start)
    return int(token), start, pos


def _ascii_values(data: bytes, pos: int, count: int) -> np.ndarray:
    body = data[pos:]
    tokens = [(mo.start(), mo.group()) for mo in _TOKEN_RE.finditer(body) if not mo.group().startswith(b"#")]
    if len(tokens) < count:
        raise FormatError(f"truncated pixel data: expected {count} values, found {len(tokens)}", len(data))
    values = np.empty(count, dtype=np.int64)
    for i in range(count):
        off, tok = tokens[i]
        if not tok.isdigit():
            raise FormatError(f"malformed pixel value {tok[:16]!r}", pos + off)
        values[i] = int(tok)
    return values


def _pbm_bits(data: bytes, pos: int, count: int) -> np.ndarray:
    out = np.empty(count, dtype=np.int64)
    i = 0
    while i < count:
        pos = _skip_space(data, pos)
        if pos >= len(data):
            raise FormatError(f"truncated pixel data: expected {count} bits, found {i}", pos)
        c = data[pos:pos + 1]
        if c not in (b"0", b"1"):
            raise FormatError(f"malformed PBM bit {c!r}", pos)
        out[i] = c == b"1"
        i += 1
        pos += 1
    return out


def read_netpbm(data: bytes) -> tuple[bytes, int, np.ndarray]:
    """Decode a P1, P2 or P5 byte string.

    Returns ``(magic, maxval, values)`` with ``values`` an ``(height, width)``
    int64 array of the raw stored samples. PBM files report ``maxval = 1``.
    """
    magic = data[:2]
    if magic not in (b"P1", b"P2", b"P5"):
        raise FormatError(f"unsupported or missing magic number {magic!r}", 0)
    width, wpos, pos = _header_int(data, 2, "width")
    height, hpos, pos = _header_int(data, pos, "height")
    if width == 0:
        raise FormatError("zero width", wpos)
    if height == 0:
        raise FormatError("zero height", hpos)
    count = width * height

    if magic == b"P1":
        return magic, 1, _pbm_bits(data, pos, count).reshape(height, width)

    maxval, mpos, pos = _header_int(data, pos, "maxval")
    if maxval < 1 or maxval > 255:
        raise FormatError(f"maxval {maxval} outside 1..255", mpos)

    if magic == b"P2":
        values = _ascii_values(data, pos, count)
    else:
        if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
            raise FormatError("missing whitespace after maxval", pos)
        pos += 1
        raster = data[pos:pos + count]
        if len(raster) < count:
            raise FormatError(f"truncated pixel data: expected {count} bytes, found {len(raster)}", len(data))
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.int64)

    over = np.flatnonzero(values > maxval)
    if over.size:
        raise FormatError(f"pixel value {values[over[0]]} exceeds maxval {maxval}", pos)
    return magic, maxval, values.reshape(height, width)


def _read(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def load_image(path) -> ImageFragment:
    """Read a P2 or P5 graymap; stored zeros become 1."""
    magic, _, values = read_netpbm(_read(path))
    if magic == b"P1":
        raise FormatError("expected a PGM graymap (P2/P5), got a PBM bitmap", 0)
    return ImageFragment(np.maximum(values, 1).astype(np.uint8))


def load_mask(path) -> LabelMask:
    """Read a PGM or PBM label image: nonzero is filament, zero is background."""
    _, _, values = read_netpbm(_read(path))
    return LabelMask(values != 0)


def _write_p5(path, pixels: np.ndarray) -> None:
    n, m = pixels.shape
    header = f"P5\n{m} {n}\n255\n".encode("ascii")
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())
    os.replace(tmp, path)


def save_image(fragment: ImageFragment, path) -> None:
    _write_p5(path, fragment.pixels)


def save_mask(mask: LabelMask | DetectionMask, path) -> None:
    """Write labels as raw PGM, filament = 255 and background = 0."""
    _write_p5(path, np.where(mask.labels, 255, 0).astype(np.uint8))
