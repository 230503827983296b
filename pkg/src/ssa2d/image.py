"""Image grid with periodic indexing, PGM file I/O, and seeded Gaussian noise.

Pixels are held as float64 end to end: the filter bank produces fractional
component images whose mean must reproduce the source to machine precision,
so quantization happens only on PGM export.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Image",
    "NoiseSpec",
    "PgmError",
    "PgmMagicError",
    "PgmHeaderError",
    "PgmPayloadError",
    "load_pgm",
    "save_pgm",
    "add_gaussian_noise",
]

_WHITESPACE = b" \t\n\r\x0b\x0c"
_HASH = 0x23


class PgmError(ValueError):
    """PGM parse failure at a known byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class PgmMagicError(PgmError):
    """File does not start with a supported magic number (P2 or P5)."""


class PgmHeaderError(PgmError):
    """Width, height or maxval is missing or invalid."""


class PgmPayloadError(PgmError):
    """Pixel payload is truncated or contains an invalid sample."""


class Image:
    """Rectangular grid of real-valued pixels with wrap-around indexing.

    The backing array is read-only; every operation returns a new image,
    so instances are safe to share across workers.
    """

    __slots__ = ("data",)

    def __init__(self, data) -> None:
        arr = np.array(data, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image data must be a non-empty 2-D grid")
        arr.setflags(write=False)
        self.data = arr

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def pixel(self, i: int, j: int) -> float:
        """Pixel value at (i, j) for any integers, reduced modulo the size."""
        return float(self.data[i % self.rows, j % self.cols])

    def __repr__(self) -> str:
        return f"Image({self.rows}x{self.cols})"


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise: standard deviation and generator seed."""

    sigma: float
    seed: int

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def add_gaussian_noise(image: Image, noise: NoiseSpec) -> Image:
    """Add ``sigma * z(i, j)`` with i.i.d. standard normal draws.

    Draws come from a Philox counter-based generator (ziggurat normals)
    seeded with ``noise.seed`` and are consumed in row-major pixel order,
    so the noise field is a pure function of (sigma, seed, image shape).
    The output is not clamped.
    """
    rng = np.random.Generator(np.random.Philox(noise.seed))
    z = rng.standard_normal(image.shape)
    return Image(image.data + noise.sigma * z)


def _next_token(buf: bytes, pos: int) -> tuple[bytes | None, int, int]:
    """Next token after whitespace and '#' comments.

    Returns (token, token_offset, end_pos); token is None at end of input.
    """
    n = len(buf)
    while pos < n:
        byte = buf[pos]
        if byte in _WHITESPACE:
            pos += 1
        elif byte == _HASH:
            while pos < n and buf[pos] not in b"\r\n":
                pos += 1
        else:
            break
    if pos >= n:
        return None, pos, pos
    start = pos
    while pos < n and buf[pos] not in _WHITESPACE and buf[pos] != _HASH:
        pos += 1
    return buf[start:pos], start, pos


def load_pgm(path) -> Image:
    """Read a P2 (ASCII) or P5 (binary) PGM file with maxval up to 65535.

    Sample values come back as reals exactly as stored, with no rescaling.
    Comments are tolerated anywhere in the header.
    """
    buf = Path(path).read_bytes()

    magic, magic_off, pos = _next_token(buf, 0)
    if magic is None:
        raise PgmMagicError("empty file, expected magic number", magic_off)
    if magic not in (b"P2", b"P5"):
        raise PgmMagicError(f"unsupported magic number {magic!r}", magic_off)

    fields: list[tuple[int, int]] = []
    for name in ("width", "height", "maxval"):
        token, off, pos = _next_token(buf, pos)
        if token is None:
            raise PgmHeaderError(f"missing {name}", off)
        if not token.isdigit():
            raise PgmHeaderError(f"malformed {name} {token!r}", off)
        fields.append((int(token), off))
    (width, width_off), (height, _), (maxval, maxval_off) = fields
    if width < 1 or height < 1:
        raise PgmHeaderError(f"invalid dimensions {width}x{height}", width_off)
    if not 1 <= maxval <= 65535:
        raise PgmHeaderError(f"maxval {maxval} outside 1..65535", maxval_off)

    count = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the payload
        if pos >= len(buf) or buf[pos] not in _WHITESPACE:
            raise PgmHeaderError("expected single whitespace after maxval", pos)
        pos += 1
        sample_width = 1 if maxval < 256 else 2
        need = count * sample_width
        if len(buf) - pos < need:
            raise PgmPayloadError(
                f"payload truncated, need {need} bytes but have {len(buf) - pos}",
                len(buf),
            )
        dtype = np.dtype(np.uint8) if sample_width == 1 else np.dtype(">u2")
        samples = np.frombuffer(buf, dtype=dtype, count=count, offset=pos)
        data = samples.astype(float).reshape(height, width)
    else:
        values = np.empty(count, dtype=float)
        for k in range(count):
            token, off, pos = _next_token(buf, pos)
            if token is None:
                raise PgmPayloadError(
                    f"payload truncated after {k} of {count} samples", off
                )
            if not token.isdigit():
                raise PgmPayloadError(f"malformed sample {token!r}", off)
            value = int(token)
            if value > maxval:
                raise PgmPayloadError(f"sample {value} exceeds maxval {maxval}", off)
            values[k] = value
        data = values.reshape(height, width)
    return Image(data)


def save_pgm(image: Image, path) -> None:
    """Write a binary P5 file with maxval 255.

    Values are clamped to [0, 255] and rounded half away from zero; this
    is the only place the pipeline quantizes.
    """
    clamped = np.clip(image.data, 0.0, 255.0)
    quantized = np.floor(clamped + 0.5).astype(np.uint8)  # all operands >= 0 after clamp
    header = f"P5\n{image.cols} {image.rows}\n255\n".encode("ascii")
    Path(path).write_bytes(header + quantized.tobytes())
