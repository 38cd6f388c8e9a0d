"""Raster containers, 3x3 ring extraction, subfield masks and PGM/PFM I/O.

Rasters are plain 2D numpy arrays. A binary raster is an integer array
holding only 0 and 1; a scalar raster is a float array with values in
[0, 1]. Pixels outside the grid always read as background (0).

Ring positions follow a fixed clockwise order starting at the north-west
corner::

    x1 x2 x3
    x8  x x4
    x7 x6 x5

Corner positions are x1, x3, x5, x7 (0-based indices 0, 2, 4, 6) and edge
positions are x2, x4, x6, x8 (0-based indices 1, 3, 5, 7).
"""

from __future__ import annotations

import os
import re
from typing import NamedTuple

import numpy as np

from .errors import DomainError, FormatError

# (row, column) offsets of x1..x8
RING_OFFSETS: tuple[tuple[int, int], ...] = (
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
)
CORNERS = (0, 2, 4, 6)
EDGES = (1, 3, 5, 7)

# subfield id -> (row parity, column parity)
SUBFIELD_PARITY = {1: (0, 0), 2: (1, 0), 3: (0, 1), 4: (1, 1)}


class RingSample(NamedTuple):
    ring: np.ndarray
    center: float


def check_shape(image: np.ndarray) -> tuple[int, int]:
    if image.ndim != 2 or image.shape[0] < 1 or image.shape[1] < 1:
        raise DomainError(f"expected a non-empty 2D raster, got shape {image.shape}")
    return image.shape


def as_binary(image) -> np.ndarray:
    """Return ``image`` as a uint8 {0,1} array, rejecting any other value."""
    arr = np.asarray(image)
    check_shape(arr)
    if arr.dtype == bool:
        return arr.astype(np.uint8)
    if not np.isin(arr, (0, 1)).all():
        raise DomainError("binary raster must contain only 0 and 1")
    return arr.astype(np.uint8)


def as_scalar(image) -> np.ndarray:
    """Return ``image`` as a float64 array, rejecting values outside [0, 1]."""
    arr = np.asarray(image, dtype=np.float64)
    check_shape(arr)
    if not np.isfinite(arr).all() or arr.min() < 0.0 or arr.max() > 1.0:
        raise DomainError("scalar raster values must lie in [0, 1]")
    return arr


def is_binary(image: np.ndarray) -> bool:
    return bool(np.isin(image, (0, 1)).all())


def ring_at(image: np.ndarray, pixel: tuple[int, int]) -> RingSample:
    """Read the 8 neighbours of ``pixel`` in cyclic order plus its own value.

    Out-of-grid neighbours read as 0.
    """
    image = np.asarray(image)
    h, w = check_shape(image)
    r, c = pixel
    if not (0 <= r < h and 0 <= c < w):
        raise DomainError(f"pixel {pixel} outside grid of shape {(h, w)}")
    ring = np.zeros(8, dtype=np.float64)
    for k, (dr, dc) in enumerate(RING_OFFSETS):
        rr, cc = r + dr, c + dc
        if 0 <= rr < h and 0 <= cc < w:
            ring[k] = image[rr, cc]
    return RingSample(ring, float(image[r, c]))


def ring_stack(image: np.ndarray) -> np.ndarray:
    """All rings at once: array of shape ``(H, W, 8)``, zero padded."""
    h, w = check_shape(image)
    padded = np.pad(image, 1)
    out = np.empty((h, w, 8), dtype=padded.dtype)
    for k, (dr, dc) in enumerate(RING_OFFSETS):
        out[..., k] = padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
    return out


def scatter_ring_grad(ring_grad: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`ring_stack`.

    Sums ``ring_grad[r, c, k]`` back onto the pixel that supplied ring
    position ``k`` of ``(r, c)``. Contributions that came from the zero
    padding are dropped.
    """
    h, w, _ = ring_grad.shape
    acc = np.zeros((h + 2, w + 2), dtype=ring_grad.dtype)
    for k, (dr, dc) in enumerate(RING_OFFSETS):
        acc[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w] += ring_grad[..., k]
    return acc[1:-1, 1:-1]


def cyclic_gradient(ring) -> np.ndarray:
    """Consecutive differences ``(x1-x2, x2-x3, ..., x8-x1)`` over the last axis."""
    ring = np.asarray(ring, dtype=np.float64)
    return ring - np.roll(ring, -1, axis=-1)


def subfield_of(pixel: tuple[int, int]) -> int:
    r, c = pixel
    return {(0, 0): 1, (1, 0): 2, (0, 1): 3, (1, 1): 4}[(r % 2, c % 2)]


def subfield_mask(shape: tuple[int, int], subfield: int) -> np.ndarray:
    if subfield not in SUBFIELD_PARITY:
        raise DomainError(f"subfield id must be 1..4, got {subfield}")
    pr, pc = SUBFIELD_PARITY[subfield]
    mask = np.zeros(shape, dtype=bool)
    mask[pr::2, pc::2] = True
    return mask


def threshold(image: np.ndarray, t: float) -> np.ndarray:
    """1 where ``image > t``, else 0."""
    return (np.asarray(image) > t).astype(np.uint8)


# ---------------------------------------------------------------------------
# file I/O

_WS = b" \t\r\n\v\f"


def _pgm_header(data: bytes) -> tuple[bytes, list[int], int]:
    """Parse magic, width, height, maxval. Returns (magic, values, data offset)."""
    pos = 0
    tokens: list[tuple[bytes, int]] = []
    while len(tokens) < 4:
        while pos < len(data) and (data[pos] in _WS or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                while pos < len(data) and data[pos] not in b"\r\n":
                    pos += 1
            else:
                pos += 1
        if pos >= len(data):
            raise FormatError("truncated PGM header", pos)
        start = pos
        while pos < len(data) and data[pos] not in _WS and data[pos] != ord("#"):
            pos += 1
        tokens.append((data[start:pos], start))
    magic, moff = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"not a PGM file (magic {magic!r})", moff)
    values = []
    for tok, off in tokens[1:]:
        if not tok.isdigit():
            raise FormatError(f"malformed header field {tok!r}", off)
        values.append(int(tok))
    width, height, maxval = values
    if width < 1 or height < 1:
        raise FormatError("PGM dimensions must be positive", tokens[1][1])
    if not 1 <= maxval <= 255:
        raise FormatError(f"unsupported PGM maxval {maxval}", tokens[3][1])
    if pos >= len(data) or data[pos] not in _WS:
        raise FormatError("missing whitespace after PGM header", pos)
    return magic, values, pos + 1


def _read_pgm(data: bytes) -> tuple[np.ndarray, int]:
    magic, (width, height, maxval), offset = _pgm_header(data)
    n = width * height
    if magic == b"P5":
        payload = data[offset : offset + n]
        if len(payload) < n:
            raise FormatError(
                f"truncated PGM payload: expected {n} bytes, found {len(payload)}",
                offset + len(payload),
            )
        gray = np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
        where = offset + np.arange(n)
    else:
        gray = np.empty(n, dtype=np.int64)
        where = np.empty(n, dtype=np.int64)
        i = 0
        for m in re.finditer(rb"#[^\r\n]*|\S+", data[offset:]):
            tok = m.group()
            if tok.startswith(b"#"):
                continue
            if i == n:
                break
            if not tok.isdigit():
                raise FormatError(f"malformed PGM sample {tok!r}", offset + m.start())
            gray[i] = int(tok)
            where[i] = offset + m.start()
            i += 1
        if i < n:
            raise FormatError(
                f"truncated PGM payload: expected {n} samples, found {i}", len(data)
            )
    bad = np.flatnonzero(gray > maxval)
    if bad.size:
        raise FormatError(f"sample exceeds maxval {maxval}", int(where[bad[0]]))
    return gray.reshape(height, width), maxval


def _read_pfm(data: bytes) -> np.ndarray:
    lines = []
    pos = 0
    for _ in range(3):
        end = data.find(b"\n", pos)
        if end < 0:
            raise FormatError("truncated PFM header", len(data))
        lines.append((data[pos:end].strip(), pos))
        pos = end + 1
    (magic, moff), (dims, doff), (scale_tok, soff) = lines
    if magic != b"Pf":
        raise FormatError(f"not a grayscale PFM file (magic {magic!r})", moff)
    parts = dims.split()
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise FormatError(f"malformed PFM dimensions {dims!r}", doff)
    width, height = int(parts[0]), int(parts[1])
    if width < 1 or height < 1:
        raise FormatError("PFM dimensions must be positive", doff)
    try:
        scale = float(scale_tok)
    except ValueError:
        raise FormatError(f"malformed PFM scale {scale_tok!r}", soff) from None
    if scale == 0.0:
        raise FormatError("PFM scale must be nonzero", soff)
    n = width * height * 4
    payload = data[pos : pos + n]
    if len(payload) < n:
        raise FormatError(
            f"truncated PFM payload: expected {n} bytes, found {len(payload)}",
            pos + len(payload),
        )
    dtype = "<f4" if scale < 0 else ">f4"
    rows = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    # PFM stores rows bottom to top
    return np.flipud(rows).astype(np.float64)


def _infer_format(path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("pgm", "pfm"):
            raise DomainError(f"unknown raster format {fmt!r}")
        return fmt
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".pgm", ".pfm"):
        return ext[1:]
    raise DomainError(f"cannot infer raster format from {path!r}")


def load_raster(path, format: str | None = None, kind: str | None = None) -> np.ndarray:
    """Read a PGM or PFM file.

    Parameters
    ----------
    path : path-like
        File to read.
    format : {"pgm", "pfm"}, optional
        Defaults to the file extension.
    kind : {"binary", "scalar"}, optional
        ``"binary"`` demands a PGM holding only 0 and maxval and returns a
        uint8 {0,1} array. ``"scalar"`` returns float64. When omitted, PGM
        files holding only 0/maxval load as binary and everything else as
        scalar.

    Raises
    ------
    FormatError
        Malformed header, truncated payload or, for binary loads,
        intermediate gray levels. ``err.offset`` is the byte offset.
    """
    fmt = _infer_format(path, format)
    if kind not in (None, "binary", "scalar"):
        raise DomainError(f"unknown raster kind {kind!r}")
    with open(path, "rb") as fh:
        data = fh.read()
    if fmt == "pfm":
        values = _read_pfm(data)
        if kind == "binary":
            if not is_binary(values):
                raise FormatError("binary load requires values 0 and 1 only", 0)
            return values.astype(np.uint8)
        return values
    gray, maxval = _read_pgm(data)
    two_level = bool(np.isin(gray, (0, maxval)).all())
    if kind == "binary" or (kind is None and two_level):
        if not two_level:
            _, _, offset = _pgm_header(data)
            bad = int(np.flatnonzero(~np.isin(gray.ravel(), (0, maxval)))[0])
            raise FormatError(
                f"binary load requires values 0 and {maxval} only", offset + bad
            )
        return (gray == maxval).astype(np.uint8)
    return gray.astype(np.float64) / maxval


def store_raster(image: np.ndarray, path, format: str | None = None, ascii: bool = False) -> None:
    """Write ``image`` as PGM (maxval 255) or little-endian grayscale PFM.

    PGM samples are ``round(255 * value)``; PFM stores float32.
    """
    fmt = _infer_format(path, format)
    image = np.asarray(image)
    h, w = check_shape(image)
    if fmt == "pfm":
        values = np.ascontiguousarray(np.flipud(image.astype("<f4")))
        with open(path, "wb") as fh:
            fh.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
            fh.write(values.tobytes())
        return
    vals = image.astype(np.float64)
    if not np.isfinite(vals).all() or vals.min() < 0.0 or vals.max() > 1.0:
        raise DomainError("PGM output requires values in [0, 1]")
    gray = np.rint(vals * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        if ascii:
            fh.write(f"P2\n{w} {h}\n255\n".encode("ascii"))
            for row in gray:
                fh.write((" ".join(str(int(g)) for g in row) + "\n").encode("ascii"))
        else:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(gray.tobytes())

