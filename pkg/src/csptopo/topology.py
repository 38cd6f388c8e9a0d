"""Exact binary digital topology under the 8-foreground / 4-background pairing.

Two independent routes to the simple-point predicate live here:

* :func:`is_simple_by_definition` counts components of geodesic
  neighbourhoods inside the 3x3 patch (the slow, literal route);
* :func:`is_simple_by_crossing` counts value transitions around the
  corner-masked ring.

The global summaries (:func:`topology_summary`) serve as the oracle for
the skeletonizer and metrics.
"""

from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import DomainError
from .raster import CORNERS, RING_OFFSETS, as_binary, ring_stack

FOUR = 4
EIGHT = 8

_STRUCT = {
    FOUR: ndimage.generate_binary_structure(2, 1),
    EIGHT: ndimage.generate_binary_structure(2, 2),
}


class TopologySummary(NamedTuple):
    beta0: int
    beta1: int
    euler: int


def _check_conn(conn: int) -> None:
    if conn not in (FOUR, EIGHT):
        raise DomainError(f"connectivity must be 4 or 8, got {conn}")


def connected_components(image, conn: int = EIGHT) -> tuple[int, np.ndarray]:
    """Label the foreground into maximal ``conn``-connected components.

    Background is labelled 0, components 1..count.
    """
    _check_conn(conn)
    labels, count = ndimage.label(as_binary(image), structure=_STRUCT[conn])
    return int(count), labels


def topology_summary(image) -> TopologySummary:
    """Betti numbers and Euler characteristic of a binary raster.

    Holes are the 4-connected background components of the zero-padded
    image, minus the unbounded outer one.
    """
    fg = as_binary(image)
    beta0, _ = connected_components(fg, EIGHT)
    bg = 1 - np.pad(fg, 1)
    n_bg, _ = connected_components(bg, FOUR)
    beta1 = n_bg - 1
    return TopologySummary(beta0, beta1, beta0 - beta1)


# ---------------------------------------------------------------------------
# ring-level topology


def _adjacent(i: int, j: int, conn: int) -> bool:
    (ri, ci), (rj, cj) = RING_OFFSETS[i], RING_OFFSETS[j]
    dr, dc = abs(ri - rj), abs(ci - cj)
    if conn == FOUR:
        return dr + dc == 1
    return max(dr, dc) == 1


def _adjacent_to_center(i: int, conn: int) -> bool:
    r, c = RING_OFFSETS[i]
    return conn == EIGHT or abs(r) + abs(c) == 1


def _bits(ring) -> tuple[int, ...]:
    ring = np.asarray(ring)
    if ring.shape != (8,):
        raise DomainError(f"ring must hold 8 values, got shape {ring.shape}")
    if not np.isin(ring, (0, 1)).all():
        raise DomainError("binary ring values must be 0 or 1")
    return tuple(int(v) for v in ring)


def geodesic_neighborhood(members, n: int, k: int) -> np.ndarray:
    """Geodesic neighbourhood of order ``k`` of the ring centre.

    ``members`` flags which ring positions belong to the set (pass the
    complement of the ring to work on the background). Only the pairs used
    by the topological numbers are supported: (n=8, k=1) and (n=4, k=1|2).
    """
    _check_conn(n)
    if (n, k) not in ((EIGHT, 1), (FOUR, 1), (FOUR, 2)):
        raise DomainError(f"unsupported geodesic neighbourhood (n={n}, k={k})")
    inside = _bits(members)
    hood = {i for i in range(8) if inside[i] and _adjacent_to_center(i, n)}
    for _ in range(k - 1):
        grown = set(hood)
        for y in hood:
            grown.update(j for j in range(8) if inside[j] and _adjacent(y, j, n))
        hood = grown
    out = np.zeros(8, dtype=bool)
    out[sorted(hood)] = True
    return out


def _count_components(flags: np.ndarray, conn: int) -> int:
    todo = {i for i in range(8) if flags[i]}
    count = 0
    while todo:
        count += 1
        stack = [todo.pop()]
        while stack:
            i = stack.pop()
            nxt = {j for j in todo if _adjacent(i, j, conn)}
            todo -= nxt
            stack.extend(nxt)
    return count


@lru_cache(maxsize=256)
def _topological_numbers(bits: tuple[int, ...]) -> tuple[int, int]:
    fg = np.array(bits, dtype=np.uint8)
    t4 = _count_components(geodesic_neighborhood(1 - fg, FOUR, 2), FOUR)
    t8 = _count_components(geodesic_neighborhood(fg, EIGHT, 1), EIGHT)
    return t4, t8


def topological_numbers(ring) -> tuple[int, int]:
    """Return ``(t4, t8)``: 4-components of the background order-2 geodesic
    neighbourhood and 8-components of the foreground order-1 neighbourhood."""
    return _topological_numbers(_bits(ring))


def is_non_boundary(ring) -> bool:
    bits = _bits(ring)
    return all(bits) or not any(bits)


def is_simple_by_definition(ring) -> bool:
    return topological_numbers(ring) == (1, 1)


def crossing_number(ring) -> np.ndarray | int:
    """Number of 0/1 transitions around the ring (vectorised over the last axis)."""
    ring = np.asarray(ring)
    out = np.abs(np.roll(ring, -1, axis=-1).astype(np.int64) - ring).sum(axis=-1)
    return int(out) if out.ndim == 0 else out


def masked_ring(ring) -> np.ndarray:
    """Promote every corner whose two neighbouring edge positions are foreground.

    All corners are decided from the original ring values.
    """
    ring = np.asarray(ring)
    out = ring.copy()
    for i in CORNERS:
        both = np.logical_and(ring[..., (i - 1) % 8], ring[..., (i + 1) % 8])
        out[..., i] = np.where(both, 1, ring[..., i])
    return out


def is_simple_by_crossing(ring, mask: bool = True) -> bool:
    """Crossing-number test for simple points.

    ``mask=False`` skips the corner masking; it exists only as a negative
    control and gives wrong answers on some configurations.
    """
    bits = np.array(_bits(ring))
    return crossing_number(masked_ring(bits) if mask else bits) == 2


# ---------------------------------------------------------------------------
# lookup tables over all 256 configurations


def ring_from_code(code: int) -> np.ndarray:
    """Ring whose position ``k`` holds bit ``k`` of ``code``."""
    return np.array([(code >> k) & 1 for k in range(8)], dtype=np.uint8)


def ring_code(rings: np.ndarray) -> np.ndarray:
    """Inverse of :func:`ring_from_code`, vectorised over the last axis."""
    weights = (1 << np.arange(8)).astype(np.int64)
    return (np.asarray(rings).astype(np.int64) * weights).sum(axis=-1)


@lru_cache(maxsize=None)
def simple_point_lut(mask: bool = True) -> np.ndarray:
    lut = np.array(
        [is_simple_by_crossing(ring_from_code(c), mask=mask) for c in range(256)]
    )
    lut.flags.writeable = False
    return lut


def simple_point_map(image) -> np.ndarray:
    """Boolean map flagging every simple pixel of a binary raster."""
    fg = as_binary(image)
    return simple_point_lut()[ring_code(ring_stack(fg))]
