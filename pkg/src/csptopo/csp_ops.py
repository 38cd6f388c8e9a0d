"""Continuous-tone simple-point operators and their analytic derivatives.

Every ring-level function is vectorised over leading axes: a ring argument
has shape ``(..., 8)`` and partials come back with the same shape, entry
``k`` holding the derivative with respect to ring position ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .errors import DomainError
from .raster import CORNERS, EDGES


@dataclass(frozen=True)
class CspParams:
    """Sigmoid sharpness ``alpha``, transition threshold ``tau`` and the
    Gaussian width ``sigma`` of the detection operator."""

    alpha: float = 16.0
    tau: float = 0.5
    sigma: float = 0.2

    def __post_init__(self):
        for name in ("alpha", "tau", "sigma"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.alpha <= 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if self.sigma <= 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if self.tau < 0:
            raise DomainError(f"tau must be nonnegative, got {self.tau}")


DEFAULT_PARAMS = CspParams()


class ValueWithGrad(NamedTuple):
    value: np.ndarray
    grad: np.ndarray


def smooth_delta(z, params: CspParams = DEFAULT_PARAMS) -> ValueWithGrad:
    """Logistic step ``1 / (1 + exp(-alpha (z - tau)))`` and its derivative."""
    z = np.asarray(z, dtype=np.float64)
    s = expit(params.alpha * (z - params.tau))
    return ValueWithGrad(s, params.alpha * s * (1.0 - s))


def soft_masked_ring(ring) -> tuple[np.ndarray, np.ndarray]:
    """Continuous corner masking ``corner <- max(corner, min(prev_edge, next_edge))``.

    Returns ``(masked, source)``. ``source[..., i]`` is the ring position
    whose value ended up at masked position ``i``, so the Jacobian is a
    0/1 selection. Ties go to the first argument of ``max``/``min``.
    """
    ring = np.asarray(ring, dtype=np.float64)
    masked = ring.copy()
    source = np.broadcast_to(np.arange(8), ring.shape).copy()
    for i in CORNERS:
        prev, nxt = (i - 1) % 8, (i + 1) % 8
        take_prev = ring[..., prev] <= ring[..., nxt]
        low = np.where(take_prev, ring[..., prev], ring[..., nxt])
        low_src = np.where(take_prev, prev, nxt)
        keep = ring[..., i] >= low
        masked[..., i] = np.where(keep, ring[..., i], low)
        source[..., i] = np.where(keep, i, low_src)
    return masked, source


def selection_jacobian(source: np.ndarray) -> np.ndarray:
    """Dense ``(..., 8, 8)`` Jacobian ``d masked_i / d ring_j`` from ``source``."""
    return (source[..., :, None] == np.arange(8)).astype(np.float64)


def _pull_back(grad_masked: np.ndarray, source: np.ndarray) -> np.ndarray:
    # masked position i only ever copies from i-1, i or i+1
    out = np.zeros_like(grad_masked)
    for i in range(8):
        for j in ((i - 1) % 8, i, (i + 1) % 8):
            out[..., j] += np.where(source[..., i] == j, grad_masked[..., i], 0.0)
    return out


def smooth_crossing_number(ring, params: CspParams = DEFAULT_PARAMS) -> ValueWithGrad:
    """Sum of logistic steps of ``|ring[i+1] - ring[i]|`` around the ring.

    No masking is applied here; :func:`detection_operator` masks first.
    The derivative of ``|d|`` at ``d == 0`` is taken as 0.
    """
    ring = np.asarray(ring, dtype=np.float64)
    diff = np.roll(ring, -1, axis=-1) - ring
    step = smooth_delta(np.abs(diff), params)
    g = step.grad * np.sign(diff)
    # diff_i = ring_{i+1} - ring_i
    grad = np.roll(g, 1, axis=-1) - g
    return ValueWithGrad(step.value.sum(axis=-1), grad)


def detection_operator(ring, params: CspParams = DEFAULT_PARAMS) -> ValueWithGrad:
    """Gaussian simple-point detector on the soft-masked ring.

    ``W = exp(-(c/2 - 1)^2 / (2 sigma^2))`` with ``c`` the smooth crossing
    number of the masked ring. ``W`` is 1 exactly when ``c == 2``.
    """
    masked, source = soft_masked_ring(ring)
    c = smooth_crossing_number(masked, params)
    excess = 0.5 * c.value - 1.0
    two_var = 2.0 * params.sigma**2
    w = np.exp(-(excess**2) / two_var)
    dw_dc = -w * excess / two_var
    grad = _pull_back(dw_dc[..., None] * c.grad, source)
    return ValueWithGrad(w, grad)


def endpoint_gate(ring, conn: int = 8) -> np.ndarray:
    """0 where at most one neighbour exceeds 0.5 (endpoint, protected), else 1.

    Piecewise constant; carries no gradient.
    """
    if conn not in (4, 8):
        raise DomainError(f"connectivity must be 4 or 8, got {conn}")
    ring = np.asarray(ring, dtype=np.float64)
    above = ring > 0.5
    if conn == 4:
        above = above[..., list(EDGES)]
    count = above.sum(axis=-1)
    gate = np.clip(count - 1, 0, 1).astype(np.float64)
    return gate if gate.ndim else float(gate)
