"""Closed-form topological refinement of segmentation logits.

The refinement minimises, pixel by pixel,

    -o u + eps (u ln u + (1-u) ln(1-u)) + eta (1-u) t

where ``t = v * dilate(S(v), r)`` is the skeleton-restored auxiliary map.
``t`` does not depend on ``u``, so the problem separates and each pixel
has the unique minimiser ``u = sigmoid((o + eta t) / eps)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.special import expit

from .errors import DomainError
from .raster import as_scalar, check_shape
from .skeleton import SkelConfig, cspskeletonize

# skeleton of v keeps only topologically non-removable points by default
TCSP_SKEL = SkelConfig(protect_endpoints=False)


@dataclass(frozen=True)
class TcspParams:
    epsilon: float = 1.0
    eta: float = 4.0
    radius: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if not (math.isfinite(self.eta) and self.eta >= 0):
            raise DomainError(f"eta must be nonnegative, got {self.eta}")
        if isinstance(self.radius, bool) or not isinstance(self.radius, (int, np.integer)) or self.radius < 1:
            raise DomainError(f"radius must be a positive integer, got {self.radius!r}")


def dilate(image, radius: int = 1) -> np.ndarray:
    """Maximum over the (2r+1)x(2r+1) square around each pixel, zero outside."""
    if radius < 1:
        raise DomainError(f"radius must be >= 1, got {radius}")
    image = np.asarray(image)
    check_shape(image)
    return ndimage.maximum_filter(image, size=2 * radius + 1, mode="constant", cval=0)


def restore_components(v, skel, radius: int = 1) -> np.ndarray:
    """Keep the part of ``v`` within ``radius`` of the skeleton support."""
    v = np.asarray(v, dtype=np.float64)
    skel = np.asarray(skel, dtype=np.float64)
    if v.shape != skel.shape:
        raise DomainError(f"shape mismatch: v {v.shape} vs skeleton {skel.shape}")
    return v * dilate(skel, radius)


def restored_term(v, params: TcspParams = TcspParams(), skel_cfg: SkelConfig = TCSP_SKEL) -> np.ndarray:
    v = as_scalar(v)
    skel = cspskeletonize(v, skel_cfg).skeleton
    return restore_components(v, skel, params.radius)


def _check_logits(o, shape=None) -> np.ndarray:
    o = np.asarray(o, dtype=np.float64)
    check_shape(o)
    if not np.isfinite(o).all():
        raise DomainError("score field must be finite")
    if shape is not None and o.shape != shape:
        raise DomainError(f"shape mismatch: scores {o.shape} vs {shape}")
    return o


def energy_density(u, o, restored, params: TcspParams = TcspParams()) -> np.ndarray:
    """Per-pixel energy for a fixed restored term; sums to :func:`energy`."""
    u = np.asarray(u, dtype=np.float64)
    entropy = u * np.log(u) + (1.0 - u) * np.log1p(-u)
    return -o * u + params.epsilon * entropy + params.eta * (1.0 - u) * restored


def energy(u, o, v, params: TcspParams = TcspParams(), skel_cfg: SkelConfig = TCSP_SKEL) -> float:
    u = np.asarray(u, dtype=np.float64)
    check_shape(u)
    if not ((u > 0) & (u < 1)).all():
        raise DomainError("energy needs u strictly inside (0, 1)")
    o = _check_logits(o, u.shape)
    v = as_scalar(v)
    if v.shape != u.shape:
        raise DomainError(f"shape mismatch: u {u.shape} vs v {v.shape}")
    t = restored_term(v, params, skel_cfg)
    return float(energy_density(u, o, t, params).sum())


def closed_form_solve(o, v, params: TcspParams = TcspParams(), skel_cfg: SkelConfig = TCSP_SKEL) -> np.ndarray:
    """Return ``sigmoid((o + eta * v * dilate(S(v), r)) / epsilon)``."""
    o = _check_logits(o)
    v = as_scalar(v)
    if v.shape != o.shape:
        raise DomainError(f"shape mismatch: scores {o.shape} vs v {v.shape}")
    t = restored_term(v, params, skel_cfg)
    return expit((o + params.eta * t) / params.epsilon)
