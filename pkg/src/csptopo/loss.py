"""Skeleton-overlap loss on soft skeletons, combined with binary cross-entropy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .raster import as_binary, as_scalar
from .skeleton import SOFT, SkelConfig, binary_skeletonize, cspskeletonize, skeletonize_with_grad

EPS = 1e-7
BCE_CLAMP = 1e-7
DEFAULT_LAMBDA = 0.001


@dataclass
class LossReport:
    t_prec: float
    t_sens: float
    csp_loss: float
    bce: float
    total: float
    lam: float
    degenerate: bool = False

    def items(self):
        return [
            ("t_prec", self.t_prec),
            ("t_sens", self.t_sens),
            ("csp_loss", self.csp_loss),
            ("bce", self.bce),
            ("total", self.total),
            ("lambda", self.lam),
            ("degenerate", int(self.degenerate)),
        ]


def _inputs(u, g, lam):
    u = as_scalar(u)
    g = as_binary(g)
    if u.shape != g.shape:
        raise DomainError(f"shape mismatch: prediction {u.shape} vs ground truth {g.shape}")
    if not lam >= 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")
    return u, g


def harmonic_overlap(skel_u, g, skel_g, u) -> tuple[float, float, float]:
    """Topology precision, sensitivity and ``1 - harmonic mean``, all guarded."""
    t_prec = float((skel_u * g).sum() / (skel_u.sum() + EPS))
    t_sens = float((skel_g * u).sum() / (skel_g.sum() + EPS))
    loss = 1.0 - 2.0 * t_prec * t_sens / (t_prec + t_sens + EPS)
    return t_prec, t_sens, loss


def bce(u: np.ndarray, g: np.ndarray) -> float:
    uc = np.clip(u, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return float(-(g * np.log(uc) + (1 - g) * np.log1p(-uc)).mean())


def csp_loss(u, g, skel_cfg: SkelConfig = SkelConfig(), lam: float = DEFAULT_LAMBDA) -> LossReport:
    """Evaluate ``bce + lam * csp`` for prediction ``u`` against binary ``g``.

    ``S(u)`` comes from :func:`cspskeletonize` with ``skel_cfg``; ``S(g)``
    from :func:`binary_skeletonize` with the same schedule.
    """
    u, g = _inputs(u, g, lam)
    skel_u = cspskeletonize(u, skel_cfg).skeleton.astype(np.float64)
    skel_g = binary_skeletonize(g, skel_cfg).skeleton
    t_prec, t_sens, loss = harmonic_overlap(skel_u, g, skel_g, u)
    b = bce(u, g)
    degenerate = skel_u.sum() == 0 or skel_g.sum() == 0
    return LossReport(t_prec, t_sens, loss, b, b + lam * loss, lam, bool(degenerate))


def csp_loss_grad(u, g, skel_cfg: SkelConfig = SkelConfig(), lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    """Gradient of ``bce + lam * csp`` with respect to every pixel of ``u``.

    ``S(g)`` is a constant; the precision term is pulled back through the
    soft skeleton with :func:`skeletonize_with_grad`.
    """
    if skel_cfg.mode != SOFT:
        raise DomainError("csp_loss_grad needs a soft-mode skeleton config")
    u, g = _inputs(u, g, lam)
    n = u.size
    inside = (u >= BCE_CLAMP) & (u <= 1.0 - BCE_CLAMP)
    uc = np.clip(u, BCE_CLAMP, 1.0 - BCE_CLAMP)
    grad = np.where(inside, (uc - g) / (uc * (1.0 - uc)), 0.0) / n
    if lam == 0:
        return grad

    skel_g = binary_skeletonize(g, skel_cfg).skeleton.astype(np.float64)
    skel_u = cspskeletonize(u, skel_cfg).skeleton
    hit = (skel_u * g).sum()
    mass = skel_u.sum() + EPS
    t_prec = hit / mass
    t_sens = (skel_g * u).sum() / (skel_g.sum() + EPS)
    denom = t_prec + t_sens + EPS
    # d(1 - 2ps/(p+s+eps)) / dp and / ds
    d_prec = -2.0 * t_sens * (t_sens + EPS) / denom**2
    d_sens = -2.0 * t_prec * (t_prec + EPS) / denom**2
    dprec_dskel = (g * mass - hit) / mass**2
    _, through_skel = skeletonize_with_grad(u, skel_cfg, grad_output=d_prec * dprec_dskel)
    dsens_du = skel_g / (skel_g.sum() + EPS)
    return grad + lam * (through_skel + d_sens * dsens_du)
