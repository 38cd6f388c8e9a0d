"""Finite-difference helpers shared by the gradient tests."""

import numpy as np

from csptopo.skeleton import branch_signature


def same_branches(a, b):
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def central_fd(f, u, pixel, h=1e-5, cfg=None, base=None):
    """Central difference of scalar ``f`` at ``u`` along one pixel.

    With ``cfg`` given, returns NaN when u - h or u + h runs the soft
    skeleton through a different branch than u does: the map has a kink
    inside the stencil there, so the difference says nothing about the
    derivative at u.
    """
    up, dn = u.copy(), u.copy()
    up[pixel] += h
    dn[pixel] -= h
    if cfg is not None:
        base = branch_signature(u, cfg) if base is None else base
        if not (same_branches(base, branch_signature(up, cfg))
                and same_branches(base, branch_signature(dn, cfg))):
            return np.nan
    return (f(up) - f(dn)) / (2 * h)


def rel_error(analytic, fd):
    analytic, fd = np.asarray(analytic), np.asarray(fd)
    return np.abs(analytic - fd) / np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-8)
