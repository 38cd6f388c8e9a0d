"""Iterative simple-point removal over four parity subfields.

One outer iteration computes the endpoint gate ``P`` on the current raster,
then visits the subfields (even, even), (odd, even), (even, odd),
(odd, odd) in that order. Each visit evaluates the detection operator on
the current raster at that subfield's pixels and multiplies them by
``1 - P * W``. Pixels of one subfield are at Chebyshev distance >= 2 from
each other, so none of them lies in another's 3x3 ring and the visit is
equivalent to removing them one at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .csp_ops import CspParams, detection_operator, endpoint_gate, soft_masked_ring
from .errors import DomainError
from .raster import RING_OFFSETS, SUBFIELD_PARITY, as_binary, as_scalar, check_shape
from .topology import ring_code, simple_point_lut

SOFT = "soft"
HARD = "hard"

# soft-mode values below this are snapped to zero after every pass
CLAMP = 1e-6


@dataclass(frozen=True)
class SkelConfig:
    """Controls for :func:`cspskeletonize`.

    ``iterations=None`` means ``ceil(max(height, width) / 2)``. With
    ``convergence_tol=0`` the loop still stops as soon as a full outer
    iteration leaves the raster unchanged.
    """

    iterations: int | None = None
    params: CspParams = field(default_factory=CspParams)
    mode: str = SOFT
    protect_endpoints: bool = True
    endpoint_conn: int = 8
    convergence_tol: float = 0.0
    gate_per_pass: bool = False

    def __post_init__(self):
        if self.iterations is not None and (
            isinstance(self.iterations, bool)
            or not isinstance(self.iterations, (int, np.integer))
            or self.iterations < 1
        ):
            raise DomainError(f"iterations must be a positive integer, got {self.iterations!r}")
        if self.mode not in (SOFT, HARD):
            raise DomainError(f"mode must be 'soft' or 'hard', got {self.mode!r}")
        if self.endpoint_conn not in (4, 8):
            raise DomainError(f"endpoint_conn must be 4 or 8, got {self.endpoint_conn}")
        if not self.convergence_tol >= 0:
            raise DomainError("convergence_tol must be nonnegative")

    def iterations_for(self, shape: tuple[int, int]) -> int:
        if self.iterations is not None:
            return int(self.iterations)
        return max(1, math.ceil(max(shape) / 2))


@dataclass
class SkeletonResult:
    skeleton: np.ndarray
    iterations_run: int
    converged: bool


def _sublattice_rings(padded: np.ndarray, shape, pr: int, pc: int) -> np.ndarray:
    h, w = shape
    rows = len(range(pr, h, 2))
    cols = len(range(pc, w, 2))
    out = np.empty((rows, cols, 8), dtype=padded.dtype)
    for k, (dr, dc) in enumerate(RING_OFFSETS):
        r0, c0 = 1 + pr + dr, 1 + pc + dc
        out[..., k] = padded[r0 : r0 + 2 * rows : 2, c0 : c0 + 2 * cols : 2]
    return out


def _gate(s: np.ndarray, config: SkelConfig, pr: int, pc: int) -> np.ndarray | float:
    if not config.protect_endpoints:
        return 1.0
    rings = _sublattice_rings(np.pad(s, 1), s.shape, pr, pc)
    return endpoint_gate(rings, config.endpoint_conn)


@dataclass
class _TapeEntry:
    pr: int
    pc: int
    rings: np.ndarray
    before: np.ndarray  # sublattice values before the pass
    gate: np.ndarray | float
    w: np.ndarray
    dw: np.ndarray
    zeroed: np.ndarray | None  # full-grid mask of values held at 0 by the clamp


def _run(image: np.ndarray, config: SkelConfig, tape: list | None):
    s = image.copy()
    h, w = check_shape(s)
    params = config.params
    hard = config.mode == HARD
    iterations = config.iterations_for((h, w))
    converged = False
    t = 0
    for t in range(1, iterations + 1):
        start = s.copy()
        gates = {}
        if not config.gate_per_pass:
            for sub, (pr, pc) in SUBFIELD_PARITY.items():
                gates[sub] = _gate(s, config, pr, pc)
        for sub, (pr, pc) in SUBFIELD_PARITY.items():
            if pr >= h or pc >= w:
                continue
            gate = _gate(s, config, pr, pc) if config.gate_per_pass else gates[sub]
            rings = _sublattice_rings(np.pad(s, 1), (h, w), pr, pc)
            det = detection_operator(rings, params)
            before = s[pr::2, pc::2].copy()
            if hard:
                removed = gate * (det.value > 0.5)
                s[pr::2, pc::2] = before * (1.0 - removed)
                zeroed = None
            else:
                s[pr::2, pc::2] = before * (1.0 - gate * det.value)
                # exact zeros count as clamped: the map is flat on [0, CLAMP)
                zeroed = s < CLAMP
                s[zeroed] = 0.0
            if tape is not None:
                tape.append(_TapeEntry(pr, pc, rings, before, gate, det.value, det.grad, zeroed))
        change = float(np.abs(s - start).max())
        if change == 0.0 or change < config.convergence_tol:
            converged = True
            break
    return s, t, converged


def cspskeletonize(image, config: SkelConfig = SkelConfig()) -> SkeletonResult:
    """Skeletonize a raster with values in [0, 1].

    In soft mode each visited pixel is scaled by ``1 - P * W``; in hard
    mode by ``1 - P * [W > 0.5]``, which keeps a binary raster binary.
    Values only ever shrink.
    """
    binary_in = _is_binary_dtype(image)
    s, iters, converged = _run(as_scalar(image), config, None)
    if config.mode == HARD and binary_in:
        s = s.astype(np.uint8)
    return SkeletonResult(s, iters, converged)


def _is_binary_dtype(image) -> bool:
    arr = np.asarray(image)
    return arr.dtype == bool or (
        np.issubdtype(arr.dtype, np.integer) and bool(np.isin(arr, (0, 1)).all())
    )


def skeletonize_with_grad(image, config: SkelConfig = SkelConfig(), grad_output=None):
    """Soft skeleton plus the gradient of a downstream scalar loss.

    ``grad_output`` is ``dL/dS`` for the returned skeleton ``S`` (defaults
    to ones, i.e. ``L = sum(S)``). The endpoint gate, the clamp and the
    max/min choices of the soft mask are held fixed at their forward-pass
    values. Returns ``(SkeletonResult, dL/dinput)``.
    """
    if config.mode != SOFT:
        raise DomainError("gradients are only defined in soft mode")
    u = as_scalar(image)
    tape: list[_TapeEntry] = []
    s, iters, converged = _run(u, config, tape)
    h, w = u.shape
    g = np.ones_like(u) if grad_output is None else np.array(grad_output, dtype=np.float64)
    if g.shape != u.shape:
        raise DomainError(f"grad_output shape {g.shape} does not match {u.shape}")
    for e in reversed(tape):
        if e.zeroed is not None:
            g[e.zeroed] = 0.0
        g_sub = g[e.pr :: 2, e.pc :: 2].copy()
        g[e.pr :: 2, e.pc :: 2] = g_sub * (1.0 - e.gate * e.w)
        ring_grad = (-g_sub * e.gate * e.before)[..., None] * e.dw
        acc = np.zeros((h + 2, w + 2))
        rows, cols = g_sub.shape
        for k, (dr, dc) in enumerate(RING_OFFSETS):
            r0, c0 = 1 + e.pr + dr, 1 + e.pc + dc
            acc[r0 : r0 + 2 * rows : 2, c0 : c0 + 2 * cols : 2] += ring_grad[..., k]
        g += acc[1:-1, 1:-1]
    return SkeletonResult(s, iters, converged), g


def branch_signature(image, config: SkelConfig = SkelConfig()) -> list[np.ndarray]:
    """Every discrete choice made by a soft-mode forward pass.

    Lists the soft-mask sources, the signs of the masked ring differences,
    the endpoint gates and the clamp masks of each subfield visit. Two
    inputs with equal signatures lie on the same smooth piece of the
    skeleton map, which is what finite-difference checks need.
    """
    tape: list[_TapeEntry] = []
    _run(as_scalar(image), config, tape)
    out = []
    for e in tape:
        masked, source = soft_masked_ring(e.rings)
        out += [
            source,
            np.sign(np.roll(masked, -1, axis=-1) - masked),
            np.broadcast_to(e.gate, e.before.shape),
            e.zeroed,
        ]
    return out


def binary_skeletonize(image, config: SkelConfig = SkelConfig()) -> SkeletonResult:
    """Exact skeletonization of a binary raster via the simple-point table.

    Same schedule as hard-mode :func:`cspskeletonize` without the smooth
    operator; ``config.params`` and ``config.mode`` are ignored.
    """
    s = as_binary(image).copy()
    h, w = s.shape
    lut = simple_point_lut()
    iterations = config.iterations_for((h, w))
    converged = False
    t = 0

    def gate(pr, pc):
        if not config.protect_endpoints:
            return True
        rings = _sublattice_rings(np.pad(s, 1), (h, w), pr, pc)
        return endpoint_gate(rings, config.endpoint_conn) > 0

    for t in range(1, iterations + 1):
        changed = False
        gates = None if config.gate_per_pass else {
            sub: gate(pr, pc) for sub, (pr, pc) in SUBFIELD_PARITY.items()
        }
        for sub, (pr, pc) in SUBFIELD_PARITY.items():
            if pr >= h or pc >= w:
                continue
            g = gate(pr, pc) if gates is None else gates[sub]
            rings = _sublattice_rings(np.pad(s, 1), (h, w), pr, pc)
            sub_view = s[pr::2, pc::2]
            remove = (sub_view == 1) & lut[ring_code(rings)] & g
            if remove.any():
                sub_view[remove] = 0
                changed = True
        if not changed:
            converged = True
            break
    return SkeletonResult(s, t, converged)
