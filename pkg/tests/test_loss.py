import math

import numpy as np
import pytest

from csptopo.errors import DomainError
from csptopo.loss import BCE_CLAMP, EPS, bce, csp_loss, csp_loss_grad
from csptopo.skeleton import HARD, SkelConfig, binary_skeletonize, branch_signature, cspskeletonize
from fdcheck import central_fd, rel_error
from shapes import random_raster, smooth_scalar

CFG = SkelConfig(iterations=2)


def bar(h, w, rows, cols):
    img = np.zeros((h, w), np.uint8)
    img[rows, cols] = 1
    return img


def test_perfect_overlap():
    g = bar(12, 16, slice(4, 8), slice(2, 14))
    rep = csp_loss(g.astype(float), g)
    assert rep.t_prec == pytest.approx(1, abs=1e-6)
    assert rep.t_sens == pytest.approx(1, abs=1e-6)
    assert 0 <= rep.csp_loss < 1e-6
    assert rep.bce == pytest.approx(-math.log(1 - BCE_CLAMP))
    assert rep.total == pytest.approx(rep.bce + 0.001 * rep.csp_loss)
    assert rep.lam == 0.001 and not rep.degenerate


def test_disjoint():
    g = bar(12, 20, slice(1, 4), slice(1, 8))
    u = bar(12, 20, slice(7, 11), slice(10, 18)).astype(float)
    rep = csp_loss(u, g)
    assert rep.t_prec == 0 and rep.t_sens == 0
    assert rep.csp_loss == 1.0


def test_empty_ground_truth_is_guarded():
    u = smooth_scalar(np.random.default_rng(0), 10, 10)
    rep = csp_loss(u, np.zeros((10, 10), np.uint8))
    assert rep.degenerate
    assert rep.t_sens == 0 and rep.csp_loss == 1.0
    assert all(math.isfinite(v) for _, v in rep.items())


def test_empty_prediction_is_guarded():
    g = bar(10, 10, slice(3, 6), slice(2, 8))
    rep = csp_loss(np.zeros((10, 10)), g)
    assert rep.degenerate and math.isfinite(rep.total)


def test_formulas_match_direct_evaluation(rng):
    g = random_raster(rng, 16, 16)
    u = smooth_scalar(rng, 16, 16)
    rep = csp_loss(u, g, CFG, lam=0.5)
    su = cspskeletonize(u, CFG).skeleton
    sg = binary_skeletonize(g, CFG).skeleton
    p = (su * g).sum() / (su.sum() + EPS)
    s = (sg * u).sum() / (sg.sum() + EPS)
    assert rep.t_prec == pytest.approx(p, rel=1e-12)
    assert rep.t_sens == pytest.approx(s, rel=1e-12)
    assert rep.csp_loss == pytest.approx(1 - 2 * p * s / (p + s + EPS), rel=1e-12)
    uc = np.clip(u, BCE_CLAMP, 1 - BCE_CLAMP)
    assert rep.bce == pytest.approx(-(g * np.log(uc) + (1 - g) * np.log(1 - uc)).mean(), rel=1e-12)
    assert rep.total == pytest.approx(rep.bce + 0.5 * rep.csp_loss, rel=1e-12)


def test_shape_mismatch():
    with pytest.raises(DomainError):
        csp_loss(np.zeros((4, 4)), np.zeros((4, 5), np.uint8))


def test_range_and_symmetry(rng):
    for _ in range(20):
        a = random_raster(rng, 14, 14)
        b = random_raster(rng, 14, 14)
        cfg = SkelConfig(mode=HARD)
        ab = csp_loss(a.astype(float), b, cfg)
        ba = csp_loss(b.astype(float), a, cfg)
        assert 0 <= ab.csp_loss <= 1
        assert ab.t_prec == pytest.approx(ba.t_sens, abs=1e-12)
        assert ab.t_sens == pytest.approx(ba.t_prec, abs=1e-12)
        assert ab.csp_loss == pytest.approx(ba.csp_loss, abs=1e-12)


def test_growing_overlap_does_not_increase_loss(rng):
    cfg = SkelConfig(mode=HARD)
    for _ in range(20):
        u = random_raster(rng, 14, 14)
        g = random_raster(rng, 14, 14)
        su = binary_skeletonize(u, cfg).skeleton
        candidates = np.argwhere((su == 1) & (g == 0))
        if not len(candidates):
            continue
        before = csp_loss(u.astype(float), g, cfg)
        r, c = candidates[0]
        g2 = g.copy()
        g2[r, c] = 1
        after = csp_loss(u.astype(float), g2, cfg)
        assert after.t_prec >= before.t_prec


def test_grad_hard_mode_rejected():
    with pytest.raises(DomainError):
        csp_loss_grad(np.zeros((4, 4)), np.zeros((4, 4), np.uint8), SkelConfig(mode=HARD))


def test_grad_lambda_zero_is_bce(rng):
    g = random_raster(rng, 8, 8)
    u = rng.uniform(0.05, 0.95, (8, 8))
    grad = csp_loss_grad(u, g, CFG, lam=0.0)
    assert (grad == (u - g) / (u * (1 - u)) / u.size).all()


def test_grad_at_clamp_boundary_is_finite():
    g = bar(8, 8, slice(2, 6), slice(1, 7))
    grad = csp_loss_grad(g.astype(float), g, CFG, lam=1.0)
    assert np.isfinite(grad).all()


@pytest.mark.parametrize("lam", [0.001, 1.0])
def test_grad_matches_finite_differences(rng, lam):
    errors = []
    for _ in range(3):
        g = random_raster(rng, 8, 8)
        u = rng.uniform(0.05, 0.95, (8, 8))
        grad = csp_loss_grad(u, g, CFG, lam)
        f = lambda x: csp_loss(x, g, CFG, lam).total  # noqa: E731
        base = branch_signature(u, CFG)
        for r in range(8):
            for c in range(8):
                fd = central_fd(f, u, (r, c), 1e-5, CFG, base)
                if not np.isnan(fd):
                    errors.append(rel_error(grad[r, c], fd))
    assert len(errors) >= 150
    assert max(errors) < 1e-3


def test_bce_clamps():
    assert math.isfinite(bce(np.array([[0.0, 1.0]]), np.array([[1, 0]])))
