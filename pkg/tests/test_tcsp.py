import math

import numpy as np
import pytest
from scipy.special import expit

from csptopo.errors import DomainError
from csptopo.skeleton import cspskeletonize
from csptopo.tcsp import (
    TCSP_SKEL,
    TcspParams,
    closed_form_solve,
    dilate,
    energy,
    energy_density,
    restore_components,
    restored_term,
)


def brute_dilate(img, r):
    h, w = img.shape
    out = np.zeros_like(img)
    for i in range(h):
        for j in range(w):
            out[i, j] = img[max(0, i - r):i + r + 1, max(0, j - r):j + r + 1].max()
    return out


def test_params_validation():
    for bad in ({"epsilon": 0}, {"eta": -1}, {"radius": 0}, {"radius": 1.5}, {"radius": True}):
        with pytest.raises(DomainError):
            TcspParams(**bad)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_dilate_matches_brute_force(rng, r):
    img = rng.random((11, 9))
    assert (dilate(img, r) == brute_dilate(img, r)).all()


def test_dilate_two_points():
    img = np.zeros((7, 7))
    img[1, 1] = 0.4
    img[5, 5] = 0.9
    out = dilate(img, 1)
    assert (out[0:3, 0:3] == 0.4).all()
    assert (out[4:7, 4:7] == 0.9).all()
    assert out.sum() == pytest.approx(9 * 1.3)


def test_restore_components_keeps_blobs_near_skeleton():
    v = np.zeros((9, 14))
    v[2:7, 1:5] = 0.8
    v[2:7, 8:13] = 0.6
    skel = cspskeletonize(v, TCSP_SKEL).skeleton
    t = restore_components(v, skel, 1)
    assert np.allclose(t, v * brute_dilate(skel, 1), rtol=0, atol=0)
    assert (t <= v).all()
    # each blob keeps a nonzero core, so neither component is lost
    assert t[2:7, 1:5].max() > 0.5 and t[2:7, 8:13].max() > 0.3
    assert (t[v == 0] == 0).all()
    assert (restored_term(v) == t).all()


def test_restore_shape_mismatch():
    with pytest.raises(DomainError):
        restore_components(np.zeros((3, 3)), np.zeros((3, 4)))


def test_energy_at_half_is_entropy_only():
    o = np.zeros((6, 6))
    v = np.zeros((6, 6))
    e = energy(np.full((6, 6), 0.5), o, v)
    assert e == pytest.approx(-36 * math.log(2), rel=1e-14)


def test_energy_rejects_boundary_values():
    with pytest.raises(DomainError):
        energy(np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3)))


def test_closed_form_single_restored_pixel():
    o = np.full((5, 5), 2.0)
    v = np.zeros((5, 5))
    v[2, 2] = 1.0
    t = restored_term(v)
    assert t[2, 2] == pytest.approx(1.0, abs=1e-4)
    u = closed_form_solve(o, v)
    assert u[2, 2] == pytest.approx(expit((2.0 + 4.0 * t[2, 2]) / 1.0), rel=1e-15)
    # restored term 1, logit 2: sigmoid(6)
    assert abs(u[2, 2] - 0.99753) < 1e-4
    assert u[0, 0] == pytest.approx(expit(2.0))


def test_zero_inputs_give_half():
    assert (closed_form_solve(np.zeros((4, 4)), np.zeros((4, 4))) == 0.5).all()


def test_closed_form_is_stationary_and_minimal(rng):
    params = TcspParams()
    grid = np.linspace(0.001, 0.999, 999)
    for _ in range(5):
        o = rng.uniform(-3, 3, (8, 8))
        v = rng.random((8, 8))
        u = closed_form_solve(o, v, params)
        t = restored_term(v, params)
        stat = -o + params.epsilon * np.log(u / (1 - u)) - params.eta * t
        assert np.abs(stat).max() < 1e-10
        best = energy_density(u, o, t, params)
        scan = energy_density(grid[:, None, None], o, t, params).min(axis=0)
        assert (scan - best >= -1e-9).all()


def test_monotone_in_scores_and_aux(rng):
    o = rng.uniform(-3, 3, (8, 8))
    v = rng.random((8, 8))
    base = closed_form_solve(o, v)
    assert (closed_form_solve(o + 0.5, v) > base).all()
    assert (closed_form_solve(o, v, TcspParams(eta=8.0)) >= base).all()


def test_strong_restoration_saturates():
    o = np.zeros((5, 5))
    v = np.zeros((5, 5))
    v[2, 2] = 1.0
    assert closed_form_solve(o, v)[2, 2] > 0.98


def test_shape_and_finiteness_checks():
    with pytest.raises(DomainError):
        closed_form_solve(np.zeros((3, 3)), np.zeros((3, 4)))
    with pytest.raises(DomainError):
        closed_form_solve(np.full((3, 3), np.nan), np.zeros((3, 3)))
