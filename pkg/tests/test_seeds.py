import numpy as np
import pytest

from d3stereo.core import CostVolume, DisparityMap, Pixel, UNKNOWN, density
from d3stereo.errors import InsufficientCandidates
from d3stereo.pyramid import derive_right_volume
from d3stereo.seeds import init_seeds, lrdc_check, pkrn, wta_map
from tests.conftest import planted_volume_pair


def test_pkrn_basic():
    s = pkrn(np.array([0.2, 0.4, 0.9]))
    assert s.best_d == 0 and s.ratio == pytest.approx(2.0)
    assert s.second_cost == pytest.approx(0.4)


def test_pkrn_tie_smaller_d():
    s = pkrn(np.array([0.3, 0.3, 0.9]))
    assert s.best_d == 0
    assert s.ratio == pytest.approx(1.0)


def test_pkrn_insufficient():
    with pytest.raises(InsufficientCandidates):
        pkrn(np.array([1.0]))
    with pytest.raises(InsufficientCandidates):
        pkrn(np.array([0.5, 1.0]), valid=np.array([True, False]))


def test_pkrn_zero_cost_conventions():
    assert pkrn(np.array([0.0, 0.4])).ratio == np.inf
    assert pkrn(np.array([0.0, 0.0])).ratio == 1.0


def _map(states, level=1):
    return DisparityMap(np.asarray(states, np.int32), level)


def test_lrdc_cases():
    dl = _map([[UNKNOWN] * 10])
    dr = _map([[UNKNOWN] * 10])
    dl.states[0, 9] = 7
    dr.states[0, 2] = 7
    assert lrdc_check(dl, dr, Pixel(9, 0), 1) is True
    dr.states[0, 2] = 5
    assert lrdc_check(dl, dr, Pixel(9, 0), 1) is False
    dl.states[0, 3] = 4  # projects to column -1
    assert lrdc_check(dl, dr, Pixel(3, 0), 1) is False


def test_init_seeds_planted(rng):
    from tests.conftest import smooth_disparity_field
    gt = smooth_disparity_field(24, 48, 3, rng, smooth=4.0, per_row=True)
    cl, cr, gt = planted_volume_pair(24, 48, 8, rng, gt=gt)
    seeds = init_seeds(cl, cr, gamma=1.1, lrdc_tol=1)
    dec = seeds.states >= 0
    assert density(seeds) > 0.9
    assert np.array_equal(seeds.states[dec], gt[dec])


def test_init_seeds_flat_volume():
    data = np.full((6, 10, 5), 0.5, np.float32)
    valid = np.ones_like(data, bool)
    for d in range(5):
        valid[:, :d, d] = False
        data[:, :d, d] = 1.0
    cl = CostVolume(data, valid, 1)
    seeds = init_seeds(cl, derive_right_volume(cl), 1.05, 1)
    assert density(seeds) == 0.0


def test_init_seeds_gamma_infinity(rng):
    cl, cr, _ = planted_volume_pair(10, 14, 4, rng)
    seeds = init_seeds(cl, cr, gamma=np.inf, lrdc_tol=1)
    assert density(seeds) == 0.0


def test_seed_density_monotone_in_gamma(rng):
    cl, cr, _ = planted_volume_pair(16, 20, 6, rng)
    last = 1.1
    gammas = [1.01, 1.5, 2.0, 4.0, 8.0]
    dens = [density(init_seeds(cl, cr, g, 1)) for g in gammas]
    assert all(a >= b for a, b in zip(dens, dens[1:]))


def test_seeds_affine_invariance(rng):
    cl, cr, _ = planted_volume_pair(12, 16, 5, rng)
    a = init_seeds(cl, cr, 1.2, 1)
    scaled_l = CostVolume(np.clip(cl.data * 0.5, 0, 1), cl.valid, cl.level, "left")
    scaled_r = CostVolume(np.clip(cr.data * 0.5, 0, 1), cr.valid, cr.level, "right")
    b = init_seeds(scaled_l, scaled_r, 1.2, 1)
    assert np.array_equal(a.states, b.states)


def test_seeds_pass_lrdc_postcheck(rng):
    cl, cr, _ = planted_volume_pair(20, 24, 6, rng)
    seeds = init_seeds(cl, cr, 1.1, 1)
    wta_r, _ = wta_map(cr)
    v, u = np.nonzero(seeds.states >= 0)
    d = seeds.states[v, u]
    pu = u - d
    assert np.all(pu >= 0)
    assert np.all(np.abs(d - wta_r[v, pu]) <= 1)
