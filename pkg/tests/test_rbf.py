import math

import numpy as np
import pytest

from d3stereo.core import CostVolume, GrayImage, Pixel
from d3stereo.rbf import (OpCounter, RbfKernelParams, bf_aggregate,
                          op_count_ratio, rbf_aggregate, rbf_weights)


def _volume(rng, h=9, w=9, dd=3, level=1):
    data = rng.random((h, w, dd)).astype(np.float32)
    return CostVolume(data, np.ones_like(data, bool), level)


def _guide(rng, h=9, w=9):
    return GrayImage((rng.random((h, w)) * 255).astype(np.float32))


# --- kernel weights ---------------------------------------------------------

def test_weights_constant_guide():
    guide = GrayImage(np.full((5, 5), 10.0, np.float32))
    params = RbfKernelParams(sigma1=2.0, sigma2=10.0)
    ws = dict(rbf_weights(guide, Pixel(2, 2), params))
    assert ws[Pixel(2, 2)] == 1.0
    assert ws[Pixel(3, 2)] == pytest.approx(math.exp(-1 / 4.0))
    assert ws[Pixel(3, 3)] == pytest.approx(math.exp(-2 / 4.0))


def test_weights_intensity_step():
    data = np.full((3, 3), 50.0, np.float32)
    data[1, 2] = 60.0  # |dI| == sigma2
    guide = GrayImage(data)
    params = RbfKernelParams(sigma1=2.0, sigma2=10.0)
    ws = dict(rbf_weights(guide, Pixel(1, 1), params))
    assert ws[Pixel(2, 1)] == pytest.approx(math.exp(-1 / 4.0) * math.exp(-1.0))


def test_weights_corner_count():
    guide = GrayImage(np.zeros((4, 4), np.float32))
    ws = rbf_weights(guide, Pixel(0, 0), RbfKernelParams())
    assert len(ws) == 4  # self + 3 neighbors


# --- aggregation ------------------------------------------------------------

def test_constant_volume_unchanged(rng):
    guide = _guide(rng)
    c = np.float32(0.37)
    vol = CostVolume(np.full((9, 9, 4), c), np.ones((9, 9, 4), bool), 1)
    for t in (1, 3, 5):
        out = rbf_aggregate(vol, guide, RbfKernelParams(t_max=t))
        ulp = np.spacing(c)
        assert np.all(np.abs(out.data - c) <= t * ulp)


def test_rbf1_equals_bf1_bitexact(rng):
    for _ in range(50):
        vol = _volume(rng)
        guide = _guide(rng)
        a = rbf_aggregate(vol, guide, RbfKernelParams(t_max=1))
        b = bf_aggregate(vol, guide, 1, 2.0, 10.0)
        assert a.data.tobytes() == b.data.tobytes()


def _impulse_volume(n=7, dd=1):
    data = np.zeros((n, n, dd), np.float32)
    data[n // 2, n // 2, 0] = 1.0
    return CostVolume(data, np.ones_like(data, bool), 1)


def _naive_pass(cost, guide, radius, s1, s2):
    """Direct per-pixel weighted mean, all cells valid."""
    h, w, dd = cost.shape
    out = np.zeros_like(cost, np.float64)
    for v in range(h):
        for u in range(w):
            num = np.zeros(dd)
            den = 0.0
            for ov in range(-radius, radius + 1):
                for ou in range(-radius, radius + 1):
                    vv, uu = v + ov, u + ou
                    if 0 <= vv < h and 0 <= uu < w:
                        di = float(guide[v, u]) - float(guide[vv, uu])
                        wgt = math.exp(-(ov * ov + ou * ou) / s1 ** 2
                                       - di * di / s2 ** 2)
                        num += wgt * cost[vv, uu].astype(np.float64)
                        den += wgt
            out[v, u] = num / den
    return out


def test_rbf_two_iterations_match_composition():
    vol = _impulse_volume(7)
    guide = GrayImage(np.full((7, 7), 100.0, np.float32))
    out = rbf_aggregate(vol, guide, RbfKernelParams(sigma1=2.0, sigma2=10.0,
                                                    t_max=2))
    step1 = _naive_pass(vol.data, guide.data, 1, 2.0, 10.0)
    step2 = _naive_pass(step1.astype(np.float32), guide.data, 1, 2.0, 10.0)
    assert np.allclose(out.data, step2, atol=1e-6)


def test_bf_impulse_radius2_matches_direct():
    vol = _impulse_volume(7)
    guide = GrayImage(np.full((7, 7), 100.0, np.float32))
    out = bf_aggregate(vol, guide, 2, 2.0, 10.0)
    direct = _naive_pass(vol.data, guide.data, 2, 2.0, 10.0)
    assert np.allclose(out.data, direct, atol=1e-6)
    # footprint limited to Chebyshev radius 2 around the center
    assert out.data[0, 0, 0] == 0.0
    assert out.data[3, 1, 0] > 0.0


def test_receptive_field_expansion():
    guide = GrayImage(np.full((13, 13), 50.0, np.float32))
    for t in (1, 2, 4):
        out = rbf_aggregate(_impulse_volume(13), guide,
                            RbfKernelParams(t_max=t))
        c = 6
        nz = np.nonzero(out.data[:, :, 0])
        cheb = np.maximum(np.abs(nz[0] - c), np.abs(nz[1] - c))
        assert cheb.max() == t


def test_monotone_bounds(rng):
    vol = _volume(rng, 8, 8, 3)
    guide = _guide(rng, 8, 8)
    out = rbf_aggregate(vol, guide, RbfKernelParams(t_max=3))
    assert out.data.min() >= vol.data.min() - 1e-6
    assert out.data.max() <= vol.data.max() + 1e-6


def test_order_preserved_plane_constant_volume(rng):
    # constant per disparity plane: filtering must keep each plane constant
    planes = np.array([0.8, 0.2, 0.5], np.float32)
    data = np.broadcast_to(planes, (9, 9, 3)).copy()
    vol = CostVolume(data, np.ones_like(data, bool), 1)
    guide = GrayImage(np.full((9, 9), 33.0, np.float32))
    out = rbf_aggregate(vol, guide, RbfKernelParams(t_max=2))
    assert np.argmin(out.data[4, 4]) == 1
    assert np.allclose(out.data[4, 4], planes, atol=1e-5)


def test_sentinel_cells_excluded():
    data = np.full((3, 3, 2), 0.5, np.float32)
    valid = np.ones((3, 3, 2), bool)
    data[1, 1, 0] = 1.0
    valid[1, 1, 0] = False  # sentinel in the middle
    vol = CostVolume(data, valid, 1)
    guide = GrayImage(np.full((3, 3), 10.0, np.float32))
    out = rbf_aggregate(vol, guide, RbfKernelParams(t_max=1))
    # sentinel cell stays at 1.0 and neighbors are unaffected by it
    assert out.data[1, 1, 0] == 1.0
    assert not out.valid[1, 1, 0]
    assert np.allclose(out.data[0, 0, 0], 0.5, atol=1e-6)
    assert np.allclose(out.data[:, :, 1], 0.5, atol=1e-6)


def test_dimension_mismatch():
    vol = _volume(np.random.default_rng(0), 4, 4, 2)
    with pytest.raises(Exception):
        rbf_aggregate(vol, GrayImage(np.zeros((5, 5), np.float32)),
                      RbfKernelParams())


# --- instrumentation --------------------------------------------------------

def test_op_count_ratio_values():
    assert op_count_ratio(1) == pytest.approx(1.0)
    assert op_count_ratio(2) == pytest.approx((8 + 0.5 + 4) / 9)
    assert op_count_ratio(9) == pytest.approx((36 + 1 / 9 + 4) / 9)


def test_mac_counts_exact_small():
    # 3x3 image, radius 1, one plane, all valid: sum of clipped window sizes
    data = np.zeros((3, 3, 1), np.float32)
    vol = CostVolume(data, np.ones_like(data, bool), 1)
    guide = GrayImage(np.zeros((3, 3), np.float32))
    counter = OpCounter()
    bf_aggregate(vol, guide, 1, 2.0, 10.0, counter=counter)
    # per row: windows of width 2,3,2 -> 7; total 7*7 = 49
    assert counter.macs == 49
    assert counter.passes == 1


def test_mac_ratio_matches_formula_modest():
    rng = np.random.default_rng(0)
    data = rng.random((64, 64, 2)).astype(np.float32)
    vol = CostVolume(data, np.ones_like(data, bool), 1)
    guide = GrayImage((rng.random((64, 64)) * 255).astype(np.float32))
    t = 2
    cb, cr = OpCounter(), OpCounter()
    bf_aggregate(vol, guide, t, 2.0, 10.0, counter=cb)
    rbf_aggregate(vol, guide, RbfKernelParams(t_max=t), counter=cr)
    ratio = cb.macs / cr.macs
    assert ratio == pytest.approx(op_count_ratio(t), rel=0.05)
