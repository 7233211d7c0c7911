import numpy as np
import pytest

from d3stereo.core import DisparityMap, GrayImage, PipelineConfig, UNKNOWN
from d3stereo.errors import DegenerateFit, InsufficientSeeds
from d3stereo.perspective import (apply_pt, compose_disparity, fit_road_model,
                                  to_residual)
from d3stereo.pipeline import run_pipeline
from d3stereo.synth import linear_road_scene


def _dense_linear_map(h, w, a0, a1, level_scale=1, level=1):
    """Decisive map holding round(a0 + a1 * v) at every pixel (map units)."""
    v = np.arange(h)
    d = np.rint((a0 + a1 * (v * level_scale)) / level_scale).astype(np.int32)
    states = np.tile(d[:, None], (1, w))
    return DisparityMap(states, level)


def test_fit_exact_plane():
    # integer-valued planted model so map quantization is exact
    m = _dense_linear_map(64, 32, 4.0, 1.0)
    model = fit_road_model(m, level_scale=1)
    assert model.alpha0 == pytest.approx(4.0, abs=1e-6)
    assert model.alpha1 == pytest.approx(1.0, abs=1e-6)
    assert model.inlier_fraction == 1.0


def test_fit_recovers_at_level_scale():
    # disparities stored at level k map back to full resolution
    m = _dense_linear_map(32, 16, 4.0, 0.2, level_scale=4, level=3)
    model = fit_road_model(m, level_scale=4)
    assert model.alpha0 == pytest.approx(4.0, abs=0.5)
    assert model.alpha1 == pytest.approx(0.2, abs=0.02)


def test_fit_with_outliers(rng):
    m = _dense_linear_map(64, 32, 3.0, 1.0)
    v, u = np.nonzero(m.states >= 0)
    pick = rng.choice(v.size, v.size // 10, replace=False)
    m.states[v[pick], u[pick]] += 8
    model = fit_road_model(m, level_scale=1)
    assert model.alpha0 == pytest.approx(3.0, abs=0.1)
    assert model.alpha1 == pytest.approx(1.0, abs=0.01)
    assert model.inlier_fraction < 1.0


def test_fit_degenerate_single_row():
    states = np.full((10, 60), UNKNOWN, np.int32)
    states[4, :] = 7
    with pytest.raises(DegenerateFit):
        fit_road_model(DisparityMap(states, 1), 1)


def test_fit_insufficient_seeds():
    states = np.full((10, 20), UNKNOWN, np.int32)
    states[1, :10] = 3
    with pytest.raises(InsufficientSeeds):
        fit_road_model(DisparityMap(states, 1), 1)


def test_apply_pt_identity():
    img = GrayImage(np.arange(24, dtype=np.float32).reshape(4, 6))
    from d3stereo.perspective import RoadDisparityModel
    model = RoadDisparityModel(0.0, 0.0, 1.0)
    out, shifts = apply_pt(img, model, tau_pt=0)
    assert np.array_equal(out.data, img.data)
    assert out.valid_mask().all()
    assert np.all(shifts == 0)


def test_apply_pt_constant_shift():
    img = GrayImage(np.arange(40, dtype=np.float32).reshape(4, 10))
    from d3stereo.perspective import RoadDisparityModel
    model = RoadDisparityModel(4.0, 0.0, 1.0)
    out, shifts = apply_pt(img, model, tau_pt=0)
    assert np.all(shifts == 4)
    assert np.array_equal(out.data[:, 4:], img.data[:, :6])
    assert not out.valid_mask()[:, :4].any()
    assert out.valid_mask()[:, 4:].all()
    # a true-d=5 scene searched against the shifted right concentrates at 1
    # (content moved right by 4: residual = 5 - 4)


def test_apply_pt_negative_shift():
    img = GrayImage(np.arange(30, dtype=np.float32).reshape(3, 10))
    from d3stereo.perspective import RoadDisparityModel
    model = RoadDisparityModel(2.0, 0.0, 1.0)
    out, shifts = apply_pt(img, model, tau_pt=5)
    assert np.all(shifts == -3)
    assert np.array_equal(out.data[:, :7], img.data[:, 3:])
    assert not out.valid_mask()[:, 7:].any()


def test_to_residual_and_compose_roundtrip():
    m = _dense_linear_map(16, 12, 6.0, 0.0)
    table = np.full(16, 4.0, np.float32)
    resid = to_residual(m, table, level_scale=1)
    assert (resid.states[m.states >= 0] == 2).all()
    raster = resid.states.astype(np.float32)
    composed = compose_disparity(raster, table)
    assert np.array_equal(composed, m.states.astype(np.float32))


def test_to_residual_negative_marks_unknown():
    m = _dense_linear_map(8, 8, 2.0, 0.0)
    table = np.full(8, 5.0, np.float32)
    resid = to_residual(m, table, 1)
    assert (resid.states == UNKNOWN).all()


def test_pt_pipeline_roundtrip_and_range_reduction():
    left, right, gt = linear_road_scene(128, 128, 3.0, 0.05, seed=11)
    cfg = PipelineConfig(k=3, d_max_full=16, use_pt=True, tau_pt=8)
    res = run_pipeline(left, right, cfg, gt=gt)
    assert res.shift_table is not None
    assert res.report.epe <= 0.5
    # residuals = final disparity minus the per-row shift span few values
    resid = res.raster - res.shift_table[:, None]
    resid = resid[np.isfinite(resid)]
    distinct = np.unique(np.rint(resid))
    assert distinct.size <= 2 * cfg.tau + 3
