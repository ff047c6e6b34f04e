import math

import numpy as np
import pytest

import sketchflim as sf


@pytest.fixture
def axis():
    return sf.TimeAxis.from_window(256, 10.0)


@pytest.fixture
def irf():
    return sf.IrfSpec(0.1, 1.0)


def test_axis_and_irf(axis, irf):
    c = axis.centers()
    assert c.shape == (256,)
    assert c[1] - c[0] == pytest.approx(10.0 / 256)
    v = sf.build_irf(irf, axis)
    assert v.sum() == pytest.approx(1.0)
    assert c[np.argmax(v)] == pytest.approx(1.0, abs=axis.bin_width)


def test_model_curve_against_numpy_convolution(axis, irf):
    v = sf.build_irf(irf, axis)
    g = sf.model_curve(sf.MonoParams(2.0), v, axis)
    lag = np.exp(-np.arange(256) * axis.bin_width / 2.0)
    ref = np.convolve(v, lag)[:256]
    np.testing.assert_allclose(g, ref / ref.max(), rtol=1e-10, atol=1e-14)


def test_mean_lifetime():
    assert sf.mean_lifetime(sf.BiParams(1.0, 4.0, 0.5)) == pytest.approx(2.5)
    assert sf.mean_lifetime(sf.MonoParams(3.0)) == 3.0


def test_trials_and_fits(axis, irf):
    ranges = sf.ParamRanges.bi()
    data = sf.generate_trials(ranges, 500.0, irf, axis, 8, 1)
    assert data["counts"].shape == (8, 256)
    knots = sf.fisher_knots(ranges, 500.0, irf, axis, 4, n_grid=100)
    assert knots.shape == (6,)
    assert np.all(np.diff(knots) > 0)
    for method in ("sketch", "nlsf", "mle"):
        r = sf.fit(data["counts"][0], ranges, irf, axis, method=method, knots=knots)
        assert 0.2 <= r.mean_tau <= 8.0


def test_noiseless_recovery(axis, irf):
    ranges = sf.ParamRanges.mono()
    g = sf.model_curve(sf.MonoParams(1.7), sf.build_irf(irf, axis), axis)
    counts = np.rint(1e6 * g).astype(np.uint64)
    r = sf.fit(counts, ranges, irf, axis, method="mle")
    assert r.params.tau == pytest.approx(1.7, abs=1e-3)


def test_sketch_paths_agree(axis):
    knots = sf.uniform_knots(axis, 4)
    counts = np.arange(256, dtype=np.uint64) % 7
    times = sf.histogram_to_timestamps(counts, axis)
    a = sf.sketch_timestamps(knots, times)
    b = sf.sketch_histogram(knots, counts, axis)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_phasor_single_photon():
    g, s = sf.phasor(np.array([2.5]), 10.0)
    assert g == pytest.approx(0.0, abs=1e-12)
    assert s == pytest.approx(1.0)


def test_metrics():
    m = sf.scalar_metrics(np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0, 4.0]))
    assert m["mae"] == pytest.approx(1.0 / 3.0)
    x = np.add.outer(np.arange(9.0), np.arange(9.0))
    assert sf.ssim(x, x) == pytest.approx(1.0)


def test_crb_scaling(axis, irf):
    ranges = sf.ParamRanges.bi()
    p = sf.BiParams(1.0, 4.0, 0.5)
    lo = sf.crb_mean_tau(p, 100.0, ranges, irf, axis)
    hi = sf.crb_mean_tau(p, 400.0, ranges, irf, axis)
    assert hi / lo == pytest.approx(0.5, rel=1e-3)


def test_errors_are_raised(axis, irf):
    with pytest.raises(sf.SketchflimError):
        sf.uniform_knots(axis, 1)
    with pytest.raises(sf.SketchflimError):
        sf.fit(np.zeros(256, dtype=np.uint64), sf.ParamRanges.mono(), irf, axis, method="sketch")
    with pytest.raises(sf.SketchflimError):
        sf.parse_config("[sketch]\ncolour = red\n")
    assert issubclass(sf.SketchflimError, ValueError)


def test_config_round_trip():
    text = sf.parse_config("[sketch]\nm = 8\n")
    assert "m = 8" in text
