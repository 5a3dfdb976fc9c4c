import numpy as np
import pytest

from bm3dstack import prefilter as pf


def test_constant_frame_unchanged():
    frame = np.full((64, 64), 5.0)
    out = pf.lowpass(frame, pf.LowPassSpec(sigma_lp=95.0))
    assert np.abs(out - frame).max() < 1e-10


def test_wide_passband_is_identity():
    rng = np.random.default_rng(0)
    frame = rng.normal(size=(32, 32))
    # Max frequency magnitude on the 256-unit scale is 128*sqrt(2) ~ 181.
    out = pf.lowpass(frame, pf.LowPassSpec(sigma_lp=400.0))
    assert np.abs(out - frame).max() < 1e-10


def test_white_noise_variance_matches_parseval_oracle():
    rng = np.random.default_rng(1)
    spec = pf.LowPassSpec(sigma_lp=95.0)
    gains = pf.filter_gains(256, 256, spec)
    # Parseval: filtering white noise scales the expected non-DC energy by
    # mean(H^2) over the non-DC bins.
    expected = float(np.sum(gains.ravel()[1:] ** 2) / (gains.size - 1))
    frame = rng.normal(size=(256, 256))
    out = pf.lowpass(frame, spec)
    ratio = out.var() / frame.var()
    assert ratio < 1.0
    assert abs(ratio - expected) < 0.05


def test_linearity_and_non_expansive():
    rng = np.random.default_rng(2)
    spec = pf.LowPassSpec(sigma_lp=60.0)
    f, g = rng.normal(size=(2, 48, 48))
    lhs = pf.lowpass(2.5 * f - 1.5 * g, spec)
    rhs = 2.5 * pf.lowpass(f, spec) - 1.5 * pf.lowpass(g, spec)
    assert np.abs(lhs - rhs).max() < 1e-9
    assert np.linalg.norm(pf.lowpass(f, spec)) <= np.linalg.norm(f) + 1e-12


def test_gain_profile_flat_then_decaying():
    spec = pf.LowPassSpec(sigma_lp=100.0)
    gains = pf.filter_gains(256, 256, spec)
    freqs = np.fft.fftfreq(256) * 256
    gy, gx = np.meshgrid(freqs, freqs, indexing="ij")
    mag = np.hypot(gy, gx)
    assert np.all(gains[mag < 50.0] == 1.0)
    # The rolloff is continuous: exactly 1 at the passband edge, < 1 beyond.
    assert np.all(gains[mag >= 50.0] <= 1.0)
    assert np.all(gains[mag > 51.0] < 1.0)
    assert np.all(gains > 0.0)


def test_separable_variant_differs_but_agrees_in_passband():
    spec_r = pf.LowPassSpec(sigma_lp=80.0, shape="radial")
    spec_s = pf.LowPassSpec(sigma_lp=80.0, shape="separable")
    gr = pf.filter_gains(128, 128, spec_r)
    gs = pf.filter_gains(128, 128, spec_s)
    assert not np.allclose(gr, gs)
    assert gr[0, 0] == gs[0, 0] == 1.0


def test_sigma_rescales_with_grid_size():
    # Same normalized cutoff: sigma interpreted on the 256 grid covers the
    # same fraction of a 128 grid.
    spec = pf.LowPassSpec(sigma_lp=64.0)
    g256 = pf.filter_gains(256, 256, spec)
    g128 = pf.filter_gains(128, 128, spec)
    assert np.isclose(g256[0, 32], g128[0, 16])


def test_stack_helper_matches_per_frame():
    rng = np.random.default_rng(3)
    stack = rng.normal(size=(3, 32, 32))
    spec = pf.LowPassSpec(sigma_lp=70.0)
    out = pf.lowpass_stack(stack, spec)
    for f in range(3):
        assert np.abs(out[f] - pf.lowpass(stack[f], spec)).max() < 1e-12


def test_spec_validation():
    with pytest.raises(ValueError):
        pf.LowPassSpec(sigma_lp=0.0)
    with pytest.raises(ValueError):
        pf.LowPassSpec(sigma_lp=10.0, shape="boxcar")
    with pytest.raises(ValueError):
        pf.lowpass(np.zeros((2, 3, 4)), pf.LowPassSpec(sigma_lp=10.0))
