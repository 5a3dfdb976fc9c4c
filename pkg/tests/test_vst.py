import numpy as np
import pytest

from bm3dstack import vst


def test_forward_known_values():
    assert abs(vst.anscombe_forward(np.array(0.0)) - 1.224745) < 1e-6
    assert abs(vst.anscombe_forward(np.array(1.0)) - 2.345208) < 1e-6


def test_forward_rejects_negative():
    with pytest.raises(ValueError):
        vst.anscombe_forward(np.array([-0.5]))


def test_algebraic_inverse_roundtrip():
    z = np.linspace(0.0, 50.0, 101)
    d = vst.anscombe_forward(z)
    assert np.abs((d / 2.0) ** 2 - 3.0 / 8.0 - z).max() < 1e-12


def test_forward_strictly_monotone():
    z = np.linspace(0.0, 100.0, 500)
    assert np.all(np.diff(vst.anscombe_forward(z)) > 0)


def test_rescale_examples():
    stack = np.array([[[2.0, 4.0], [6.0, 10.0]]])
    scaled, state = vst.rescale_to_unit(stack)
    assert scaled.min() == 0.0 and scaled.max() == 1.0
    assert state.sigma_rescaled == pytest.approx(0.125)
    back = vst.rescale_back(scaled, state)
    assert np.abs(back - stack).max() < 1e-12

    with pytest.raises(ValueError):
        vst.rescale_to_unit(np.full((2, 4, 4), 3.0))


def test_rescale_uses_global_minmax_across_frames():
    stack = np.stack([np.full((4, 4), 1.0), np.full((4, 4), 3.0)])
    scaled, state = vst.rescale_to_unit(stack)
    assert scaled[0].max() == 0.0 and scaled[1].min() == 1.0
    assert state.sigma_rescaled == pytest.approx(0.5)


def test_inverse_cf_domain_edge_and_asymptote():
    # At the image of zero counts the closed form evaluates to zero.
    edge = vst.exact_unbiased_inverse_cf(np.array(vst.ANSCOMBE_MIN))
    assert abs(edge) < 0.01
    # Values below the domain edge clamp to the same result.
    assert vst.exact_unbiased_inverse_cf(np.array(0.3)) == edge

    out = float(vst.exact_unbiased_inverse_cf(np.array(20.0)))
    asymptote = 20.0 ** 2 / 4.0 - 1.0 / 8.0
    assert abs(out - asymptote) / asymptote < 0.005


def test_inverse_cf_monotone_past_domain_edge():
    d = np.linspace(vst.ANSCOMBE_MIN, 60.0, 2000)
    assert np.all(np.diff(vst.exact_unbiased_inverse_cf(d)) >= 0)


def test_unbiasedness_monte_carlo():
    # The exact unbiased inverse maps the mean of the stabilized draws
    # back to the Poisson rate.
    rng = np.random.default_rng(123)
    for lam in (1.0, 2.0, 5.0, 10.0, 20.0):
        draws = rng.poisson(lam, size=1_000_000).astype(np.float64)
        stabilized_mean = vst.anscombe_forward(draws).mean()
        recovered = float(vst.exact_unbiased_inverse_cf(np.array(stabilized_mean)))
        assert abs(recovered - lam) / lam < 0.02, (lam, recovered)


def test_stabilized_std_near_unity():
    rng = np.random.default_rng(321)
    for lam in (4.0, 6.0, 10.0, 20.0):
        draws = rng.poisson(lam, size=100_000).astype(np.float64)
        std = vst.anscombe_forward(draws).std()
        assert 0.9 <= std <= 1.1, (lam, std)


def test_state_validation():
    with pytest.raises(ValueError):
        vst.VstState(scale_min=1.0, scale_max=1.0)
