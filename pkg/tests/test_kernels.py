"""The numba and numpy backends must agree to rounding."""
import numpy as np
import pytest

from pinchmeta import kernels
from pinchmeta.kernels import get_backend
from pinchmeta.policy import MlpSpec, init_params

nb = get_backend("numba")
npy = get_backend("numpy")


@pytest.fixture(scope="module")
def pts():
    g = np.random.default_rng(3)
    return g.uniform(0, 5, 5000), g.uniform(1, 6, 5000)


def test_backend_selection_flag():
    assert kernels.BACKEND in ("numba", "numpy")
    with pytest.raises(ValueError):
        get_backend("cuda")


def test_outage_count(pts):
    px, py = pts
    for scale in (1e3, 2e4, 5e4):
        assert nb.outage_count(px, py, 2.0, 9.0, scale, 3.0) == npy.outage_count(px, py, 2.0, 9.0,
                                                                                 scale, 3.0)


@pytest.mark.parametrize("ge,r_sec", [(0.4, 0.5), (3.0, 0.0), (1e4, 0.5), (50.0, 2.0)])
def test_secrecy_stats(pts, ge, r_sec):
    px, py = pts
    a = nb.secrecy_stats(px, py, 2.5, 9.0, 16.0 * ge, ge, r_sec)
    b = npy.secrecy_stats(px, py, 2.5, 9.0, 16.0 * ge, ge, r_sec)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_secrecy_stats_huge_snr(pts):
    # block products overflow here, exercising the direct fallback
    px, py = pts
    a = nb.secrecy_stats(px, py, 2.5, 9.0, 1e40, 1e30, 0.5)
    b = npy.secrecy_stats(px, py, 2.5, 9.0, 1e40, 1e30, 0.5)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_rates_and_kth(pts):
    px, py = pts
    np.testing.assert_allclose(nb.rates(px, py, 1.0, 9.0, 2e5), npy.rates(px, py, 1.0, 9.0, 2e5),
                               rtol=1e-14)
    for m in (1, 17, 250, 5000):
        assert nb.kth_largest_dist2(px, py, 1.0, 9.0, m)[0] == npy.kth_largest_dist2(
            px, py, 1.0, 9.0, m)[0]
    v, idx = nb.kth_largest_dist2(px, py, 1.0, 9.0, 17)
    assert (px[idx] - 1.0) ** 2 + py[idx] ** 2 + 9.0 == v


def test_secrecy_value_grad(pts):
    px, py = pts
    for power in (1e-6, 1e-3, 1.0, 1e200):
        a = nb.secrecy_value_grad(px, py, 1.0, 4.0, 2.5, 9.0, 1.6e6, power)
        b = npy.secrecy_value_grad(px, py, 1.0, 4.0, 2.5, 9.0, 1.6e6, power)
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-14)


def test_pilot_loss_grad(pts):
    px, py = pts[0][:12], pts[1][:12]
    for p in (1e-9, 1e-6, 0.3):
        a = nb.pilot_loss_grad(px, py, 1.0, 4.0, 2.0, p, 9.0, 1.6e6, 1.0, 2.0, 0.5, 0.5, 0.05)
        b = npy.pilot_loss_grad(px, py, 1.0, 4.0, 2.0, p, 9.0, 1.6e6, 1.0, 2.0, 0.5, 0.5, 0.05)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


def test_policy_kernels(pts):
    spec = MlpSpec(hidden=(16, 8))
    theta = init_params(spec, 4) + np.random.default_rng(0).normal(0, 0.3, spec.n_params)
    feat = np.array([0.1, 0.9, 0.5, 0.3, 0.2])
    np.testing.assert_allclose(nb.policy_forward(theta, spec.sizes, feat),
                               npy.policy_forward(theta, spec.sizes, feat), rtol=1e-13)
    args = (theta, spec.sizes, feat, pts[0][:8], pts[1][:8], 1.0, 4.0, 5.0, 9.0, 1.6e6,
            1.0, 2.0, 0.5, 0.5, 0.05)
    la, ga = nb.policy_loss_grad(*args)
    lb, gb = npy.policy_loss_grad(*args)
    assert la == pytest.approx(lb, rel=1e-13)
    np.testing.assert_allclose(ga, gb, rtol=1e-10, atol=1e-16)
