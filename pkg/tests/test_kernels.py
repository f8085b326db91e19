import numpy as np
import pytest
from scipy.signal import convolve2d

from radarbev import _kernels_py, kernels
from radarbev.core import GaussianKernel


def _random_case(seed, shape=(40, 37), sigma=2.0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=shape), GaussianKernel(sigma)


@pytest.mark.parametrize("seed,sigma", [(0, 0.5), (1, 1.0), (2, 2.0), (3, 3.0)])
def test_conv_matches_dense_2d_oracle(seed, sigma):
    # independent route: full 2-D kernel through scipy's direct convolution
    x, kernel = _random_case(seed, sigma=sigma)
    ours = kernels.gaussian_conv2d(x, kernel.weights_1d())
    ref = convolve2d(x, kernel.weights, mode="same", boundary="fill")
    assert np.allclose(ours, ref, atol=1e-10, rtol=0)


def test_conv_zero_padding_at_borders():
    kernel = GaussianKernel(1.0)
    x = np.zeros((9, 9))
    x[0, 0] = 1.0
    out = kernels.gaussian_conv2d(x, kernel.weights_1d())
    # mass falls off the edge: border blob keeps less than full kernel mass
    assert out.sum() < kernel.weight_sum
    assert out[0, 0] == pytest.approx(1.0)


def test_backends_bitwise_identical():
    compiled = pytest.importorskip("radarbev._kernels")
    for seed, sigma in [(0, 1.0), (1, 2.0), (2, 3.0)]:
        x, kernel = _random_case(seed, shape=(65, 33), sigma=sigma)
        a = compiled.gaussian_conv2d(x, kernel.weights_1d())
        b = _kernels_py.gaussian_conv2d(x, kernel.weights_1d())
        assert np.array_equal(a, b)
        rng = np.random.default_rng(seed + 10)
        cx, cy = rng.normal(size=21), rng.normal(size=17)
        px, py = rng.normal(size=9), rng.normal(size=9)
        assert np.array_equal(compiled.nearest_site_labels(cx, cy, px, py),
                              _kernels_py.nearest_site_labels(cx, cy, px, py))


def test_adjoint_identity():
    # <K*x, y> == <x, K*y> validates the gradient of the data term
    rng = np.random.default_rng(5)
    for sigma in (1.0, 2.0, 3.0):
        kernel = GaussianKernel(sigma)
        x = rng.normal(size=(33, 47))
        y = rng.normal(size=(33, 47))
        kx = kernels.gaussian_conv2d(x, kernel.weights_1d())
        ky = kernels.gaussian_conv2d(y, kernel.weights_1d())
        lhs = float(np.sum(kx * y))
        rhs = float(np.sum(x * ky))
        assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs))


def test_nearest_site_labels_brute_force():
    rng = np.random.default_rng(9)
    cx = rng.uniform(-1, 1, size=16)
    cy = rng.uniform(-1, 1, size=12)
    px = rng.uniform(-1, 1, size=7)
    py = rng.uniform(-1, 1, size=7)
    labels = kernels.nearest_site_labels(cx, cy, px, py)
    for i in range(12):
        for j in range(16):
            d2 = [(cx[j] - px[k]) ** 2 + (cy[i] - py[k]) ** 2 for k in range(7)]
            assert labels[i, j] == int(np.argmin(d2))


def test_nearest_site_tie_breaks_to_lowest_index():
    # two identical sites: every cell must label the first one
    labels = kernels.nearest_site_labels(
        np.array([0.0, 1.0]), np.array([0.0]),
        np.array([0.5, 0.5]), np.array([0.0, 0.0]))
    assert (labels == 0).all()


def test_nearest_site_requires_sites():
    with pytest.raises(ValueError):
        kernels.nearest_site_labels(np.zeros(2), np.zeros(2),
                                    np.zeros(0), np.zeros(0))
