"""The numba loops and the numpy versions of each kernel must agree."""
import numpy as np
import pytest

from ppgglu import kernels
from ppgglu._accel import HAVE_NUMBA, backend

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable or disabled")


def test_backend_flag():
    assert backend() == ("numba" if HAVE_NUMBA else "numpy")


@needs_numba
@pytest.mark.parametrize("B, cin, cout, k, L", [(1, 1, 1, 1, 1), (3, 2, 4, 5, 17), (2, 1, 8, 11, 60)])
def test_conv_backends(B, cin, cout, k, L):
    rng = np.random.default_rng(k)
    xpad = rng.standard_normal((B, cin, L + k - 1))
    K = rng.standard_normal((cout, cin, k))
    b = rng.standard_normal(cout)
    g = rng.standard_normal((B, cout, L))
    assert np.array_equal(kernels.conv1d_forward_loops(xpad, K, b), kernels.conv1d_forward_np(xpad, K, b))
    for a, c in zip(kernels.conv1d_backward_loops(xpad, K, g), kernels.conv1d_backward_np(xpad, K, g)):
        assert np.allclose(a, c, rtol=1e-12, atol=1e-12)


@needs_numba
@pytest.mark.parametrize("T, B, H", [(1, 1, 1), (7, 3, 4), (50, 2, 16)])
def test_gru_backends(T, B, H):
    rng = np.random.default_rng(T)
    A = rng.standard_normal((T, B, 3 * H))
    U = 0.5 * rng.standard_normal((H, 3 * H))
    h0 = rng.standard_normal((B, H))
    f_nb = kernels.gru_forward_loops(A, U, h0)
    f_np = kernels.gru_forward_np(A, U, h0)
    for a, c in zip(f_nb, f_np):
        assert np.allclose(a, c, rtol=1e-12, atol=1e-13)
    dhs = rng.standard_normal((T, B, H))
    for a, c in zip(kernels.gru_backward_loops(dhs, f_np[0], h0, U, *f_np[1:]),
                    kernels.gru_backward_np(dhs, f_np[0], h0, U, *f_np[1:])):
        assert np.allclose(a, c, rtol=1e-12, atol=1e-12)


def test_gru_gates_saturate_cleanly():
    A = np.array([[[800.0, -800.0, 800.0]], [[-800.0, 800.0, -800.0]]])
    U = np.zeros((1, 3))
    for fn in ((kernels.gru_forward_np, kernels.gru_forward_loops) if HAVE_NUMBA else (kernels.gru_forward_np,)):
        hs, z, r, n, _ = fn(A, U, np.zeros((1, 1)))
        assert np.all(np.isfinite(hs)) and z[0, 0, 0] == 1.0 and z[1, 0, 0] == 0.0
        assert n[1, 0, 0] == -1.0
