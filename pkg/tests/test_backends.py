import numpy as np
import pytest

from semiscale import _accel, _loops

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def _both(fn, *args):
    prev = _accel.backend()
    try:
        _accel.set_backend("numba")
        a = fn(*args)
        _accel.set_backend("numpy")
        b = fn(*args)
    finally:
        _accel.set_backend(prev)
    return a, b


def _close(a, b, tol=1e-12):
    if isinstance(a, tuple):
        for x, y in zip(a, b):
            _close(x, y, tol)
        return
    np.testing.assert_allclose(a, b, rtol=tol, atol=tol)


@pytest.fixture
def stack(rng):
    return rng.normal(size=(2, 3, 9, 8))


@pytest.mark.parametrize("mode", [_loops.ZERO_PAD, _loops.REPLICATE, _loops.REFLECT])
def test_morphology(stack, rng, mode):
    k = rng.normal(size=(3, 5, 5))
    for sign in (1.0, -1.0):
        (oa, arga), (ob, argb) = _both(_loops.morph_forward, stack, k, mode, sign)
        _close(oa, ob)
        np.testing.assert_array_equal(arga, argb)
        g = rng.normal(size=stack.shape)
        _close(*_both(_loops.morph_backward, g, arga, 5, mode))


@pytest.mark.parametrize("mode", [_loops.ZERO_PAD, _loops.REPLICATE, _loops.REFLECT])
def test_linear_and_lse(stack, rng, mode):
    k = rng.uniform(size=(3, 3, 3))
    g = rng.normal(size=stack.shape)
    _close(*_both(_loops.linear_forward, stack, k, mode))
    _close(*_both(_loops.linear_backward, g, stack, k, mode))
    for mu in (1.5, -0.7):
        out, _ = _both(_loops.lse_forward, stack, k, mu, mode)
        _close(*_both(_loops.lse_forward, stack, k, mu, mode))
        _close(*_both(_loops.lse_backward, g, stack, k, mu, out, mode))


def test_shift(stack, rng):
    v = rng.uniform(-3, 3, size=(3, 2))
    _close(*_both(_loops.shift_forward, stack, v))
    _close(*_both(_loops.shift_backward, rng.normal(size=stack.shape), stack, v))


def test_envelopes(rng):
    f = rng.normal(size=(6, 15))
    f[f > 1.2] = np.inf
    _close(*_both(_loops.dt_rows, f, 0.7))
    x = np.sort(rng.uniform(-4, 4, 15))
    s = rng.uniform(-5, 5, 11)
    g = rng.normal(size=(6, 15))
    g[g > 1.2] = -np.inf
    _close(*_both(_loops.legendre_rows, g, x, s))
    a, b = _both(_loops.lower_hull, g[0], x)
    np.testing.assert_array_equal(a, b)


def test_set_backend_validates():
    with pytest.raises(ValueError):
        _accel.set_backend("cuda")
