import numpy as np

from semiscale.data import MASK_FRACTION_RANGE, generate_synthetic_vessels


def test_same_seed_same_data():
    a = generate_synthetic_vessels(11, 5)
    b = generate_synthetic_vessels(11, 5)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    c = generate_synthetic_vessels(12, 5)
    assert not np.array_equal(a[0], c[0])


def test_shapes_and_ranges():
    x, m = generate_synthetic_vessels(0, 200)
    assert x.shape == m.shape == (200, 64, 64)
    assert m.dtype == np.uint8 and set(np.unique(m)) <= {0, 1}
    assert x.min() >= 0 and x.max() <= 1
    frac = m.mean(axis=(1, 2))
    assert np.all((frac >= MASK_FRACTION_RANGE[0]) & (frac <= MASK_FRACTION_RANGE[1]))


def test_vessels_are_darker():
    x, m = generate_synthetic_vessels(1, 50)
    assert x[m == 1].mean() < x[m == 0].mean() - 0.1


def test_zero_curves_blank_masks():
    x, m = generate_synthetic_vessels(2, 4, curves=0)
    assert not m.any()
    assert x.shape == (4, 64, 64)


def test_other_sizes():
    x, m = generate_synthetic_vessels(3, 2, size=32, curves=(1, 2))
    assert x.shape == (2, 32, 32)
