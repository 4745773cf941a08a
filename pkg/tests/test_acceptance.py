"""Acceptance checks, one ``criterion`` marker per item.

The terminal summary prints one PASS/FAIL line per criterion.  Where a
literal statement does not hold on the pixel lattice, the literal form is
kept as a strict xfail next to the form that does hold.
"""
import os
import time

import numpy as np
import pytest

from oracles import finite_difference_error, tropical_margin
from semiscale.kernels import KernelSpec, sample_kernel
from semiscale.layers import Affine, BatchNorm, Convection, ScaleSpace
from semiscale.network import Network, NetworkConfig, parameter_count
from semiscale.semiconv import convolve, convolve_fast_quadratic_morphological
from semiscale.semifield import Linear, Log, Root, TropicalMax, TropicalMin
from semiscale.trainer import evaluate, train
from semiscale.verify import KINDS, fourier_convolution_property, fourier_kernel_identity, semifield_axioms

criterion = pytest.mark.criterion
TROPICAL = (TropicalMax(), TropicalMin())


# --- algebra -----------------------------------------------------------------

@criterion(1, "semifield axioms on 10 000 triples per kind in < 10 s")
def test_semifield_axioms():
    t0 = time.perf_counter()
    for kind in KINDS:
        ok, detail = semifield_axioms(kind, n=10_000, seed=2024, tol=1e-12)
        assert ok, f"{kind}: {detail}"
    assert time.perf_counter() - t0 < 10


@criterion(2, "frequency-domain kernel equals exp(|w|^alpha t), tolerance 1e-12")
@pytest.mark.parametrize("kind,alpha", [(k, 2.0) for k in KINDS] + [(k, a) for k in TROPICAL for a in (1.5, 3.0)],
                         ids=lambda v: str(v))
def test_fourier_kernel_identity(kind, alpha):
    ok, detail = fourier_kernel_identity(kind, alpha, n=100, seed=11, tol=1e-12)
    assert ok, detail


# --- semigroup ---------------------------------------------------------------

def _quadratic_twice(kind, f):
    half = convolve_fast_quadratic_morphological(kind, 0.5, np.eye(2), f)
    return convolve_fast_quadratic_morphological(kind, 0.5, np.eye(2), half), \
        convolve_fast_quadratic_morphological(kind, 1.0, np.eye(2), f)


@criterion(3, "semigroup k_s * k_t = k_(s+t) on 64x64 fields")
@pytest.mark.parametrize("kind", TROPICAL, ids=str)
def test_tropical_semigroup_on_even_sublattice(kind):
    # the midpoint of two even lattice points is a lattice point, so the
    # two half steps meet the full step exactly there
    rng = np.random.default_rng(3)
    f = rng.uniform(-5, 5, (64, 64))
    odd = (np.arange(64)[:, None] % 2 == 1) | (np.arange(64)[None, :] % 2 == 1)
    f[odd] = kind.zero
    two, one = _quadratic_twice(kind, f)
    err = np.max(np.abs(two[::2, ::2] - one[::2, ::2]))
    assert err <= 1e-10


@criterion(3, "semigroup k_s * k_t = k_(s+t) on 64x64 fields")
@pytest.mark.xfail(strict=True, reason="sampled tropical kernels compose to k_1 only at even offsets")
@pytest.mark.parametrize("kind", TROPICAL, ids=str)
def test_tropical_semigroup_full_lattice_literal(kind):
    f = np.random.default_rng(3).uniform(-5, 5, (64, 64))
    two, one = _quadratic_twice(kind, f)
    assert np.max(np.abs(two - one)) <= 1e-10


def _smooth_semigroup_error(kind, discrete):
    rng = np.random.default_rng(5)
    f = rng.uniform(0.1, 1.0, (64, 64)) if not isinstance(kind, Log) else rng.uniform(-2, 2, (64, 64))
    r = 8
    half = sample_kernel(KernelSpec(kind, 2.0, 0.5), radius=r, discrete=discrete)
    full = sample_kernel(KernelSpec(kind, 2.0, 1.0), radius=r, discrete=discrete)
    two = convolve(kind, half, convolve(kind, half, f))
    one = convolve(kind, full, f)
    inner = (slice(2 * r, -2 * r),) * 2
    a, b = kind.to_reference(two[inner]), kind.to_reference(one[inner])
    return float(np.max(np.abs(a - b) / np.abs(b)))


SMOOTH = (Linear(), Root(2.0), Log(1.0))


@criterion(3, "semigroup k_s * k_t = k_(s+t) on 64x64 fields")
@pytest.mark.parametrize("kind", SMOOTH, ids=str)
def test_smooth_semigroup_lattice_heat_kernel(kind):
    t0 = time.perf_counter()
    assert _smooth_semigroup_error(kind, discrete=True) <= 1e-3
    assert time.perf_counter() - t0 < 10


@criterion(3, "semigroup k_s * k_t = k_(s+t) on 64x64 fields")
@pytest.mark.xfail(strict=True, reason="sampling the continuous Gaussian at t=0.5 costs about 1% relative error")
@pytest.mark.parametrize("kind", SMOOTH, ids=str)
def test_smooth_semigroup_sampled_gaussian_literal(kind):
    assert _smooth_semigroup_error(kind, discrete=False) <= 1e-3


# --- transforms and integrals --------------------------------------------------

@criterion(4, "transform of a convolution is the product of transforms")
@pytest.mark.parametrize("kind", [Linear(), Root(2.0), Log(1.0), TropicalMax(), TropicalMin()], ids=str)
def test_convolution_property(kind):
    for seed in range(3):
        ok, detail = fourier_convolution_property(kind, n=32, seed=seed)
        assert ok, detail


@criterion(5, "tropical integral of 1000 bounded fields equals sup/inf")
@pytest.mark.parametrize("kind", TROPICAL, ids=str)
def test_tropical_integral_is_extremum(kind):
    rng = np.random.default_rng(17)
    pick = max if isinstance(kind, TropicalMax) else min
    for _ in range(1000):
        # simple function: a few levels on random sets; its extremum is the extremal attained level
        levels = rng.uniform(-1e3, 1e3, int(rng.integers(1, 8)))
        shape = tuple(int(s) for s in rng.integers(1, 20, size=2))
        labels = rng.integers(0, len(levels), size=shape)
        field = levels[labels]
        expected = pick(float(levels[i]) for i in set(labels.ravel().tolist()))
        assert kind.integrate(field, cell_area=float(rng.uniform(0.01, 10))) == expected


# --- gradients -----------------------------------------------------------------

def _gradient_instances(name, rng):
    x = rng.normal(size=(1, 2, 12, 12))
    if name == "convection":
        return Convection(2, rng=rng), x
    if name == "affine":
        return Affine(2, 3, rng=rng), x
    if name == "batchnorm":
        bn = BatchNorm(2)
        bn.params["gamma"][:] = rng.uniform(0.5, 2, 2)
        bn.params["beta"][:] = rng.normal(size=2)
        return bn, x
    kind = {"linear": Linear(), "root": Root(2.0), "log": Log(1.0), "tmax": TropicalMax(), "tmin": TropicalMin()}[name]
    if isinstance(kind, Root):
        x = np.abs(x) + 0.5
    layer = ScaleSpace(2, kind, rng=rng)
    if kind in TROPICAL:
        sign = 1.0 if isinstance(kind, TropicalMax) else -1.0
        while tropical_margin(x, layer.kernels()[0], sign) <= 2e-3:  # resample near-ties
            layer, x = ScaleSpace(2, kind, rng=rng), rng.normal(size=x.shape)
    return layer, x


@criterion(6, "analytic gradients match central differences, 10 instances per sublayer, < 60 s")
def test_gradient_suite():
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    worst = {}
    for name in ("convection", "affine", "batchnorm", "linear", "root", "log", "tmax", "tmin"):
        for i in range(10):
            layer, x = _gradient_instances(name, rng)
            eps = (1e-4,) if name in ("tmax", "tmin") else (1e-3, 1e-4)
            worst[name] = max(worst.get(name, 0.0), finite_difference_error(layer, x, eps_list=eps, seed=i))
    elapsed = time.perf_counter() - t0
    assert max(worst.values()) <= 1e-3, worst
    assert elapsed < 60, f"{elapsed:.1f} s"


# --- equivariance ----------------------------------------------------------------

MENU = ("convection", "linear", "root:2", "log:1", "tmax", "tmin")


def _pde_layer(rng, isotropic=False):
    cfg = NetworkConfig(layers=1, channels=3, in_channels=3, menu=MENU, seed=int(rng.integers(1 << 30)))
    blocks = [sub for name, sub in Network(cfg).blocks if name.startswith("layer0")]
    for sub in blocks:
        if isinstance(sub, Convection) and isotropic:
            sub.params["v"][:] = 0.0
        if isinstance(sub, ScaleSpace) and isotropic:
            sub.params["H"][:] = rng.uniform(0.7, 1.3, 3)[:, None, None] * np.eye(2)
        if isinstance(sub, BatchNorm):
            sub.buffers["mean"] = rng.normal(size=3)
            sub.buffers["var"] = rng.uniform(0.5, 2, 3)

    def apply(x):
        for sub in blocks:
            x = sub.forward(x, training=False)
        return x

    return apply


@criterion(7, "a full PDE layer commutes with translations and 90 degree rotations")
def test_translation_equivariance():
    rng = np.random.default_rng(7)
    margin = 16  # shift plus the reach of every sublayer
    for _ in range(10):
        layer = _pde_layer(rng)
        x = rng.uniform(0.1, 1.0, (1, 3, 48, 48))
        shift = tuple(int(s) for s in rng.integers(-3, 4, 2))
        a = layer(np.roll(x, shift, axis=(2, 3)))
        b = np.roll(layer(x), shift, axis=(2, 3))
        inner = (slice(None), slice(None), slice(margin, -margin), slice(margin, -margin))
        np.testing.assert_array_equal(a[inner], b[inner])


@criterion(7, "a full PDE layer commutes with translations and 90 degree rotations")
def test_rotation_equivariance_isotropic_metrics():
    rng = np.random.default_rng(8)
    for _ in range(10):
        layer = _pde_layer(rng, isotropic=True)
        x = rng.uniform(0.1, 1.0, (1, 3, 20, 20))
        for k in (1, 2, 3):
            a = layer(np.rot90(x, k, axes=(2, 3)))
            b = np.rot90(layer(x), k, axes=(2, 3))
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


# --- learning --------------------------------------------------------------------

@criterion(8, "4x12 PDE-CNN reaches test Dice >= 0.85 within 3000 batches and 15 min; 5280 parameters")
def test_reference_parameter_count():
    cfg = NetworkConfig(layers=6, channels=24, in_channels=3, menu=("convection", "tmax", "tmin"))
    assert parameter_count(cfg) == 5280
    assert Network(cfg).n_params == 5280


@pytest.mark.slow
@criterion(8, "4x12 PDE-CNN reaches test Dice >= 0.85 within 3000 batches and 15 min; 5280 parameters")
def test_synthetic_vessels_dice(vessels_seed7):
    train_set, test_set = vessels_seed7
    cfg = NetworkConfig(layers=4, channels=12, menu=("convection", "tmax", "tmin"))
    t0 = time.perf_counter()
    state = train(cfg, train_set, test_set, max_batches=3000, time_limit=900, target_dice=0.85)
    elapsed = time.perf_counter() - t0
    print(f"best test dice {state.best_dice:.4f} at batch {state.best_batch}, {elapsed:.0f} s")
    assert state.best_dice >= 0.85
    assert state.best_batch <= 3000 and elapsed <= 900


FRACTIONS = (0.05, 0.2, 1.0)
SEEDS = (0, 1, 2)
EFFICIENCY_BATCHES = 3000


def _subset(train_set, fraction, seed):
    if fraction == 1.0:
        return train_set
    n = len(train_set[0])
    keep = np.sort(np.random.default_rng(seed).choice(n, int(round(fraction * n)), replace=False))
    return train_set[0][keep], train_set[1][keep]


@pytest.fixture(scope="module")
def efficiency_runs(vessels_seed7):
    train_set, test_set = vessels_seed7
    pde = {}
    for fraction in FRACTIONS:
        for seed in SEEDS:
            state = train(NetworkConfig(seed=seed), _subset(train_set, fraction, seed), test_set,
                          max_batches=EFFICIENCY_BATCHES)
            pde[fraction, seed] = state.best_dice
    affine = [train(NetworkConfig(seed=seed, menu=()), train_set, test_set, max_batches=EFFICIENCY_BATCHES).best_dice
              for seed in SEEDS]
    means = {f: float(np.mean([pde[f, s] for s in SEEDS])) for f in FRACTIONS}
    for f in FRACTIONS:
        print(f"fraction {f:>4}: " + " ".join(f"{pde[f, s]:.4f}" for s in SEEDS) + f"  mean {means[f]:.4f}")
    print("affine-only at 100%: " + " ".join(f"{d:.4f}" for d in affine))
    return means, float(np.mean(affine))


@pytest.mark.slow
@criterion(9, "mean best Dice non-decreasing in training fraction; 5% PDE-CNN beats affine-only at 100%")
def test_data_efficiency_trend(efficiency_runs):
    means, _ = efficiency_runs
    values = [means[f] for f in FRACTIONS]
    assert all(a <= b for a, b in zip(values, values[1:])), means


@pytest.mark.slow
@criterion(9, "mean best Dice non-decreasing in training fraction; 5% PDE-CNN beats affine-only at 100%")
def test_small_pde_beats_full_affine(efficiency_runs):
    means, affine = efficiency_runs
    assert means[0.05] > affine, (means, affine)


# --- optional fundus data ----------------------------------------------------------

DRIVE = os.environ.get("SEMISCALE_DRIVE")


@criterion(10, "DRIVE ingestion: 2880 patches, about 2409 after filtering")
@pytest.mark.skipif(not DRIVE, reason="set SEMISCALE_DRIVE to the DRIVE root to run")
def test_drive_ingestion_and_run():
    from semiscale import io as sio

    images, fov, ann = sio.load_drive(DRIVE, "training")
    patches = sio.extract_patches(images, fov, ann)
    assert patches["total"] == 2880
    kept = len(patches["images"])
    print(f"{kept} patches after filtering")
    assert abs(kept - 2409) <= 0.02 * 2409
    t_img, t_fov, t_ann = sio.load_drive(DRIVE, "test")
    test = sio.extract_patches(t_img, t_fov, t_ann)
    cfg = NetworkConfig(layers=6, channels=24, in_channels=3, menu=("convection", "tmax", "tmin"))
    x = np.moveaxis(patches["images"], -1, 1)
    state = train(cfg, (x, patches["annotations"]), (np.moveaxis(test["images"], -1, 1), test["annotations"]),
                  max_batches=int(os.environ.get("SEMISCALE_DRIVE_BATCHES", "500")))
    print(f"DRIVE test dice {evaluate(state.network, np.moveaxis(test['images'], -1, 1), test['annotations']):.4f}")
