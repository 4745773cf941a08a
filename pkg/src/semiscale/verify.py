"""Property checks behind ``semiscale verify``.

Each check returns ``(passed, detail)``; :func:`run` collects them into
report rows ``(suite, check, passed, detail, seconds)``.
"""
from __future__ import annotations

import time

import numpy as np

from .kernels import KernelSpec, SampledKernel, fourier_kernel_value, sample_kernel, time_scale
from .layers import Affine, Convection, ScaleSpace
from .semiconv import convolve, convolve_fast_quadratic_morphological
from .semifield import Linear, Log, Root, TropicalMax, TropicalMin
from .transforms import grid_positions, semifield_fourier

SUITES = ("core", "kernels", "transforms", "conv", "layers")

KINDS = (Linear(), Root(2.0), Root(0.5), Root(-1.0), Log(1.0), Log(-1.0), TropicalMax(), TropicalMin())


def sample_values(kind, rng, n, zero_fraction=0.0):
    """Random valid values of moderate size, optionally mixed with the semifield zero."""
    if isinstance(kind, Linear):
        x = rng.uniform(-3, 3, n)
    elif isinstance(kind, Root):
        x = rng.uniform(0.2, 2.0, n)
    else:
        x = rng.uniform(-2, 2, n)
    if zero_fraction:
        x = np.where(rng.random(n) < zero_fraction, kind.zero, x)
    return x


def semifield_axioms(kind, n=10_000, seed=0, tol=1e-12):
    """Largest metric violation over the semifield axioms on ``n`` random triples."""
    rng = np.random.default_rng(seed)
    a, b, c = (sample_values(kind, rng, n, 0.05) for _ in range(3))
    add, mul, d = kind.add, kind.mul, kind.metric
    one = np.full(n, kind.one)
    zero = np.full(n, kind.zero)
    checks = {
        "add_assoc": d(add(add(a, b), c), add(a, add(b, c))),
        "add_comm": d(add(a, b), add(b, a)),
        "add_identity": d(add(a, zero), a),
        "mul_assoc": d(mul(mul(a, b), c), mul(a, mul(b, c))),
        "mul_comm": d(mul(a, b), mul(b, a)),
        "mul_identity": d(mul(a, one), a),
        "distributive": d(mul(a, add(b, c)), add(mul(a, b), mul(a, c))),
        "zero_absorbs": d(mul(a, zero), zero),
    }
    nz = a != kind.zero
    checks["inverse"] = d(mul(a[nz], kind.inverse(a[nz])), one[nz])
    worst = {k: float(np.nanmax(np.where(np.isnan(v), np.inf, v))) for k, v in checks.items()}
    bad = {k: v for k, v in worst.items() if not v <= tol}
    return not bad, (f"violations {bad}" if bad else f"max {max(worst.values()):.2e}")


def fourier_kernel_identity(kind, alpha=2.0, n=100, seed=0, tol=1e-12):
    """Frequency-domain kernel equals ``exp_R(c |w|^alpha t)``."""
    rng = np.random.default_rng(seed)
    omega = rng.uniform(-3, 3, size=(n, 2))
    t = rng.uniform(0.1, 3, size=n)
    err = 0.0
    for w, tt in zip(omega, t):
        spec = KernelSpec(kind, alpha, tt)
        lhs = fourier_kernel_value(spec, w)
        rhs = kind.exp(time_scale(kind, alpha) * np.linalg.norm(w) ** alpha * tt)
        err = max(err, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return err <= tol, f"max relative error {err:.2e}"


def fourier_semigroup(kind, alpha=2.0, n=100, seed=1, tol=1e-12):
    rng = np.random.default_rng(seed)
    err = 0.0
    for _ in range(n):
        w = rng.uniform(-3, 3, 2)
        s, t = rng.uniform(0.1, 2, 2)
        a = fourier_kernel_value(KernelSpec(kind, alpha, s), w)
        b = fourier_kernel_value(KernelSpec(kind, alpha, t), w)
        c = fourier_kernel_value(KernelSpec(kind, alpha, s + t), w)
        err = max(err, abs(kind.mul(a, b) - c) / max(1.0, abs(c)))
    return err <= tol, f"max relative error {err:.2e}"


def _even_bump(kind, n, rng):
    """Even field whose image under the isomorphism is a positive Gaussian mixture."""
    x = grid_positions(n)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    g = np.zeros((n, n))
    for _ in range(2):
        s1, s2 = rng.uniform(0.7, 1.3, 2)
        g += rng.uniform(0.5, 1.5) * np.exp(-(X1**2) / (2 * s1**2) - X2**2 / (2 * s2**2))
    far = np.abs(x) >= n // 4
    g[far, :] = 0.0
    g[:, far] = 0.0
    if isinstance(kind, Linear):
        return g
    if isinstance(kind, (Root, Log)):
        return np.asarray(kind.from_reference(g))
    raise TypeError(kind)


def full_convolution(kind, f, g):
    """Semifield convolution of two centred fields, with ``g`` as a window of radius ``(n - 1) // 2``.

    Exact whenever the supports are small enough that nothing leaves the grid.
    """
    n = f.shape[0]
    r = (n - 1) // 2
    c = n // 2
    return convolve(kind, SampledKernel(kind, g[c - r:c + r + 1, c - r:c + r + 1]), f, boundary="zero")


def fourier_convolution_property(kind, n=32, seed=0):
    """``F(f * g) = F f (x) F g`` for compactly supported even fields."""
    rng = np.random.default_rng(seed)
    if isinstance(kind, (TropicalMax, TropicalMin)):
        x = grid_positions(n)
        X = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
        sign = -1.0 if isinstance(kind, TropicalMax) else 1.0
        fields = []
        for _ in range(2):
            A = rng.uniform(0.2, 1.0, 2)
            v = sign * 0.5 * (A[0] * X[..., 0] ** 2 + A[1] * X[..., 1] ** 2)
            support = np.all(np.abs(X) < n // 4, axis=-1)
            fields.append(np.where(support, v, kind.zero))
        f, g = fields
        tol = 2.0  # two grid steps
    else:
        f, g = _even_bump(kind, n, rng), _even_bump(kind, n, rng)
        tol = 1e-8 if isinstance(kind, Linear) else 1e-6
    fg = full_convolution(kind, f, g)
    lhs = semifield_fourier(kind, fg).values
    rhs = kind.mul(semifield_fourier(kind, f).values, semifield_fourier(kind, g).values)
    err = float(np.nanmax(kind.metric(lhs, rhs))) if not isinstance(kind, (TropicalMax, TropicalMin)) else \
        float(np.max(np.abs(lhs - rhs)))
    return err <= tol, f"max error {err:.2e} (tolerance {tol:g})"


def delta_identity(kind, seed=0):
    rng = np.random.default_rng(seed)
    f = sample_values(kind, rng, 144).reshape(12, 12)
    out = convolve(kind, SampledKernel.delta(kind, 2), f, "zero")
    # the root kind round-trips through x**p, so allow rounding there
    ok = np.allclose(out, f, rtol=1e-12, atol=0) if isinstance(kind, Root) else np.array_equal(out, f)
    return bool(ok), "delta kernel"


def fast_path_equivalence(kind, trials=5, seed=0):
    rng = np.random.default_rng(seed)
    err = 0.0
    for _ in range(trials):
        f = rng.uniform(-3, 3, (16, 16))
        d = rng.uniform(0.6, 1.5, 2)
        H = np.diag(d)
        fast = convolve_fast_quadratic_morphological(kind, 1.0, H, f)
        slow = convolve(kind, sample_kernel(KernelSpec(kind, 2.0, 1.0, H), radius=15), f, "zero")
        err = max(err, float(np.max(np.abs(fast - slow))))
    return err <= 1e-12, f"max abs error {err:.2e}"


def gradient_check(layer, x, eps=1e-5, seed=0):
    """Largest relative error of analytic vs central-difference gradients."""
    rng = np.random.default_rng(seed)
    out = layer.forward(x)
    g = rng.normal(size=out.shape)
    gx = layer.backward(g)
    grads = {k: v.copy() for k, v in layer.grads.items()}

    def loss(xx):
        return float(np.sum(layer.forward(xx, training=False) * g))

    def rel(a, b):
        return abs(a - b) / max(abs(a) + abs(b), 1e-8)

    worst = 0.0
    for _ in range(8):
        idx = tuple(int(rng.integers(0, s)) for s in x.shape)
        xp, xm = x.copy(), x.copy()
        xp[idx] += eps
        xm[idx] -= eps
        worst = max(worst, rel((loss(xp) - loss(xm)) / (2 * eps), gx[idx]))
    for name, p in layer.params.items():
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            up = loss(x)
            p[idx] = old - eps
            down = loss(x)
            p[idx] = old
            worst = max(worst, rel((up - down) / (2 * eps), grads[name][idx]))
    return worst


def _suite_core():
    for kind in KINDS:
        yield f"axioms[{kind}]", lambda kind=kind: semifield_axioms(kind, n=2000)


def _suite_kernels():
    for kind in KINDS:
        yield f"fourier_kernel[{kind}]", lambda kind=kind: fourier_kernel_identity(kind)
        yield f"fourier_semigroup[{kind}]", lambda kind=kind: fourier_semigroup(kind)
    for alpha in (1.5, 3.0):
        for kind in (TropicalMax(), TropicalMin()):
            yield f"fourier_kernel[{kind},alpha={alpha:g}]", lambda kind=kind, a=alpha: fourier_kernel_identity(kind, a)


def _suite_transforms():
    for kind in (Linear(), Root(2.0), Log(1.0), TropicalMax(), TropicalMin()):
        yield f"convolution_property[{kind}]", lambda kind=kind: fourier_convolution_property(kind)


def _suite_conv():
    for kind in KINDS:
        yield f"delta_identity[{kind}]", lambda kind=kind: delta_identity(kind)
    for kind in (TropicalMax(), TropicalMin()):
        yield f"fast_path[{kind}]", lambda kind=kind: fast_path_equivalence(kind)


def _suite_layers():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2, 2, 12, 12))

    def check(make, xx):
        worst = gradient_check(make(), xx)
        return worst <= 1e-3, f"max relative error {worst:.2e}"

    yield "grad[convection]", lambda: check(lambda: Convection(2, rng=1), x)
    yield "grad[affine]", lambda: check(lambda: Affine(2, 3, rng=2), x)
    for kind in (Linear(), Root(2.0), Log(1.0), TropicalMax(), TropicalMin()):
        xx = np.abs(x) + 0.5 if isinstance(kind, Root) else x
        yield f"grad[{kind}]", lambda kind=kind, xx=xx: check(lambda: ScaleSpace(2, kind, rng=3), xx)


_SUITE_FUNCS = {
    "core": _suite_core,
    "kernels": _suite_kernels,
    "transforms": _suite_transforms,
    "conv": _suite_conv,
    "layers": _suite_layers,
}


def run(suite: str = "all"):
    """Run one suite (or ``"all"``) and return report rows."""
    names = SUITES if suite == "all" else (suite,)
    rows = []
    for name in names:
        if name not in _SUITE_FUNCS:
            raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
        for check, fn in _SUITE_FUNCS[name]():
            t0 = time.perf_counter()
            try:
                ok, detail = fn()
            except Exception as exc:  # report, do not abort the run
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            rows.append((name, check, bool(ok), detail, time.perf_counter() - t0))
    return rows
