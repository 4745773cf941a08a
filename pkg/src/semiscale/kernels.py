"""Reduced scale-space kernels, their frequency-domain form and grid sampling.

Positions are 2-vectors ``(x1, x2)`` where ``x1`` runs along array axis 0
(rows) and ``x2`` along axis 1 (columns).  A kernel is always evaluated
through a metric factor ``H``: ``k_t(H x)``, so the Gram matrix ``H^T H``
plays the role of the learnable inner product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ive

from .semifield import (
    Linear,
    Log,
    NoIsomorphismError,
    Root,
    Semifield,
    TropicalMax,
    TropicalMin,
)

__all__ = [
    "KernelSpec",
    "SampledKernel",
    "kernel_value",
    "fourier_kernel_value",
    "time_scale",
    "default_radius",
    "sample_kernel",
    "sample_kernel_with_grad",
    "discrete_gaussian",
    "cole_hopf_transport",
]

TROPICAL = (TropicalMax, TropicalMin)


@dataclass(frozen=True)
class KernelSpec:
    semifield: Semifield
    alpha: float = 2.0
    t: float = 1.0
    H: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        H = np.array(self.H, dtype=float).reshape(2, 2)
        H.setflags(write=False)
        object.__setattr__(self, "H", H)
        if not self.t > 0:
            raise ValueError("evolution time must be positive")
        if isinstance(self.semifield, TROPICAL):
            if not self.alpha > 1:
                raise ValueError("tropical kernels need alpha > 1")
        elif self.alpha != 2:
            raise ValueError("only the quadratic (alpha = 2) member exists in closed form for this semifield")
        if not np.all(np.isfinite(H)) or abs(np.linalg.det(H)) < 1e-300:
            raise ValueError("metric factor H must be finite and nonsingular")

    @property
    def beta(self) -> float:
        """Conjugate exponent, 1/alpha + 1/beta = 1."""
        return self.alpha / (self.alpha - 1.0)

    def replace(self, **changes) -> "KernelSpec":
        kw = dict(semifield=self.semifield, alpha=self.alpha, t=self.t, H=self.H)
        kw.update(changes)
        return KernelSpec(**kw)


def _profile(sf: Semifield, alpha: float, t: float, r2: np.ndarray) -> np.ndarray:
    """Kernel value as a function of the squared metric radius ``r2 = |H x|^2``."""
    if isinstance(sf, Linear):
        return np.exp(-r2 / (2 * t)) / (2 * np.pi * t)
    if isinstance(sf, Root):
        return (2 * np.pi * t) ** (-1.0 / sf.p) * np.exp(-r2 / (2 * sf.p * t))
    if isinstance(sf, Log):
        return -np.log(2 * np.pi * t) / sf.mu - r2 / (2 * sf.mu * t)
    beta = alpha / (alpha - 1.0)
    # (t / beta) (r / t)^beta, written in r^2 so the quadratic case is exact on the lattice
    val = (t / beta) * (r2 / t**2) ** (beta / 2)
    return -val if isinstance(sf, TropicalMax) else val


def kernel_value(spec: KernelSpec, x) -> np.ndarray | float:
    """Spatial kernel ``k_t(H x)``; ``x`` has shape ``(..., 2)``."""
    x = np.asarray(x, dtype=float)
    hx = x @ spec.H.T
    out = _profile(spec.semifield, spec.alpha, spec.t, np.sum(hx * hx, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def time_scale(sf: Semifield, alpha: float = 2.0) -> float:
    """Constant ``c`` with ``fourier_kernel_value = exp_R(c |w|^alpha t)``.

    The tropical constants are negative: the Fenchel-type transforms send
    the concave dilation kernel to a convex function of the frequency, so
    the family is the semifield exponential run backwards in time.
    """
    if isinstance(sf, Linear):
        return 0.5
    if isinstance(sf, Root):
        return 1.0 / (2 * sf.p)
    if isinstance(sf, Log):
        return 1.0 / (2 * abs(sf.mu))
    return -1.0 / alpha


def fourier_kernel_value(spec: KernelSpec, omega) -> np.ndarray | float:
    """Semifield Fourier transform of the kernel at frequency ``omega`` (H = I only)."""
    if not np.allclose(spec.H, np.eye(2)):
        raise ValueError("the frequency form is defined for the unit metric; map omega by H^-T first")
    omega = np.asarray(omega, dtype=float)
    w = np.linalg.norm(omega, axis=-1)
    sf, a, t = spec.semifield, spec.alpha, spec.t
    if isinstance(sf, Linear):
        out = np.exp(-0.5 * t * w**2)
    elif isinstance(sf, Root):
        out = np.exp(-t * w**2 / (2 * sf.p))
    elif isinstance(sf, Log):
        out = -t * w**2 / (2 * sf.mu)
    elif isinstance(sf, TropicalMax):
        out = t * w**a / a
    else:
        out = -t * w**a / a
    return float(out) if np.ndim(out) == 0 else out


def default_radius(spec: KernelSpec) -> int:
    """``ceil(3 t^(1/alpha) / s_min(H))`` clamped to [2, 7]."""
    s_min = np.linalg.svd(spec.H, compute_uv=False)[-1]
    r = math.ceil(3 * spec.t ** (1 / spec.alpha) / s_min - 1e-12)
    return int(min(max(r, 2), 7))


def _offsets(radius: int) -> np.ndarray:
    d = np.arange(-radius, radius + 1, dtype=float)
    return np.stack(np.meshgrid(d, d, indexing="ij"), axis=-1)


@dataclass(frozen=True)
class SampledKernel:
    """Kernel samples on the integer offsets ``-radius..radius`` (row-major, axis 0 first)."""

    semifield: Semifield
    values: np.ndarray

    @property
    def radius(self) -> int:
        return self.values.shape[0] // 2

    def offsets(self) -> np.ndarray:
        return _offsets(self.radius)

    @classmethod
    def delta(cls, sf: Semifield, radius: int = 1) -> "SampledKernel":
        size = 2 * radius + 1
        v = np.full((size, size), sf.zero, dtype=float)
        v[radius, radius] = sf.one
        return cls(sf, v)


def discrete_gaussian(t: float, radius: int, H=None) -> np.ndarray:
    """Lattice heat kernel ``T(a, t1) T(b, t2)`` with ``T(n, t) = exp(-t) I_n(t)``.

    This solves the semi-discrete diffusion equation on the integer grid,
    so ``T(., s) * T(., t) = T(., s + t)`` holds exactly on the lattice.
    ``H`` must have a diagonal Gram matrix; axis ``i`` then diffuses for
    time ``t / (H^T H)_ii``.
    """
    H = np.eye(2) if H is None else np.asarray(H, dtype=float)
    G = H.T @ H
    if abs(G[0, 1]) > 1e-12 * max(G[0, 0], G[1, 1]):
        raise ValueError("the lattice Gaussian needs a diagonal Gram matrix H^T H")
    n = np.arange(-radius, radius + 1)
    return np.outer(ive(n, t / G[0, 0]), ive(n, t / G[1, 1]))


def sample_kernel(spec: KernelSpec, radius: int | None = None, normalize: bool = True,
                  discrete: bool = False) -> SampledKernel:
    """Sample ``k_t(H x)`` on the integer window.

    Linear kernels are divided by their sum and root kernels by their
    discrete root integral, so each integrates to one; logarithmic and
    tropical kernels are returned as sampled.

    ``discrete=True`` replaces the sampled Gaussian of the linear, root and
    logarithmic kinds by the lattice heat kernel (:func:`discrete_gaussian`)
    mapped through the isomorphism, which keeps the semigroup property
    exact on the grid.
    """
    if radius is None:
        radius = default_radius(spec)
    if radius < 1:
        raise ValueError("radius must be at least 1")
    sf = spec.semifield
    if discrete:
        if isinstance(sf, TROPICAL):
            raise ValueError("no lattice heat kernel for tropical semifields")
        g = discrete_gaussian(spec.t, radius, spec.H)
        if normalize and isinstance(sf, (Linear, Root)):
            g = g / g.sum()
        return SampledKernel(sf, np.asarray(sf.from_reference(g), dtype=float))
    values = np.asarray(kernel_value(spec, _offsets(radius)), dtype=float)
    if normalize and isinstance(sf, (Linear, Root)):
        values = values / sf.integrate(values)
    return SampledKernel(sf, values)


def sample_kernel_with_grad(sf: Semifield, alpha: float, t: float, H, radius: int):
    """Kernel samples and their derivative with respect to ``H``.

    Returns ``(values, dvalues)`` with shapes ``(K, K)`` and ``(K, K, 2, 2)``.
    Linear and root kernels include the normalisation; for root the
    returned values are those of the root kernel, whose ``p``-th power is
    the normalised Gaussian.
    """
    H = np.asarray(H, dtype=float)
    d = _offsets(radius)
    hd = d @ H.T
    r2 = np.sum(hd**2, axis=-1)
    # outer(H d, d): derivative of |H d|^2 / 2 with respect to H
    outer = hd[..., :, None] * d[..., None, :]
    if isinstance(sf, (Linear, Root)):
        g = np.exp(-r2 / (2 * t))
        dg = -g[..., None, None] * outer / t
        s = g.sum()
        gn = g / s
        dgn = dg / s - gn[..., None, None] * dg.sum(axis=(0, 1)) / s
        if isinstance(sf, Linear):
            return gn, dgn
        p = sf.p
        k = gn ** (1.0 / p)
        dk = (k / (p * gn))[..., None, None] * dgn
        return k, dk
    if isinstance(sf, Log):
        k = -np.log(2 * np.pi * t) / sf.mu - r2 / (2 * sf.mu * t)
        return k, -outer / (sf.mu * t)
    beta = alpha / (alpha - 1.0)
    r = np.sqrt(r2)
    k = (t / beta) * (r2 / t**2) ** (beta / 2)
    # d/dH (t/beta)(r/t)^beta = t^(1-beta) r^(beta-2) (H d) d^T
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(r > 0, t ** (1 - beta) * r ** (beta - 2), 0.0)
    dk = coef[..., None, None] * outer
    if isinstance(sf, TropicalMax):
        return -k, -dk
    return k, dk


def cole_hopf_transport(source: Semifield, target: Semifield, field) -> np.ndarray:
    """Map a field pointwise from ``source`` into ``target`` through their common reference."""
    if source.reference != target.reference:
        raise NoIsomorphismError(f"no isomorphism between {source} and {target}")
    return np.asarray(target.from_reference(source.to_reference(field)), dtype=float)
