"""Discrete semifield convolution of sampled fields.

``convolve`` evaluates ``out[i] = (+)_d k[d] (x) f[i - d]`` over the kernel
window, so the kernel is flipped exactly as in the discrete convolution
formula.  Fields are 2-D arrays or stacks ``(..., H, W)`` that all share
one kernel.
"""
from __future__ import annotations

import numpy as np

from . import _loops
from .kernels import SampledKernel, sample_kernel, KernelSpec
from .semifield import Linear, Log, Root, Semifield, TropicalMax, TropicalMin

__all__ = [
    "BOUNDARIES",
    "boundary_mode",
    "convolve",
    "convolve_log_stable",
    "convolve_fast_quadratic_morphological",
    "is_axis_aligned",
]

BOUNDARIES = {"zero": _loops.ZERO_PAD, "replicate": _loops.REPLICATE, "reflect": _loops.REFLECT}


def boundary_mode(boundary) -> int:
    if isinstance(boundary, (int, np.integer)):
        if boundary not in BOUNDARIES.values():
            raise ValueError(f"unknown boundary mode {boundary}")
        return int(boundary)
    try:
        return BOUNDARIES[str(boundary).lower()]
    except KeyError:
        raise ValueError(f"boundary must be one of {sorted(BOUNDARIES)}, got {boundary!r}") from None


def _as_stack(field):
    f = np.asarray(field, dtype=float)
    if f.ndim < 2:
        raise ValueError("field must have at least two dimensions")
    shape = f.shape
    return f.reshape(-1, 1, shape[-2], shape[-1]), shape


def convolve(kind: Semifield, kernel: SampledKernel, field, boundary="zero") -> np.ndarray:
    """Semifield convolution of ``field`` with a sampled kernel.

    Parameters
    ----------
    kind : Semifield
        Must equal ``kernel.semifield``.
    kernel : SampledKernel
    field : array_like
        ``(H, W)`` or ``(..., H, W)`` array of valid semifield values.
    boundary : {"zero", "replicate", "reflect"}
        ``"zero"`` pads with the semifield zero, which contributes nothing.

    Returns
    -------
    numpy.ndarray
        Same shape as ``field``.
    """
    if kernel.semifield != kind:
        raise ValueError(f"kernel semifield {kernel.semifield} does not match {kind}")
    mode = boundary_mode(boundary)
    kind.check(field)
    kind.check(kernel.values)
    f, shape = _as_stack(field)
    k = kernel.values[None]
    if isinstance(kind, Linear):
        out = _loops.linear_forward(f, k, mode)
    elif isinstance(kind, Root):
        # lift to the linear semifield, convolve, map back
        p = kind.p
        with np.errstate(divide="ignore"):
            lifted = _loops.linear_forward(f**p, k**p, mode)
            out = np.maximum(lifted, 0.0) ** (1.0 / p)
    elif isinstance(kind, Log):
        out = _loops.lse_forward(f, k, kind.mu, mode)
    elif isinstance(kind, TropicalMax):
        out, _ = _loops.morph_forward(f, k, mode, 1.0)
    elif isinstance(kind, TropicalMin):
        out, _ = _loops.morph_forward(f, k, mode, -1.0)
    else:
        raise TypeError(f"unsupported semifield {kind!r}")
    return out.reshape(shape)


def convolve_log_stable(mu: float, kernel: SampledKernel, field, boundary="zero") -> np.ndarray:
    """Log-sum-exp convolution with a per-window maximum shift.

    Never forms ``exp`` of an unshifted argument, so it stays finite for
    large ``|mu * value|``.
    """
    return convolve(Log(mu), kernel, field, boundary)


def is_axis_aligned(H, tol: float = 1e-12) -> bool:
    """True when the Gram matrix ``H^T H`` is diagonal."""
    H = np.asarray(H, dtype=float)
    G = H.T @ H
    return abs(G[0, 1]) <= tol * max(abs(G[0, 0]), abs(G[1, 1]))


def convolve_fast_quadratic_morphological(kind: Semifield, t: float, H, field, return_info: bool = False):
    """Exact quadratic dilation/erosion over the whole grid.

    Computes the tropical convolution with the ``alpha = 2`` kernel
    ``-/+ |H x|^2 / (2 t)`` where the window is the entire grid (outside is
    the semifield zero).  With a diagonal Gram matrix this runs as two
    separable lower-envelope passes, linear in the number of pixels.
    Otherwise it falls back to the direct windowed loop with a radius
    covering the grid.

    Returns the filtered field, or ``(field, info)`` with
    ``info["method"]`` in ``{"separable", "windowed"}`` if ``return_info``.
    """
    if not isinstance(kind, (TropicalMax, TropicalMin)):
        raise TypeError("quadratic morphological convolution needs a tropical semifield")
    if not t > 0:
        raise ValueError("t must be positive")
    H = np.asarray(H, dtype=float).reshape(2, 2)
    kind.check(field)
    f = np.asarray(field, dtype=float)
    sign = 1.0 if isinstance(kind, TropicalMax) else -1.0
    rows, cols = f.shape[-2:]
    if is_axis_aligned(H):
        G = H.T @ H
        # erosion of g = -sign f with the convex parabola, negated back for dilation
        g = -sign * f if sign > 0 else f
        flat = g.reshape(-1, cols)
        step = _loops.dt_rows(flat, G[1, 1] / (2 * t)).reshape(g.shape)
        colmajor = np.swapaxes(step, -1, -2).reshape(-1, rows)
        step = _loops.dt_rows(colmajor, G[0, 0] / (2 * t))
        step = np.swapaxes(step.reshape(g.shape[:-2] + (cols, rows)), -1, -2)
        out = -step if sign > 0 else step
        info = {"method": "separable"}
    else:
        radius = max(rows, cols) - 1
        kernel = sample_kernel(KernelSpec(kind, 2.0, t, H), radius=radius)
        out = convolve(kind, kernel, f, boundary="zero")
        info = {"method": "windowed"}
    out = np.ascontiguousarray(out)
    return (out, info) if return_info else out
