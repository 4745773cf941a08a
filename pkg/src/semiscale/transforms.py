"""Semifield Fourier transforms on sampled grids.

Grids are centred: sample ``n`` of an axis of length ``N`` sits at position
``(n - N // 2) * spacing``.

* Linear: the cosine (real) part of the centred DFT scaled by the cell
  area, i.e. the transform of the even part of the input.
* Root and log: the linear transform conjugated by the pointwise
  isomorphism onto the linear semifield.
* Tropical: discrete Legendre-Fenchel transforms
  ``sup_x f(x) - w.x`` (max) and ``inf_x f(x) - w.x`` (min), computed
  separably with the lower-hull conjugate, which is exact for any
  discrete input.  Samples outside the grid count as the semifield zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _loops
from .semifield import DomainError, Linear, Log, Root, Semifield, TropicalMax, TropicalMin

__all__ = [
    "FrequencyGrid",
    "NonInvertibleError",
    "grid_positions",
    "dft_frequencies",
    "semifield_fourier",
    "semifield_fourier_inverse",
    "fenchel_conjugate_1d",
    "evaluate_conjugate_1d",
    "legendre_2d",
    "legendre_2d_bruteforce",
]


class NonInvertibleError(ValueError):
    """Input of an inverse transform is not in the image of the forward transform."""


@dataclass(frozen=True)
class FrequencyGrid:
    """Transform values on the frequency lattice ``w1 x w2`` (axis 0, axis 1)."""

    values: np.ndarray
    w1: np.ndarray
    w2: np.ndarray

    @property
    def shape(self):
        return self.values.shape

    def omega(self) -> np.ndarray:
        """Frequencies as an ``(n1, n2, 2)`` array."""
        return np.stack(np.meshgrid(self.w1, self.w2, indexing="ij"), axis=-1)


def grid_positions(n: int, spacing: float = 1.0) -> np.ndarray:
    return (np.arange(n) - n // 2) * float(spacing)


def dft_frequencies(n: int, spacing: float = 1.0) -> np.ndarray:
    """Centred angular frequencies ``2 pi j / (n spacing)``, ascending."""
    return 2 * np.pi * (np.arange(n) - n // 2) / (n * float(spacing))


# ---------------------------------------------------------------------------
# one-dimensional conjugates

def fenchel_conjugate_1d(samples, positions):
    """Exact convex conjugate of a sampled function.

    Returns ``(values, slopes)``: the conjugate ``f*(s) = max_i s x_i - f_i``
    at the slopes of the edges of the lower convex hull of ``(x_i, f_i)``.
    Between consecutive slopes ``f*`` is affine; outside them it grows
    linearly.  A single finite sample has the affine conjugate
    ``s x_0 - f_0``; it is reported by its value at slope 0.

    Non-finite samples are treated as ``+inf`` (outside the domain).
    """
    f = np.asarray(samples, dtype=float)
    x = np.asarray(positions, dtype=float)
    if f.shape != x.shape or f.ndim != 1:
        raise ValueError("samples and positions must be 1-D arrays of equal length")
    if np.any(np.diff(x) <= 0):
        raise ValueError("positions must be strictly increasing")
    hull = _loops.lower_hull(np.where(np.isfinite(f), f, np.inf), x)
    if hull.size == 0:
        return np.empty(0), np.empty(0)
    if hull.size == 1:
        i = hull[0]
        return np.array([-f[i]]), np.array([0.0])
    fx, xx = f[hull], x[hull]
    slopes = np.diff(fx) / np.diff(xx)
    values = slopes * xx[:-1] - fx[:-1]
    return values, slopes


def evaluate_conjugate_1d(samples, positions, slopes, outside: str = "linear") -> np.ndarray:
    """``max_i s x_i - f_i`` at arbitrary slopes.

    ``outside="linear"`` treats the samples as the whole function (``+inf``
    off the samples), so the conjugate grows linearly past the extreme
    hull slopes.  ``outside="inf"`` instead extends the two end segments
    of the hull linearly beyond the window, which makes the conjugate
    ``+inf`` outside ``[first hull slope, last hull slope]``.
    """
    f = np.asarray(samples, dtype=float)
    x = np.asarray(positions, dtype=float)
    s = np.asarray(slopes, dtype=float)
    if outside not in ("linear", "inf"):
        raise ValueError("outside must be 'linear' or 'inf'")
    if np.any(np.diff(x) <= 0):
        raise ValueError("positions must be strictly increasing")
    out = _loops.legendre_rows(f[None], x, s.ravel())[0].reshape(s.shape)
    if outside == "inf":
        _, hs = fenchel_conjugate_1d(f, x)
        if np.isfinite(f).sum() >= 2:
            out = np.where((s < hs[0]) | (s > hs[-1]), np.inf, out)
    return out


# ---------------------------------------------------------------------------
# two-dimensional tropical transforms

def legendre_2d(f, x1, x2, w1, w2) -> np.ndarray:
    """``out[j1, j2] = max_{i1,i2} f[i1, i2] - w1[j1] x1[i1] - w2[j2] x2[i2]``.

    Computed as two exact one-dimensional passes; ``-inf`` entries of ``f``
    are ignored and an all ``-inf`` input gives ``-inf``.
    """
    f = np.asarray(f, dtype=float)
    x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
    w1, w2 = np.asarray(w1, float), np.asarray(w2, float)
    if np.any(f == np.inf):
        raise DomainError("legendre_2d input must be bounded above")
    # rows: G[i1, j2] = max_i2 f[i1, i2] - w2 x2  =  max (-w2) x2 - (-f)
    G = _loops.legendre_rows(-f, x2, -w2)
    out = _loops.legendre_rows(np.ascontiguousarray(-G.T), x1, -w1)
    return np.ascontiguousarray(out.T)


def legendre_2d_bruteforce(f, x1, x2, w1, w2) -> np.ndarray:
    """Direct ``O(N^2)`` evaluation of :func:`legendre_2d` (oracle)."""
    f = np.asarray(f, dtype=float)
    out = np.empty((len(w1), len(w2)))
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    for a, u in enumerate(w1):
        vals = f[None] - u * X1[None] - np.asarray(w2)[:, None, None] * X2[None]
        out[a] = vals.reshape(len(w2), -1).max(axis=1)
    return out


# ---------------------------------------------------------------------------
# linear transform

def _dft_forward(f, spacing):
    F = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(f)))
    return F.real * spacing**2


def _dft_inverse(F, spacing):
    f = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(F)))
    return f.real / spacing**2


def _lift_back(sf, values, what):
    scale = max(np.max(np.abs(values)), 1e-300)
    if np.any(values < -1e-12 * scale):
        raise DomainError(f"{what} leaves the {sf} semifield (negative linear transform)")
    return sf.from_reference(np.maximum(values, 0.0))


def semifield_fourier(kind: Semifield, field, spacing: float = 1.0, frequencies=None) -> FrequencyGrid:
    """Semifield Fourier transform of a centred sampled field.

    Parameters
    ----------
    kind : Semifield
    field : (n1, n2) array
    spacing : float
        Grid step; sample ``(i, j)`` sits at ``((i - n1//2) h, (j - n2//2) h)``.
    frequencies : (w1, w2), optional
        Frequency axes for the tropical transforms.  They default to the
        spatial positions (the conjugate of a quadratic is then sampled
        where its maximiser lies on the grid).  The linear family always
        uses the DFT lattice.
    """
    f = np.asarray(field, dtype=float)
    if f.ndim != 2:
        raise ValueError("field must be 2-D")
    kind.check(f)
    n1, n2 = f.shape
    x1, x2 = grid_positions(n1, spacing), grid_positions(n2, spacing)
    if isinstance(kind, (TropicalMax, TropicalMin)):
        w1, w2 = (x1, x2) if frequencies is None else map(np.asarray, frequencies)
        if isinstance(kind, TropicalMax):
            vals = legendre_2d(f, x1, x2, w1, w2)
        else:
            # inf_x f(x) - w.x = -max_x (-f(x)) - (-w).x
            vals = -legendre_2d(-f, x1, x2, -np.asarray(w1, float), -np.asarray(w2, float))
        return FrequencyGrid(vals, np.asarray(w1, float), np.asarray(w2, float))
    w1, w2 = dft_frequencies(n1, spacing), dft_frequencies(n2, spacing)
    if isinstance(kind, Linear):
        return FrequencyGrid(_dft_forward(f, spacing), w1, w2)
    if isinstance(kind, (Root, Log)):
        lifted = _dft_forward(np.asarray(kind.to_reference(f)), spacing)
        return FrequencyGrid(np.asarray(_lift_back(kind, lifted, "transform")), w1, w2)
    raise TypeError(f"unsupported semifield {kind!r}")


def _check_convex_lines(values, tol, convex=True):
    """Every row and column must coincide with its convex (or concave) envelope."""
    v = values if convex else -values
    for arr in (v, v.T):
        for line in arr:
            fin = np.isfinite(line)
            if fin.sum() < 3:
                continue
            x = np.flatnonzero(fin).astype(float)
            y = line[fin]
            hull = _loops.lower_hull(y, x)
            env = np.interp(x, x[hull], y[hull])
            if np.max(y - env) > tol * max(1.0, np.max(np.abs(y))):
                return False
    return True


def semifield_fourier_inverse(kind: Semifield, grid: FrequencyGrid, spacing: float = 1.0, strict: bool = True,
                              tol: float = 1e-9, shape=None) -> np.ndarray:
    """Inverse transform back onto the centred spatial grid with step ``spacing``.

    For the tropical kinds the inverse is again a Legendre-Fenchel
    transform, so applying it to a forward transform returns the concave
    (max) or convex (min) envelope of the original field.  With
    ``strict=True`` the input must be convex (max) or concave (min) along
    every grid line, otherwise :class:`NonInvertibleError` is raised.
    ``shape`` sets the tropical output grid (default: the frequency grid
    shape); the linear family always returns the DFT grid.
    """
    F = np.asarray(grid.values, dtype=float)
    if isinstance(kind, (TropicalMax, TropicalMin)):
        n1, n2 = F.shape if shape is None else shape
        x1, x2 = grid_positions(n1, spacing), grid_positions(n2, spacing)
        convex = isinstance(kind, TropicalMax)
        if strict and not _check_convex_lines(F, tol, convex=convex):
            raise NonInvertibleError(f"{kind} inverse needs a {'convex' if convex else 'concave'} input")
        if convex:
            # inf_w F(w) + w.x = -max_w (-F(w)) - w.x
            return -legendre_2d(-F, grid.w1, grid.w2, x1, x2)
        # sup_w F(w) + w.x = max_w F(w) - w.(-x)
        return legendre_2d(F, grid.w1, grid.w2, -x1, -x2)
    if isinstance(kind, Linear):
        return _dft_inverse(F, spacing)
    if isinstance(kind, (Root, Log)):
        kind.check(F)
        lifted = _dft_inverse(np.asarray(kind.to_reference(F)), spacing)
        return np.asarray(_lift_back(kind, lifted, "inverse transform"))
    raise TypeError(f"unsupported semifield {kind!r}")
