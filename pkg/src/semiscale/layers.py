"""Trainable sublayers with hand-written backward passes.

Feature stacks are ``(B, C, H, W)`` float arrays.  Every sublayer keeps
its parameters in ``self.params`` and, after ``backward``, the matching
gradients in ``self.grads``.  ``forward`` stores what ``backward`` needs;
calling ``backward`` without a preceding training forward raises.
"""
from __future__ import annotations

import numpy as np

from . import _loops
from .kernels import sample_kernel_with_grad
from .semiconv import boundary_mode
from .semifield import Linear, Log, Root, Semifield, TropicalMax, TropicalMin

__all__ = [
    "Sublayer",
    "Convection",
    "ScaleSpace",
    "Affine",
    "BatchNorm",
    "init_metric",
    "clamp_condition",
    "ROOT_FLOOR",
]

ROOT_FLOOR = 1e-8


class Sublayer:
    params: dict
    grads: dict
    buffers: dict = {}

    def __init__(self):
        self._cache = None

    def forward(self, x, training=True):
        raise NotImplementedError

    def backward(self, g):
        raise NotImplementedError

    def _saved(self):
        if self._cache is None:
            raise RuntimeError(f"{type(self).__name__}.backward called without a saved forward pass")
        return self._cache

    @property
    def n_params(self) -> int:
        return int(sum(p.size for p in self.params.values()))


# ---------------------------------------------------------------------------
# convection

class Convection(Sublayer):
    """Per-channel sub-pixel translation ``out[m, n] = Interp(f, m - v1, n - v2)``.

    Bilinear interpolation with replicated borders.  ``v`` has shape
    ``(C, 2)``; ``v[:, 0]`` moves along rows (axis 0).
    """

    def __init__(self, channels: int, v=None, rng=None):
        super().__init__()
        rng = np.random.default_rng(rng)
        v = rng.uniform(-1.0, 1.0, size=(channels, 2)) if v is None else np.array(v, dtype=float).reshape(channels, 2)
        self.params = {"v": v}
        self.grads = {"v": np.zeros_like(v)}

    def forward(self, x, training=True):
        x = np.asarray(x, dtype=float)
        out = _loops.shift_forward(x, self.params["v"])
        self._cache = x if training else None
        return out

    def backward(self, g):
        x = self._saved()
        gx, gv = _loops.shift_backward(g, x, self.params["v"])
        self.grads["v"] = gv
        return gx


# ---------------------------------------------------------------------------
# scale-space sublayer

def init_metric(channels: int, rng=None) -> np.ndarray:
    """``H = diag(u, u)`` with ``u ~ U[0.7, 1.3]`` plus off-diagonal noise ``U[-0.1, 0.1]``."""
    rng = np.random.default_rng(rng)
    u = rng.uniform(0.7, 1.3, size=channels)
    H = u[:, None, None] * np.eye(2)[None]
    H[:, 0, 1] += rng.uniform(-0.1, 0.1, size=channels)
    H[:, 1, 0] += rng.uniform(-0.1, 0.1, size=channels)
    return H


def clamp_condition(H, max_cond: float = 1e6) -> np.ndarray:
    """Raise small singular values so each ``H[c]`` has condition number <= ``max_cond``."""
    U, s, Vt = np.linalg.svd(H)
    floor = s[..., :1] / max_cond
    if np.all(s >= floor):
        return H
    s = np.maximum(s, floor)
    return U @ (s[..., :, None] * Vt)


class ScaleSpace(Sublayer):
    """Depthwise semifield convolution with the kernel ``k_1(H_c x)`` per channel.

    Parameters
    ----------
    channels : int
    kind : Semifield
    alpha : float
        Only tropical kinds accept ``alpha != 2``.
    radius : int
        Half width of the sampled kernel window.
    boundary : str
        ``"replicate"`` (default), ``"reflect"`` or ``"zero"``.
    """

    def __init__(self, channels: int, kind: Semifield, alpha: float = 2.0, radius: int = 2,
                 boundary="replicate", H=None, rng=None):
        super().__init__()
        if not isinstance(kind, (TropicalMax, TropicalMin)) and alpha != 2:
            raise ValueError("alpha != 2 needs a tropical semifield")
        if isinstance(kind, (TropicalMax, TropicalMin)) and not alpha > 1:
            raise ValueError("alpha must exceed 1")
        self.kind = kind
        self.alpha = float(alpha)
        self.radius = int(radius)
        self.mode = boundary_mode(boundary)
        H = init_metric(channels, rng) if H is None else np.array(H, dtype=float).reshape(channels, 2, 2)
        if np.any(np.abs(np.linalg.det(H)) < 1e-300):
            raise ValueError("metric matrices must be nonsingular")
        self.params = {"H": H}
        self.grads = {"H": np.zeros_like(H)}

    def kernels(self):
        """Sampled kernels ``(C, K, K)`` and their ``H`` derivatives ``(C, K, K, 2, 2)``."""
        # root convolves with the p-th power of its kernel, the normalised Gaussian
        sf = Linear() if isinstance(self.kind, Root) else self.kind
        ks, dks = zip(*(sample_kernel_with_grad(sf, self.alpha, 1.0, h, self.radius) for h in self.params["H"]))
        return np.array(ks), np.array(dks)

    def forward(self, x, training=True):
        x = np.asarray(x, dtype=float)
        k, dk = self.kernels()
        kind, mode = self.kind, self.mode
        if isinstance(kind, Linear):
            out = _loops.linear_forward(x, k, mode)
            cache = (x, k, dk)
        elif isinstance(kind, Root):
            p = kind.p
            xc = np.maximum(x, ROOT_FLOOR)
            y = xc**p
            z = _loops.linear_forward(y, k, mode)
            out = z ** (1.0 / p)
            cache = (x, xc, y, z, out, k, dk)
        elif isinstance(kind, Log):
            out = _loops.lse_forward(x, k, kind.mu, mode)
            cache = (x, out, k, dk)
        else:
            out, arg = _loops.morph_forward(x, k, mode, 1.0 if isinstance(kind, TropicalMax) else -1.0)
            cache = (arg, dk, k.shape[1])
        self._cache = cache if training else None
        return out

    def backward(self, g):
        cache = self._saved()
        kind, mode = self.kind, self.mode
        if isinstance(kind, Linear):
            x, k, dk = cache
            gx, gk = _loops.linear_backward(g, x, k, mode)
        elif isinstance(kind, Root):
            x, xc, y, z, out, k, dk = cache
            p = kind.p
            gz = g * out / (p * z)
            gy, gk = _loops.linear_backward(gz, y, k, mode)
            gx = np.where(x > ROOT_FLOOR, gy * p * y / xc, 0.0)
        elif isinstance(kind, Log):
            x, out, k, dk = cache
            gx, gk = _loops.lse_backward(g, x, k, kind.mu, out, mode)
        else:
            arg, dk, K = cache
            gx, gk = _loops.morph_backward(g, arg, K, mode)
        self.grads["H"] = np.einsum("ckl,cklij->cij", gk, dk)
        return gx


# ---------------------------------------------------------------------------
# affine channel mixing and normalisation

class Affine(Sublayer):
    """Per-pixel channel mixing ``out_j = b_j + sum_i w_ji f_i``."""

    def __init__(self, c_in: int, c_out: int, bias: bool = True, w=None, b=None, rng=None):
        super().__init__()
        rng = np.random.default_rng(rng)
        bound = 1.0 / np.sqrt(c_in)
        w = rng.uniform(-bound, bound, size=(c_out, c_in)) if w is None else np.array(w, dtype=float).reshape(c_out, c_in)
        self.params = {"w": w}
        if bias:
            self.params["b"] = np.zeros(c_out) if b is None else np.array(b, dtype=float).reshape(c_out)
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def forward(self, x, training=True):
        x = np.asarray(x, dtype=float)
        w = self.params["w"]
        if x.shape[1] != w.shape[1]:
            raise ValueError(f"expected {w.shape[1]} input channels, got {x.shape[1]}")
        B, _, H, W = x.shape
        out = (w @ x.reshape(B, w.shape[1], H * W)).reshape(B, w.shape[0], H, W)
        if "b" in self.params:
            out += self.params["b"][None, :, None, None]
        self._cache = x if training else None
        return out

    def backward(self, g):
        x = self._saved()
        w = self.params["w"]
        B, _, H, W = x.shape
        g2 = g.reshape(B, w.shape[0], H * W)
        self.grads["w"] = np.tensordot(g2, x.reshape(B, w.shape[1], H * W), axes=([0, 2], [0, 2]))
        if "b" in self.params:
            self.grads["b"] = g2.sum(axis=(0, 2))
        return (w.T @ g2).reshape(x.shape)


class BatchNorm(Sublayer):
    """Per-channel batch normalisation with learnable scale and shift."""

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.params = {"gamma": np.ones(channels), "beta": np.zeros(channels)}
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.buffers = {"mean": np.zeros(channels), "var": np.ones(channels)}
        self.momentum = momentum
        self.eps = eps

    def forward(self, x, training=True):
        x = np.asarray(x, dtype=float)
        if training:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            n = x.size // x.shape[1]
            m = self.momentum
            self.buffers["mean"] = (1 - m) * self.buffers["mean"] + m * mean
            self.buffers["var"] = (1 - m) * self.buffers["var"] + m * var * n / max(n - 1, 1)
        else:
            mean, var = self.buffers["mean"], self.buffers["var"]
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None, None]) * inv[None, :, None, None]
        self._cache = (xhat, inv) if training else None
        return self.params["gamma"][None, :, None, None] * xhat + self.params["beta"][None, :, None, None]

    def backward(self, g):
        xhat, inv = self._saved()
        self.grads["gamma"] = (g * xhat).sum(axis=(0, 2, 3))
        self.grads["beta"] = g.sum(axis=(0, 2, 3))
        gx = g * self.params["gamma"][None, :, None, None]
        mean_g = gx.mean(axis=(0, 2, 3), keepdims=True)
        mean_gx = (gx * xhat).mean(axis=(0, 2, 3), keepdims=True)
        return (gx - mean_g - xhat * mean_gx) * inv[None, :, None, None]
