"""Slow, obviously-correct reference implementations used only by the tests."""
import math

import numpy as np


def naive_convolve(kind, kernel, field, boundary="zero"):
    """Pure-python loop over pixels and offsets, flipped kernel, kind zero outside."""
    f = np.asarray(field, dtype=float)
    k = np.asarray(kernel, dtype=float)
    r = k.shape[0] // 2
    rows, cols = f.shape
    out = np.empty_like(f)

    def src(i, n):
        if 0 <= i < n:
            return i
        if boundary == "replicate":
            return min(max(i, 0), n - 1)
        if boundary == "reflect":
            while not 0 <= i < n:
                i = -i if i < 0 else 2 * (n - 1) - i
            return i
        return None

    for i in range(rows):
        for j in range(cols):
            acc = kind.zero
            for a in range(-r, r + 1):
                for b in range(-r, r + 1):
                    si, sj = src(i - a, rows), src(j - b, cols)
                    if si is None or sj is None:
                        continue
                    acc = kind.add(acc, kind.mul(float(k[a + r, b + r]), float(f[si, sj])))
            out[i, j] = acc
    return out


def bruteforce_conjugate_1d(samples, positions, slopes):
    """max_x (w x - f(x)) by direct enumeration."""
    f = np.asarray(samples, dtype=float)
    x = np.asarray(positions, dtype=float)
    return np.array([np.max(w * x - f) for w in np.atleast_1d(slopes)])


def concave_envelope_1d(values, positions):
    """Least concave majorant at the sample points, via all chords (O(n^3))."""
    v = np.asarray(values, dtype=float)
    x = np.asarray(positions, dtype=float)
    out = v.copy()
    n = len(v)
    for i in range(n):
        for j in range(i + 1, n):
            for m in range(i + 1, j):
                lam = (x[m] - x[i]) / (x[j] - x[i])
                out[m] = max(out[m], (1 - lam) * v[i] + lam * v[j])
    return out


def bilinear_sample(f, y, x):
    """Bilinear interpolation at real (row, col) with replicated borders."""
    rows, cols = f.shape
    y = min(max(y, 0.0), rows - 1.0)
    x = min(max(x, 0.0), cols - 1.0)
    y0, x0 = int(math.floor(y)), int(math.floor(x))
    y1, x1 = min(y0 + 1, rows - 1), min(x0 + 1, cols - 1)
    fy, fx = y - y0, x - x0
    return ((1 - fy) * (1 - fx) * f[y0, x0] + (1 - fy) * fx * f[y0, x1]
            + fy * (1 - fx) * f[y1, x0] + fy * fx * f[y1, x1])


def tropical_margin(x, k, sign, mode="edge"):
    """Smallest gap between the best and second-best window candidate of a dilation/erosion.

    ``x`` is ``(B, C, H, W)``, ``k`` is ``(C, K, K)``; ``sign`` is +1 for max, -1 for min.
    """
    B, C, H, W = x.shape
    K = k.shape[-1]
    r = K // 2
    pad = np.pad(sign * x, ((0, 0), (0, 0), (r, r), (r, r)), mode=mode)
    cands = []
    for a in range(K):
        for b in range(K):
            # offset d = (a - r, b - r) reads f[i - d]
            cands.append(pad[:, :, 2 * r - a:2 * r - a + H, 2 * r - b:2 * r - b + W] + sign * k[None, :, a, b, None, None])
    c = np.sort(np.stack(cands), axis=0)
    return float(np.min(c[-1] - c[-2]))


def finite_difference_error(layer, x, eps_list=(1e-3, 1e-4), seed=0):
    """Worst relative error between analytic and central-difference gradients.

    The loss is ``sum(forward(x) * g)`` for a fixed random ``g``; every input
    entry and every parameter entry is checked.  For each entry the best of
    the step sizes counts.
    """
    rng = np.random.default_rng(seed)
    x = np.array(x, dtype=float)
    out = layer.forward(x, training=True)
    g = rng.normal(size=out.shape)
    gx = layer.backward(g)
    analytic = {"x": gx}
    analytic.update({k: v.copy() for k, v in layer.grads.items()})
    arrays = {"x": x}
    arrays.update(layer.params)

    def loss():
        return float(np.sum(layer.forward(x, training=True) * g))

    worst = 0.0
    for name, arr in arrays.items():
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            best = np.inf
            for eps in eps_list:
                arr[idx] = old + eps
                up = loss()
                arr[idx] = old - eps
                down = loss()
                arr[idx] = old
                num = (up - down) / (2 * eps)
                a = analytic[name][idx]
                best = min(best, abs(num - a) / max(abs(num) + abs(a), 1e-6))
            worst = max(worst, best)
    return worst
