"""Inner loops of the semifield convolutions and envelope transforms.

Each public function dispatches to a numba-compiled pixel loop or to a
numpy implementation that vectorises over the image and loops over
kernel offsets.  Both paths compute the same quantity; they differ only
in floating point accumulation order for the sums.

Array conventions: fields are ``(B, C, H, W)``, per-channel kernels are
``(C, K, K)`` with ``K = 2 r + 1``, and offset ``(a - r, b - r)`` is stored
at ``k[c, a, b]``.  The convolution is ``out[i] = (+)_d k[d] (x) f[i - d]``.
Boundary modes: 0 = semifield-zero padding, 1 = replicate, 2 = reflect.
"""
import numpy as np

from . import _accel
from ._accel import njit

ZERO_PAD, REPLICATE, REFLECT = 0, 1, 2
_NP_PAD = {REPLICATE: "edge", REFLECT: "reflect"}


# ---------------------------------------------------------------------------
# numba loops

@njit
def _src(i, n, mode):
    if 0 <= i < n:
        return i
    if mode == 0:
        return -1
    if mode == 1:
        return 0 if i < 0 else n - 1
    if n == 1:
        return 0
    period = 2 * n - 2
    i = i % period
    if i >= n:
        i = period - i
    return i


@njit
def _pad_nb(f, r, mode, value, out):
    """Fill ``out`` (shape ``(H + 2r, W + 2r)``) with ``f`` extended by the boundary rule."""
    H, W = f.shape
    for p in range(H + 2 * r):
        ii = _src(p - r, H, mode)
        for s in range(W + 2 * r):
            jj = _src(s - r, W, mode)
            if ii < 0 or jj < 0:
                out[p, s] = value
            else:
                out[p, s] = f[ii, jj]


@njit
def _unpad_add_nb(gp, r, mode, out):
    """Adjoint of ``_pad_nb``: add every padded cell onto the pixel it copies."""
    H, W = out.shape
    for p in range(H + 2 * r):
        ii = _src(p - r, H, mode)
        if ii < 0:
            continue
        for s in range(W + 2 * r):
            jj = _src(s - r, W, mode)
            if jj >= 0:
                out[ii, jj] += gp[p, s]


@njit
def _morph_fwd_nb(f, k, mode, sign):
    B, C, H, W = f.shape
    K = k.shape[1]
    r = K // 2
    out = np.empty(f.shape)
    arg = np.empty(f.shape, dtype=np.int64)
    fp = np.empty((H + 2 * r, W + 2 * r))
    best = np.empty((H, W))
    ba = np.empty((H, W), dtype=np.int64)
    for b in range(B):
        for c in range(C):
            # work on sign * values so both cases are a maximum
            _pad_nb(f[b, c], r, mode, -sign * np.inf, fp)
            best[:] = -np.inf
            ba[:] = -1
            for a in range(K):
                for q in range(K):
                    kv = sign * k[c, a, q]
                    idx = a * K + q
                    for i in range(H):
                        row = fp[2 * r - a + i, 2 * r - q:2 * r - q + W]
                        brow = best[i]
                        arow = ba[i]
                        for j in range(W):
                            v = kv + sign * row[j]
                            u = v > brow[j]
                            brow[j] = v if u else brow[j]
                            arow[j] = idx if u else arow[j]
            for i in range(H):
                for j in range(W):
                    out[b, c, i, j] = sign * best[i, j]
                    arg[b, c, i, j] = ba[i, j]
    return out, arg


@njit
def _morph_bwd_nb(g, arg, K, mode):
    B, C, H, W = g.shape
    r = K // 2
    gf = np.zeros(g.shape)
    gk = np.zeros((C, K, K))
    for b in range(B):
        for c in range(C):
            for i in range(H):
                for j in range(W):
                    idx = arg[b, c, i, j]
                    if idx < 0:
                        continue
                    a = idx // K
                    q = idx % K
                    gv = g[b, c, i, j]
                    gf[b, c, _src(i - a + r, H, mode), _src(j - q + r, W, mode)] += gv
                    gk[c, a, q] += gv
    return gf, gk


@njit
def _linear_fwd_nb(f, k, mode):
    B, C, H, W = f.shape
    K = k.shape[1]
    r = K // 2
    out = np.zeros(f.shape)
    fp = np.empty((H + 2 * r, W + 2 * r))
    for b in range(B):
        for c in range(C):
            _pad_nb(f[b, c], r, mode, 0.0, fp)
            o = out[b, c]
            for a in range(K):
                for q in range(K):
                    kv = k[c, a, q]
                    for i in range(H):
                        row = fp[2 * r - a + i, 2 * r - q:2 * r - q + W]
                        orow = o[i]
                        for j in range(W):
                            orow[j] += kv * row[j]
    return out


@njit
def _linear_bwd_nb(g, f, k, mode):
    B, C, H, W = f.shape
    K = k.shape[1]
    r = K // 2
    gf = np.zeros(f.shape)
    gk = np.zeros((C, K, K))
    fp = np.empty((H + 2 * r, W + 2 * r))
    gp = np.empty((H + 2 * r, W + 2 * r))
    for b in range(B):
        for c in range(C):
            _pad_nb(f[b, c], r, mode, 0.0, fp)
            gp[:] = 0.0
            gbc = g[b, c]
            for a in range(K):
                for q in range(K):
                    kv = k[c, a, q]
                    s = 0.0
                    for i in range(H):
                        row = fp[2 * r - a + i, 2 * r - q:2 * r - q + W]
                        grow = gp[2 * r - a + i, 2 * r - q:2 * r - q + W]
                        up = gbc[i]
                        for j in range(W):
                            grow[j] += kv * up[j]
                            s += up[j] * row[j]
                    gk[c, a, q] += s
            _unpad_add_nb(gp, r, mode, gf[b, c])
    return gf, gk


@njit
def _lse_fwd_nb(f, k, mu, mode):
    B, C, H, W = f.shape
    K = k.shape[1]
    r = K // 2
    out = np.empty(f.shape)
    fp = np.empty((H + 2 * r, W + 2 * r))
    m = np.empty((H, W))
    s = np.empty((H, W))
    zero = -np.inf / mu
    for b in range(B):
        for c in range(C):
            _pad_nb(f[b, c], r, mode, zero, fp)
            m[:] = -np.inf
            for a in range(K):
                for q in range(K):
                    kv = k[c, a, q]
                    for i in range(H):
                        row = fp[2 * r - a + i, 2 * r - q:2 * r - q + W]
                        mrow = m[i]
                        for j in range(W):
                            mrow[j] = max(mrow[j], mu * (kv + row[j]))
            for i in range(H):
                for j in range(W):
                    if m[i, j] == -np.inf:
                        m[i, j] = 0.0
            s[:] = 0.0
            for a in range(K):
                for q in range(K):
                    kv = k[c, a, q]
                    for i in range(H):
                        row = fp[2 * r - a + i, 2 * r - q:2 * r - q + W]
                        mrow = m[i]
                        srow = s[i]
                        for j in range(W):
                            srow[j] += np.exp(mu * (kv + row[j]) - mrow[j])
            for i in range(H):
                for j in range(W):
                    out[b, c, i, j] = (m[i, j] + np.log(s[i, j])) / mu
    return out


@njit
def _lse_bwd_nb(g, f, k, mu, out, mode):
    B, C, H, W = f.shape
    K = k.shape[1]
    r = K // 2
    gf = np.zeros(f.shape)
    gk = np.zeros((C, K, K))
    fp = np.empty((H + 2 * r, W + 2 * r))
    gp = np.empty((H + 2 * r, W + 2 * r))
    o = np.empty((H, W))
    gm = np.empty((H, W))
    zero = -np.inf / mu
    for b in range(B):
        for c in range(C):
            _pad_nb(f[b, c], r, mode, zero, fp)
            gp[:] = 0.0
            for i in range(H):
                for j in range(W):
                    oij = mu * out[b, c, i, j]
                    if np.isfinite(oij):
                        o[i, j] = oij
                        gm[i, j] = g[b, c, i, j]
                    else:
                        o[i, j] = 0.0
                        gm[i, j] = 0.0
            for a in range(K):
                for q in range(K):
                    kv = k[c, a, q]
                    acc = 0.0
                    for i in range(H):
                        row = fp[2 * r - a + i, 2 * r - q:2 * r - q + W]
                        grow = gp[2 * r - a + i, 2 * r - q:2 * r - q + W]
                        orow = o[i]
                        up = gm[i]
                        for j in range(W):
                            w = up[j] * np.exp(mu * (kv + row[j]) - orow[j])
                            grow[j] += w
                            acc += w
                    gk[c, a, q] += acc
            _unpad_add_nb(gp, r, mode, gf[b, c])
    return gf, gk


@njit
def _shift_fwd_nb(f, v):
    B, C, H, W = f.shape
    out = np.empty(f.shape)
    for c in range(C):
        s0 = np.floor(-v[c, 0])
        s1 = np.floor(-v[c, 1])
        a = -v[c, 0] - s0
        e = -v[c, 1] - s1
        o0 = int(s0)
        o1 = int(s1)
        for b in range(B):
            for i in range(H):
                i0 = min(max(i + o0, 0), H - 1)
                i1 = min(max(i + o0 + 1, 0), H - 1)
                for j in range(W):
                    j0 = min(max(j + o1, 0), W - 1)
                    j1 = min(max(j + o1 + 1, 0), W - 1)
                    out[b, c, i, j] = ((1 - a) * ((1 - e) * f[b, c, i0, j0] + e * f[b, c, i0, j1])
                                       + a * ((1 - e) * f[b, c, i1, j0] + e * f[b, c, i1, j1]))
    return out


@njit
def _shift_bwd_nb(g, f, v):
    B, C, H, W = f.shape
    gf = np.zeros(f.shape)
    gv = np.zeros((C, 2))
    for c in range(C):
        s0 = np.floor(-v[c, 0])
        s1 = np.floor(-v[c, 1])
        a = -v[c, 0] - s0
        e = -v[c, 1] - s1
        o0 = int(s0)
        o1 = int(s1)
        da = 0.0
        de = 0.0
        for b in range(B):
            for i in range(H):
                i0 = min(max(i + o0, 0), H - 1)
                i1 = min(max(i + o0 + 1, 0), H - 1)
                for j in range(W):
                    j0 = min(max(j + o1, 0), W - 1)
                    j1 = min(max(j + o1 + 1, 0), W - 1)
                    gg = g[b, c, i, j]
                    f00 = f[b, c, i0, j0]
                    f01 = f[b, c, i0, j1]
                    f10 = f[b, c, i1, j0]
                    f11 = f[b, c, i1, j1]
                    gf[b, c, i0, j0] += gg * (1 - a) * (1 - e)
                    gf[b, c, i0, j1] += gg * (1 - a) * e
                    gf[b, c, i1, j0] += gg * a * (1 - e)
                    gf[b, c, i1, j1] += gg * a * e
                    da += gg * ((1 - e) * (f10 - f00) + e * (f11 - f01))
                    de += gg * ((1 - a) * (f01 - f00) + a * (f11 - f10))
        # the fractional parts move against v
        gv[c, 0] = -da
        gv[c, 1] = -de
    return gf, gv


@njit
def _dt_rows_nb(f, coef):
    """Row-wise ``min_q f[q] + coef (p - q)^2`` (lower envelope of parabolas)."""
    R, n = f.shape
    out = np.empty((R, n))
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1)
    for row in range(R):
        k = -1
        for q in range(n):
            fq = f[row, q]
            if not np.isfinite(fq):
                continue
            if k < 0:
                k = 0
                v[0] = q
                z[0] = -np.inf
                z[1] = np.inf
                continue
            while True:
                vk = v[k]
                s = ((fq + coef * q * q) - (f[row, vk] + coef * vk * vk)) / (2.0 * coef * (q - vk))
                if s <= z[k]:
                    k -= 1
                else:
                    break
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = np.inf
        if k < 0:
            for p in range(n):
                out[row, p] = np.inf
            continue
        j = 0
        for p in range(n):
            while z[j + 1] < p:
                j += 1
            d = p - v[j]
            out[row, p] = coef * d * d + f[row, v[j]]
    return out


@njit
def _legendre_rows_nb(f, x, s):
    """Row-wise ``max_i s[j] x[i] - f[i]`` via the lower convex hull of (x, f)."""
    R, n = f.shape
    m = s.shape[0]
    out = np.empty((R, m))
    hull = np.empty(n, dtype=np.int64)
    for row in range(R):
        h = 0
        for i in range(n):
            fi = f[row, i]
            if not np.isfinite(fi):
                continue
            while h >= 2:
                i0 = hull[h - 2]
                i1 = hull[h - 1]
                # pop i1 if it lies on or above the chord i0 -> i
                cross = (x[i1] - x[i0]) * (fi - f[row, i0]) - (f[row, i1] - f[row, i0]) * (x[i] - x[i0])
                if cross <= 0:
                    h -= 1
                else:
                    break
            hull[h] = i
            h += 1
        if h == 0:
            for j in range(m):
                out[row, j] = -np.inf
            continue
        e = 0
        for j in range(m):
            sj = s[j]
            while e < h - 1:
                i0 = hull[e]
                i1 = hull[e + 1]
                slope = (f[row, i1] - f[row, i0]) / (x[i1] - x[i0])
                if slope < sj:
                    e += 1
                else:
                    break
            i = hull[e]
            out[row, j] = sj * x[i] - f[row, i]
    return out


@njit
def _lower_hull_nb(f, x):
    n = f.shape[0]
    hull = np.empty(n, dtype=np.int64)
    h = 0
    for i in range(n):
        fi = f[i]
        if not np.isfinite(fi):
            continue
        while h >= 2:
            i0 = hull[h - 2]
            i1 = hull[h - 1]
            cross = (x[i1] - x[i0]) * (fi - f[i0]) - (f[i1] - f[i0]) * (x[i] - x[i0])
            if cross <= 0:
                h -= 1
            else:
                break
        hull[h] = i
        h += 1
    return hull[:h].copy()


# ---------------------------------------------------------------------------
# numpy implementations

def _pad(f, r, mode, value):
    width = ((0, 0), (0, 0), (r, r), (r, r))
    if mode == ZERO_PAD:
        return np.pad(f, width, mode="constant", constant_values=value)
    return np.pad(f, width, mode=_NP_PAD[mode])


def _fold_matrix(n, r, mode):
    """Matrix summing padded positions back onto the source index they copy."""
    P = np.zeros((n, n + 2 * r))
    for p in range(n + 2 * r):
        i = p - r
        if 0 <= i < n:
            P[i, p] = 1.0
        elif mode == REPLICATE:
            P[0 if i < 0 else n - 1, p] = 1.0
        elif mode == REFLECT:
            if n == 1:
                P[0, p] = 1.0
            else:
                period = 2 * n - 2
                ii = i % period
                P[period - ii if ii >= n else ii, p] = 1.0
    return P


def _fold(gpad, r, mode):
    H = gpad.shape[2] - 2 * r
    W = gpad.shape[3] - 2 * r
    if mode == ZERO_PAD:
        return gpad[:, :, r:r + H, r:r + W].copy()
    return _fold_matrix(H, r, mode) @ gpad @ _fold_matrix(W, r, mode).T


def _windows(fpad, K, H, W):
    r = K // 2
    for a in range(K):
        for q in range(K):
            yield a, q, (slice(None), slice(None), slice(2 * r - a, 2 * r - a + H), slice(2 * r - q, 2 * r - q + W))


def _morph_fwd_np(f, k, mode, sign):
    B, C, H, W = f.shape
    K = k.shape[1]
    fpad = _pad(f, K // 2, mode, -sign * np.inf)
    best = np.full(f.shape, -np.inf)
    arg = np.full(f.shape, -1, dtype=np.int64)
    with np.errstate(invalid="ignore"):
        for a, q, sl in _windows(fpad, K, H, W):
            v = sign * (k[:, a, q][None, :, None, None] + fpad[sl])
            upd = v > best
            best = np.where(upd, v, best)
            arg[upd] = a * K + q
    return sign * best, arg


def _morph_bwd_np(g, arg, K, mode):
    B, C, H, W = g.shape
    r = K // 2
    gpad = np.zeros((B, C, H + 2 * r, W + 2 * r))
    gk = np.zeros((C, K, K))
    for a, q, sl in _windows(gpad, K, H, W):
        gm = np.where(arg == a * K + q, g, 0.0)
        gpad[sl] += gm
        gk[:, a, q] = gm.sum(axis=(0, 2, 3))
    return _fold(gpad, r, mode), gk


def _linear_fwd_np(f, k, mode):
    B, C, H, W = f.shape
    K = k.shape[1]
    fpad = _pad(f, K // 2, mode, 0.0)
    out = np.zeros(f.shape)
    for a, q, sl in _windows(fpad, K, H, W):
        out += k[:, a, q][None, :, None, None] * fpad[sl]
    return out


def _linear_bwd_np(g, f, k, mode):
    B, C, H, W = f.shape
    K = k.shape[1]
    r = K // 2
    fpad = _pad(f, r, mode, 0.0)
    gpad = np.zeros(fpad.shape)
    gk = np.zeros((C, K, K))
    for a, q, sl in _windows(fpad, K, H, W):
        gpad[sl] += g * k[:, a, q][None, :, None, None]
        gk[:, a, q] = np.sum(g * fpad[sl], axis=(0, 2, 3))
    return _fold(gpad, r, mode), gk


def _lse_fwd_np(f, k, mu, mode):
    B, C, H, W = f.shape
    K = k.shape[1]
    fpad = _pad(f, K // 2, mode, -np.sign(mu) * np.inf)
    m = np.full(f.shape, -np.inf)
    for a, q, sl in _windows(fpad, K, H, W):
        m = np.maximum(m, mu * (k[:, a, q][None, :, None, None] + fpad[sl]))
    m_safe = np.where(np.isfinite(m), m, 0.0)
    s = np.zeros(f.shape)
    for a, q, sl in _windows(fpad, K, H, W):
        s += np.exp(mu * (k[:, a, q][None, :, None, None] + fpad[sl]) - m_safe)
    with np.errstate(divide="ignore"):
        return (np.log(s) + m_safe) / mu


def _lse_bwd_np(g, f, k, mu, out, mode):
    B, C, H, W = f.shape
    K = k.shape[1]
    r = K // 2
    fpad = _pad(f, r, mode, -np.sign(mu) * np.inf)
    o = mu * out
    g = np.where(np.isfinite(o), g, 0.0)
    o = np.where(np.isfinite(o), o, 0.0)
    gpad = np.zeros(fpad.shape)
    gk = np.zeros((C, K, K))
    for a, q, sl in _windows(fpad, K, H, W):
        w = g * np.exp(mu * (k[:, a, q][None, :, None, None] + fpad[sl]) - o)
        gpad[sl] += w
        gk[:, a, q] = w.sum(axis=(0, 2, 3))
    return _fold(gpad, r, mode), gk


def _shift_setup(v, c, H, W):
    s0, s1 = np.floor(-v[c, 0]), np.floor(-v[c, 1])
    a, e = -v[c, 0] - s0, -v[c, 1] - s1
    i = np.arange(H)
    j = np.arange(W)
    i0, i1 = np.clip(i + int(s0), 0, H - 1), np.clip(i + int(s0) + 1, 0, H - 1)
    j0, j1 = np.clip(j + int(s1), 0, W - 1), np.clip(j + int(s1) + 1, 0, W - 1)
    return a, e, i0, i1, j0, j1


def _shift_fwd_np(f, v):
    B, C, H, W = f.shape
    out = np.empty(f.shape)
    for c in range(C):
        a, e, i0, i1, j0, j1 = _shift_setup(v, c, H, W)
        fc = f[:, c]
        r0 = fc[:, i0]
        r1 = fc[:, i1]
        out[:, c] = (1 - a) * ((1 - e) * r0[:, :, j0] + e * r0[:, :, j1]) + a * ((1 - e) * r1[:, :, j0] + e * r1[:, :, j1])
    return out


def _shift_bwd_np(g, f, v):
    B, C, H, W = f.shape
    gf = np.zeros(f.shape)
    gv = np.zeros((C, 2))
    for c in range(C):
        a, e, i0, i1, j0, j1 = _shift_setup(v, c, H, W)
        fc, gc = f[:, c], g[:, c]
        f00, f01 = fc[:, i0][:, :, j0], fc[:, i0][:, :, j1]
        f10, f11 = fc[:, i1][:, :, j0], fc[:, i1][:, :, j1]
        gv[c, 0] = -np.sum(gc * ((1 - e) * (f10 - f00) + e * (f11 - f01)))
        gv[c, 1] = -np.sum(gc * ((1 - a) * (f01 - f00) + a * (f11 - f10)))
        acc = np.zeros((B, H, W))
        for rows, cols, w in ((i0, j0, (1 - a) * (1 - e)), (i0, j1, (1 - a) * e), (i1, j0, a * (1 - e)), (i1, j1, a * e)):
            # scatter rows then columns; np.add.at handles repeated clamped indices
            tmp = np.zeros((B, H, W))
            np.add.at(tmp, (slice(None), slice(None), cols), w * gc)
            np.add.at(acc, (slice(None), rows), tmp)
        gf[:, c] = acc
    return gf, gv


def _dt_rows_np(f, coef):
    n = f.shape[1]
    p = np.arange(n, dtype=float)
    quad = coef * (p[:, None] - p[None, :]) ** 2  # [p, q]
    return np.min(f[:, None, :] + quad[None], axis=2)


def _legendre_rows_np(f, x, s, chunk=256):
    out = np.empty((f.shape[0], s.shape[0]))
    fin = np.where(np.isfinite(f), f, np.inf)
    for j0 in range(0, s.shape[0], chunk):
        sj = s[j0:j0 + chunk]
        vals = sj[None, :, None] * x[None, None, :] - fin[:, None, :]
        out[:, j0:j0 + chunk] = np.max(vals, axis=2)
    return out


def _lower_hull_np(f, x):
    hull = []
    for i in np.flatnonzero(np.isfinite(f)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (x[i1] - x[i0]) * (f[i] - f[i0]) - (f[i1] - f[i0]) * (x[i] - x[i0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=np.int64)


# ---------------------------------------------------------------------------
# dispatch

def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def morph_forward(f, k, mode, sign):
    """Max-plus (sign=+1) or min-plus (sign=-1) convolution with argmax offsets."""
    f, k = _f64(f), _f64(k)
    if _accel.USE_NUMBA:
        return _morph_fwd_nb(f, k, int(mode), float(sign))
    return _morph_fwd_np(f, k, int(mode), float(sign))


def morph_backward(g, arg, K, mode):
    g = _f64(g)
    if _accel.USE_NUMBA:
        return _morph_bwd_nb(g, np.ascontiguousarray(arg, dtype=np.int64), int(K), int(mode))
    return _morph_bwd_np(g, arg, int(K), int(mode))


def linear_forward(f, k, mode):
    f, k = _f64(f), _f64(k)
    if _accel.USE_NUMBA:
        return _linear_fwd_nb(f, k, int(mode))
    return _linear_fwd_np(f, k, int(mode))


def linear_backward(g, f, k, mode):
    g, f, k = _f64(g), _f64(f), _f64(k)
    if _accel.USE_NUMBA:
        return _linear_bwd_nb(g, f, k, int(mode))
    return _linear_bwd_np(g, f, k, int(mode))


def lse_forward(f, k, mu, mode):
    """``(1/mu) log sum exp(mu (k + f))`` over each window, max-shifted."""
    f, k = _f64(f), _f64(k)
    if _accel.USE_NUMBA:
        return _lse_fwd_nb(f, k, float(mu), int(mode))
    return _lse_fwd_np(f, k, float(mu), int(mode))


def lse_backward(g, f, k, mu, out, mode):
    g, f, k, out = _f64(g), _f64(f), _f64(k), _f64(out)
    if _accel.USE_NUMBA:
        return _lse_bwd_nb(g, f, k, float(mu), out, int(mode))
    return _lse_bwd_np(g, f, k, float(mu), out, int(mode))


def shift_forward(f, v):
    """Bilinear sub-pixel shift ``out[i, j] = f(i - v[c, 0], j - v[c, 1])``, replicated borders."""
    f, v = _f64(f), _f64(v)
    if _accel.USE_NUMBA:
        return _shift_fwd_nb(f, v)
    return _shift_fwd_np(f, v)


def shift_backward(g, f, v):
    g, f, v = _f64(g), _f64(f), _f64(v)
    if _accel.USE_NUMBA:
        return _shift_bwd_nb(g, f, v)
    return _shift_bwd_np(g, f, v)


def dt_rows(f, coef):
    """Exact ``min_q f[.., q] + coef (p - q)^2`` along the last axis of a 2-D array."""
    f = _f64(f)
    if coef <= 0:
        raise ValueError("parabola coefficient must be positive")
    if _accel.USE_NUMBA:
        return _dt_rows_nb(f, float(coef))
    return _dt_rows_np(f, float(coef))


def legendre_rows(f, x, s):
    """``out[row, j] = max_i s[j] x[i] - f[row, i]`` for increasing ``x``; non-finite f skipped."""
    f, x, s = _f64(f), _f64(x), _f64(s)
    order = np.argsort(s, kind="stable")
    if _accel.USE_NUMBA:
        res = _legendre_rows_nb(f, x, s[order])
    else:
        res = _legendre_rows_np(f, x, s[order])
    out = np.empty_like(res)
    out[:, order] = res
    return out


def lower_hull(f, x):
    """Indices of the vertices of the lower convex hull of the finite points (x, f)."""
    f, x = _f64(f), _f64(x)
    if _accel.USE_NUMBA:
        return _lower_hull_nb(f, x)
    return _lower_hull_np(f, x)
