"""Fused O(N^2) loops for the closed-form kernels.

Each unordered pair is evaluated once: ``g`` is symmetric and both families
give ``f(x, y)`` and ``f(y, x)`` from the same exponentials. Particles are
visited in sorted order and pairs with ``(x - y)^2 / 4 eps^2`` above the
double-precision underflow threshold of ``exp`` are skipped; every pair term
carries that factor, so the skipped terms are exactly 0.0 and the loop is
still the dense sum. Rows accumulate in sorted order with Kahan compensation,
so results do not depend on thread count or BLAS.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_SQRT_PI = math.sqrt(math.pi)
# exp(-746) == 0.0 in IEEE double
_UNDERFLOW = 746.0

# pair record: g, f(x,y), f(y,x), f_x(x,y), f_y(x,y) (= f_y(y,x)), f_x(y,x)


@njit(cache=True, inline="always")
def _pw_pair(x, y, eps, betas, ws, de0):
    eps2 = eps * eps
    d = x - y
    k1 = d * (0.5 / eps2)
    amp = math.exp(-0.5 * d * k1) / (4.0 * _SQRT_PI * eps)
    delta_e = de0
    sq = 0.0
    sxq = 0.0
    syq = 0.0
    if betas.size:
        m = 0.5 * (x + y)
        for t in range(betas.size):
            beta = betas[t]
            w = ws[t]
            delta_e += w * math.erf((beta - m) / eps)
            xb = x - beta
            yb = y - beta
            q = math.exp(-0.5 * (xb * xb + yb * yb) / eps2) * (w / (4.0 * _SQRT_PI * eps))
            sq += q
            sxq += xb * q
            syq += yb * q
    g = amp * delta_e
    qterm = sq / (eps * _SQRT_PI)
    f_xy = -k1 * g - qterm
    f_yx = k1 * g - qterm
    c3 = 1.0 / (eps2 * eps * _SQRT_PI)
    hg = g * (0.5 / eps2)
    fx_xy = -hg - k1 * f_xy + c3 * sxq
    fy_xy = hg - k1 * f_yx + c3 * syq
    fx_yx = -hg + k1 * f_yx + c3 * syq
    return g, f_xy, f_yx, fx_xy, fy_xy, fx_yx


@njit(cache=True, inline="always")
def _lc_pair(x, y, eps, norm):
    eps2 = eps * eps
    d = x - y
    m = 0.5 * (x + y)
    s = math.exp(-0.25 * d * d / eps2) / (2.0 * _SQRT_PI * eps * norm)
    w = 1.0 + m * m + 0.5 * eps2
    k1 = d / (2.0 * eps2)
    h = m - k1 * w
    h_sw = m + k1 * w            # h with x and y exchanged
    a = 0.5 - w / (2.0 * eps2)
    b = 0.5 + w / (2.0 * eps2)
    fx_xy = s * (a - k1 * m - k1 * h)
    fy_xy = s * (b - k1 * m + k1 * h)
    fx_yx = s * (a + k1 * m + k1 * h_sw)
    return s * w, s * h, s * h_sw, fx_xy, fy_xy, fx_yx


@njit(cache=True, inline="always")
def _kahan(acc, comp, idx, value):
    yk = value - comp[idx]
    tk = acc[idx] + yk
    comp[idx] = (tk - acc[idx]) - yk
    acc[idx] = tk


@njit(cache=True)
def _pw_force(x, m, eps, betas, ws, de0):
    n = x.size
    cut = 2.0 * eps * math.sqrt(_UNDERFLOW)
    order = np.argsort(x, kind="mergesort")
    acc = np.zeros(n)
    comp = np.zeros(n)
    for a in range(n):
        i = order[a]
        for b in range(a, n):
            j = order[b]
            if x[j] - x[i] > cut:
                break
            if m[i] == 0.0 and m[j] == 0.0:
                continue
            _, f_xy, f_yx, _, _, _ = _pw_pair(x[i], x[j], eps, betas, ws, de0)
            _kahan(acc, comp, i, f_xy * m[j])
            if j != i:
                _kahan(acc, comp, j, f_yx * m[i])
    return acc


@njit(cache=True)
def _lc_force(x, m, eps, norm):
    n = x.size
    cut = 2.0 * eps * math.sqrt(_UNDERFLOW)
    order = np.argsort(x, kind="mergesort")
    acc = np.zeros(n)
    comp = np.zeros(n)
    for a in range(n):
        i = order[a]
        for b in range(a, n):
            j = order[b]
            if x[j] - x[i] > cut:
                break
            if m[i] == 0.0 and m[j] == 0.0:
                continue
            _, f_xy, f_yx, _, _, _ = _lc_pair(x[i], x[j], eps, norm)
            _kahan(acc, comp, i, f_xy * m[j])
            if j != i:
                _kahan(acc, comp, j, f_yx * m[i])
    return acc


@njit(cache=True)
def _fill_jac(jac, acc, comp, i, j, mi, mj, fx_xy, fy_xy, fx_yx):
    jac[i, j] += fy_xy * mj
    _kahan(acc, comp, i, fx_xy * mj)
    if j != i:
        jac[j, i] += fy_xy * mi
        _kahan(acc, comp, j, fx_yx * mi)


@njit(cache=True)
def _pw_jac(x, m, eps, betas, ws, de0):
    """``d/dX_j`` of ``sum_k f(X_i, X_k) m_k``."""
    n = x.size
    jac = np.zeros((n, n))
    cut = 2.0 * eps * math.sqrt(_UNDERFLOW)
    order = np.argsort(x, kind="mergesort")
    acc = np.zeros(n)
    comp = np.zeros(n)
    for a in range(n):
        i = order[a]
        for b in range(a, n):
            j = order[b]
            if x[j] - x[i] > cut:
                break
            if m[i] == 0.0 and m[j] == 0.0:
                continue
            _, _, _, fx_xy, fy_xy, fx_yx = _pw_pair(x[i], x[j], eps, betas, ws, de0)
            _fill_jac(jac, acc, comp, i, j, m[i], m[j], fx_xy, fy_xy, fx_yx)
    for i in range(n):
        jac[i, i] += acc[i]
    return jac


@njit(cache=True)
def _lc_jac(x, m, eps, norm):
    n = x.size
    jac = np.zeros((n, n))
    cut = 2.0 * eps * math.sqrt(_UNDERFLOW)
    order = np.argsort(x, kind="mergesort")
    acc = np.zeros(n)
    comp = np.zeros(n)
    for a in range(n):
        i = order[a]
        for b in range(a, n):
            j = order[b]
            if x[j] - x[i] > cut:
                break
            if m[i] == 0.0 and m[j] == 0.0:
                continue
            _, _, _, fx_xy, fy_xy, fx_yx = _lc_pair(x[i], x[j], eps, norm)
            _fill_jac(jac, acc, comp, i, j, m[i], m[j], fx_xy, fy_xy, fx_yx)
    for i in range(n):
        jac[i, i] += acc[i]
    return jac


@njit(cache=True)
def _pw_energy(x, m, eps, betas, ws, de0):
    n = x.size
    cut = 2.0 * eps * math.sqrt(_UNDERFLOW)
    order = np.argsort(x, kind="mergesort")
    acc = np.zeros(1)
    comp = np.zeros(1)
    for a in range(n):
        i = order[a]
        if m[i] == 0.0:
            continue
        for b in range(a, n):
            j = order[b]
            if x[j] - x[i] > cut:
                break
            if m[j] == 0.0:
                continue
            g, _, _, _, _, _ = _pw_pair(x[i], x[j], eps, betas, ws, de0)
            _kahan(acc, comp, 0, (0.5 if j == i else 1.0) * g * m[i] * m[j])
    return acc[0]


@njit(cache=True)
def _lc_energy(x, m, eps, norm):
    n = x.size
    cut = 2.0 * eps * math.sqrt(_UNDERFLOW)
    order = np.argsort(x, kind="mergesort")
    acc = np.zeros(1)
    comp = np.zeros(1)
    for a in range(n):
        i = order[a]
        if m[i] == 0.0:
            continue
        for b in range(a, n):
            j = order[b]
            if x[j] - x[i] > cut:
                break
            if m[j] == 0.0:
                continue
            g, _, _, _, _, _ = _lc_pair(x[i], x[j], eps, norm)
            _kahan(acc, comp, 0, (0.5 if j == i else 1.0) * g * m[i] * m[j])
    return acc[0]


@njit(cache=True)
def _band_pairs(x, m, cut):
    """Sorted-order pairs (i, j), i before j, within ``cut`` and not both massless."""
    n = x.size
    order = np.argsort(x, kind="mergesort")
    count = 0
    for a in range(n):
        i = order[a]
        for b in range(a + 1, n):
            j = order[b]
            if x[j] - x[i] > cut:
                break
            if m[i] == 0.0 and m[j] == 0.0:
                continue
            count += 1
    pi = np.empty(count, dtype=np.int64)
    pj = np.empty(count, dtype=np.int64)
    c = 0
    for a in range(n):
        i = order[a]
        for b in range(a + 1, n):
            j = order[b]
            if x[j] - x[i] > cut:
                break
            if m[i] == 0.0 and m[j] == 0.0:
                continue
            pi[c] = i
            pj[c] = j
            c += 1
    return order, pi, pj


@njit(cache=True)
def _coo_fill(x, m, order, pi, pj, fx_xy_arr, fy_xy_arr, fx_yx_arr, fx_self, fy_self):
    """Assemble COO triplets; the diagonal uses Kahan sums in sorted order."""
    n = x.size
    npair = pi.size
    rows = np.empty(2 * npair + n, dtype=np.int64)
    cols = np.empty(2 * npair + n, dtype=np.int64)
    vals = np.empty(2 * npair + n)
    acc = np.zeros(n)
    comp = np.zeros(n)
    for i in range(n):
        _kahan(acc, comp, i, fx_self[i] * m[i])
    for c in range(npair):
        i = pi[c]
        j = pj[c]
        rows[2 * c] = i
        cols[2 * c] = j
        vals[2 * c] = fy_xy_arr[c] * m[j]
        rows[2 * c + 1] = j
        cols[2 * c + 1] = i
        vals[2 * c + 1] = fy_xy_arr[c] * m[i]
        _kahan(acc, comp, i, fx_xy_arr[c] * m[j])
        _kahan(acc, comp, j, fx_yx_arr[c] * m[i])
    for i in range(n):
        k = 2 * npair + i
        rows[k] = i
        cols[k] = i
        vals[k] = acc[i] + fy_self[i] * m[i]
    return rows, cols, vals


@njit(cache=True)
def _pw_jac_coo(x, m, eps, betas, ws, de0):
    order, pi, pj = _band_pairs(x, m, 2.0 * eps * math.sqrt(_UNDERFLOW))
    k = pi.size
    a = np.empty(k)
    b = np.empty(k)
    c = np.empty(k)
    for t in range(k):
        _, _, _, a[t], b[t], c[t] = _pw_pair(x[pi[t]], x[pj[t]], eps, betas, ws, de0)
    fxs = np.empty(x.size)
    fys = np.empty(x.size)
    for i in range(x.size):
        _, _, _, fxs[i], fys[i], _ = _pw_pair(x[i], x[i], eps, betas, ws, de0)
    return _coo_fill(x, m, order, pi, pj, a, b, c, fxs, fys)


@njit(cache=True)
def _lc_jac_coo(x, m, eps, norm):
    order, pi, pj = _band_pairs(x, m, 2.0 * eps * math.sqrt(_UNDERFLOW))
    k = pi.size
    a = np.empty(k)
    b = np.empty(k)
    c = np.empty(k)
    for t in range(k):
        _, _, _, a[t], b[t], c[t] = _lc_pair(x[pi[t]], x[pj[t]], eps, norm)
    fxs = np.empty(x.size)
    fys = np.empty(x.size)
    for i in range(x.size):
        _, _, _, fxs[i], fys[i], _ = _lc_pair(x[i], x[i], eps, norm)
    return _coo_fill(x, m, order, pi, pj, a, b, c, fxs, fys)


class PairSums:
    """Dispatch for one closed-form kernel family at fixed eps."""

    def __init__(self, family: str, eps: float, *, betas=(), ws=(), de0=0.0, norm=1.0):
        self.family = family
        self.eps = float(eps)
        self.betas = np.ascontiguousarray(betas, dtype=float)
        self.ws = np.ascontiguousarray(ws, dtype=float)
        self.de0 = float(de0)
        self.norm = float(norm)

    def _args(self, x, m):
        x = np.ascontiguousarray(x, dtype=float)
        m = np.ascontiguousarray(m, dtype=float)
        if self.family == "piecewise":
            return x, m, self.eps, self.betas, self.ws, self.de0
        return x, m, self.eps, self.norm

    def force(self, x, m):
        """``sum_j f(x_i, x_j) m_j`` for every i."""
        fn = _pw_force if self.family == "piecewise" else _lc_force
        return fn(*self._args(x, m))

    def jacobian(self, x, m):
        fn = _pw_jac if self.family == "piecewise" else _lc_jac
        return fn(*self._args(x, m))

    def jacobian_coo(self, x, m):
        """COO triplets of :meth:`jacobian` without the exact zeros."""
        fn = _pw_jac_coo if self.family == "piecewise" else _lc_jac_coo
        return fn(*self._args(x, m))

    def energy(self, x, m):
        """``1/2 sum_ij g(x_i, x_j) m_i m_j``."""
        fn = _pw_energy if self.family == "piecewise" else _lc_energy
        return fn(*self._args(x, m))
