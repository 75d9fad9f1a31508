"""numba backend: scalar per-path kernels, parallel over paths.

Mirrors `_kernels_numpy` operation for operation; the two backends must
produce bit-identical outputs for the same (seed, path) (enforced by
tests).  Constants are imported from `_mcrng` so values cannot drift;
the small function bodies are restated here so numba can compile them
without closure indirection.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from ._mcrng import (
    _GOLD,
    _HALF_ULP,
    _INV53,
    _L0,
    _L1,
    _L2,
    _L3,
    _L4,
    _L5,
    _L6,
    _L7,
    _L8,
    _LOG_SQRT_2PI,
    _M1,
    _M2,
    _S11,
    _S27,
    _S30,
    _S31,
    TWO_PI,
)


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def _draw(path, seed, gen, slot):
    """Uniform in (0,1) addressed by (path, seed, generation, slot)."""
    h = _mix64(path ^ _GOLD)
    h = _mix64(h ^ seed)
    h = _mix64(h ^ gen)
    h = _mix64(h ^ slot)
    return (h >> _S11) * _INV53 + _HALF_ULP


@njit(cache=True)
def _lgamma(x):
    z = x - 1.0
    a = _L0
    a = a + _L1 / (z + 1.0)
    a = a + _L2 / (z + 2.0)
    a = a + _L3 / (z + 3.0)
    a = a + _L4 / (z + 4.0)
    a = a + _L5 / (z + 5.0)
    a = a + _L6 / (z + 6.0)
    a = a + _L7 / (z + 7.0)
    a = a + _L8 / (z + 8.0)
    t = z + 7.5
    return _LOG_SQRT_2PI + (z + 0.5) * np.log(t) - t + np.log(a)


@njit(cache=True)
def _binom_inv(n, p, u):
    """Binomial(n, p) draw from a single uniform by inversion.

    The cumulative search starts at the mode and zig-zags outward, so the
    expected number of pmf evaluations is O(sqrt(n p (1-p))).
    """
    if n <= 0:
        return np.int64(0)
    if p <= 0.0:
        return np.int64(0)
    if p >= 1.0:
        return np.int64(n)
    q = 1.0 - p
    m = np.int64((n + 1) * p)
    if m > n:
        m = np.int64(n)
    nf = np.float64(n)
    mf = np.float64(m)
    logpm = (
        _lgamma(nf + 1.0)
        - _lgamma(mf + 1.0)
        - _lgamma(nf - mf + 1.0)
        + mf * np.log(p)
        + (nf - mf) * np.log1p(-p)
    )
    pm = np.exp(logpm)
    acc = pm
    if u < acc:
        return m
    lo = m
    hi = m
    plo = pm
    phi = pm
    while (lo > 0) or (hi < n):
        if lo > 0:
            plo = plo * (lo * q) / ((n - lo + 1) * p)
            lo -= 1
            if u < acc + plo:
                return lo
            acc = acc + plo
        if hi < n:
            phi = phi * ((n - hi) * p) / ((hi + 1) * q)
            hi += 1
            if u < acc + phi:
                return hi
            acc = acc + phi
    return hi


@njit(cache=True)
def _advance_one(z, pi, seed, path, gen, cumw, pmf, sup, means, threshold):
    """One generation for one path. Returns (z', pi', used_gaussian)."""
    u = _draw(path, seed, gen, np.uint64(0))
    n_atoms = cumw.shape[0]
    e = 0
    while e < n_atoms - 1 and u >= cumw[e]:
        e += 1
    pi_new = pi * means[e]
    if z <= 0.0:
        return 0.0, pi_new, False
    znew = 0.0
    used_gauss = False
    ns = sup[e]
    if z <= threshold:
        rem_n = np.int64(z)
        rem_p = 1.0
        for j in range(ns):
            pj = pmf[e, j]
            if j == ns - 1:
                znew += j * rem_n
                break
            if pj <= 0.0:
                continue
            if rem_n <= 0:
                break
            pc = pj / rem_p
            if pc > 1.0:
                pc = 1.0
            uj = _draw(path, seed, gen, np.uint64(1 + 2 * j))
            cnt = _binom_inv(rem_n, pc, uj)
            rem_n -= cnt
            rem_p -= pj
            znew += j * cnt
    else:
        used_gauss = True
        rem_nf = z
        rem_p = 1.0
        for j in range(ns):
            pj = pmf[e, j]
            if j == ns - 1:
                znew += j * rem_nf
                break
            if pj <= 0.0:
                continue
            if rem_nf <= 0.0:
                break
            pc = pj / rem_p
            if pc > 1.0:
                pc = 1.0
            u1 = _draw(path, seed, gen, np.uint64(1 + 2 * j))
            u2 = _draw(path, seed, gen, np.uint64(2 + 2 * j))
            g01 = np.sqrt(-2.0 * np.log(u1)) * np.cos(TWO_PI * u2)
            mu = rem_nf * pc
            sd = np.sqrt(rem_nf * pc * (1.0 - pc))
            cnt = np.rint(mu + sd * g01)
            if cnt < 0.0:
                cnt = 0.0
            if cnt > rem_nf:
                cnt = rem_nf
            rem_nf -= cnt
            rem_p -= pj
            znew += j * cnt
    return znew, pi_new, used_gauss


@njit(cache=True, parallel=True)
def simulate_block(
    seed,
    path_offset,
    n_paths,
    k,
    n_gens,
    checkpoints,
    cumw,
    pmf,
    sup,
    means,
    threshold,
    p0_zero,
):
    n_cp = checkpoints.shape[0]
    z_out = np.empty((n_paths, n_cp))
    w_out = np.empty((n_paths, n_cp))
    pi_out = np.empty((n_paths, n_cp))
    flags = np.zeros(n_paths, dtype=np.uint8)
    kf = np.float64(k)
    for i in prange(n_paths):
        path = np.uint64(path_offset + i)
        z = kf
        pi = 1.0
        ci = 0
        if n_cp > 0 and checkpoints[0] == 0:
            z_out[i, 0] = z
            pi_out[i, 0] = 1.0
            w_out[i, 0] = z / kf
            ci = 1
        fl = np.uint8(0)
        for g in range(n_gens):
            zprev = z
            z, pi, used_gauss = _advance_one(
                z, pi, seed, path, np.uint64(g), cumw, pmf, sup, means, threshold
            )
            if used_gauss:
                fl = np.uint8(fl | 1)
            if p0_zero and z < zprev:
                fl = np.uint8(fl | 2)
            if ci < n_cp and checkpoints[ci] == g + 1:
                z_out[i, ci] = z
                pi_out[i, ci] = pi
                w_out[i, ci] = z / (kf * pi)
                ci += 1
        flags[i] = fl
    return z_out, w_out, pi_out, flags
