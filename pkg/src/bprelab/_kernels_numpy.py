"""Pure-numpy backend: the same path semantics as `_kernels_numba`,
vectorized across paths.

Each path consumes uniforms addressed by (path, seed, generation, slot)
exactly as the scalar backend does, so batching paths into array
operations changes nothing about any individual path.  Per-element
arithmetic keeps the same expression shapes as the scalar kernel to stay
bit-compatible.
"""

from __future__ import annotations

import numpy as np

from ._mcrng import TWO_PI, lgamma_pos, mix4, to_unit


def _binom_inv_vec(n, p, u):
    """Vector of Binomial(n_i, p) draws from single uniforms u_i.

    Same mode-centered zig-zag as the scalar backend; resolved paths are
    compacted out each round so total work is proportional to the sum of
    per-path visit counts.
    """
    size = n.size
    if p <= 0.0:
        return np.zeros(size, dtype=np.int64)
    if p >= 1.0:
        return n.copy()
    q = 1.0 - p
    m = np.minimum(((n + 1) * p).astype(np.int64), n)
    nf = n.astype(np.float64)
    mf = m.astype(np.float64)
    logpm = (
        lgamma_pos(nf + 1.0)
        - lgamma_pos(mf + 1.0)
        - lgamma_pos(nf - mf + 1.0)
        + mf * np.log(p)
        + (nf - mf) * np.log1p(-p)
    )
    pm = np.exp(logpm)
    res = np.empty(size, dtype=np.int64)
    hit0 = u < pm
    res[hit0] = m[hit0]
    orig = np.flatnonzero(~hit0)
    n_a = n[orig]
    u_a = u[orig]
    lo = m[orig].copy()
    hi = m[orig].copy()
    plo = pm[orig].copy()
    phi = pm[orig].copy()
    acc = pm[orig].copy()
    while orig.size:
        can_lo = lo > 0
        plo = np.where(can_lo, plo * (lo * q) / ((n_a - lo + 1) * p), plo)
        lo = np.where(can_lo, lo - 1, lo)
        hit = can_lo & (u_a < acc + plo)
        res[orig[hit]] = lo[hit]
        acc = np.where(can_lo & ~hit, acc + plo, acc)

        can_hi = ~hit & (hi < n_a)
        phi = np.where(can_hi, phi * ((n_a - hi) * p) / ((hi + 1) * q), phi)
        hi = np.where(can_hi, hi + 1, hi)
        hit2 = can_hi & (u_a < acc + phi)
        res[orig[hit2]] = hi[hit2]
        acc = np.where(can_hi & ~hit2, acc + phi, acc)

        exhausted = ~hit & ~hit2 & (lo <= 0) & (hi >= n_a)
        res[orig[exhausted]] = hi[exhausted]

        keep = ~(hit | hit2 | exhausted)
        if not keep.all():
            orig = orig[keep]
            n_a = n_a[keep]
            u_a = u_a[keep]
            lo = lo[keep]
            hi = hi[keep]
            plo = plo[keep]
            phi = phi[keep]
            acc = acc[keep]
    return res


def _exact_group(znew, idx, z, paths, seed, gen, pmf_e, sup_e):
    """Exact multinomial sampling (chained conditional binomials) for the
    paths `idx`, all under the same atom."""
    n_rem = z[idx].astype(np.int64)
    rem_p = 1.0
    for j in range(sup_e):
        pj = pmf_e[j]
        if j == sup_e - 1:
            znew[idx] += j * n_rem
            break
        if pj <= 0.0:
            continue
        sub = np.flatnonzero(n_rem > 0)
        if sub.size:
            pc = pj / rem_p
            if pc > 1.0:
                pc = 1.0
            u = to_unit(mix4(paths[idx[sub]], seed, gen, np.uint64(1 + 2 * j)))
            cnt = _binom_inv_vec(n_rem[sub], pc, u)
            n_rem[sub] -= cnt
            znew[idx[sub]] += j * cnt
        rem_p -= pj


def _gauss_group(znew, idx, z, paths, seed, gen, pmf_e, sup_e):
    """Gaussian per-class approximation of the offspring histogram for
    large populations, with counts rounded and clamped to [0, remaining]."""
    rem_n = z[idx].copy()
    rem_p = 1.0
    for j in range(sup_e):
        pj = pmf_e[j]
        if j == sup_e - 1:
            znew[idx] += j * rem_n
            break
        if pj <= 0.0:
            continue
        sub = np.flatnonzero(rem_n > 0.0)
        if sub.size:
            pc = pj / rem_p
            if pc > 1.0:
                pc = 1.0
            u1 = to_unit(mix4(paths[idx[sub]], seed, gen, np.uint64(1 + 2 * j)))
            u2 = to_unit(mix4(paths[idx[sub]], seed, gen, np.uint64(2 + 2 * j)))
            g01 = np.sqrt(-2.0 * np.log(u1)) * np.cos(TWO_PI * u2)
            mu = rem_n[sub] * pc
            sd = np.sqrt(rem_n[sub] * pc * (1.0 - pc))
            cnt = np.rint(mu + sd * g01)
            np.clip(cnt, 0.0, rem_n[sub], out=cnt)
            rem_n[sub] -= cnt
            znew[idx[sub]] += j * cnt
        rem_p -= pj


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
    paths = np.arange(n_paths, dtype=np.uint64) + np.uint64(path_offset)
    n_cp = len(checkpoints)
    z_out = np.empty((n_paths, n_cp))
    w_out = np.empty((n_paths, n_cp))
    pi_out = np.empty((n_paths, n_cp))
    flags = np.zeros(n_paths, dtype=np.uint8)
    kf = float(k)
    z = np.full(n_paths, kf)
    pi = np.ones(n_paths)
    ci = 0
    if n_cp > 0 and checkpoints[0] == 0:
        z_out[:, 0] = z
        pi_out[:, 0] = 1.0
        w_out[:, 0] = z / kf
        ci = 1
    n_atoms = cumw.shape[0]
    for g in range(n_gens):
        gen = np.uint64(g)
        u_atom = to_unit(mix4(paths, seed, gen, np.uint64(0)))
        atom = np.minimum(np.searchsorted(cumw, u_atom, side="right"), n_atoms - 1)
        znew = np.zeros(n_paths)
        exact_m = (z > 0.0) & (z <= threshold)
        gauss_m = z > threshold
        flags[gauss_m] |= np.uint8(1)
        for e in range(n_atoms):
            sel = atom == e
            idx = np.flatnonzero(sel & exact_m)
            if idx.size:
                _exact_group(znew, idx, z, paths, seed, gen, pmf[e], int(sup[e]))
            idx = np.flatnonzero(sel & gauss_m)
            if idx.size:
                _gauss_group(znew, idx, z, paths, seed, gen, pmf[e], int(sup[e]))
        if p0_zero:
            flags[znew < z] |= np.uint8(2)
        pi = pi * means[atom]
        z = znew
        if ci < n_cp and checkpoints[ci] == g + 1:
            z_out[:, ci] = z
            pi_out[:, ci] = pi
            w_out[:, ci] = z / (kf * pi)
            ci += 1
    return z_out, w_out, pi_out, flags
