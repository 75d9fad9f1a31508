"""Stateless counter-based random primitives shared by both simulation
backends.

Every random decision in a simulated path draws exactly one (or, for the
Gaussian branch, two) uniforms addressed by the tuple
(path, seed, generation, slot).  The draw is a pure hash of that tuple,
so path results do not depend on scheduling, batching, thread count, or
ensemble size: path i is the same path in any run with the same seed.

The functions here are written so the same source works on numba scalars
and on numpy arrays: the first argument of `mix4` carries the arrayness.
"""

from __future__ import annotations

import numpy as np

# splitmix64 finalizer constants
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_GOLD = np.uint64(0x9E3779B97F4A7C15)

_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_HALF_ULP = 0.5 / 9007199254740992.0

TWO_PI = 6.283185307179586


def mix64(z):
    """splitmix64 finalizer: a bijective scramble of a 64-bit word."""
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def mix4(path, seed, gen, slot):
    """Hash of (path, seed, generation, slot); `path` may be an array."""
    h = mix64(path ^ _GOLD)
    h = mix64(h ^ seed)
    h = mix64(h ^ gen)
    return mix64(h ^ slot)


def to_unit(h):
    """Map a 64-bit word to a double in the open interval (0, 1)."""
    return (h >> _S11) * _INV53 + _HALF_ULP


# Lanczos g=7, n=9 approximation of log Gamma, accurate to ~1e-13 relative
# for x >= 1.  Implemented here (rather than libm lgamma) so both backends
# evaluate the identical arithmetic.
_L0 = 0.99999999999980993
_L1 = 676.5203681218851
_L2 = -1259.1392167224028
_L3 = 771.32342877765313
_L4 = -176.61502916214059
_L5 = 12.507343278686905
_L6 = -0.13857109526572012
_L7 = 9.9843695780195716e-6
_L8 = 1.5056327351493116e-7
_LOG_SQRT_2PI = 0.9189385332046727


def lgamma_pos(x):
    """log Gamma(x) for x >= 1 (scalar or array)."""
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
