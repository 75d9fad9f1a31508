"""Exact truncated law of the annealed population chain.

The one-step kernel p(i, j) = P(Z_1 = j | Z_0 = i) is the environment
mixture of i-fold convolution powers of each atom's offspring pmf,
truncated at a population cap J.  Probability mass escaping past J is
tracked explicitly per row and per distribution (the "deficit"), never
renormalized away: for monotone chains (all atoms p0 = 0) the retained
entries are exact, and in general they are lower bounds with error at
most the deficit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, TextIO

import numpy as np

from .env_model import EnvironmentModel
from .errors import (
    DimensionMismatch,
    DomainError,
    ExtinctionMass,
    TruncationTooSmall,
)

__all__ = [
    "TransitionKernel",
    "DistributionVector",
    "Trajectory",
    "build_kernel",
    "propagate",
    "exact_dist",
    "gen_func",
    "harmonic_moment_Zn",
    "default_truncation",
    "dist_to_csv",
]


@dataclass(frozen=True)
class TransitionKernel:
    """Annealed one-step kernel on states 0..J with per-row escaped mass."""

    J: int
    probs: np.ndarray        # (J+1, J+1), probs[i, j] = p(i, j)
    row_deficit: np.ndarray  # (J+1,), P(Z_1 > J | Z_0 = i)

    def __post_init__(self):
        self.probs.setflags(write=False)
        self.row_deficit.setflags(write=False)


@dataclass(frozen=True)
class DistributionVector:
    """Law of Z_n on states 0..J started from k, with escaped mass tracked."""

    n: int
    k: int
    probs: np.ndarray  # (J+1,)
    deficit: float

    def __post_init__(self):
        self.probs.setflags(write=False)

    @property
    def J(self) -> int:
        return len(self.probs) - 1


@dataclass(frozen=True)
class Trajectory:
    """One simulated path: population, running product of quenched means,
    and the normalized population w = z / (k * pi) per generation.

    `approximate` is set when any step used the large-population Gaussian
    approximation (population above the configured threshold), after which
    the population is carried in floating point.
    """

    z: np.ndarray
    pi: np.ndarray
    w: np.ndarray
    approximate: bool

    def __post_init__(self):
        self.z.setflags(write=False)
        self.pi.setflags(write=False)
        self.w.setflags(write=False)


def build_kernel(env: EnvironmentModel, J: int) -> TransitionKernel:
    """Build the truncated kernel row by row.

    Row i of each atom is the convolution of row i-1 with the atom pmf,
    so entries with j <= J are exact and the escaped mass is 1 minus the
    retained row sum.  Atoms are accumulated in their fixed environment
    order, which makes the result bit-reproducible.
    """
    if J < 1:
        raise TruncationTooSmall(f"J must be >= 1, got {J}")
    K = np.zeros((J + 1, J + 1))
    for w, law in env.atoms:
        row = np.zeros(J + 1)
        row[0] = 1.0
        K[0] += w * row
        for i in range(1, J + 1):
            row = np.convolve(row, law.pmf)[: J + 1]
            K[i, : row.size] += w * row
    deficit = 1.0 - K.sum(axis=1)
    np.clip(deficit, 0.0, None, out=deficit)
    return TransitionKernel(J=J, probs=K, row_deficit=deficit)


def point_mass(k: int, J: int) -> DistributionVector:
    """Distribution of Z_0 = k on states 0..J."""
    if k > J:
        raise TruncationTooSmall(f"initial size k={k} exceeds truncation J={J}")
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    p = np.zeros(J + 1)
    p[k] = 1.0
    return DistributionVector(n=0, k=k, probs=p, deficit=0.0)


def propagate(kernel: TransitionKernel, dist: DistributionVector) -> DistributionVector:
    """One annealed step: probs' = probs @ kernel, deficit accumulates."""
    if dist.J != kernel.J:
        raise DimensionMismatch(f"dist J={dist.J} vs kernel J={kernel.J}")
    new_probs = dist.probs @ kernel.probs
    new_deficit = dist.deficit + float(np.dot(dist.probs, kernel.row_deficit))
    return DistributionVector(n=dist.n + 1, k=dist.k, probs=new_probs, deficit=new_deficit)


def exact_dist(
    env: EnvironmentModel,
    k: int,
    n: int,
    J: int,
    kernel: Optional[TransitionKernel] = None,
) -> DistributionVector:
    """Exact truncated law of Z_n started from k individuals."""
    if kernel is None:
        kernel = build_kernel(env, J)
    elif kernel.J != J:
        raise DimensionMismatch(f"provided kernel J={kernel.J} does not match J={J}")
    dist = point_mass(k, J)
    for _ in range(n):
        dist = propagate(kernel, dist)
    return dist


def gen_func(dist: DistributionVector, t: float) -> tuple[float, float]:
    """Generating function sum_j probs(j) t**j with a truncation tail bound.

    The omitted mass sits on states above J, so its contribution is at
    most deficit * t**(J+1).
    """
    if not (0.0 <= t < 1.0):
        raise DomainError(f"t must be in [0,1), got {t}")
    acc = 0.0
    for p in dist.probs[::-1]:
        acc = acc * t + p
    tail = dist.deficit * t ** (dist.J + 1)
    return float(acc), float(tail)


def harmonic_moment_Zn(dist: DistributionVector, r: float) -> tuple[float, float]:
    """Bounds on E[Z_n**(-r)] from the truncated law.

    Requires zero mass at state 0.  The lower bound ignores escaped mass;
    the upper bound assigns it all to state J+1.
    """
    if r <= 0.0:
        raise DomainError(f"r must be > 0, got {r}")
    if dist.probs[0] > 0.0:
        raise ExtinctionMass(f"mass {dist.probs[0]!r} at population 0")
    j = np.arange(1, dist.J + 1, dtype=np.float64)
    lower = float(np.dot(dist.probs[1:], j ** (-r)))
    upper = lower + dist.deficit * float(dist.J + 1) ** (-r)
    return lower, upper


def default_truncation(env: EnvironmentModel, k: int, n: int) -> int:
    """Heuristic truncation: max(200, k * ceil(E m0)**n), capped at 5000."""
    growth = math.ceil(env_mean(env))
    if growth <= 1:
        return 200
    # k * growth**n without overflow
    log_cap = math.log(5000.0 / max(k, 1))
    if n * math.log(growth) >= log_cap:
        return 5000
    return max(200, min(5000, k * growth ** n))


def env_mean(env: EnvironmentModel) -> float:
    """Mean offspring number averaged over the environment, E m0."""
    return float(np.dot(env.weights, env.mean_vector()))


def dist_to_csv(dist: DistributionVector, out: TextIO) -> None:
    """Write rows ``n,j,prob`` for states with nonzero mass, then a
    trailing deficit row, in ascending-j order."""
    out.write("n,j,prob\n")
    for j in np.nonzero(dist.probs)[0]:
        out.write(f"{dist.n},{j},{dist.probs[j]:.17g}\n")
    out.write(f"{dist.n},deficit,{dist.deficit:.17g}\n")
