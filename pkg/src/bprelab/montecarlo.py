"""Monte-Carlo simulation of population paths at scale.

Paths are embarrassingly parallel: each is a pure function of
(seed, path index), with uniforms drawn from stateless counter-based
streams (see `_mcrng`).  Ensembles are therefore bit-reproducible for a
given seed regardless of backend batching or thread count, and path i is
the same path in any ensemble containing it.  Aggregation uses numpy's
deterministic pairwise reductions over path-indexed arrays.

Per generation the offspring histogram of the whole population is drawn
at O(max offspring) cost via chained conditional binomials, exact while
the population is at most `exact_pop_threshold` and by a rounded,
clamped Gaussian per class (matching the multinomial covariance) above
it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import backend
from .env_model import EnvironmentModel, env_moment_m
from .errors import DomainError, ExtinctionPossible, ValidationError
from .exact_engine import Trajectory

__all__ = [
    "SimConfig",
    "EstimateWithCI",
    "EnsembleResult",
    "HarmonicMomentReport",
    "simulate_path",
    "simulate_ensemble",
    "estimate_harmonic_moment_W",
    "estimate_laplace",
    "tilted_harmonic_Zn",
    "plain_harmonic_Zn",
    "tilted_weights",
]

_MAX_SEED = 2 ** 64
_MAX_THRESHOLD = 2 ** 53


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters; everything that determines an ensemble."""

    seed: int
    n_paths: int
    n_gens: int
    exact_pop_threshold: int = 10 ** 6
    k: int = 1
    tilt_r: Optional[float] = None

    def __post_init__(self):
        if not (0 <= self.seed < _MAX_SEED):
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.n_paths < 1:
            raise ValidationError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.n_gens < 1:
            raise ValidationError(f"n_gens must be >= 1, got {self.n_gens}")
        if self.exact_pop_threshold < 10 ** 3:
            raise ValidationError(
                f"exact_pop_threshold must be >= 1000, got {self.exact_pop_threshold}"
            )
        if self.exact_pop_threshold > _MAX_THRESHOLD:
            raise ValidationError("exact_pop_threshold above 2**53 loses integer exactness")
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_paths": self.n_paths,
            "n_gens": self.n_gens,
            "exact_pop_threshold": self.exact_pop_threshold,
            "k": self.k,
            "tilt_r": self.tilt_r,
        }


@dataclass(frozen=True)
class EstimateWithCI:
    point: float
    std_error: float
    n_effective: int
    method: str  # "plain" or "tilted"

    def to_dict(self) -> dict:
        return {
            "estimate": self.point,
            "std_error": self.std_error,
            "n_effective": self.n_effective,
            "method": self.method,
        }


@dataclass(frozen=True)
class EnsembleResult:
    """Checkpointed path data: arrays indexed (path, checkpoint)."""

    checkpoints: np.ndarray
    z: np.ndarray
    w: np.ndarray
    pi: np.ndarray
    flags: np.ndarray  # uint8 per path: bit 0 Gaussian step used, bit 1 monotonicity violated

    @property
    def any_approximate(self) -> bool:
        return bool(np.any(self.flags & 1))

    @property
    def any_monotone_violation(self) -> bool:
        return bool(np.any(self.flags & 2))


def _env_arrays(env: EnvironmentModel, weights: Optional[np.ndarray] = None):
    w = env.weights if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != env.weights.shape:
        raise ValidationError("weight override must match the number of atoms")
    cumw = np.cumsum(w)
    pmf = env.pmf_table()
    sup = np.array([np.flatnonzero(row).max() + 1 for row in pmf], dtype=np.int64)
    means = env.mean_vector()
    return cumw, pmf, sup, means


def simulate_ensemble(
    env: EnvironmentModel,
    cfg: SimConfig,
    checkpoints: Optional[Sequence[int]] = None,
    weights: Optional[np.ndarray] = None,
    path_offset: int = 0,
    backend_name: Optional[str] = None,
) -> EnsembleResult:
    """Simulate cfg.n_paths paths, recording (z, w, pi) at the requested
    generations (default: only the final one)."""
    if checkpoints is None:
        cps = np.array([cfg.n_gens], dtype=np.int64)
    else:
        cps = np.asarray(sorted(set(int(c) for c in checkpoints)), dtype=np.int64)
        if cps.size == 0 or cps[0] < 0 or cps[-1] > cfg.n_gens:
            raise DomainError("checkpoints must be within [0, n_gens]")
    cumw, pmf, sup, means = _env_arrays(env, weights)
    kernel = backend.get_simulate_block(backend_name)
    z, w, pi, flags = kernel(
        np.uint64(cfg.seed),
        path_offset,
        cfg.n_paths,
        cfg.k,
        cfg.n_gens,
        cps,
        cumw,
        pmf,
        sup,
        means,
        float(cfg.exact_pop_threshold),
        env.no_extinction,
    )
    return EnsembleResult(checkpoints=cps, z=z, w=w, pi=pi, flags=flags)


def simulate_path(
    env: EnvironmentModel,
    k: int,
    n_gens: int,
    seed: int,
    path_index: int = 0,
    exact_pop_threshold: int = 10 ** 6,
) -> Trajectory:
    """One full path with per-generation (z, pi, w).

    `path_index` selects the same counter-based stream the path would use
    inside any ensemble with this seed.
    """
    cfg = SimConfig(
        seed=seed, n_paths=1, n_gens=n_gens, exact_pop_threshold=exact_pop_threshold, k=k
    )
    res = simulate_ensemble(
        env, cfg, checkpoints=range(n_gens + 1), path_offset=path_index
    )
    return Trajectory(
        z=res.z[0].copy(),
        pi=res.pi[0].copy(),
        w=res.w[0].copy(),
        approximate=bool(res.flags[0] & 1),
    )


def _mean_se(payoff: np.ndarray, method: str) -> EstimateWithCI:
    n = payoff.size
    point = float(np.mean(payoff))
    se = float(np.std(payoff, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return EstimateWithCI(point=point, std_error=se, n_effective=n, method=method)


@dataclass(frozen=True)
class HarmonicMomentReport:
    """Estimate of E[W_N**(-a)] with the trend over nested horizons."""

    final: EstimateWithCI
    trend: tuple[tuple[int, EstimateWithCI], ...]

    def to_dict(self) -> dict:
        return {
            "final": self.final.to_dict(),
            "trend": [{"n_gens": n, **e.to_dict()} for n, e in self.trend],
        }


def estimate_harmonic_moment_W(
    env: EnvironmentModel, k: int, a: float, cfg: SimConfig
) -> HarmonicMomentReport:
    """Estimate E[W_N**(-a)] by plain Monte Carlo, reporting the same
    estimate at N/4 and N/2 so divergence (a above the critical order)
    shows up as growth across the trend."""
    if a <= 0.0:
        raise DomainError(f"a must be > 0, got {a}")
    if not env.no_extinction:
        raise ExtinctionPossible("W**(-a) requires every atom to have p0 = 0")
    cfg = replace(cfg, k=k)
    horizons = sorted({max(1, cfg.n_gens // 4), max(1, cfg.n_gens // 2), cfg.n_gens})
    res = simulate_ensemble(env, cfg, checkpoints=horizons)
    trend = []
    for idx, n in enumerate(horizons):
        trend.append((n, _mean_se(res.w[:, idx] ** (-a), "plain")))
    return HarmonicMomentReport(final=trend[-1][1], trend=tuple(trend))


def estimate_laplace(env: EnvironmentModel, k: int, t: float, cfg: SimConfig) -> EstimateWithCI:
    """Estimate E[exp(-t W_N)], the Laplace transform of the martingale
    limit proxied at horizon N."""
    if t < 0.0:
        raise DomainError(f"t must be >= 0, got {t}")
    cfg = replace(cfg, k=k)
    res = simulate_ensemble(env, cfg)
    return _mean_se(np.exp(-t * res.w[:, -1]), "plain")


def tilted_weights(env: EnvironmentModel, r: float) -> np.ndarray:
    """Environment weights reweighted by m0**(-r) / E[m0**(-r)]: the
    change of measure that makes small-population paths typical."""
    c_r = env_moment_m(env, -r)
    w = env.weights * env.mean_vector() ** (-r) / c_r
    return w / w.sum()


def tilted_harmonic_Zn(
    env: EnvironmentModel, k: int, r: float, n: int, cfg: SimConfig
) -> EstimateWithCI:
    """Unbiased importance-sampling estimate of E_k[Z_n**(-r)].

    Simulates under environment weights tilted by m0**(-r)/c_r (offspring
    draws unchanged) and averages c_r**n * k**(-r) * W_n**(-r), which has
    the same expectation as Z_n**(-r) under the plain measure.
    """
    if r <= 0.0:
        raise DomainError(f"r must be > 0, got {r}")
    if not env.no_extinction:
        raise ExtinctionPossible("Z_n**(-r) tilting requires every atom to have p0 = 0")
    if n < 0 or n > cfg.n_gens:
        raise DomainError(f"n must be in [0, n_gens], got {n}")
    cfg = replace(cfg, k=k, tilt_r=r)
    if n == 0:
        point = float(k) ** (-r)
        return EstimateWithCI(point=point, std_error=0.0, n_effective=cfg.n_paths, method="tilted")
    c_r = env_moment_m(env, -r)
    res = simulate_ensemble(env, cfg, checkpoints=[n], weights=tilted_weights(env, r))
    payoff = c_r ** n * float(k) ** (-r) * res.w[:, 0] ** (-r)
    return _mean_se(payoff, "tilted")


def plain_harmonic_Zn(
    env: EnvironmentModel, k: int, r: float, n: int, cfg: SimConfig
) -> EstimateWithCI:
    """Plain Monte-Carlo estimate of E_k[Z_n**(-r)], for comparison with
    the tilted estimator."""
    if r <= 0.0:
        raise DomainError(f"r must be > 0, got {r}")
    if not env.no_extinction:
        raise ExtinctionPossible("Z_n**(-r) requires every atom to have p0 = 0")
    if n < 0 or n > cfg.n_gens:
        raise DomainError(f"n must be in [0, n_gens], got {n}")
    cfg = replace(cfg, k=k)
    if n == 0:
        point = float(k) ** (-r)
        return EstimateWithCI(point=point, std_error=0.0, n_effective=cfg.n_paths, method="plain")
    res = simulate_ensemble(env, cfg, checkpoints=[n])
    return _mean_se(res.z[:, 0] ** (-r), "plain")
