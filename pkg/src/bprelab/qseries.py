"""Small-value coefficients q_{k,j} of the population chain.

For environments with no extinction (every atom p0 = 0) and
gamma_k = E[p1**k] in (0,1), the probabilities P_k(Z_n = j) decay like
gamma_k**n * q_{k,j}.  The coefficients solve the linear recurrence

    gamma_k * q_{k,j} = sum_{i=k..j} p(i,j) q_{k,i},     q_{k,k} = 1,

which is triangular because the chain is monotone, so it is solved by
forward substitution with p(j,j) = gamma_j known in closed form.
Their generating function Q_k(t) = sum_j q_{k,j} t**j satisfies
gamma_k Q_k(t) = E[Q_k(f0(t))] on [0,1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, TextIO

import numpy as np

from .env_model import EnvironmentModel, gf_eval
from .errors import (
    DegenerateGamma,
    DomainError,
    ExtinctionPossible,
    TruncationTooSmall,
)
from .exact_engine import TransitionKernel, build_kernel, point_mass, propagate

__all__ = [
    "QTable",
    "gamma_k",
    "gamma_vector",
    "q_table",
    "Q_eval",
    "functional_eq_residual",
    "FunctionalEqReport",
    "ratio_sequence",
    "RatioSequence",
    "recurrence_residual",
    "accessible_states",
    "qtable_to_csv",
]

_DENOM_GUARD = 1e-14


@dataclass(frozen=True)
class QTable:
    """Coefficients q_{k,j} for j = k..J (stored densely on 0..J)."""

    k: int
    J: int
    gamma_k: float
    q: np.ndarray  # (J+1,), zeros below k and at non-accessible states

    def __post_init__(self):
        self.q.setflags(write=False)


def gamma_k(env: EnvironmentModel, k: int) -> float:
    """Probability that k individuals produce exactly k children in one
    step: E[p1**k].  This is the geometric decay rate of P_k(Z_n = j)."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    p1 = env.p1_vector()
    return float(np.dot(env.weights, p1 ** k))


def gamma_vector(env: EnvironmentModel, J: int) -> np.ndarray:
    """gamma_j = E[p1**j] for j = 0..J, computed in closed form."""
    p1 = env.p1_vector()
    j = np.arange(J + 1)
    return (env.weights[:, None] * p1[:, None] ** j[None, :]).sum(axis=0)


def q_table(
    env: EnvironmentModel,
    k: int,
    J: int,
    kernel: Optional[TransitionKernel] = None,
) -> QTable:
    """Solve the decay-coefficient recurrence up to population J.

    Denominators gamma_k - gamma_j come from the closed form E[p1**j]
    rather than the kernel diagonal, so truncation never contaminates
    them.  Requires no extinction, 0 < gamma_k < 1, and gamma_k strictly
    above every gamma_j for j > k (vanishing denominators raise).
    """
    if not env.no_extinction:
        raise ExtinctionPossible("q coefficients require every atom to have p0 = 0")
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if J < k:
        raise TruncationTooSmall(f"J={J} below initial size k={k}")
    g_k = gamma_k(env, k)
    if g_k >= 1.0:
        raise DegenerateGamma("gamma_k = 1: every individual always has one child")
    if g_k <= 0.0:
        raise DegenerateGamma("gamma_k = 0: no single-child mass, P(Z_1 = k | Z_0 = k) vanishes")
    if kernel is None:
        kernel = build_kernel(env, J)
    elif kernel.J != J:
        raise TruncationTooSmall(f"kernel truncation {kernel.J} does not match J={J}")
    gam = gamma_vector(env, J)
    K = kernel.probs
    q = np.zeros(J + 1)
    q[k] = 1.0
    for j in range(k + 1, J + 1):
        denom = g_k - gam[j]
        if denom < _DENOM_GUARD:
            raise DegenerateGamma(
                f"gamma_k - gamma_{j} = {denom!r} below guard; "
                "needs an atom with p1 strictly inside (0,1)"
            )
        q[j] = float(np.dot(K[k:j, j], q[k:j])) / denom
    return QTable(k=k, J=J, gamma_k=g_k, q=q)


def recurrence_residual(qt: QTable, kernel: TransitionKernel) -> float:
    """max_j |gamma_k q_j - sum_{i=k..j} p(i,j) q_i| over j = k..J."""
    if kernel.J != qt.J:
        raise TruncationTooSmall("kernel truncation does not match table")
    K = kernel.probs
    worst = 0.0
    for j in range(qt.k, qt.J + 1):
        lhs = qt.gamma_k * qt.q[j]
        rhs = float(np.dot(K[qt.k : j + 1, j], qt.q[qt.k : j + 1]))
        worst = max(worst, abs(lhs - rhs))
    return worst


def Q_eval(qt: QTable, t: float) -> tuple[float, float]:
    """Partial sum sum_{j=k..J} q_j t**j with a heuristic geometric tail.

    The tail estimate extrapolates the last coefficient ratio
    g = q_J / q_{J-1}; it is diagnostic only and is reported, not proved.
    """
    if not (0.0 <= t < 1.0):
        raise DomainError(f"t must be in [0,1), got {t}")
    j = np.arange(qt.k, qt.J + 1, dtype=np.float64)
    value = float(np.dot(qt.q[qt.k :], t ** j))
    q_last = qt.q[qt.J]
    q_prev = qt.q[qt.J - 1] if qt.J > qt.k else 0.0
    if q_prev > 0.0 and q_last > 0.0:
        growth = q_last / q_prev
        denom = 1.0 - t * growth
        tail = q_last * t ** (qt.J + 1) / denom if denom > 0.0 else float("inf")
    else:
        tail = q_last * t ** (qt.J + 1)
    return value, float(tail)


@dataclass(frozen=True)
class FunctionalEqReport:
    """Residuals of gamma_k Q_k(t) = E[Q_k(f0(t))] on a t-grid."""

    t_grid: tuple[float, ...]
    residuals: tuple[float, ...]
    tolerances: tuple[float, ...]  # tail estimates plus a rounding floor, per t
    max_residual: float
    max_tolerance: float

    def entries(self) -> list[dict]:
        return [
            {"t": t, "residual": r, "tolerance": tol}
            for t, r, tol in zip(self.t_grid, self.residuals, self.tolerances)
        ]


def functional_eq_residual(
    qt: QTable, env: EnvironmentModel, t_grid: Sequence[float]
) -> FunctionalEqReport:
    """Check gamma_k Q_k(t) = E[Q_k(f0(t))] on a grid with t <= 0.9.

    The per-t tolerance adds both truncation tail estimates (at t and at
    each f_e(t) <= t) to a floating-point floor proportional to the
    evaluated magnitudes.
    """
    residuals, tolerances = [], []
    for t in t_grid:
        if not (0.0 <= t <= 0.9):
            raise DomainError(f"t grid must lie in [0, 0.9], got {t}")
        lhs, lhs_tail = Q_eval(qt, t)
        rhs = 0.0
        tail = qt.gamma_k * lhs_tail
        mags = qt.gamma_k * abs(lhs)
        for w, law in env.atoms:
            v, vt = Q_eval(qt, gf_eval(law, t))
            rhs += w * v
            tail += w * vt
            mags += w * abs(v)
        residuals.append(abs(qt.gamma_k * lhs - rhs))
        # floor: accumulated rounding over ~J-term Horner sums
        tolerances.append(tail + 1e-12 * (1.0 + mags))
    return FunctionalEqReport(
        t_grid=tuple(float(t) for t in t_grid),
        residuals=tuple(residuals),
        tolerances=tuple(tolerances),
        max_residual=max(residuals),
        max_tolerance=max(tolerances),
    )


@dataclass(frozen=True)
class RatioSequence:
    """a_{k,n}(j) = P_k(Z_n = j) / gamma_k**n for n = 0..n_max."""

    k: int
    j: int
    values: np.ndarray
    nondecreasing: bool  # within 1e-12 slack

    def __post_init__(self):
        self.values.setflags(write=False)


def ratio_sequence(
    env: EnvironmentModel,
    k: int,
    j: int,
    n_max: int,
    J: Optional[int] = None,
) -> RatioSequence:
    """Normalized probabilities a_{k,n}(j), which increase to q_{k,j}.

    States never reached report 0 by convention even when gamma_k**n
    underflows or vanishes (0/0 is taken as 0: the numerator is exactly
    zero for non-accessible states).
    """
    if j < k:
        raise DomainError(f"j={j} below initial size k={k}")
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    if J is None:
        J = max(200, 2 * j, k)
    g_k = gamma_k(env, k)
    kernel = build_kernel(env, J)
    dist = point_mass(k, J)
    values = np.empty(n_max + 1)
    g_pow = 1.0
    for n in range(n_max + 1):
        p = float(dist.probs[j])
        values[n] = 0.0 if p == 0.0 else p / g_pow
        if n < n_max:
            dist = propagate(kernel, dist)
            g_pow *= g_k
    diffs = np.diff(values)
    return RatioSequence(k=k, j=j, values=values, nondecreasing=bool(np.all(diffs >= -1e-12)))


def accessible_states(env: EnvironmentModel, k: int, J: int, kernel: Optional[TransitionKernel] = None) -> np.ndarray:
    """Boolean mask over 0..J of states reachable from k in the truncated
    kernel's directed graph."""
    if kernel is None:
        kernel = build_kernel(env, J)
    edges = kernel.probs > 0.0
    reach = np.zeros(J + 1, dtype=bool)
    reach[k] = True
    while True:
        new = edges[reach].any(axis=0) | reach
        if bool(np.all(new == reach)):
            return reach
        reach = new


def qtable_to_csv(qt: QTable, out: TextIO) -> None:
    """Write rows ``k,j,q`` for j = k..J in ascending order."""
    out.write("k,j,q\n")
    for j in range(qt.k, qt.J + 1):
        out.write(f"{qt.k},{j},{qt.q[j]:.17g}\n")
