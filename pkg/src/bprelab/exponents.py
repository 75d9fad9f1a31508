"""Critical exponents and decay rates of the environment model.

All root-finding is bisection on monotone maps: the maps are cheap,
smooth, and strictly monotone on the search range, so robustness wins
over Newton-type iterations at this scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .env_model import EnvironmentModel, env_moment_m
from .errors import (
    Degenerate,
    DomainError,
    NoRoot,
    NotFractionalLinear,
    NotSupercritical,
    NumericalError,
)
from .qseries import gamma_k

__all__ = [
    "ExponentReport",
    "solve_r_k",
    "solve_a_k",
    "alpha_k",
    "classify_and_rho",
    "moment_criterion",
    "build_report",
    "REGIME_STRONG",
    "REGIME_INTERMEDIATE",
    "REGIME_WEAK",
]

_BRACKET_CAP = 1e6
_ROOT_TOL = 1e-12
_RHO_TOL = 1e-10

REGIME_STRONG = "Strong"
REGIME_INTERMEDIATE = "Intermediate"
REGIME_WEAK = "Weak"


def _bisect(f, lo: float, hi: float, tol: float) -> float:
    """Bisection for f(lo) and f(hi) of opposite sign, to |hi-lo| <= tol."""
    flo = f(lo)
    if flo == 0.0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_r_k(env: EnvironmentModel, k: int) -> float:
    """Solve E[m0**(-r)] = gamma_k for r.

    When every atom mean is at least 1 the map r -> E[m0**(-r)] decreases
    from 1 to P(m0 = 1), so a root exists iff gamma_k lies strictly
    between those limits.  Atoms with mean below 1 make the map turn back
    up eventually; E[m0**(-r)] > P(m0 = 1) still holds everywhere, so the
    no-root precondition stays valid and bisection returns a genuine root
    whenever the doubling bracket finds a sign change.
    """
    g = gamma_k(env, k)
    if not (0.0 < g < 1.0):
        raise Degenerate(f"gamma_k={g!r} outside (0,1)")
    means = env.mean_vector()
    p_m1 = float(env.weights[means == 1.0].sum())
    if g <= p_m1:
        raise NoRoot(
            f"gamma_k={g!r} <= P(m0=1)={p_m1!r}: E m0**(-r) never reaches gamma_k"
        )
    f = lambda r: env_moment_m(env, -r) - g
    hi = 1.0
    while f(hi) > 0.0:
        hi *= 2.0
        if hi > _BRACKET_CAP:
            raise NoRoot(f"no sign change up to r={_BRACKET_CAP}")
    return _bisect(f, 0.0, hi, _ROOT_TOL)


def solve_a_k(env: EnvironmentModel, k: int) -> float:
    """Solve E[p1**k * m0**a] = 1 for a: the critical order below which the
    inverse moments of the martingale limit are finite."""
    g = gamma_k(env, k)
    if not (0.0 < g < 1.0):
        raise Degenerate(f"gamma_k={g!r} outside (0,1)")
    # atoms with p1 = 0 contribute exactly 0 for every a; dropping them
    # keeps m0**a from overflowing into a meaningless 0 * inf
    keep = env.p1_vector() > 0.0
    w = env.weights[keep]
    p1 = env.p1_vector()[keep]
    means = env.mean_vector()[keep]

    def f(a: float) -> float:
        with np.errstate(over="ignore"):
            return float(np.dot(w, p1 ** k * means ** a)) - 1.0

    if np.all(means <= 1.0):
        raise NoRoot(
            "every atom with p1 > 0 has m0 <= 1: E[p1**k m0**a] is bounded below 1"
        )
    hi = 1.0
    while f(hi) < 0.0:
        hi *= 2.0
        if hi > _BRACKET_CAP:
            raise NoRoot(f"E[p1**k m0**a] stays below 1 up to a={_BRACKET_CAP}")
    return _bisect(f, 0.0, hi, _ROOT_TOL)


def alpha_k(env: EnvironmentModel, k: int, p: float) -> float:
    """Closed-form lower exponent p / (1 - log E[m0**p] / log gamma_k).

    Inverse moments of the martingale limit of every order below this
    value are finite.  Returns p itself when gamma_k = 0.
    """
    if p <= 0.0:
        raise DomainError(f"p must be > 0, got {p}")
    g = gamma_k(env, k)
    if g >= 1.0:
        raise Degenerate("gamma_k = 1: single-child probability is degenerate")
    if g == 0.0:
        return p
    return p / (1.0 - math.log(env_moment_m(env, p)) / math.log(g))


def moment_criterion(env: EnvironmentModel, k: int, a: float) -> bool:
    """True iff E[p1**k * m0**a] < 1, i.e. E_k[W**(-a)] is finite."""
    if a <= 0.0:
        raise DomainError(f"a must be > 0, got {a}")
    w = env.weights
    return bool(np.dot(w, env.p1_vector() ** k * env.mean_vector() ** a) < 1.0)


def _golden_min(f, lo: float, hi: float, tol: float) -> float:
    """Golden-section minimum of a unimodal f on [lo, hi] to width tol."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def classify_and_rho(env: EnvironmentModel) -> tuple[str, float]:
    """Regime and decay rate rho of P(Z_n = j) for fractional-linear
    environments, from the log offspring mean X = log m0.

    E[X e**(-X)] > 0, = 0, < 0 gives the strongly, intermediately, and
    weakly supercritical regimes.  In the first two, rho = -log E[e**(-X)];
    in the weak regime rho = -log inf_{lam >= 0} E[e**(-lam X)], located by
    golden-section after a unimodality check on a coarse grid.
    """
    if not env.is_fractional_linear:
        raise NotFractionalLinear("rho is only computed for fractional-linear atoms")
    if env.mu() <= 0.0:
        raise NotSupercritical(f"E log m0 = {env.mu()!r} <= 0")
    w = env.weights
    means = env.mean_vector()
    x = np.log(means)
    drift = float(np.dot(w, x * np.exp(-x)))  # E[X e^-X] = E[(log m0)/m0]
    if drift > 1e-12:
        return REGIME_STRONG, -math.log(env_moment_m(env, -1.0))
    if drift >= -1e-12:
        return REGIME_INTERMEDIATE, -math.log(env_moment_m(env, -1.0))

    def c(lam: float) -> float:
        return float(np.dot(w, means ** (-lam)))

    def dc(lam: float) -> float:
        return float(np.dot(w, -x * means ** (-lam)))

    lam_hi = 1.0
    while dc(lam_hi) < 0.0:
        lam_hi *= 2.0
        if lam_hi > _BRACKET_CAP:
            raise NumericalError("derivative of E m0**(-lam) never turns positive")
    grid = np.linspace(0.0, lam_hi, 1001)
    vals = np.dot(np.power.outer(means, -grid).T, w)
    sign_changes = int(np.count_nonzero(np.diff(np.sign(np.diff(vals)))))
    if sign_changes > 1:
        raise NumericalError("E m0**(-lam) not unimodal on the scanned range")
    lam_star = _golden_min(c, 0.0, lam_hi, _RHO_TOL)
    return REGIME_WEAK, -math.log(c(lam_star))


@dataclass(frozen=True)
class ExponentReport:
    """All exponents for one (environment, k) pair, JSON-serializable."""

    k: int
    gamma_k: float
    mu: float
    r_k: Optional[float] = None
    r_k_unsolvable_reason: Optional[str] = None
    a_k: Optional[float] = None
    a_k_unsolvable_reason: Optional[str] = None
    alpha_k: Optional[float] = None
    alpha_p: float = 1.0
    c_r: tuple[tuple[float, float], ...] = ()
    regime: str = "NotApplicable"
    rho: Optional[float] = None
    rho_unsolvable_reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "gamma_k": self.gamma_k,
            "mu": self.mu,
            "r_k": self.r_k,
            "r_k_unsolvable_reason": self.r_k_unsolvable_reason,
            "a_k": self.a_k,
            "a_k_unsolvable_reason": self.a_k_unsolvable_reason,
            "alpha_k": self.alpha_k,
            "alpha_p": self.alpha_p,
            "c_r": [{"r": r, "c_r": c} for r, c in self.c_r],
            "regime": self.regime,
            "rho": self.rho,
            "rho_unsolvable_reason": self.rho_unsolvable_reason,
        }


def build_report(
    env: EnvironmentModel,
    k: int,
    r_values: tuple[float, ...] = (),
    alpha_p: float = 1.0,
) -> ExponentReport:
    """Solve every exponent that exists for this environment, recording a
    reason string for each one that does not."""
    mu = env.mu()
    if mu <= 0.0:
        raise NotSupercritical(f"E log m0 = {mu!r} <= 0")
    g = gamma_k(env, k)
    r_k = a_k = None
    r_reason = a_reason = None
    try:
        r_k = solve_r_k(env, k)
    except (NoRoot, Degenerate) as exc:
        r_reason = str(exc)
    try:
        a_k = solve_a_k(env, k)
    except (NoRoot, Degenerate) as exc:
        a_reason = str(exc)
    try:
        alpha = alpha_k(env, k, alpha_p)
    except Degenerate:
        alpha = None
    regime, rho, rho_reason = "NotApplicable", None, None
    try:
        regime, rho = classify_and_rho(env)
    except NotFractionalLinear as exc:
        rho_reason = str(exc)
    c_r = tuple((float(r), env_moment_m(env, -float(r))) for r in r_values)
    return ExponentReport(
        k=k,
        gamma_k=g,
        mu=mu,
        r_k=r_k,
        r_k_unsolvable_reason=r_reason,
        a_k=a_k,
        a_k_unsolvable_reason=a_reason,
        alpha_k=alpha,
        alpha_p=alpha_p,
        c_r=c_r,
        regime=regime,
        rho=rho,
        rho_unsolvable_reason=rho_reason,
    )
