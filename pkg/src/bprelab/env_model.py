"""Finite environment models over finite-support offspring laws.

An environment is a finite mixture of offspring probability mass functions.
Every expectation over the environment reduces to a weighted sum over the
atoms, so all quantities here are exactly computable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    BadNormalization,
    BadParams,
    DomainError,
    NegativeMass,
    ValidationError,
    ZeroMean,
)

__all__ = [
    "OffspringLaw",
    "EnvironmentModel",
    "FractionalLinearParams",
    "make_offspring_law",
    "gf_eval",
    "fractional_linear_law",
    "env_expectation",
    "env_moment_m",
    "make_environment",
    "load_env_file",
    "parse_env_dict",
]

_SUM_TOL = 1e-9
_NEG_TOL = -1e-15


@dataclass(frozen=True)
class FractionalLinearParams:
    """Parameters of a geometric-tail offspring family.

    p0 = a0 and p_k proportional to b0**k for k >= 1, truncated at M.
    When M is None the smallest truncation with tail mass below 1e-12
    is chosen.
    """

    a0: float
    b0: float
    M: Optional[int] = None

    def __post_init__(self):
        if not (0.0 <= self.a0 < 1.0):
            raise BadParams(f"a0 must be in [0,1), got {self.a0}")
        if not (0.0 < self.b0 < 1.0):
            raise BadParams(f"b0 must be in (0,1), got {self.b0}")
        if self.a0 + self.b0 > 1.0:
            raise BadParams(f"a0 + b0 must be <= 1, got {self.a0 + self.b0}")
        if self.M is not None and self.M < 1:
            raise BadParams(f"M must be >= 1, got {self.M}")


@dataclass(frozen=True)
class OffspringLaw:
    """One environment realization: offspring pmf p_0..p_M with cached mean.

    `no_extinction` is True iff p_0 == 0 exactly.  `fl` records the
    generating parameters when the law was built by
    :func:`fractional_linear_law`, which some rate computations require.
    """

    pmf: np.ndarray
    mean: float
    no_extinction: bool
    fl: Optional[FractionalLinearParams] = None

    def __post_init__(self):
        self.pmf.setflags(write=False)

    @property
    def max_offspring(self) -> int:
        return len(self.pmf) - 1

    @property
    def p1(self) -> float:
        return float(self.pmf[1]) if len(self.pmf) > 1 else 0.0


def make_offspring_law(pmf: Sequence[float], fl: Optional[FractionalLinearParams] = None) -> OffspringLaw:
    """Validate and normalize an offspring pmf.

    Entries in [-1e-15, 0) are clamped to 0; the vector must sum to 1
    within 1e-9 and is then rescaled to sum to 1 exactly.
    """
    v = np.asarray(pmf, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValidationError("pmf must be a nonempty 1-d vector")
    if np.any(v < _NEG_TOL):
        raise NegativeMass(f"pmf has entries below {_NEG_TOL}")
    v = np.where(v < 0.0, 0.0, v)
    s = float(v.sum())
    if abs(s - 1.0) > _SUM_TOL:
        raise BadNormalization(f"pmf sums to {s!r}, outside 1 +- {_SUM_TOL}")
    v = v / s
    mean = float(np.dot(np.arange(v.size), v))
    return OffspringLaw(pmf=v, mean=mean, no_extinction=(v[0] == 0.0), fl=fl)


def gf_eval(law: OffspringLaw, t: float) -> float:
    """Generating function sum_i p_i t**i, evaluated by Horner on [0, 1]."""
    if not (0.0 <= t <= 1.0):
        raise DomainError(f"t must be in [0,1], got {t}")
    acc = 0.0
    for p in law.pmf[::-1]:
        acc = acc * t + p
    return float(acc)


def _default_fl_truncation(a0: float, b0: float) -> int:
    # smallest M with geometric tail mass (1-a0)*b0**M < 1e-12
    target = 1e-12 / (1.0 - a0)
    return max(1, int(math.ceil(math.log(target) / math.log(b0))))


def fractional_linear_law(params: FractionalLinearParams) -> OffspringLaw:
    """Truncated geometric-tail law: p0 = a0, p_k = (1-a0)(1-b0)/b0 * b0**k.

    The geometric tail mass beyond M is folded into p_M so the pmf sums
    to 1 exactly.
    """
    a0, b0 = params.a0, params.b0
    M = params.M if params.M is not None else _default_fl_truncation(a0, b0)
    k = np.arange(1, M + 1, dtype=np.float64)
    pmf = np.empty(M + 1)
    pmf[0] = a0
    pmf[1:] = (1.0 - a0) * (1.0 - b0) / b0 * b0 ** k
    pmf[M] += (1.0 - a0) * b0 ** M  # fold the tail
    return make_offspring_law(pmf, fl=FractionalLinearParams(a0, b0, M))


@dataclass(frozen=True)
class EnvironmentModel:
    """Finite mixture of offspring laws with positive weights summing to 1."""

    weights: np.ndarray
    laws: tuple[OffspringLaw, ...]
    max_offspring: int

    def __post_init__(self):
        self.weights.setflags(write=False)

    @property
    def n_atoms(self) -> int:
        return len(self.laws)

    @property
    def atoms(self) -> list[tuple[float, OffspringLaw]]:
        return [(float(w), law) for w, law in zip(self.weights, self.laws)]

    @property
    def no_extinction(self) -> bool:
        """True iff every atom has p0 = 0."""
        return all(law.no_extinction for law in self.laws)

    @property
    def is_fractional_linear(self) -> bool:
        return all(law.fl is not None for law in self.laws)

    def p1_vector(self) -> np.ndarray:
        return np.array([law.p1 for law in self.laws])

    def mean_vector(self) -> np.ndarray:
        return np.array([law.mean for law in self.laws])

    def pmf_table(self) -> np.ndarray:
        """Atom pmfs padded with zeros to a common width (n_atoms, M+1)."""
        table = np.zeros((self.n_atoms, self.max_offspring + 1))
        for i, law in enumerate(self.laws):
            table[i, : len(law.pmf)] = law.pmf
        return table

    def mu(self) -> float:
        """Mean log offspring mean, E log m0 (nats). Positive means supercritical."""
        means = self.mean_vector()
        if np.any(means <= 0.0):
            raise ZeroMean("an atom has mean 0; log m0 undefined")
        return float(np.dot(self.weights, np.log(means)))


def make_environment(atoms: Sequence[tuple[float, OffspringLaw]]) -> EnvironmentModel:
    """Build an environment from (weight, law) pairs.

    Weights must be positive and sum to 1 within 1e-9; they are rescaled
    to sum to 1 exactly.
    """
    if len(atoms) == 0:
        raise ValidationError("environment needs at least one atom")
    w = np.array([float(a[0]) for a in atoms], dtype=np.float64)
    if np.any(w <= 0.0):
        raise ValidationError("atom weights must be positive")
    s = float(w.sum())
    if abs(s - 1.0) > _SUM_TOL:
        raise BadNormalization(f"weights sum to {s!r}, outside 1 +- {_SUM_TOL}")
    w = w / s
    laws = tuple(a[1] for a in atoms)
    return EnvironmentModel(
        weights=w,
        laws=laws,
        max_offspring=max(law.max_offspring for law in laws),
    )


def env_expectation(env: EnvironmentModel, g: Callable[[OffspringLaw], float]) -> float:
    """Expectation of a functional of the environment atom: sum_e w_e g(law_e)."""
    return float(sum(w * g(law) for w, law in env.atoms))


def env_moment_m(env: EnvironmentModel, s: float) -> float:
    """Moment of the offspring mean, E m0**s, for any real s.

    May legitimately overflow to inf (means below 1 with very negative s,
    or above 1 with very positive s); that is the correct value of the
    expectation, so no warning is raised.
    """
    means = env.mean_vector()
    if s < 0.0 and np.any(means == 0.0):
        raise ZeroMean("negative moment of a zero mean")
    with np.errstate(over="ignore"):
        return float(np.dot(env.weights, means ** s))


# -- environment files --------------------------------------------------------
#
# JSON schema (unknown keys are rejected at every level):
#   {"atoms": [{"weight": w, "pmf": [p0, p1, ...]}, ...]}
#   {"atoms": [{"weight": w, "fractional_linear": {"a0": .., "b0": .., "M": ..}}, ...]}
#   {"fractional_linear": {"a0": .., "b0": .., "M": ..}}    # single atom, weight 1
# "M" is optional inside "fractional_linear".


def _check_keys(d: dict, allowed: set, where: str):
    unknown = set(d) - allowed
    if unknown:
        raise ValidationError(f"unknown keys {sorted(unknown)} in {where}")


def _parse_fl(d: dict, where: str) -> OffspringLaw:
    _check_keys(d, {"a0", "b0", "M"}, where)
    if "a0" not in d or "b0" not in d:
        raise ValidationError(f"{where} requires a0 and b0")
    M = d.get("M")
    return fractional_linear_law(FractionalLinearParams(float(d["a0"]), float(d["b0"]), None if M is None else int(M)))


def parse_env_dict(doc: dict) -> EnvironmentModel:
    """Parse the documented environment schema into a model."""
    if not isinstance(doc, dict):
        raise ValidationError("environment document must be an object")
    _check_keys(doc, {"atoms", "fractional_linear"}, "environment")
    if ("atoms" in doc) == ("fractional_linear" in doc):
        raise ValidationError("environment must have exactly one of 'atoms' or 'fractional_linear'")
    if "fractional_linear" in doc:
        return make_environment([(1.0, _parse_fl(doc["fractional_linear"], "fractional_linear"))])
    atoms = doc["atoms"]
    if not isinstance(atoms, list) or not atoms:
        raise ValidationError("'atoms' must be a nonempty list")
    parsed = []
    for i, entry in enumerate(atoms):
        if not isinstance(entry, dict):
            raise ValidationError(f"atom {i} must be an object")
        _check_keys(entry, {"weight", "pmf", "fractional_linear"}, f"atom {i}")
        if "weight" not in entry:
            raise ValidationError(f"atom {i} missing 'weight'")
        if ("pmf" in entry) == ("fractional_linear" in entry):
            raise ValidationError(f"atom {i} must have exactly one of 'pmf' or 'fractional_linear'")
        if "pmf" in entry:
            law = make_offspring_law(entry["pmf"])
        else:
            law = _parse_fl(entry["fractional_linear"], f"atom {i} fractional_linear")
        parsed.append((float(entry["weight"]), law))
    return make_environment(parsed)


def load_env_file(path) -> EnvironmentModel:
    """Load an environment from a JSON file following the documented schema."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read environment file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"environment file {path} is not valid JSON: {exc}") from exc
    return parse_env_dict(doc)
