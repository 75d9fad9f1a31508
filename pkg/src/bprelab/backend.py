"""Simulation backend selection.

The hot path kernels exist twice: numba-compiled scalar loops
(`_kernels_numba`) and a vectorized pure-numpy fallback
(`_kernels_numpy`).  Both produce identical per-path results.  The
environment variable ``BPRE_LAB_BACKEND`` (``numba`` or ``numpy``)
selects one explicitly; the default is numba when importable.
"""

from __future__ import annotations

import os

from .errors import ValidationError

BACKEND_ENV_VAR = "BPRE_LAB_BACKEND"

_numba_module = None
_numba_import_failed = False


def _try_numba():
    global _numba_module, _numba_import_failed
    if _numba_module is None and not _numba_import_failed:
        try:
            from . import _kernels_numba

            _numba_module = _kernels_numba
        except ImportError:
            _numba_import_failed = True
    return _numba_module


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if _try_numba() is not None else ("numpy",)


def active_backend() -> str:
    """Backend selected by the environment flag, resolved at call time."""
    choice = os.environ.get(BACKEND_ENV_VAR, "").strip().lower()
    if choice == "":
        return "numba" if _try_numba() is not None else "numpy"
    if choice not in ("numba", "numpy"):
        raise ValidationError(
            f"{BACKEND_ENV_VAR}={choice!r}: must be 'numba' or 'numpy'"
        )
    if choice == "numba" and _try_numba() is None:
        raise ValidationError("numba backend requested but numba is not importable")
    return choice


def get_simulate_block(backend: str | None = None):
    name = backend if backend is not None else active_backend()
    if name == "numba":
        mod = _try_numba()
        if mod is None:
            raise ValidationError("numba backend requested but numba is not importable")
        return mod.simulate_block
    if name == "numpy":
        from . import _kernels_numpy

        return _kernels_numpy.simulate_block
    raise ValidationError(f"unknown backend {name!r}")


def set_threads(n: int | None) -> None:
    """Pin the numba thread count. No effect on the numpy backend; results
    are identical for any thread count either way."""
    if n is None:
        return
    if n < 1:
        raise ValidationError(f"threads must be >= 1, got {n}")
    try:
        import numba
    except ImportError:
        return
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
