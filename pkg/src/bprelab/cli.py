"""Command-line front end.

Exit codes: 0 success, 2 invalid input (bad flags, files, or
preconditions), 3 numerical failure (no root, degenerate inputs).
Every file output embeds its run manifest (JSON) or is accompanied by a
``<out>.manifest.json`` sidecar (CSV).
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import time

import numpy as np

from . import __version__, backend
from .env_model import load_env_file
from .errors import NumericalError, ValidationError
from .exact_engine import build_kernel, default_truncation, dist_to_csv, exact_dist
from .exponents import build_report
from .montecarlo import (
    SimConfig,
    estimate_harmonic_moment_W,
    estimate_laplace,
    simulate_ensemble,
    tilted_harmonic_Zn,
)
from .qseries import q_table, qtable_to_csv, recurrence_residual
from .verify import run_suite, suite_names

_EPILOG = (
    "exit codes: 0 success, 2 invalid input, 3 numerical failure. "
    "Environment variables: BPRE_LAB_SEED (seed fallback), "
    "BPRE_LAB_BACKEND (numba|numpy)."
)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env_seed = os.environ.get("BPRE_LAB_SEED")
    if env_seed is not None:
        try:
            return int(env_seed)
        except ValueError as exc:
            raise ValidationError(f"BPRE_LAB_SEED={env_seed!r} is not an integer") from exc
    return 0


def _manifest(args, command: str, params: dict, seed=None, t0: float = 0.0) -> dict:
    return {
        "command": command,
        "env_file": getattr(args, "env", None),
        "params": params,
        "seed": seed,
        "version": __version__,
        "duration_s": round(time.perf_counter() - t0, 6),
    }


def _emit_json(payload: dict, out_path) -> None:
    text = json.dumps(payload, indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _emit_csv(csv_text: str, manifest: dict, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text)
        with open(str(out_path) + ".manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    else:
        sys.stdout.write(csv_text)


def _cmd_exact(args) -> int:
    t0 = time.perf_counter()
    env = load_env_file(args.env)
    J = args.J if args.J is not None else default_truncation(env, args.k, args.n)
    dist = exact_dist(env, args.k, args.n, J)
    params = {"k": args.k, "n": args.n, "J": J, "format": args.format}
    manifest = _manifest(args, "exact", params, t0=t0)
    if args.format == "json":
        payload = {
            "manifest": manifest,
            "k": args.k,
            "n": args.n,
            "J": J,
            "probs": [
                {"j": int(j), "prob": float(dist.probs[j])}
                for j in np.nonzero(dist.probs)[0]
            ],
            "deficit": dist.deficit,
        }
        _emit_json(payload, args.out)
    else:
        buf = io.StringIO()
        dist_to_csv(dist, buf)
        _emit_csv(buf.getvalue(), manifest, args.out)
    return 0


def _cmd_qtable(args) -> int:
    t0 = time.perf_counter()
    env = load_env_file(args.env)
    J = args.J if args.J is not None else 400
    kernel = build_kernel(env, J)
    qt = q_table(env, args.k, J, kernel=kernel)
    residual = recurrence_residual(qt, kernel)
    params = {"k": args.k, "J": J, "format": args.format}
    manifest = _manifest(args, "qtable", params, t0=t0)
    manifest["max_residual"] = residual
    if args.format == "json":
        payload = {
            "manifest": manifest,
            "k": qt.k,
            "J": qt.J,
            "gamma_k": qt.gamma_k,
            "max_residual": residual,
            "q": [{"j": j, "q": float(qt.q[j])} for j in range(qt.k, qt.J + 1)],
        }
        _emit_json(payload, args.out)
    else:
        buf = io.StringIO()
        qtable_to_csv(qt, buf)
        _emit_csv(buf.getvalue(), manifest, args.out)
    return 0


def _cmd_exponents(args) -> int:
    t0 = time.perf_counter()
    env = load_env_file(args.env)
    r_values = tuple(args.r) if args.r else ()
    report = build_report(env, args.k, r_values=r_values)
    payload = {
        "manifest": _manifest(args, "exponents", {"k": args.k, "r": list(r_values)}, t0=t0),
        **report.to_dict(),
    }
    _emit_json(payload, args.out)
    return 0


def _cmd_mc(args) -> int:
    t0 = time.perf_counter()
    env = load_env_file(args.env)
    seed = _resolve_seed(args)
    backend.set_threads(args.threads)
    cfg = SimConfig(
        seed=seed,
        n_paths=args.paths,
        n_gens=args.gens,
        exact_pop_threshold=args.threshold,
        k=args.k,
    )
    extra: dict = {"backend": backend.active_backend()}
    if args.subtask == "harmonic-w":
        if args.a is None:
            raise ValidationError("mc harmonic-w requires --a")
        report = estimate_harmonic_moment_W(env, args.k, args.a, cfg)
        est = report.final
        extra["a"] = args.a
        extra["trend"] = [{"n_gens": n, **e.to_dict()} for n, e in report.trend]
    elif args.subtask == "laplace":
        if args.t is None:
            raise ValidationError("mc laplace requires --t")
        est = estimate_laplace(env, args.k, args.t, cfg)
        extra["t"] = args.t
    elif args.subtask == "tilted-zn":
        if args.r is None:
            raise ValidationError("mc tilted-zn requires --r")
        n = args.n if args.n is not None else args.gens
        est = tilted_harmonic_Zn(env, args.k, args.r, n, cfg)
        extra["r"] = args.r
        extra["n"] = n
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError(f"unknown mc subtask {args.subtask!r}")
    if args.dump_w:
        res = simulate_ensemble(env, cfg)
        with open(args.dump_w, "w", encoding="utf-8") as fh:
            fh.write("w\n")
            for v in res.w[:, -1]:
                fh.write(f"{v:.17g}\n")
        extra["w_samples"] = str(args.dump_w)
    payload = {
        "manifest": _manifest(args, f"mc {args.subtask}", extra, seed=seed, t0=t0),
        "estimate": est.point,
        "std_error": est.std_error,
        "n_paths": cfg.n_paths,
        "seed": seed,
        "config_echo": cfg.to_dict(),
        **extra,
    }
    _emit_json(payload, args.out)
    return 0


def _cmd_verify(args) -> int:
    env = load_env_file(args.env) if args.env else None
    backend.set_threads(args.threads)
    results = run_suite(args.suite, env)
    all_ok = True
    for suite in results:
        for check in suite.checks:
            status = "PASS" if check.passed else "FAIL"
            print(f"[{status}] {suite.suite} :: {check.name}: {check.detail}")
        all_ok &= suite.passed
        print(f"-- suite {suite.suite}: {'ok' if suite.passed else 'FAILED'} "
              f"({suite.elapsed_s:.2f}s)")
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bpre-lab",
        description=(
            "Numerical laboratory for supercritical branching processes in "
            "i.i.d. random environments: exact finite-horizon laws, small-value "
            "coefficients, critical exponents, and Monte-Carlo estimates."
        ),
        epilog=_EPILOG,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="exact truncated law of Z_n", epilog=_EPILOG)
    p.add_argument("--env", required=True, help="environment JSON file")
    p.add_argument("--k", type=int, default=1, help="initial population (default 1)")
    p.add_argument("--n", type=int, required=True, help="generation")
    p.add_argument("--J", type=int, default=None, help="state truncation (default heuristic)")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("qtable", help="small-value coefficients q_{k,j}", epilog=_EPILOG)
    p.add_argument("--env", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--J", type=int, default=None, help="table horizon (default 400)")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_qtable)

    p = sub.add_parser("exponents", help="critical exponents and rates", epilog=_EPILOG)
    p.add_argument("--env", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--r", type=float, action="append", default=None,
                   help="also report the tilting constant c_r (repeatable)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_exponents)

    p = sub.add_parser("mc", help="Monte-Carlo estimates", epilog=_EPILOG)
    p.add_argument("subtask", choices=("harmonic-w", "laplace", "tilted-zn"))
    p.add_argument("--env", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--a", type=float, default=None, help="harmonic-moment order of W")
    p.add_argument("--t", type=float, default=None, help="Laplace-transform argument")
    p.add_argument("--r", type=float, default=None, help="tilting order")
    p.add_argument("--n", type=int, default=None, help="target generation for tilted-zn")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (fallback: BPRE_LAB_SEED, then 0)")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--gens", type=int, default=25)
    p.add_argument("--threshold", type=int, default=10 ** 6,
                   help="population above which per-class sampling goes Gaussian")
    p.add_argument("--threads", type=int, default=None, help="numba thread count (default: all cores)")
    p.add_argument("--dump-w", default=None, help="also dump W_N samples to this CSV path")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("verify", help="run a named verification suite", epilog=_EPILOG)
    p.add_argument("suite", help=f"one of: {', '.join(suite_names())}")
    p.add_argument("--env", default=None, help="optional environment JSON file")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
