"""Command-line surface: gen, certify, solve, connect, experiment, verify.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 certification reject,
4 no path found, 5 numeric failure.  Every command prints a JSON run report
to stdout; results are deterministic for a fixed seed (timings excluded).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__, serialize
from .admissibility import (
    certify_admissibility,
    make_admissible_space,
    theorem_constants,
)
from .connect import (
    PiecewisePath,
    connect_chain5,
    connect_two,
    monte_carlo_connectivity,
    verify_path,
)
from .errors import (
    ClearanceError,
    EscalationNeeded,
    InfeasibleError,
    InputError,
    NoPathError,
    NoSolutionError,
    NumericError,
    PreconditionError,
    ResourceError,
)
from .forms import FormSpace
from .solver import SolveOptions, solve_E, solve_null

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_REJECT = 3
EXIT_NO_PATH = 4
EXIT_NUMERIC = 5

_NUMERIC_ERRORS = (
    NoSolutionError,
    NumericError,
    InfeasibleError,
    ClearanceError,
    PreconditionError,
    ResourceError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage failures map to exit code 1."""

    def error(self, message):
        raise _UsageError(message)


def _emit(report: dict) -> None:
    sys.stdout.write(serialize.dumps(report))


def _read_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {path}: {exc}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from exc


class _IOFailure(Exception):
    pass


def _load_space(path: str) -> tuple[FormSpace, dict]:
    return serialize.space_from_document(_read_json(path))


def _load_avoid(path: str | None):
    if path is None:
        return None
    return serialize.avoid_from_document(_read_json(path))


def _parse_target(raw: str, k: int) -> np.ndarray:
    if raw.strip().lower() == "null":
        return np.zeros(k)
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise _UsageError(f"target is neither 'null' nor valid JSON: {exc}") from exc
    arr = np.asarray(data, dtype=np.float64).reshape(-1)
    if arr.shape[0] != k:
        raise _UsageError(f"target length {arr.shape[0]} does not match k={k}")
    return arr


def _parse_point(raw: str, n: int, name: str) -> np.ndarray:
    try:
        arr = np.asarray(json.loads(raw), dtype=np.float64).reshape(-1)
    except (json.JSONDecodeError, ValueError) as exc:
        raise _UsageError(f"{name} must be a JSON array: {exc}") from exc
    if arr.shape[0] != n:
        raise _UsageError(f"{name} has length {arr.shape[0]}, expected {n}")
    return arr


def _path_payload(path: PiecewisePath) -> dict:
    return {
        "knots": [k.tolist() for k in path.knots],
        "segments": [serialize.jsonable(s) for s in path.segments],
    }


def _build_parser() -> _Parser:
    parser = _Parser(prog="quadric-atlas", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="generate an admissible instance")
    p.add_argument("-k", type=int, required=True, help="number of basis forms")
    p.add_argument("-m", type=int, required=True, help="admissibility level")
    p.add_argument("-n", type=int, default=None, help="ambient dimension (default 2mk)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--disguise", action="store_true")
    p.add_argument("-o", "--out", default=None, help="instance file path (stdout report otherwise)")

    p = sub.add_parser("certify", help="net-certify m-admissibility")
    p.add_argument("instance")
    p.add_argument("-m", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.01, help="net resolution")

    p = sub.add_parser("solve", help="solve E(v) = t")
    p.add_argument("instance")
    p.add_argument("--target", required=True, help="JSON array or 'null'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--avoid", default=None, help="avoid-set JSON file")
    p.add_argument("--res-tol", type=float, default=None)

    p = sub.add_parser("connect", help="build a verified path between two points")
    p.add_argument("instance")
    p.add_argument("--p", default=None, help="first endpoint (JSON array)")
    p.add_argument("--q", default=None, help="second endpoint (JSON array)")
    p.add_argument("--random-pair", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--avoid", default=None)
    p.add_argument("--out", default=None, help="write the path to this JSON file")

    p = sub.add_parser("experiment", help="Monte Carlo connectivity statistics")
    p.add_argument("instance")
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("verify", help="re-verify a path file")
    p.add_argument("instance")
    p.add_argument("path_file")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--avoid", default=None)
    return parser


def _cmd_gen(args, argv) -> int:
    if args.k < 1 or args.m < 1:
        raise _UsageError("gen requires k >= 1 and m >= 1")
    space = make_admissible_space(
        args.k, args.m, ambient_n=args.n, seed=args.seed, disguise=args.disguise
    )
    meta = {
        "generator": "block-hyperbolic",
        "k": args.k,
        "m": args.m,
        "ambient_n": space.dim_v,
        "seed": args.seed,
        "disguise": bool(args.disguise),
    }
    document = serialize.space_to_document(space, meta)
    results = {
        "theorem_constants": [
            serialize.jsonable(theorem_constants(i, args.k, 2)) for i in (-1, 0, 1)
        ],
    }
    if args.out:
        _write_text(args.out, serialize.dumps(document))
        results["instance_path"] = args.out
    else:
        results["instance"] = document
    _emit(serialize.run_report(argv, args.seed, results, _timings(), __version__))
    return EXIT_OK


def _cmd_certify(args, argv) -> int:
    space, _ = _load_space(args.instance)
    outcome = certify_admissibility(space, args.m, args.delta)
    results = {
        "certified": outcome.certified,
        "outcome": serialize.jsonable(outcome),
    }
    _emit(serialize.run_report(argv, None, results, _timings(), __version__))
    return EXIT_OK if outcome.certified else EXIT_REJECT


def _cmd_solve(args, argv) -> int:
    space, _ = _load_space(args.instance)
    target = _parse_target(args.target, space.dim_w)
    opts = SolveOptions(seed=args.seed, avoid=_load_avoid(args.avoid))
    if args.res_tol is not None:
        opts = SolveOptions(res_tol=args.res_tol, seed=args.seed, avoid=opts.avoid)
    if not target.any():
        result = solve_null(space, opts)
    else:
        result = solve_E(space, target, opts)
    results = {
        "target": target.tolist(),
        "v": result.v.tolist(),
        "residual": result.residual,
        "restarts_used": result.restarts_used,
        "path_taken": result.path_taken,
    }
    _emit(serialize.run_report(argv, args.seed, results, _timings(), __version__))
    return EXIT_OK


def _cmd_connect(args, argv) -> int:
    space, _ = _load_space(args.instance)
    opts = SolveOptions(seed=args.seed, avoid=_load_avoid(args.avoid))
    if args.random_pair:
        from .connect import _int_seed  # stable per-seed endpoint derivation

        p = solve_null(space, SolveOptions(seed=_int_seed(args.seed, "cli-pair-p", 0),
                                           avoid=opts.avoid)).v
        q = solve_null(space, SolveOptions(seed=_int_seed(args.seed, "cli-pair-q", 0),
                                           avoid=opts.avoid)).v
    else:
        if args.p is None or args.q is None:
            raise _UsageError("connect needs --p and --q, or --random-pair")
        p = _parse_point(args.p, space.dim_v, "--p")
        q = _parse_point(args.q, space.dim_v, "--q")
    escalated = False
    try:
        try:
            path = connect_two(space, p, q, opts)
        except EscalationNeeded:
            escalated = True
            path = connect_chain5(space, p, q, opts)
    except NoPathError as exc:
        results = {
            "connected": False,
            "stage": exc.stage,
            "diagnostics": str(exc),
            "escalated": escalated,
            "p": p.tolist(),
            "q": q.tolist(),
        }
        _emit(serialize.run_report(argv, args.seed, results, _timings(), __version__))
        return EXIT_NO_PATH
    report = verify_path(space, path, 100, opts)
    results = {
        "connected": True,
        "escalated": escalated,
        "path": _path_payload(path),
        "verification": serialize.jsonable(report),
    }
    if args.out:
        _write_text(args.out, serialize.dumps(
            serialize.path_to_document(path.knots, {"instance": args.instance})
        ))
        results["path_file"] = args.out
    _emit(serialize.run_report(argv, args.seed, results, _timings(), __version__))
    return EXIT_OK


def _cmd_experiment(args, argv) -> int:
    space, _ = _load_space(args.instance)
    if args.pairs < 0:
        raise _UsageError("--pairs must be >= 0")
    stats = monte_carlo_connectivity(space, args.pairs, SolveOptions(seed=args.seed),
                                     seed=args.seed)
    _emit(serialize.run_report(argv, args.seed, {"statistics": serialize.jsonable(stats)},
                               _timings(), __version__))
    return EXIT_OK


def _cmd_verify(args, argv) -> int:
    space, _ = _load_space(args.instance)
    knots = serialize.path_knots_from_document(_read_json(args.path_file))
    for i, k in enumerate(knots):
        if k.shape[0] != space.dim_v:
            raise InputError(f"knot {i} has dimension {k.shape[0]}, expected {space.dim_v}")
    opts = SolveOptions(avoid=_load_avoid(args.avoid))
    from .connect import _build_path

    path = _build_path(space, knots, opts.avoid)
    report = verify_path(space, path, args.samples, opts)
    _emit(serialize.run_report(argv, None, {"verification": serialize.jsonable(report)},
                               _timings(), __version__))
    return EXIT_OK if report.verified else EXIT_NUMERIC


_START = time.perf_counter()


def _timings() -> dict:
    return {"total_s": time.perf_counter() - _START}


def main(argv=None) -> int:
    global _START
    _START = time.perf_counter()
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "gen": _cmd_gen,
            "certify": _cmd_certify,
            "solve": _cmd_solve,
            "connect": _cmd_connect,
            "experiment": _cmd_experiment,
            "verify": _cmd_verify,
        }[args.cmd]
        return handler(args, argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _IOFailure as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
