"""Command-line entry point: ``tplkit <command> [flags]``.

Exit codes: 0 success, 2 usage, 3 file I/O, 4 malformed input,
5 domain error, 6 computation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from tplkit import bench
from tplkit._numerics import format_real
from tplkit.allocation import allocate_exact, allocate_upper_bound, tpl_supremum
from tplkit.errors import ComputationError, DomainError, InputError, MalformedInput, TplError
from tplkit.leakage import ALGOS, compose_sequence, default_a_max, quantify, supremum
from tplkit.loss_function import generate_loss_function, precompute_params
from tplkit.matrix_model import (
    gen_random_stochastic,
    gen_strongest,
    gen_uniform,
    laplacian_smooth,
    parse_matrix,
    serialize_matrix,
)

EXIT_OK, EXIT_USAGE, EXIT_FILE, EXIT_PARSE, EXIT_DOMAIN, EXIT_COMPUTE = 0, 2, 3, 4, 5, 6


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _matrix_format(path: str, fmt: Optional[str]) -> str:
    if fmt:
        return fmt
    return "json" if path.lower().endswith(".json") else "csv"


def _load_matrix(path: Optional[str], fmt: Optional[str], kind: str):
    if path is None:
        return None
    text = Path(path).read_text()
    return parse_matrix(text, _matrix_format(path, fmt), kind=kind)


def _load_epsilons(args) -> np.ndarray:
    if args.eps is not None and args.eps_file is not None:
        raise UsageError("--eps and --eps-file are mutually exclusive")
    if args.eps_file is not None:
        values = []
        for line in Path(args.eps_file).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("t,"):
                continue
            try:
                values.append(float(line.split(",")[-1]))
            except ValueError:
                raise MalformedInput(f"non-numeric budget line {line!r}") from None
        if args.T is not None and args.T != len(values):
            raise UsageError(f"--T {args.T} disagrees with {len(values)} budgets in --eps-file")
        return np.array(values)
    if args.eps is None:
        raise UsageError("one of --eps or --eps-file is required")
    if args.T is None:
        raise UsageError("--T is required with a scalar --eps")
    if args.T < 1:
        raise UsageError("--T must be >= 1")
    return np.full(args.T, args.eps)


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    fields = list(dict.fromkeys(k for r in rows for k in r))
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: format_real(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def _matrices(args):
    return (_load_matrix(args.backward, args.input_format, "backward"),
            _load_matrix(args.forward, args.input_format, "forward"))


def cmd_validate(args) -> int:
    if args.backward is None and args.forward is None:
        raise UsageError("validate needs --backward and/or --forward")
    for label, path in (("backward", args.backward), ("forward", args.forward)):
        if path is not None:
            m = _load_matrix(path, args.input_format, label)
            sys.stdout.write(f"{label}: ok n={m.n}\n")
    return EXIT_OK


def cmd_gen_matrix(args) -> int:
    if args.n is None:
        raise UsageError("--n is required")
    if args.random and args.uniform:
        raise UsageError("--random and --uniform are mutually exclusive")
    if args.random:
        m = gen_random_stochastic(args.n, 0 if args.seed is None else args.seed)
    elif args.uniform:
        m = gen_uniform(args.n)
    else:
        m = gen_strongest(args.n)
    if args.s is not None:
        m = laplacian_smooth(m, args.s)
    _emit(args, serialize_matrix(m, args.format or "csv"))
    return EXIT_OK


def cmd_quantify(args) -> int:
    B, F = _matrices(args)
    eps = _load_epsilons(args)
    timeline = quantify(B, F, eps, args.algo, args.a_max)
    _emit(args, timeline.to_csv())
    return EXIT_OK


def cmd_loss_fn(args) -> int:
    if (args.backward is None) == (args.forward is None):
        raise UsageError("loss-fn needs exactly one of --backward or --forward")
    m = _load_matrix(args.backward or args.forward, args.input_format,
                     "backward" if args.backward else "forward")
    params = precompute_params(m)
    a_max = args.a_max
    if a_max is None:
        if args.eps is None and args.eps_file is None:
            raise UsageError("give --a-max, or --eps with --T so a cap can be derived")
        a_max = default_a_max(params, _load_epsilons(args))
    plf = generate_loss_function(m, args.a_min, a_max, params)
    _emit(args, json.dumps(plf.to_dict(), indent=2))
    return EXIT_OK


def cmd_supremum(args) -> int:
    B, F = _matrices(args)
    if B is None and F is None:
        raise UsageError("supremum needs --backward and/or --forward")
    if args.eps is None:
        raise UsageError("--eps is required")
    if B is not None and F is not None:
        lines = [f"backward,{format_real(supremum(B, args.eps).value)}",
                 f"forward,{format_real(supremum(F, args.eps).value)}",
                 f"total,{format_real(tpl_supremum(precompute_params(B), precompute_params(F), args.eps))}"]
        _emit(args, "\n".join(lines))
    else:
        _emit(args, format_real(supremum(B or F, args.eps).value))
    return EXIT_OK


def cmd_allocate(args) -> int:
    B, F = _matrices(args)
    if args.alpha is None:
        raise UsageError("--alpha is required")
    if args.strategy == "exact":
        if args.T is None:
            raise UsageError("--T is required for the exact strategy")
        schedule = allocate_exact(B, F, args.alpha, args.T, args.algo)
        _emit(args, schedule.to_json() if args.format == "json" else schedule.to_csv())
    else:
        schedule = allocate_upper_bound(B, F, args.alpha, probe_T=args.T or 100)
        _emit(args, schedule.to_json() if args.format == "json" else schedule.to_csv(args.T))
    return EXIT_OK


def cmd_compose(args) -> int:
    B, F = _matrices(args)
    eps = _load_epsilons(args)
    if args.t is None or args.j is None:
        raise UsageError("--t and --j are required")
    timeline = quantify(B, F, eps, args.algo, args.a_max)
    _emit(args, format_real(compose_sequence(timeline, args.t, args.j)))
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    if args.mode == "runtime":
        rows = bench.runtime_rows(args.n or [10, 50, 100], args.T or [1, 10, 100, 1000], args.reps,
                                  eps=args.eps if args.eps is not None else 0.1,
                                  seed=0 if args.seed is None else args.seed)
    elif args.mode == "s-sweep":
        rows = bench.s_sweep_rows(args.n or (50, 200), [args.eps] if args.eps is not None else (0.1, 1.0),
                                  T=(args.T or [100])[0])
    else:
        rows = bench.utility_rows(n=(args.n or [10])[0], alpha=args.alpha or 2.0,
                                  Ts=args.T or (2, 5, 10, 20, 50), seed=0 if args.seed is None else args.seed)
    _emit(args, _rows_to_csv(rows))
    return EXIT_OK


def _common(p: argparse.ArgumentParser, matrices=True, eps=True) -> None:
    if matrices:
        p.add_argument("--backward", metavar="PATH", help="backward transition matrix (csv or json)")
        p.add_argument("--forward", metavar="PATH", help="forward transition matrix (csv or json)")
        p.add_argument("--input-format", choices=["csv", "json"],
                       help="matrix file format (default: from the extension, .json or else csv)")
    if eps:
        p.add_argument("--eps", type=float, help="constant per-step budget")
        p.add_argument("--eps-file", metavar="PATH", help="one budget per line (or t,epsilon rows)")
        p.add_argument("--T", type=int, help="number of timesteps")
    p.add_argument("--format", choices=["csv", "json"], help="output format where a command offers both")
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tplkit", allow_abbrev=False,
        description="Temporal privacy leakage of continuous DP releases under Markov correlations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", allow_abbrev=False, help="check transition matrix files")
    _common(p, eps=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gen-matrix", allow_abbrev=False, help="identity (or random/uniform) matrix, optionally smoothed")
    p.add_argument("--n", type=int)
    p.add_argument("--s", type=float, help="Laplacian smoothing strength")
    p.add_argument("--seed", type=int)
    p.add_argument("--random", action="store_true", help="random stochastic matrix instead of identity")
    p.add_argument("--uniform", action="store_true", help="uniform matrix instead of identity")
    _common(p, matrices=False, eps=False)
    p.set_defaults(func=cmd_gen_matrix)

    p = sub.add_parser("quantify", allow_abbrev=False, help="BPL/FPL/TPL timeline as CSV")
    _common(p)
    p.add_argument("--algo", choices=ALGOS, default="precomp")
    p.add_argument("--a-max", type=float)
    p.set_defaults(func=cmd_quantify)

    p = sub.add_parser("loss-fn", allow_abbrev=False, help="piecewise loss function as JSON")
    _common(p)
    p.add_argument("--a-max", type=float)
    p.add_argument("--a-min", type=float, default=1e-9)
    p.set_defaults(func=cmd_loss_fn)

    p = sub.add_parser("supremum", allow_abbrev=False, help="leakage supremum under a constant budget")
    _common(p, eps=False)
    p.add_argument("--eps", type=float)
    p.set_defaults(func=cmd_supremum)

    p = sub.add_parser("allocate", allow_abbrev=False, help="per-step budgets for a target alpha")
    _common(p, eps=False)
    p.add_argument("--strategy", choices=["exact", "upper-bound", "upper_bound"], default="exact")
    p.add_argument("--alpha", type=float)
    p.add_argument("--T", type=int)
    p.add_argument("--algo", choices=ALGOS, default="precomp")
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("compose", allow_abbrev=False, help="leakage of mechanisms t..t+j combined")
    _common(p)
    p.add_argument("--t", type=int, help="first step (1-based)")
    p.add_argument("--j", type=int, help="extent: steps after --t")
    p.add_argument("--algo", choices=ALGOS, default="precomp")
    p.add_argument("--a-max", type=float)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("bench", allow_abbrev=False, help="runtime, s-sweep or utility experiments as CSV")
    p.add_argument("--mode", choices=["runtime", "s-sweep", "utility"], default="runtime")
    p.add_argument("--n", type=_int_list, help="comma-separated matrix sizes")
    p.add_argument("--T", type=_int_list, help="comma-separated horizons")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--eps", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        code, msg = EXIT_USAGE, f"usage error: {exc}"
    except OSError as exc:
        code, msg = EXIT_FILE, f"file error: {exc}"
    except InputError as exc:
        code, msg = EXIT_PARSE, f"parse error: {exc}"
    except DomainError as exc:
        code, msg = EXIT_DOMAIN, f"domain error: {exc}"
    except ComputationError as exc:
        code, msg = EXIT_COMPUTE, f"computation error: {exc}"
    except TplError as exc:
        code, msg = EXIT_COMPUTE, f"error: {exc}"
    sys.stderr.write(f"tplkit: {msg}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
