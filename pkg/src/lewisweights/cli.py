"""Command line interface and benchmark harness.

``lewisweights`` solves one instance and emits a JSON run report (stdout or
--output). Exit codes: 0 all requested certificates pass, 1 input or
configuration error, 2 certificate failure (report still emitted).

``lewisweights-bench`` sweeps a grid of (n, d, p, alpha) on seeded Gaussian
instances and prints one CSV row per run, including the leverage-score call
count (faithful mode makes exactly num_rounds + 1 calls).
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import check_estimate, derive_schedule, two_sided_lewis
from .io import RunReport, load_matrix, render_report
from .oracle import reference_lewis_weights
from .validation import ConvergenceError, MatrixValidationError, ParseError

_INPUT_ERRORS = (
    MatrixValidationError,
    ParseError,
    ArithmeticError,  # includes conditioning and overflow failures
    ConvergenceError,
    ValueError,
    OSError,
)


class _CliError(Exception):
    """Configuration problem that should exit with status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; we reserve 2 for certs
        raise _CliError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="lewisweights",
        description="Two-sided approximate lp Lewis weights with certificates.",
    )
    parser.add_argument("--input", required=True, help="matrix file (Matrix Market or CSV)")
    parser.add_argument("--p", type=float, required=True, help="norm exponent, p >= 2")
    parser.add_argument("--alpha", type=float, required=True, help="accuracy in (0, 1)")
    parser.add_argument("--mode", choices=["faithful", "adaptive"], default="faithful")
    parser.add_argument("--backend", choices=["exact", "sketch"], default="exact")
    parser.add_argument("--sketch-eps", type=float, default=None,
                        help="override per-call sketch accuracy (default: schedule-derived)")
    parser.add_argument("--sketch-delta", type=float, default=0.01,
                        help="total failure budget of a sketched run")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--reference", action="store_true",
                        help="also run the reference solver and emit an estimate certificate")
    parser.add_argument("--tol-reference", type=float, default=1e-9)
    parser.add_argument("--output", default=None, help="report path (default: stdout)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress messages")
    return parser


def run_cli(argv=None) -> int:
    """Entry point returning the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    def say(message):
        if not args.quiet:
            print(message, file=sys.stderr)

    try:
        if args.p < 2.0:
            raise _CliError(f"--p must satisfy p >= 2, got {args.p}")
        if not (0.0 < args.alpha < 1.0):
            raise _CliError(f"--alpha must lie in (0, 1), got {args.alpha}")

        timings: dict[str, float] = {}
        start = time.perf_counter()
        A = load_matrix(args.input)
        timings["load"] = 1e3 * (time.perf_counter() - start)
        n, d = A.shape
        say(f"loaded {args.input}: {n} x {d}")

        start = time.perf_counter()
        result = two_sided_lewis(
            A,
            args.p,
            args.alpha,
            mode=args.mode,
            backend=args.backend,
            sketch_eps=args.sketch_eps,
            sketch_delta_total=args.sketch_delta,
            seed=args.seed,
        )
        timings["solve"] = 1e3 * (time.perf_counter() - start)
        say(
            f"solved: {result.iterations} iterations, "
            f"{result.leverage_calls} leverage-score calls"
        )

        certificates = {
            "one_sided": result.one_sided_certificate,
            "two_sided": result.certificate,
        }
        if args.reference:
            start = time.perf_counter()
            reference = reference_lewis_weights(A, args.p, tol=args.tol_reference)
            bound = min(0.9, 10.0 * args.alpha * args.p**2 * math.sqrt(d))
            certificates["estimate"] = check_estimate(
                result.weights, reference.weights, bound
            )
            timings["reference"] = 1e3 * (time.perf_counter() - start)
            say(
                f"reference: residual {reference.residual:.2e} "
                f"after {reference.iterations} iterations ({reference.method})"
            )
    except (_CliError, *_INPUT_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    report = RunReport(
        input_path=str(args.input),
        n=n,
        d=d,
        p=float(args.p),
        alpha=float(args.alpha),
        mode=args.mode,
        backend=result.backend,
        schedule={
            "eps1": result.schedule.eps1,
            "eps2": result.schedule.eps2,
            "num_rounds": result.schedule.num_rounds,
            "iterations_executed": result.iterations,
            "leverage_calls": result.leverage_calls,
        },
        weights=[float(x) for x in result.weights],
        certificates=certificates,
        timings_ms=timings,
        version=__version__,
    )
    text = render_report(report)
    if args.output:
        Path(args.output).write_text(text)
        say(f"report written to {args.output}")
    else:
        sys.stdout.write(text)

    all_passed = all(cert.passed for cert in certificates.values())
    if not all_passed:
        failed = [k for k, cert in certificates.items() if not cert.passed]
        say(f"certificate failure: {', '.join(failed)}")
    return 0 if all_passed else 2


def benchmark(
    ns,
    ds,
    ps,
    alphas,
    *,
    mode: str = "faithful",
    backend: str = "exact",
    seed: int = 0,
    slack: float = 1e-6,
) -> list[dict]:
    """Run the solver over a grid of seeded Gaussian instances.

    One row per (n, d, p, alpha) combination. Instances depend only on
    (seed, n, d), so every (p, alpha) cell of a given size sees the same
    matrix. Rows report the schedule length, iterations executed, leverage
    score call count, wall time and certificate margins.
    """
    rows = []
    for n in ns:
        for d in ds:
            instance_seed = np.random.SeedSequence([seed, n, d]).generate_state(1)[0]
            A = np.random.default_rng(instance_seed).standard_normal((n, d))
            for p in ps:
                for alpha in alphas:
                    schedule = derive_schedule(p, alpha, n, d)
                    start = time.perf_counter()
                    result = two_sided_lewis(
                        A, p, alpha, mode=mode, backend=backend,
                        seed=seed, slack=slack,
                    )
                    wall_ms = 1e3 * (time.perf_counter() - start)
                    rows.append({
                        "n": n,
                        "d": d,
                        "p": p,
                        "alpha": alpha,
                        "mode": mode,
                        "backend": backend,
                        "num_rounds": schedule.num_rounds,
                        "iterations": result.iterations,
                        "leverage_calls": result.leverage_calls,
                        "wall_ms": wall_ms,
                        "min_ratio": result.certificate.min_ratio,
                        "max_ratio": result.certificate.max_ratio,
                        "passed": result.certificate.passed,
                    })
    return rows


_BENCH_COLUMNS = [
    "n", "d", "p", "alpha", "mode", "backend", "num_rounds",
    "iterations", "leverage_calls", "wall_ms", "min_ratio", "max_ratio",
    "passed",
]


def _format_bench_rows(rows: list[dict]) -> str:
    lines = [",".join(_BENCH_COLUMNS)]
    for row in rows:
        lines.append(",".join(str(row[col]) for col in _BENCH_COLUMNS))
    return "\n".join(lines) + "\n"


def bench_cli(argv=None) -> int:
    parser = _Parser(
        prog="lewisweights-bench",
        description="Sweep the solver over a grid of random instances.",
    )
    parser.add_argument("--n", required=True, help="comma-separated row counts")
    parser.add_argument("--d", required=True, help="comma-separated column counts")
    parser.add_argument("--p", required=True, help="comma-separated exponents")
    parser.add_argument("--alpha", required=True, help="comma-separated accuracies")
    parser.add_argument("--mode", choices=["faithful", "adaptive"], default="faithful")
    parser.add_argument("--backend", choices=["exact", "sketch"], default="exact")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--output", default=None, help="CSV path (default: stdout)")
    try:
        args = parser.parse_args(argv)
        ns = [int(tok) for tok in args.n.split(",")]
        ds = [int(tok) for tok in args.d.split(",")]
        ps = [float(tok) for tok in args.p.split(",")]
        alphas = [float(tok) for tok in args.alpha.split(",")]
        rows = benchmark(
            ns, ds, ps, alphas,
            mode=args.mode, backend=args.backend, seed=args.seed,
        )
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = _format_bench_rows(rows)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run_cli())


def bench_main() -> None:
    sys.exit(bench_cli())
