"""Command-line front end: ``bexsam {generate,discover,benchmark,skew-check}``.

Exit status: 0 success, 2 usage error, 3 parse error, 4 incomplete data under
``--strict``, 5 discovery failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings

import numpy as np

from .discovery import DEFAULT_ALPHA, DiscoveryError, IncompleteDataError, discover
from .freq import ParseError, load_input
from .genbench import (
    ConfigurationError,
    GeneratorConfig,
    benchmark_grid,
    format_grid,
    format_report,
    noise_sweep,
    random_model,
    sample_dataset,
)
from .model import format_model, skewness_check

EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_INCOMPLETE = 4
EXIT_DISCOVERY = 5


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _p_coef(text):
    if text == "uniform":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--p-coef takes a probability or 'uniform'")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("BEXSAM_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"BEXSAM_SEED must be an integer, got {env!r}")


def _alpha(args) -> float:
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    return args.alpha


def _emit(text: str, path=None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x) -> str:
    return "nan" if isinstance(x, float) and math.isnan(x) else f"{x:.6g}"


# -- generate -----------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.d is None or args.d < 1:
        raise UsageError("--d must be a positive integer")
    if args.n is None or args.n < 1:
        raise UsageError("--n must be a positive integer")
    try:
        config = GeneratorConfig(
            d=args.d, n=args.n, p_coef=args.p_coef, noise_probs=args.noise, seed=_seed(args)
        )
    except ConfigurationError as exc:
        raise UsageError(str(exc))
    rng = np.random.default_rng(config.seed)
    model = random_model(config, rng)
    X = sample_dataset(model, config.n, rng)

    prefix = args.out or "bexsam"
    with open(prefix + ".model", "w") as fh:
        fh.write(format_model(model))
    with open(prefix + ".csv", "w") as fh:
        fh.write(",".join(model.names) + "\n")
        for row in X:
            fh.write(",".join("1" if b else "0" for b in row) + "\n")
    print(f"wrote {prefix}.model and {prefix}.csv ({config.n} rows, d={config.d})")
    return 0


# -- discover -----------------------------------------------------------------


def _report_text(result) -> str:
    lines = ["order: " + " ".join(str(v) for v in result.order), "parents:"]
    for v in result.order:
        ps = [p for p in result.order if p in result.parents[v]]
        lines.append(f"  {v}: " + (", ".join(str(p) for p in ps) if ps else "-"))
    lines.append("steps:")
    for k, step in enumerate(result.steps, 1):
        lines.append(f"  step {k}: sink {step.sink}")
        if step.scores:
            lines.append("    S_B: " + " ".join(f"{s.variable}={_fmt(s.score)}" for s in step.scores))
        if step.tests:
            lines.append(
                "    min p-value: "
                + " ".join(
                    f"{t.candidate}={_fmt(t.min_p_value)}{'*' if t.is_parent else ''}"
                    for t in step.tests
                )
            )
    return "\n".join(lines) + "\n"


def _report_table(result) -> str:
    lines = ["step\tsink\tvariable\tS_B\tmin_p\tis_parent"]
    for k, step in enumerate(result.steps, 1):
        scores = {s.variable: s.score for s in step.scores}
        tests = {t.candidate: t for t in step.tests}
        for v in result.order:
            if v not in scores and v not in tests and v != step.sink:
                continue
            t = tests.get(v)
            lines.append(
                "\t".join(
                    [
                        str(k),
                        str(step.sink),
                        str(v),
                        _fmt(scores[v]) if v in scores else "",
                        _fmt(t.min_p_value) if t else "",
                        str(int(t.is_parent)) if t else "",
                    ]
                )
            )
    return "\n".join(lines) + "\n"


def format_dot(result) -> str:
    lines = ["digraph bexsam {"]
    lines += [f'  "{v}";' for v in result.order]
    lines += [f'  "{p}" -> "{c}";' for p, c in result.edges()]
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_discover(args) -> int:
    alpha = _alpha(args)
    table = load_input(args.input)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = discover(table, alpha, strict=args.strict)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    report = _report_table(result) if args.format == "table" else _report_text(result)
    _emit(report, args.out)
    if args.graph_out:
        with open(args.graph_out, "w") as fh:
            fh.write(format_dot(result))
    return 0


# -- benchmark ----------------------------------------------------------------


def cmd_benchmark(args) -> int:
    seed = _seed(args)
    alpha = _alpha(args)
    ds = args.d or [2, 4]
    ns = args.n or [1000, 10000]
    timings = not args.no_timings
    if any(d < 1 for d in ds) or any(n < 1 for n in ns):
        raise UsageError("--d and --n values must be positive")

    if args.noise:
        if len(ds) != 1 or len(ns) != 1:
            raise UsageError("a --noise sweep takes exactly one --d and one --n")
        reports = noise_sweep(
            args.noise, d=ds[0], n=ns[0], trials=args.trials, seed=seed, alpha=alpha,
            workers=args.workers,
        )
        lines = ["p_e\tER_o\tER_s\tdiscarded"]
        for p, rep in zip(args.noise, reports):
            lines.append(f"{p:g}\t{_fmt(rep.mean_er_o)}\t{_fmt(rep.mean_er_s)}\t{rep.trials_discarded}")
        _emit("\n".join(lines) + "\n", args.out)
        return 0

    try:
        base = GeneratorConfig(d=1, n=1, p_coef=args.p_coef, seed=seed, trials=args.trials, alpha=alpha)
    except ConfigurationError as exc:
        raise UsageError(str(exc))
    cells = benchmark_grid(ds, ns, base, workers=args.workers)
    if args.format == "table":
        parts = []
        for cell in cells:
            parts.append(f"## d={cell.d} n={cell.n}\n")
            if cell.report is None:
                parts.append(f"# skipped: {cell.skipped}\n")
            else:
                parts.append(format_report(cell.report, timings=timings))
        text = "".join(parts)
    else:
        text = format_grid(cells, timings=timings)
        skipped = [c for c in cells if c.report is None]
        for c in skipped:
            text += f"# skipped d={c.d} n={c.n}: {c.skipped}\n"
    _emit(text, args.out)
    return 0


# -- skew-check ---------------------------------------------------------------

# below this marginal, XOR and OR noise give nearly the same p(x=1)
OR_XOR_NOTE_BELOW = 0.1


def cmd_skewcheck(args) -> int:
    table = load_input(args.input)
    reports = skewness_check(table, args.tau)
    lines = ["variable\tp_hat\tstatus"]
    notes = []
    for r in reports:
        if r.degenerate:
            status = "degenerate"
        elif r.skewed:
            status = "skewed"
        else:
            status = "inconclusive"
        lines.append(f"{r.variable}\t{r.p_hat:.6g}\t{status}")
        if not r.degenerate and min(r.p_hat, 1 - r.p_hat) < OR_XOR_NOTE_BELOW:
            notes.append(r.variable)
    if notes and args.format == "text":
        lines.append(
            "note: " + ", ".join(str(v) for v in notes)
            + " have small marginals; XOR and OR noise are nearly indistinguishable there"
        )
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bexsam", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="RNG seed (fallback: $BEXSAM_SEED, then 0)")
        p.add_argument("--out", default=None, help="output path (prefix for generate)")

    g = sub.add_parser("generate", help="write a random model and a sampled CSV dataset")
    common(g)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p-coef", type=_p_coef, default="uniform")
    g.add_argument("--noise", type=_float_list, default=None,
                   help="one shared or d comma-separated noise probabilities")
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("discover", help="estimate order and parents from a CSV or frequency table")
    common(d)
    d.add_argument("input")
    d.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    d.add_argument("--strict", action="store_true", help="fail (exit 4) on incomplete data")
    d.add_argument("--graph-out", default=None, help="write a DOT digraph of the estimate")
    d.add_argument("--format", choices=("text", "table"), default="text")
    d.set_defaults(func=cmd_discover)

    b = sub.add_parser("benchmark", help="synthetic-model benchmark grid or noise sweep")
    common(b)
    b.add_argument("--d", type=_int_list, default=None)
    b.add_argument("--n", type=_int_list, default=None)
    b.add_argument("--trials", type=int, default=100)
    b.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    b.add_argument("--p-coef", type=_p_coef, default="uniform")
    b.add_argument("--noise", type=_float_list, default=None,
                   help="sweep: one run per shared noise probability")
    b.add_argument("--format", choices=("text", "table"), default="text")
    b.add_argument("--no-timings", action="store_true", help="omit CT so output is reproducible")
    b.add_argument("--workers", type=int, default=1)
    b.set_defaults(func=cmd_benchmark)

    s = sub.add_parser("skew-check", help="per-variable skewness diagnostic")
    common(s)
    s.add_argument("input")
    s.add_argument("--tau", type=float, default=0.02)
    s.add_argument("--format", choices=("text", "table"), default="text")
    s.set_defaults(func=cmd_skewcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"bexsam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            print(f"bexsam: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"bexsam: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except IncompleteDataError as exc:
        print(f"bexsam: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except DiscoveryError as exc:
        print(f"bexsam: discovery failed: {exc}", file=sys.stderr)
        return EXIT_DISCOVERY
    except OSError as exc:
        print(f"bexsam: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
