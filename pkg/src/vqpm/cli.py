"""Command-line entry point: ``vqpm run | sweep | compare | analyze``.

Every option can also come from a ``--config`` file of ``key=value`` lines
(keys spelled like the long flags, with or without leading dashes); flags on
the command line win over the file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness


def parse_n(text: str) -> tuple[int, ...]:
    """``15``, ``1..18`` (inclusive) or ``4,6``."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"no n values in {text!r}")
    return tuple(out)


def read_config(path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SystemExit(f"{path}:{lineno}: expected key=value")
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _experiment_flags(p: argparse.ArgumentParser, default_n: str | None = None) -> None:
    p.add_argument("--n", type=parse_n, default=parse_n(default_n) if default_n else None, help="15, 1..18 or 4,6")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-iter", type=int, default=30)
    p.add_argument("--policy", default="fixed:0.01", help="fixed:0.01 | none | decay:... | hoeffding:... | X+influence")
    p.add_argument("--precision", type=int, default=3)
    p.add_argument("--seed", type=int, default=42, help="base seed for the instance ensemble")
    p.add_argument("--mode", choices=["variational", "exact"], default="variational")
    p.add_argument("--success-threshold", type=float, default=0.5)
    p.add_argument("--coeff-range", default="-1,1", help="lo,hi for uniform coefficients")
    p.add_argument("--no-oracle", action="store_true", help="skip brute force; drops target columns")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", type=Path, default=None, help="CSV output path")
    p.add_argument("--quiet", action="store_true", help="do not print the summary table")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqpm", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, default=None, help="key=value file mirroring the flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one batch of seeded trials")
    _experiment_flags(p)
    p = sub.add_parser("sweep", help="batch over a range of n")
    _experiment_flags(p)
    p = sub.add_parser("compare", help="VQPM vs QAOA on the same instances")
    _experiment_flags(p)
    p.add_argument("--qaoa-p", type=int, default=8)
    p.add_argument("--qaoa-evals", type=int, default=2000)
    p.add_argument("--qaoa-restarts", type=int, default=5)
    p.add_argument("--timing", action="store_true", help="add a wall-time column (breaks byte-identical output)")
    p = sub.add_parser("analyze", help="summarize a trials CSV")
    p.add_argument("--in", dest="input", type=Path, default=None)
    return parser


def _parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    values = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in values.items():
        dest = "input" if key == "in" else key
        if dest not in known:
            raise SystemExit(f"{args.config}: unknown option {key!r} for '{args.command}'")
        action = known[dest]
        if action.nargs == 0:
            defaults[dest] = value.lower() in {"1", "true", "yes", "on"}
        else:
            defaults[dest] = action.type(value) if action.type else value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _spec(args) -> harness.ExperimentSpec:
    if args.n is None:
        raise SystemExit("--n is required")
    lo, hi = (float(v) for v in args.coeff_range.split(","))
    extra = {}
    if args.command == "compare":
        extra = dict(
            qaoa_p=args.qaoa_p,
            qaoa_max_evals=args.qaoa_evals,
            qaoa_restarts=args.qaoa_restarts,
            timing=args.timing,
        )
    return harness.ExperimentSpec(
        n_values=args.n,
        trials_per_n=args.trials,
        base_seed=args.seed,
        max_iter=args.max_iter,
        policy=args.policy,
        precision=args.precision,
        mode=args.mode,
        success_threshold=args.success_threshold,
        coeff_range=(lo, hi),
        use_oracle=not args.no_oracle,
        workers=args.workers,
        **extra,
    )


def main(argv=None) -> int:
    args = _parse(argv)
    if args.command == "analyze":
        if args.input is None:
            raise SystemExit("--in is required")
        kind = harness.detect_record_type(args.input)
        records = harness.read_records(args.input, kind)
        if kind is harness.PairedRecord:
            for n, (v, q) in harness.paired_means(records).items():
                print(f"n={n}: mean P(target) VQPM={v:.6f} QAOA={q:.6f}")
        else:
            print(harness.format_summary(harness.summarize(records)))
        return 0

    try:
        spec = _spec(args)
    except ValueError as exc:
        raise SystemExit(f"vqpm: {exc}")
    if args.command == "compare":
        records = harness.compare_vqpm_qaoa(spec, args.out)
        if not args.quiet:
            for n, (v, q) in harness.paired_means(records).items():
                print(f"n={n}: mean P(target) VQPM={v:.6f} QAOA={q:.6f}")
    else:
        records = harness.run_batch(spec, args.out)
        if not args.quiet:
            print(harness.format_summary(harness.summarize(records)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
