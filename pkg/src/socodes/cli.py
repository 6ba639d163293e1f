"""Command-line interface.

Data goes to standard output (or ``--output``); progress and errors go to
standard error. Any option can also come from a ``key=value`` file given with
``--config``; explicit flags win. ``SOCODES_SEED`` sets the default seed.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .codebook import (CodeError, Codeword, PairBlockCounter, ToeplitzCounter,
                       admissible_offdiagonals, count_suffixes_p2, count_table_general,
                       encode, enumerate_codebook, format_a_tables_csv, format_codebook,
                       make_spec, make_target)
from .decoder import DEFAULT_STACK_CAP, decode_exhaustive, decode_priority, write_trace
from .harness import ExperimentConfig, emit_csv, run_experiment, write_channel_dump
from .verify import CHECKS, run_checks

SEED_ENV = "SOCODES_SEED"


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(" ", "").split(",") if x)


def _snr_list(text: str) -> tuple[float, ...]:
    out = []
    for part in text.replace(" ", "").split(","):
        if part:
            out.append(math.inf if part.lower() in ("inf", "+inf") else float(part))
    if not out:
        raise argparse.ArgumentTypeError("empty SNR list")
    return tuple(out)


def _bits(text: str) -> tuple[int, ...]:
    mapping = {"+": 1, "-": -1}
    try:
        return tuple(mapping[ch] for ch in text.strip())
    except KeyError:
        raise argparse.ArgumentTypeError(f"bits must be written with '+' and '-', got {text!r}")


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"error: {SEED_ENV} must be an integer, got {raw!r}")


def _add_code_options(p: argparse.ArgumentParser, need_k: bool = True,
                      need_n: bool = True) -> None:
    p.add_argument("--n", type=int, required=need_n, help="codeword length N")
    if need_k:
        p.add_argument("--k", type=int, required=True, help="information bits K")
    p.add_argument("--p", type=int, default=2, help="channel taps P (default 2)")
    p.add_argument("--q", type=int, default=None, help="sub-block period Q of the code design")
    p.add_argument("--mode", choices=("single", "double"), default=None,
                   help="number of code trees (default: double when two targets exist)")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", "-o", default=None, help="write data here instead of stdout")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="socodes", allow_abbrev=False,
        description="Self-orthogonal block codes with priority-first ML decoding.")
    parser.add_argument("--config", default=None, help="key=value file supplying option defaults")
    parser.add_argument("--verbose", "-v", action="store_true", help="progress on stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    sub_kw = {"allow_abbrev": False}
    subs: dict[str, argparse.ArgumentParser] = {}

    p = sub.add_parser("encode", **sub_kw, help="map an information index to its codeword")
    _add_code_options(p)
    p.add_argument("--index", type=int, required=True)
    subs["encode"] = p

    p = sub.add_parser("codebook", **sub_kw, help="list every codeword (index, tree, bits)")
    _add_code_options(p)
    _add_output(p)
    subs["codebook"] = p

    p = sub.add_parser("count", **sub_kw, help="count Gram-constrained completions of a prefix")
    _add_code_options(p, need_k=False, need_n=False)
    p.add_argument("--prefix", type=_bits, default=None, help="prefix as +/- characters")
    p.add_argument("--c", type=_int_list, default=None,
                   help="off-diagonal target(s), comma separated (default: first admissible)")
    p.add_argument("--table-k", type=int, default=None,
                   help="query A_k(q | tail) instead; needs --qvec and --tail")
    p.add_argument("--qvec", type=_int_list, default=None,
                   help="lag sums q_1..q_{P-1} (write --qvec=-1,0 for negatives)")
    p.add_argument("--tail", type=_int_list, default=None, help="tail bits d_{2-P}..d_0")
    subs["count"] = p

    p = sub.add_parser("tables", **sub_kw, help="A_k tables as CSV (k = 1..K)")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--k", type=_positive, default=5)
    _add_output(p)
    subs["tables"] = p

    p = sub.add_parser("decode", **sub_kw, help="decode one received vector read as re,im lines")
    _add_code_options(p)
    p.add_argument("--input", "-i", default="-", help="received samples (default stdin)")
    p.add_argument("--heuristic", choices=("h1", "h2"), default="h2")
    p.add_argument("--exhaustive", action="store_true", help="use the exhaustive ML oracle")
    p.add_argument("--stack-cap", type=_positive, default=DEFAULT_STACK_CAP)
    p.add_argument("--trace", default=None, help="write the per-expansion trace CSV here")
    subs["decode"] = p

    p = sub.add_parser("simulate", **sub_kw, help="Monte-Carlo WER/BER/complexity sweep to CSV")
    _add_code_options(p)
    p.add_argument("--snr", type=_snr_list, default=(10.0,),
                   help="comma-separated SNR grid in dB ('inf' for noiseless)")
    p.add_argument("--trials", type=_positive, default=1000)
    p.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--heuristic", choices=("h1", "h2"), default="h2")
    p.add_argument("--exhaustive", action="store_true", help="use the exhaustive ML oracle")
    p.add_argument("--q-chan", type=_positive, default=None,
                   help="period at which the simulated channel changes (default: code's Q)")
    p.add_argument("--snr-convention", choices=("average", "asymptotic"), default="average")
    p.add_argument("--stack-cap", type=_positive, default=DEFAULT_STACK_CAP)
    p.add_argument("--jobs", type=_positive, default=1, help="worker processes")
    p.add_argument("--dump-channels", default=None, help="write every channel draw to this CSV")
    _add_output(p)
    subs["simulate"] = p

    p = sub.add_parser("verify", **sub_kw, help="run the built-in consistency checks")
    p.add_argument("--only", action="append", choices=sorted(CHECKS), default=None)
    subs["verify"] = p
    return parser, subs


def read_config(path: str) -> dict[str, str]:
    """Parse ``key=value`` lines; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def read_samples(stream) -> np.ndarray:
    """Complex samples from ``re,im`` lines (blank lines and ``#`` comments skipped)."""
    values = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 're,im'")
        values.append(complex(float(parts[0]), float(parts[1])))
    if not values:
        raise ValueError("no samples in input")
    return np.array(values)


def _write(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _codeword_line(index: int, word: Codeword) -> str:
    return f"{index}\t{word.tree}\t{word}\n"


def _spec(args):
    return make_spec(args.n, args.k, args.p, args.q, args.mode)


def _cmd_encode(args) -> int:
    spec = _spec(args)
    _write(_codeword_line(args.index, encode(spec, args.index)), None)
    return 0


def _cmd_codebook(args) -> int:
    _write(format_codebook(enumerate_codebook(_spec(args))), args.output)
    return 0


def _cmd_count(args) -> int:
    if args.table_k is not None or args.qvec is not None:
        if args.table_k is None or args.qvec is None or args.tail is None:
            raise CodeError("A_k queries need --table-k, --qvec and --tail")
        print(count_table_general(args.p, args.table_k, args.qvec, args.tail))
        return 0
    if args.prefix is None or args.n is None:
        raise CodeError("--n and --prefix are required")
    c = args.c if args.c is not None else admissible_offdiagonals(args.n, args.p, args.q)[0]
    if args.q is not None:
        counter = PairBlockCounter(args.n, args.q, c) if args.p == 2 else None
        if counter is None:
            raise CodeError("sub-block counting needs P = 2")
        print(counter.count(counter.state_of(args.prefix)))
    elif args.p == 2:
        print(count_suffixes_p2(args.n, make_target(args.n, 2, None, c), args.prefix))
    else:
        counter = ToeplitzCounter(args.n, args.p, c)
        print(counter.count(counter.state_of(args.prefix)))
    return 0


def _cmd_tables(args) -> int:
    _write(format_a_tables_csv(args.p, range(1, args.k + 1)), args.output)
    return 0


def _cmd_decode(args) -> int:
    spec = _spec(args)
    if args.input == "-":
        y = read_samples(sys.stdin)
    else:
        with open(args.input) as fh:
            y = read_samples(fh)
    if args.exhaustive:
        res = decode_exhaustive(y, enumerate_codebook(spec))
        _write(_codeword_line(res.index, res.codeword), None)
        print(f"expansions\t{res.expansions}")
        print(f"metric\t{res.metric:.12g}")
        return 0
    rows = [] if args.trace else None
    res = decode_priority(y, spec, args.heuristic, args.stack_cap, trace=rows)
    if args.trace:
        with open(args.trace, "w") as fh:
            write_trace(rows, fh)
    if res.erased:
        print(f"erased\tstack exceeded {args.stack_cap} entries", file=sys.stderr)
        print(f"expansions\t{res.expansions}")
        return 1
    _write(_codeword_line(res.index, res.codeword), None)
    print(f"expansions\t{res.expansions}")
    print(f"metric\t{res.metric:.12g}")
    return 0


def _cmd_simulate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    config = ExperimentConfig(
        n=args.n, k=args.k, p=args.p, q=args.q, mode=args.mode, snrs=args.snr,
        trials=args.trials, seed=seed,
        decoder="exhaustive" if args.exhaustive else args.heuristic,
        snr_convention=args.snr_convention, q_chan=args.q_chan,
        stack_cap=args.stack_cap, n_jobs=args.jobs)
    sink = [] if args.dump_channels else None
    summary = run_experiment(config, channel_sink=sink)
    if args.output is None or args.output == "-":
        emit_csv(summary, sys.stdout)
    else:
        emit_csv(summary, args.output)
    if sink is not None:
        with open(args.dump_channels, "w") as fh:
            write_channel_dump(sink, fh)
    return 0


def _cmd_verify(args) -> int:
    failed = 0
    for res in run_checks(args.only):
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
        failed += not res.passed
    return 1 if failed else 0


COMMANDS = {
    "encode": _cmd_encode,
    "codebook": _cmd_codebook,
    "count": _cmd_count,
    "tables": _cmd_tables,
    "decode": _cmd_decode,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
}


def _apply_config(argv: Sequence[str], parser, subs) -> None:
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    values = read_config(known.config)
    for sp in subs.values():
        for action in sp._actions:
            if action.dest not in values:
                continue
            value = values[action.dest]
            if isinstance(action, argparse._StoreTrueAction):
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(f"{known.config}: {action.dest} must be true or false")
                value = value.lower() in ("true", "1", "yes")
            # string defaults go through the option's type converter at parse time
            action.default = value
            action.required = False
    unknown = set(values) - {a.dest for sp in subs.values() for a in sp._actions}
    if unknown:
        raise ValueError(f"{known.config}: unknown keys {sorted(unknown)}")


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        _apply_config(argv, parser, subs)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (CodeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
