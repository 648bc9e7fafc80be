"""Command-line entry point: ``cabl partition|train|abspace|entail-check|compare``."""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import fields
from pathlib import Path

from .abspace import sweep, trend, write_csv
from .entailcheck import entail_check
from .logic import KBError, parse_program
from .partition import PartitionError, partition, to_dot
from .trainer import TrainConfig, compare_runs, load_report, run_training

USAGE_ERROR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _digit_range(text: str) -> range:
    lo, sep, hi = text.partition("..")
    try:
        lo_i, hi_i = int(lo), int(hi if sep else lo)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}") from None
    if lo_i < 1 or hi_i < lo_i:
        raise argparse.ArgumentTypeError(f"bad digit range {text!r}")
    return range(lo_i, hi_i + 1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cabl", description="Curriculum abductive learning toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("partition", help="split a KB into a curriculum")
    p.add_argument("--kb", required=True)
    p.add_argument("--tau", type=_positive)
    p.add_argument("--dot")

    # defaults are None so that config-file values can be told apart from flags
    t = sub.add_parser("train", help="run C-ABL or the ABL baseline")
    t.add_argument("--task", choices=("addition", "chess"))
    t.add_argument("--base", type=int, choices=(10, 16))
    t.add_argument("--digits", type=_positive)
    t.add_argument("--method", choices=("cabl", "abl"))
    t.add_argument("--tau", type=_positive)
    t.add_argument("--iters", type=_positive)
    t.add_argument("--seed", type=int)
    t.add_argument("--out")
    t.add_argument("--config")

    a = sub.add_parser("abspace", help="abduction-space size sweep")
    a.add_argument("--task", choices=("addition",), required=True)
    a.add_argument("--base", type=int, choices=(10, 16), required=True)
    a.add_argument("--digits", type=_digit_range, required=True)
    a.add_argument("--tau", type=_positive, default=2)
    a.add_argument("--out", required=True)
    a.add_argument("--samples", type=_positive, default=20)
    a.add_argument("--seed", type=int, default=0)

    e = sub.add_parser("entail-check", help="sub-base versus full-KB entailment agreement")
    e.add_argument("--kb", required=True)
    e.add_argument("--tau", type=_positive, required=True)
    e.add_argument("--samples", type=_positive, required=True)
    e.add_argument("--universe", type=_positive, default=16)
    e.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("compare", help="compare finished training runs")
    c.add_argument("dirs", nargs="+")
    return parser


def _load_kb(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_program(text)
    except KBError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_partition(args) -> int:
    kb = _load_kb(args.kb)
    try:
        curriculum = partition(kb, args.tau)
    except PartitionError as exc:
        raise UsageError(str(exc)) from None
    for line in curriculum.summary_lines():
        print(line)
    print(f"partition time: {curriculum.elapsed_seconds * 1000:.1f} ms")
    if args.dot:
        Path(args.dot).write_text(to_dot(kb, curriculum))
    return 0


# flag name -> TrainConfig field
_FLAG_FIELDS = {
    "task": "task", "base": "base", "digits": "digits", "method": "method",
    "tau": "tau", "iters": "max_iterations", "seed": "seed",
}
_CONFIG_FIELDS = {f.name: f for f in fields(TrainConfig)}


def _read_config_file(path: str) -> dict:
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    for n, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise UsageError(f"{path}:{n}: expected key=value")
        if key != "out" and key not in _FLAG_FIELDS and key not in _CONFIG_FIELDS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(name: str, value: str):
    default = _CONFIG_FIELDS[name].default
    kind = _CONFIG_FIELDS[name].type
    if value == "" and "None" in str(kind):
        return None
    if isinstance(default, bool):
        return value.lower() in ("1", "true", "yes")
    if isinstance(default, float):
        return float(value)
    if isinstance(default, int) or "int" in str(kind):
        return int(value)
    return value


def resolve_train_config(args) -> tuple[TrainConfig, str]:
    """Flags override the config file, which overrides built-in defaults."""
    values: dict = {}
    out = None
    if args.config:
        for key, value in _read_config_file(args.config).items():
            if key == "out":
                out = value
                continue
            name = _FLAG_FIELDS.get(key, key)
            try:
                values[name] = _coerce(name, value)
            except ValueError:
                raise UsageError(f"{args.config}: bad value for {key}: {value!r}") from None
    for flag, name in _FLAG_FIELDS.items():
        given = getattr(args, flag)
        if given is not None:
            values[name] = given
    if args.out is not None:
        out = args.out
    if out is None:
        raise UsageError("train: --out is required")
    try:
        return TrainConfig(**values), out
    except (TypeError, ValueError) as exc:
        raise UsageError(f"train: {exc}") from None


def cmd_train(args) -> int:
    config, out = resolve_train_config(args)
    report = run_training(config)
    path = report.write(out)
    print(report.summary_text(), end="")
    print(f"wrote {path}")
    return 0


def cmd_abspace(args) -> int:
    start = time.perf_counter()
    rows = sweep(args.base, args.digits, args.tau, samples=args.samples, seed=args.seed)
    write_csv(rows, args.out)
    for d, full, ratio in trend(rows):
        print(f"d={d}: |S|={full} max conditioned/|S|={ratio:.6f}")
    print(f"wrote {args.out} ({len(rows)} rows, {time.perf_counter() - start:.2f} s)")
    return 0


def cmd_entail_check(args) -> int:
    kb = _load_kb(args.kb)
    try:
        curriculum = partition(kb, args.tau)
    except PartitionError as exc:
        raise UsageError(str(exc)) from None
    report = entail_check(kb, curriculum, samples=args.samples, universe=args.universe, seed=args.seed)
    for line in report.lines():
        print(line)
    return 0 if report.passed else 1


def cmd_compare(args) -> int:
    if len(args.dirs) < 2:
        raise UsageError("compare: need at least two run directories")
    try:
        reports = [load_report(d) for d in args.dirs]
    except OSError as exc:
        raise UsageError(f"compare: {exc}") from None
    try:
        comparison = compare_runs(*reports, names=args.dirs)
    except ValueError as exc:
        raise UsageError(f"compare: {exc}") from None
    print(comparison.table(), end="")
    return 0


COMMANDS = {
    "partition": cmd_partition,
    "train": cmd_train,
    "abspace": cmd_abspace,
    "entail-check": cmd_entail_check,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except Exception as exc:  # noqa: BLE001 - any other failure aborts with a message
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
