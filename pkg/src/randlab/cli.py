"""Command-line front end.

Subcommands: gen (emit raw numbers), test (randomness battery),
train-tree / train-forest / train-mlp (single models), bench (full
experiment protocols), report (figures + verification for an existing
bench directory).

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
insufficient input data), 3 runtime failure (diverged batch, failed
battery, report that does not verify). Usage errors never create or
truncate output files; every command computes its results before
opening anything for writing.

The gen output format follows the two-file convention of one decimal
value per line (numbers.txt) and `<binary>,<decimal>` rows with the
binary string zero-padded to the requested width (random.csv). Lines
end with a trailing newline; no leading blank line.
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

from randlab.bench import (
    aggregate,
    parse_spec_file,
    run_experiment,
    write_report,
)
from randlab.datasets import load_csv, stratified_split, synth_blobs, take
from randlab.entropy import (
    EntropyConfig,
    EntropyKind,
    PseudoSource,
    load_record,
    make_source,
)
from randlab.errors import (
    ClassTooSmall,
    EmptyDataset,
    FormatError,
    InvalidParams,
    RandlabError,
    ReplayExhausted,
    TooFewBits,
)
from randlab.figures import load_report, render_report_figures
from randlab.neural import MLPConfig, save_history_csv, train_model
from randlab.randtest import DEFAULT_CONFIG, run_battery, write_reports_csv
from randlab.trees import (
    TreeConfig,
    evaluate,
    serialize_forest,
    serialize_tree,
    train_forest,
    train_random_tree,
)

_KIND_NAMES = tuple(kind.value for kind in EntropyKind)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; our contract reserves 2 for data
    errors, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_source_flags(parser, default_kind="Pseudo"):
    parser.add_argument("--kind", choices=_KIND_NAMES, default=default_kind,
                        help="entropy source family")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--replay", metavar="FILE",
                        help="bit record file, required for --kind Replay")


def _add_dataset_flags(parser):
    parser.add_argument("--csv", metavar="FILE",
                        help="labeled CSV dataset; omit to use synthetic blobs")
    parser.add_argument("--label-column", default="label")
    parser.add_argument("--classes", type=int, default=3)
    parser.add_argument("--per-class", type=int, default=100)
    parser.add_argument("--features", type=int, default=10)
    parser.add_argument("--spread", type=float, default=0.6)
    parser.add_argument("--train-fraction", type=float, default=0.7)
    parser.add_argument("--data-seed", type=int, default=424242,
                        help="seed of the stream that synthesizes and splits data")


def build_parser():
    parser = _Parser(prog="randlab",
                     description="pseudo vs quantum-simulated randomness in ML")
    sub = parser.add_subparsers(dest="command", metavar="command",
                                parser_class=_Parser, required=True)

    gen = sub.add_parser("gen", help="emit random integers to text and CSV")
    _add_source_flags(gen)
    gen.add_argument("--count", type=int, default=10)
    gen.add_argument("--bits", type=int, default=32)
    gen.add_argument("--out", required=True, metavar="DIR")
    gen.set_defaults(func=cmd_gen)

    test = sub.add_parser("test", help="run the randomness test battery")
    _add_source_flags(test)
    test.add_argument("--bits", type=int, default=1_000_000,
                      help="stream length; 0 with --kind Replay means whole record")
    test.add_argument("--out", required=True, metavar="DIR")
    test.add_argument("--no-timestamp", action="store_true")
    test.set_defaults(func=cmd_test)

    tree = sub.add_parser("train-tree", help="train one random tree")
    _add_source_flags(tree)
    _add_dataset_flags(tree)
    tree.add_argument("--out", required=True, metavar="DIR")
    tree.set_defaults(func=cmd_train_tree)

    forest = sub.add_parser("train-forest", help="train one bagged forest")
    _add_source_flags(forest)
    _add_dataset_flags(forest)
    forest.add_argument("--trees", type=int, default=100)
    forest.add_argument("--out", required=True, metavar="DIR")
    forest.set_defaults(func=cmd_train_forest)

    mlp = sub.add_parser("train-mlp", help="train one network")
    _add_source_flags(mlp)
    _add_dataset_flags(mlp)
    mlp.add_argument("--hidden", type=int, default=64)
    mlp.add_argument("--epochs", type=int, default=20)
    mlp.add_argument("--batch-size", type=int, default=32)
    mlp.add_argument("--alpha", type=float, default=0.001)
    mlp.add_argument("--out", required=True, metavar="DIR")
    mlp.set_defaults(func=cmd_train_mlp)

    bench = sub.add_parser("bench", help="run a full experiment protocol")
    bench.add_argument("--spec", required=True, metavar="FILE",
                       help="key=value experiment description")
    bench.add_argument("--out", required=True, metavar="DIR")
    bench.add_argument("--no-timestamp", action="store_true")
    bench.set_defaults(func=cmd_bench)

    report = sub.add_parser(
        "report", help="verify a bench directory and render its figures"
    )
    report.add_argument("--out", required=True, metavar="DIR",
                        help="directory a bench run wrote")
    report.set_defaults(func=cmd_report)

    return parser


def _make_cli_source(args):
    if args.kind == "Replay":
        if not args.replay:
            raise InvalidParams("--kind Replay requires --replay FILE")
        record = load_record(args.replay)
        return make_source(
            EntropyConfig(EntropyKind.REPLAY, seed=args.seed), record
        )
    if args.replay:
        raise InvalidParams("--replay only makes sense with --kind Replay")
    return make_source(EntropyConfig(EntropyKind(args.kind), seed=args.seed))


def _load_full_dataset(args):
    if args.csv:
        return load_csv(args.csv, args.label_column)
    return synth_blobs(
        args.classes,
        args.per_class,
        args.features,
        args.spread,
        PseudoSource(args.data_seed),
    )


def _split_dataset(args):
    full = _load_full_dataset(args)
    plan = stratified_split(
        full, args.train_fraction, PseudoSource(args.data_seed + 1)
    )
    return take(full, plan.train_indices), take(full, plan.test_indices)


def cmd_gen(args):
    if args.count < 1:
        raise InvalidParams("--count must be >= 1")
    source = _make_cli_source(args)
    values = [source.next_uint(args.bits) for _ in range(args.count)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "numbers.txt", "w") as fh:
        for value in values:
            fh.write(f"{value}\n")
    with open(out / "random.csv", "w") as fh:
        for value in values:
            fh.write(f"{value:0{args.bits}b},{value}\n")
    print(f"wrote {args.count} {args.bits}-bit values to {out}")
    return 0


def cmd_test(args):
    source = _make_cli_source(args)
    if args.kind == "Replay" and args.bits == 0:
        n_bits = source.remaining()
    else:
        n_bits = args.bits
    if n_bits < 1:
        raise InvalidParams("--bits must be >= 1")
    record = source.record_bits(n_bits)
    reports = run_battery(record.bits, config=DEFAULT_CONFIG)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    comment = None
    if not args.no_timestamp:
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        comment = f"generated {stamp}"
    write_reports_csv(reports, out / "battery.csv", comment=comment)

    print(f"{'name':<18} {'n':>8} {'statistic':>14} {'p':>12} verdict")
    for report in reports:
        print(
            f"{report.test_name:<18} {report.n:>8} "
            f"{report.statistic:>14.6g} {report.p_value:>12.6g} "
            f"{'pass' if report.passed else 'FAIL'}"
        )
    return 0 if all(r.passed for r in reports) else 3


def cmd_train_tree(args):
    train, test = _split_dataset(args)
    source = _make_cli_source(args)
    model = train_random_tree(train, TreeConfig(), source)
    text = serialize_tree(model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tree.txt").write_text(text)
    print(f"train accuracy {evaluate(model, train):.4f}  "
          f"test accuracy {evaluate(model, test):.4f}")
    return 0


def cmd_train_forest(args):
    if args.trees < 1:
        raise InvalidParams("--trees must be >= 1")
    train, test = _split_dataset(args)
    source = _make_cli_source(args)
    model = train_forest(train, args.trees, TreeConfig(), source)
    text = serialize_forest(model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "forest.txt").write_text(text)
    print(f"train accuracy {evaluate(model, train):.4f}  "
          f"test accuracy {evaluate(model, test):.4f}")
    return 0


def cmd_train_mlp(args):
    train, test = _split_dataset(args)
    source = _make_cli_source(args)
    config = MLPConfig(
        layer_sizes=(train.n_features, args.hidden, train.class_count),
        epochs=args.epochs,
        batch_size=args.batch_size,
        adam_alpha=args.alpha,
    )
    model, history = train_model(config, train, test, source, args.kind, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_history_csv(history, out / "history.csv")
    if history.failed:
        print("training diverged; partial history written")
        return 3
    print(f"final test accuracy {history.accuracies[-1]:.4f} "
          f"after {config.epochs} epochs")
    return 0


def cmd_bench(args):
    spec_path = Path(args.spec)
    if not spec_path.exists():
        sys.stderr.write(
            f"randlab bench: spec file {spec_path} does not exist\n"
        )
        return 1
    spec = parse_spec_file(spec_path)
    report = run_experiment(spec)
    write_report(report, args.out, no_timestamp=args.no_timestamp)
    for kind, stats in report.stats.items():
        if stats is None:
            print(f"{kind}: no surviving models")
        else:
            print(
                f"{kind}: mean {stats.mean:.4f} stddev {stats.sample_stddev:.4f} "
                f"best {stats.best:.4f} worst {stats.worst:.4f} n {stats.n}"
            )
    if report.paired:
        print(
            f"paired ({report.paired['definition']}, extension): "
            f"mean difference {report.paired['mean_difference']:+.4f} "
            f"over {report.paired['pairs']} pairs"
        )
    if all(r.failed for r in report.results):
        sys.stderr.write("randlab bench: every model in the batch failed\n")
        return 3
    return 0


def cmd_report(args):
    payload = load_report(args.out)
    for kind, stored in payload["stats"].items():
        scores = [
            row["accuracy"]
            for row in payload["results"]
            if row["kind"] == kind and not row["failed"]
        ]
        if stored is None:
            if scores:
                sys.stderr.write(
                    f"randlab report: {kind} has rows but no stored stats\n"
                )
                return 3
            continue
        recomputed = aggregate(scores)
        mismatches = [
            field
            for field, value in (
                ("mean", recomputed.mean),
                ("sample_stddev", recomputed.sample_stddev),
                ("best", recomputed.best),
                ("worst", recomputed.worst),
                ("range", recomputed.range),
                ("n", recomputed.n),
            )
            if stored[field] != value
        ]
        if mismatches:
            sys.stderr.write(
                f"randlab report: {kind} stats do not recompute "
                f"({', '.join(mismatches)})\n"
            )
            return 3
    figures = render_report_figures(args.out)
    print(f"stats verified; wrote {len(figures)} figure(s)")
    for path in figures:
        print(f"  {path}")
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        sys.stderr.write(f"randlab: {exc}\n")
        return 1
    except InvalidParams as exc:
        sys.stderr.write(f"randlab: {exc}\n")
        return 1
    except (FormatError, ClassTooSmall, EmptyDataset, TooFewBits,
            ReplayExhausted) as exc:
        sys.stderr.write(f"randlab: {exc}\n")
        return 2
    except RandlabError as exc:
        sys.stderr.write(f"randlab: {exc}\n")
        return 3


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
