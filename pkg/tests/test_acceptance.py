"""Ten headline checks, one per test, each printing a verdict line.

Run `pytest tests/test_acceptance.py -s -v` to watch the lines appear;
each carries the measured values and elapsed time next to its
threshold, so a failure says how far off it landed.
"""

import math
import time

import numpy as np

from randlab.bench import (
    AggregateStats,
    ExperimentSpec,
    aggregate,
    default_source_factory,
    run_tree_experiment,
)
from randlab.cli import main as cli_main
from randlab.datasets import k_folds, synth_blobs, take
from randlab.entropy import (
    BitRecord,
    EntropyKind,
    PseudoSource,
    QuantumSimSource,
    ReplaySource,
    SplitMixProvider,
    save_record,
)
from randlab.neural import MLPConfig, gradient_check, init_model, train_model
from randlab.qsim import HADAMARD, hadamard, qrng_bit, qubit_one, qubit_zero
from randlab.randtest import run_battery
from randlab.trees import (
    TreeConfig,
    evaluate,
    serialize_tree,
    train_forest,
    train_random_tree,
)

INV_ROOT2 = 1.0 / math.sqrt(2.0)


def verdict(number, ok, detail):
    line = f"acceptance {number:02d}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    assert ok, line


def test_01_bounded_draw_laws():
    start = time.perf_counter()
    sources = {
        "Pseudo": PseudoSource(1),
        "QuantumSim": QuantumSimSource(1),
        "Replay": ReplaySource(PseudoSource(3).record_bits(3_300_000)),
    }
    checks = []
    means = {}
    for kind, source in sources.items():
        draws = np.array(
            [source.next_bounded(-0.5, 0.5) for _ in range(100_000)]
        )
        means[kind] = float(draws.mean())
        checks.append(abs(means[kind]) <= 0.005)
        checks.append(draws.min() >= -0.5 and draws.max() <= 0.5)
    checks.append(
        ReplaySource(np.zeros(32, np.uint8)).next_bounded(-0.5, 0.5) == -0.5
    )
    checks.append(
        ReplaySource(np.ones(32, np.uint8)).next_bounded(-0.5, 0.5) == 0.5
    )
    elapsed = time.perf_counter() - start
    checks.append(elapsed < 5.0)
    shown = ", ".join(f"{k} mean {v:+.5f}" for k, v in means.items())
    verdict(1, all(checks), f"{shown}, |mean| <= 0.005, endpoints exact, "
                            f"{elapsed:.2f}s < 5s")


def test_02_quantum_math():
    start = time.perf_counter()
    unitarity_error = float(
        np.abs(HADAMARD.matrix @ HADAMARD.matrix - np.eye(2)).max()
    )
    plus = hadamard(qubit_zero())
    minus = hadamard(qubit_one())
    mappings_exact = (
        plus.amp0 == INV_ROOT2
        and plus.amp1 == INV_ROOT2
        and minus.amp0 == INV_ROOT2
        and minus.amp1 == -INV_ROOT2
    )
    provider = SplitMixProvider(2024)
    fraction = float(np.mean([qrng_bit(provider) for _ in range(100_000)]))
    elapsed = time.perf_counter() - start
    ok = (
        unitarity_error <= 1e-12
        and mappings_exact
        and 0.494 <= fraction <= 0.506
        and elapsed < 5.0
    )
    verdict(2, ok, f"H*H error {unitarity_error:.1e} <= 1e-12, basis mappings "
                   f"exact, ones fraction {fraction:.5f} in [0.494, 0.506], "
                   f"{elapsed:.2f}s < 5s")


def test_03_randomness_battery():
    start = time.perf_counter()
    generator_pass = {}
    for kind, source in (
        ("Pseudo", PseudoSource(1)),
        ("QuantumSim", QuantumSimSource(1)),
    ):
        reports = run_battery(source.record_bits(1_000_000).bits)
        generator_pass[kind] = all(r.passed for r in reports)

    def row(reports, name):
        return next(r for r in reports if r.test_name == name)

    ones = run_battery(np.ones(100_000, dtype=np.uint8))
    alternating = run_battery(np.tile(np.array([0, 1], np.uint8), 50_000))
    adversaries_fail = (
        not row(ones, "monobit").passed and not row(alternating, "runs").passed
    )
    elapsed = time.perf_counter() - start
    ok = all(generator_pass.values()) and adversaries_fail and elapsed < 30.0
    verdict(3, ok, f"1e6-bit battery pass: {generator_pass}, all-ones fails "
                   f"monobit, alternating fails runs, {elapsed:.2f}s < 30s")


def test_04_shared_stream_transparency():
    record = PseudoSource(97).record_bits(600_000)
    blobs = synth_blobs(3, 100, 10, 0.6, PseudoSource(424242))
    tree_first = serialize_tree(
        train_random_tree(blobs, TreeConfig(), ReplaySource(record))
    )
    tree_second = serialize_tree(
        train_random_tree(blobs, TreeConfig(), ReplaySource(record))
    )
    config = MLPConfig(layer_sizes=(20, 8, 3), epochs=1)
    net_first = init_model(config, ReplaySource(record))
    net_second = init_model(config, ReplaySource(record))
    nets_identical = all(
        np.array_equal(a, b)
        for a, b in zip(net_first.weights, net_second.weights)
    ) and all(
        np.array_equal(a, b)
        for a, b in zip(net_first.biases, net_second.biases)
    )
    ok = tree_first == tree_second and nets_identical
    verdict(4, ok, "replayed stream gives byte-identical serialized trees "
                   "and bit-identical network inits, zero tolerance")


def test_05_gradient_fidelity():
    start = time.perf_counter()
    data = synth_blobs(3, 4, 4, 0.8, PseudoSource(8))
    config = MLPConfig(layer_sizes=(4, 3, 3), epochs=1)
    worst = max(
        gradient_check(
            init_model(config, PseudoSource(seed)),
            (data.features, data.labels),
        )
        for seed in range(1, 6)
    )
    elapsed = time.perf_counter() - start
    ok = worst < 1e-3 and elapsed < 10.0
    verdict(5, ok, f"max relative error {worst:.2e} < 1e-3 over 5 networks, "
                   f"{elapsed:.2f}s < 10s")


def test_06_digit_mlp_accuracy(digit_datasets):
    start = time.perf_counter()
    train, test = digit_datasets
    config = MLPConfig(layer_sizes=(784, 64, 10), epochs=20, batch_size=32)
    finals = {}
    any_failed = False
    for kind, factory in (
        ("Pseudo", PseudoSource),
        ("QuantumSim", QuantumSimSource),
    ):
        for seed in range(1, 6):
            _, history = train_model(
                config, train, test, factory(seed), kind, seed
            )
            any_failed = any_failed or history.failed
            finals[(kind, seed)] = history.accuracies[-1]
    elapsed = time.perf_counter() - start
    floor = min(finals.values())
    ok = floor >= 0.85 and not any_failed and elapsed < 300.0
    verdict(6, ok, f"784-64-10, 20 epochs, batch 32, seeds 1..5 both kinds: "
                   f"min final accuracy {floor:.4f} >= 0.85, "
                   f"{elapsed:.1f}s < 300s")


def test_07_forest_beats_single_trees():
    start = time.perf_counter()
    kinds = ("Pseudo", "QuantumSim")
    full = synth_blobs(3, 100, 10, 0.6, PseudoSource(424242))
    singles = run_tree_experiment(
        ExperimentSpec(protocol="TreeSplit", n_models=20)
    )
    forest_means = {}
    for kind in kinds:
        per_seed = []
        for seed in range(1, 11):
            plan = k_folds(full, 10, PseudoSource(424242 + seed))
            source = default_source_factory(kind, seed)
            scores = [
                evaluate(
                    train_forest(
                        take(full, plan.train_indices(fold)),
                        100,
                        TreeConfig(),
                        source,
                    ),
                    take(full, plan.test_indices(fold)),
                )
                for fold in range(10)
            ]
            per_seed.append(float(np.mean(scores)))
        forest_means[kind] = float(np.mean(per_seed))
    beats = all(
        forest_means[kind] > singles.stats[kind].mean for kind in kinds
    )
    memorizes = all(
        evaluate(
            train_random_tree(full, TreeConfig(), default_source_factory(kind, 1)),
            full,
        )
        == 1.0
        for kind in kinds
    )
    elapsed = time.perf_counter() - start
    ok = beats and memorizes and elapsed < 120.0
    shown = ", ".join(
        f"{kind} forest {forest_means[kind]:.4f} > single "
        f"{singles.stats[kind].mean:.4f}"
        for kind in kinds
    )
    verdict(7, ok, f"{shown}; unpruned trees memorize training data; "
                   f"{elapsed:.1f}s < 120s")


def test_08_bench_rerun_byte_identical(tmp_path):
    spec = tmp_path / "exp.spec"
    spec.write_text(
        "protocol=MlpInit\n"
        "n_models=2\n"
        "per_class=10\n"
        "features=3\n"
        "epochs=2\n"
        "batch_size=8\n"
        "hidden=4\n"
    )
    codes = [
        cli_main(
            ["bench", "--spec", str(spec), "--out", str(tmp_path / name),
             "--no-timestamp"]
        )
        for name in ("first", "second")
    ]
    first = sorted(
        p for p in (tmp_path / "first").rglob("*") if p.is_file()
    )
    second = sorted(
        p for p in (tmp_path / "second").rglob("*") if p.is_file()
    )
    same_names = [p.name for p in first] == [p.name for p in second]
    same_bytes = same_names and all(
        a.read_bytes() == b.read_bytes() for a, b in zip(first, second)
    )
    ok = codes == [0, 0] and len(first) >= 4 and same_bytes
    verdict(8, ok, f"two --no-timestamp runs, {len(first)} files each, "
                   f"all byte-identical")


def test_09_aggregate_statistics():
    example = aggregate([1.0, 2.0, 3.0])
    example_ok = example == AggregateStats(
        mean=2.0, sample_stddev=1.0, best=3.0, worst=1.0, range=2.0, n=3
    )
    report = run_tree_experiment(
        ExperimentSpec(
            protocol="TreeSplit", n_models=4, per_class=10, features=3,
            folds=3,
        )
    )
    recompute_ok = all(
        aggregate([r.accuracy for r in report.results if r.kind == kind])
        == stats
        for kind, stats in report.stats.items()
    )
    verdict(9, example_ok and recompute_ok,
            "aggregate([1,2,3]) == (2, 1, 3, 1, 2); report stats recompute "
            "exactly from rows")


def test_10_generated_number_format(tmp_path):
    replay = tmp_path / "nibble.bits"
    save_record(
        BitRecord(
            bits=np.array([0, 1, 0, 1], dtype=np.uint8),
            source_kind=EntropyKind.REPLAY,
        ),
        replay,
    )
    out = tmp_path / "out"
    code = cli_main(
        ["gen", "--kind", "Replay", "--replay", str(replay), "--count", "1",
         "--bits", "4", "--out", str(out)]
    )
    csv_bytes = (out / "random.csv").read_bytes()
    txt_bytes = (out / "numbers.txt").read_bytes()
    ok = code == 0 and csv_bytes == b"0101,5\n" and txt_bytes == b"5\n"
    verdict(10, ok, f"nibble 0101 -> csv {csv_bytes!r}, text {txt_bytes!r}, "
                    f"byte-exact")
