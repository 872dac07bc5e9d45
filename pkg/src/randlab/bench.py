"""Experiment protocols comparing entropy kinds on equal footing.

Three protocols: MlpInit trains n/2 networks per kind whose only
difference is the weight-init stream; TreeSplit grows n/2 single trees
per kind scored by k-fold cross-validation; ForestSweep trains one
bagged forest per kind at each size in a list.

Data handling is deliberately kind-neutral. The dataset, the train/test
split, and the fold assignments all come from fixed pseudo streams,
never from the model's entropy source, so a Pseudo model and a
QuantumSim model with the same seed see exactly the same rows. That
makes the per-seed pairing in the report a matched comparison. The
derived streams are part of the contract: blob synthesis uses
data_seed, the train/test split uses data_seed + 1, and the fold plan
for model seed s uses data_seed + s.

Reports are deterministic: the JSON file never carries a timestamp, the
CSV's timestamp comment can be switched off, and all floats are written
with repr round-trip precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from randlab.datasets import (
    k_folds,
    load_csv,
    stratified_split,
    synth_blobs,
    take,
)
from randlab.entropy import EntropyConfig, EntropyKind, PseudoSource, make_source
from randlab.errors import EmptyInput, InvalidConfig, ParseError
from randlab.neural import MLPConfig, save_history_csv, train_model
from randlab.trees import TreeConfig, evaluate, train_forest, train_random_tree

DEFAULT_KINDS = ("Pseudo", "QuantumSim")
DEFAULT_FOREST_SIZES = tuple(range(10, 101, 10))

_PROTOCOLS = ("MlpInit", "TreeSplit", "ForestSweep")


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one experiment run."""

    protocol: str
    n_models: int = 10
    dataset: str = "blobs"
    classes: int = 3
    per_class: int = 100
    features: int = 10
    spread: float = 0.6
    train_fraction: float = 0.7
    folds: int = 10
    epochs: int = 20
    batch_size: int = 32
    hidden: int = 64
    adam_alpha: float = 0.001
    forest_sizes: tuple = DEFAULT_FOREST_SIZES
    data_seed: int = 424242

    def __post_init__(self):
        object.__setattr__(self, "forest_sizes", tuple(self.forest_sizes))
        if self.protocol not in _PROTOCOLS:
            raise InvalidConfig(f"unknown protocol {self.protocol!r}")
        if self.n_models < 2 or self.n_models % 2 != 0:
            raise InvalidConfig("n_models must be even and >= 2")
        if not self.forest_sizes or any(
            b <= a for a, b in zip(self.forest_sizes, self.forest_sizes[1:])
        ):
            raise InvalidConfig("forest_sizes must be nonempty, strictly increasing")
        if any(s < 1 for s in self.forest_sizes):
            raise InvalidConfig("forest sizes must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidConfig("train_fraction must lie in (0, 1)")
        if self.folds < 2:
            raise InvalidConfig("folds must be >= 2")
        if self.epochs < 1 or self.batch_size < 1 or self.hidden < 1:
            raise InvalidConfig("epochs, batch_size, hidden must be >= 1")


@dataclass(frozen=True)
class AggregateStats:
    mean: float
    sample_stddev: float
    best: float
    worst: float
    range: float
    n: int


@dataclass
class ModelResult:
    kind: str
    seed: int
    size: int
    accuracy: float
    failed: bool = False
    history: object = None
    fold_accuracies: list = None


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    results: list
    stats: dict
    paired: dict = None


def aggregate(values):
    """Sample statistics over a model population; stddev uses the n-1
    denominator and a singleton scores 0."""
    values = list(values)
    if not values:
        raise EmptyInput("cannot aggregate zero results")
    arr = np.asarray(values, dtype=np.float64)
    best = float(arr.max())
    worst = float(arr.min())
    stddev = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return AggregateStats(
        mean=float(arr.mean()),
        sample_stddev=stddev,
        best=best,
        worst=worst,
        range=best - worst,
        n=len(arr),
    )


def default_source_factory(kind, seed):
    return make_source(EntropyConfig(EntropyKind(kind), seed=seed))


def resolve_dataset(spec):
    """Materialize the spec's dataset reference: builtin blobs or a
    csv:<path> pointer."""
    if spec.dataset == "blobs":
        return synth_blobs(
            spec.classes,
            spec.per_class,
            spec.features,
            spec.spread,
            PseudoSource(spec.data_seed),
        )
    if spec.dataset.startswith("csv:"):
        return load_csv(spec.dataset[4:], label_column="label")
    raise InvalidConfig(f"unknown dataset reference {spec.dataset!r}")


def _split(spec, full):
    plan = stratified_split(full, spec.train_fraction, PseudoSource(spec.data_seed + 1))
    return take(full, plan.train_indices), take(full, plan.test_indices)


def _seed_range(spec):
    return range(1, spec.n_models // 2 + 1)


def _assemble(spec, results, kinds):
    stats = {}
    for kind in kinds:
        scores = [
            r.accuracy for r in results if r.kind == kind and not r.failed
        ]
        stats[kind] = aggregate(scores) if scores else None
    return ExperimentReport(
        spec=spec, results=results, stats=stats, paired=_paired(results, kinds)
    )


def _paired(results, kinds):
    """Matched per-seed differences, first listed kind minus second.

    Not part of the three protocols proper; the matched design just
    makes it the honest way to compare kinds, so the summary is
    included and labeled an extension.
    """
    if len(kinds) != 2:
        return None
    by_key = {}
    for r in results:
        if not r.failed:
            by_key[(r.kind, r.seed, r.size)] = r.accuracy
    diffs = []
    for (kind, seed, size), first in by_key.items():
        if kind != kinds[0]:
            continue
        second = by_key.get((kinds[1], seed, size))
        if second is not None:
            diffs.append(first - second)
    if not diffs:
        return None
    arr = np.asarray(diffs)
    return {
        "extension": True,
        "definition": f"{kinds[0].lower()}_minus_{kinds[1].lower()}",
        "mean_difference": float(arr.mean()),
        "first_better": int((arr > 0).sum()),
        "second_better": int((arr < 0).sum()),
        "ties": int((arr == 0).sum()),
        "pairs": len(diffs),
    }


def run_mlp_experiment(
    spec, data=None, kinds=DEFAULT_KINDS, source_factory=default_source_factory
):
    """Train n/2 identically configured networks per kind, seeds 1..n/2,
    differing only in their entropy stream. data, when given, is a
    (train, test) Dataset pair; otherwise the spec's dataset is split
    train_fraction / rest."""
    if spec.protocol != "MlpInit":
        raise InvalidConfig(f"spec protocol is {spec.protocol!r}, expected MlpInit")
    if data is None:
        train, test = _split(spec, resolve_dataset(spec))
    else:
        train, test = data
    config = MLPConfig(
        layer_sizes=(train.n_features, spec.hidden, train.class_count),
        epochs=spec.epochs,
        batch_size=spec.batch_size,
        adam_alpha=spec.adam_alpha,
    )
    results = []
    for kind in kinds:
        for seed in _seed_range(spec):
            source = source_factory(kind, seed)
            _, history = train_model(config, train, test, source, kind, seed)
            final = history.accuracies[-1] if history.accuracies else math.nan
            results.append(
                ModelResult(
                    kind=kind,
                    seed=seed,
                    size=1,
                    accuracy=math.nan if history.failed else final,
                    failed=history.failed,
                    history=history,
                )
            )
    return _assemble(spec, results, kinds)


def run_tree_experiment(
    spec, data=None, kinds=DEFAULT_KINDS, source_factory=default_source_factory
):
    """Grow n/2 single random trees per kind; each model's accuracy is
    its mean over k-fold cross-validation. Fold assignments depend only
    on (data_seed, seed), so paired kinds see identical folds."""
    if spec.protocol != "TreeSplit":
        raise InvalidConfig(f"spec protocol is {spec.protocol!r}, expected TreeSplit")
    full = data if data is not None else resolve_dataset(spec)
    config = TreeConfig()
    plans = {
        seed: k_folds(full, spec.folds, PseudoSource(spec.data_seed + seed))
        for seed in _seed_range(spec)
    }
    results = []
    for kind in kinds:
        for seed in _seed_range(spec):
            source = source_factory(kind, seed)
            plan = plans[seed]
            fold_scores = []
            for fold in range(spec.folds):
                tree = train_random_tree(
                    take(full, plan.train_indices(fold)), config, source
                )
                fold_scores.append(
                    evaluate(tree, take(full, plan.test_indices(fold)))
                )
            results.append(
                ModelResult(
                    kind=kind,
                    seed=seed,
                    size=1,
                    accuracy=float(np.mean(fold_scores)),
                    fold_accuracies=fold_scores,
                )
            )
    return _assemble(spec, results, kinds)


def run_forest_experiment(
    spec, data=None, kinds=DEFAULT_KINDS, source_factory=default_source_factory
):
    """One bagged forest per kind at each size in spec.forest_sizes,
    evaluated on a held-out split; the seed is the 1-based position in
    the size list."""
    if spec.protocol != "ForestSweep":
        raise InvalidConfig(f"spec protocol is {spec.protocol!r}, expected ForestSweep")
    if data is None:
        train, test = _split(spec, resolve_dataset(spec))
    else:
        train, test = data
    config = TreeConfig()
    results = []
    for kind in kinds:
        for position, size in enumerate(spec.forest_sizes, start=1):
            source = source_factory(kind, position)
            forest = train_forest(train, size, config, source)
            results.append(
                ModelResult(
                    kind=kind,
                    seed=position,
                    size=size,
                    accuracy=evaluate(forest, test),
                )
            )
    return _assemble(spec, results, kinds)


def run_experiment(spec, data=None, kinds=DEFAULT_KINDS,
                   source_factory=default_source_factory):
    runner = {
        "MlpInit": run_mlp_experiment,
        "TreeSplit": run_tree_experiment,
        "ForestSweep": run_forest_experiment,
    }[spec.protocol]
    return runner(spec, data=data, kinds=kinds, source_factory=source_factory)


# --- spec files -------------------------------------------------------------

_INT_KEYS = (
    "n_models", "classes", "per_class", "features", "folds", "epochs",
    "batch_size", "hidden", "data_seed",
)
_FLOAT_KEYS = ("spread", "train_fraction", "adam_alpha")
_STR_KEYS = ("protocol", "dataset")


def parse_spec_file(path):
    """Read a line-oriented key=value experiment description.

    Blank lines and #-comments are skipped. Unknown keys, duplicate
    keys, and unparsable values raise ParseError with the line number;
    semantically invalid combinations raise InvalidConfig.
    """
    fields = {}
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(line_no, 1, f"expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key in fields:
                raise ParseError(line_no, 1, f"duplicate key {key!r}")
            try:
                if key in _INT_KEYS:
                    fields[key] = int(value)
                elif key in _FLOAT_KEYS:
                    fields[key] = float(value)
                elif key in _STR_KEYS:
                    fields[key] = value
                elif key == "forest_sizes":
                    fields[key] = tuple(int(p) for p in value.split(","))
                else:
                    raise ParseError(line_no, 1, f"unknown key {key!r}")
            except ValueError:
                raise ParseError(
                    line_no, 1, f"bad value {value!r} for key {key!r}"
                ) from None
    if "protocol" not in fields:
        raise ParseError(1, 1, "spec file never sets protocol")
    return ExperimentSpec(**fields)


# --- report files -----------------------------------------------------------

def _json_accuracy(result):
    return None if result.failed or math.isnan(result.accuracy) else result.accuracy


def report_to_dict(report):
    """JSON-ready view: spec echo, slim per-model rows, per-kind stats,
    paired summary. Failed models keep their row with accuracy null."""
    return {
        "spec": asdict(report.spec) | {"forest_sizes": list(report.spec.forest_sizes)},
        "results": [
            {
                "kind": r.kind,
                "seed": r.seed,
                "size": r.size,
                "accuracy": _json_accuracy(r),
                "failed": r.failed,
            }
            for r in report.results
        ],
        "stats": {
            kind: None if stats is None else asdict(stats)
            for kind, stats in report.stats.items()
        },
        "paired": report.paired,
    }


def write_report(report, out_dir, no_timestamp=False):
    """Write report.json, results.csv, and per-model curve CSVs under
    out_dir. Returns the written paths. JSON is always timestamp-free;
    the CSV comment carries one unless no_timestamp."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    json_path = out_dir / "report.json"
    with open(json_path, "w") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True,
                  allow_nan=False)
        fh.write("\n")
    written.append(json_path)

    csv_path = out_dir / "results.csv"
    with open(csv_path, "w") as fh:
        if not no_timestamp:
            stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
            fh.write(f"# generated {stamp}\n")
        fh.write("protocol,kind,seed,size,accuracy\n")
        for r in report.results:
            fh.write(
                f"{report.spec.protocol},{r.kind},{r.seed},{r.size},{r.accuracy!r}\n"
            )
    written.append(csv_path)

    curves = out_dir / "curves"
    curves.mkdir(exist_ok=True)
    if report.spec.protocol == "MlpInit":
        for r in report.results:
            path = curves / f"mlp_{r.kind}_{r.seed}.csv"
            save_history_csv(r.history, path)
            written.append(path)
    elif report.spec.protocol == "TreeSplit":
        for r in report.results:
            path = curves / f"tree_{r.kind}_{r.seed}.csv"
            with open(path, "w") as fh:
                fh.write(f"# kind={r.kind} seed={r.seed}\n")
                fh.write("fold,accuracy\n")
                for fold, score in enumerate(r.fold_accuracies, start=1):
                    fh.write(f"{fold},{score!r}\n")
            written.append(path)
    else:
        for kind in report.stats:
            path = curves / f"forest_{kind}.csv"
            with open(path, "w") as fh:
                fh.write(f"# kind={kind}\n")
                fh.write("size,accuracy\n")
                for r in report.results:
                    if r.kind == kind:
                        fh.write(f"{r.size},{r.accuracy!r}\n")
            written.append(path)
    return written
