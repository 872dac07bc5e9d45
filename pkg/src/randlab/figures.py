"""Render comparison figures from a written report directory.

Works entirely off the files a bench run leaves behind (report.json
plus the curves/ CSVs), so figures can be regenerated long after the
experiment without re-training anything. PNG output lands in a
figures/ subdirectory next to the data.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_KIND_COLORS = {"Pseudo": "tab:blue", "QuantumSim": "tab:orange"}


def _color(kind, index=0):
    return _KIND_COLORS.get(kind, f"C{index % 10}")


def load_report(out_dir):
    """Parse report.json from a bench output directory."""
    with open(Path(out_dir) / "report.json") as fh:
        return json.load(fh)


def _read_curve(path):
    """Read one curve CSV: `# key=value ...` comments, a header line,
    then float rows. Returns (comments, columns dict)."""
    comments = {}
    header = None
    columns = None
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for part in line[1:].split():
                    if "=" in part:
                        key, _, value = part.partition("=")
                        comments[key] = value
                continue
            if header is None:
                header = line.split(",")
                columns = {name: [] for name in header}
                continue
            for name, cell in zip(header, line.split(",")):
                columns[name].append(float(cell))
    return comments, columns


def _finish(fig, axis, path):
    axis.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _kinds_in(payload):
    seen = []
    for row in payload["results"]:
        if row["kind"] not in seen:
            seen.append(row["kind"])
    return seen


def _mlp_figures(payload, out_dir, fig_dir):
    written = []
    for metric, fname, ylabel in (
        ("accuracy", "mlp_accuracy.png", "test accuracy"),
        ("loss", "mlp_loss.png", "mean training loss"),
    ):
        fig, axis = plt.subplots(figsize=(7, 4.5))
        labeled = set()
        for index, kind in enumerate(_kinds_in(payload)):
            for row in payload["results"]:
                if row["kind"] != kind:
                    continue
                curve_path = out_dir / "curves" / f"mlp_{kind}_{row['seed']}.csv"
                comments, columns = _read_curve(curve_path)
                epochs = columns["epoch"]
                values = columns[metric]
                if metric == "accuracy" and "initial_accuracy" in comments:
                    epochs = [0.0] + epochs
                    values = [float(comments["initial_accuracy"])] + values
                axis.plot(
                    epochs,
                    values,
                    color=_color(kind, index),
                    alpha=0.75,
                    label=kind if kind not in labeled else "_nolegend_",
                )
                labeled.add(kind)
        axis.set_xlabel("epoch")
        axis.set_ylabel(ylabel)
        axis.set_title(f"network {metric} by weight-init source")
        axis.legend()
        path = fig_dir / fname
        _finish(fig, axis, path)
        written.append(path)
    return written


def _tree_figure(payload, fig_dir):
    kinds = _kinds_in(payload)
    populations = [
        [
            row["accuracy"]
            for row in payload["results"]
            if row["kind"] == kind and not row["failed"]
        ]
        for kind in kinds
    ]
    fig, axis = plt.subplots(figsize=(5.5, 4.5))
    box = axis.boxplot(populations, patch_artist=True)
    for index, patch in enumerate(box["boxes"]):
        patch.set_facecolor(_color(kinds[index], index))
        patch.set_alpha(0.5)
    axis.set_xticks(range(1, len(kinds) + 1))
    axis.set_xticklabels(kinds)
    axis.set_ylabel("cross-validated accuracy")
    axis.set_title("single-tree accuracy by split-selection source")
    path = fig_dir / "tree_accuracy_box.png"
    _finish(fig, axis, path)
    return [path]


def _forest_figure(payload, fig_dir):
    fig, axis = plt.subplots(figsize=(7, 4.5))
    for index, kind in enumerate(_kinds_in(payload)):
        rows = sorted(
            (r for r in payload["results"] if r["kind"] == kind),
            key=lambda r: r["size"],
        )
        axis.plot(
            [r["size"] for r in rows],
            [r["accuracy"] for r in rows],
            marker="o",
            color=_color(kind, index),
            label=kind,
        )
    axis.set_xlabel("trees per forest")
    axis.set_ylabel("held-out accuracy")
    axis.set_title("forest accuracy by bagging source")
    axis.legend()
    path = fig_dir / "forest_sweep.png"
    _finish(fig, axis, path)
    return [path]


def render_report_figures(out_dir):
    """Render the figures appropriate to the report's protocol; returns
    the written paths."""
    out_dir = Path(out_dir)
    payload = load_report(out_dir)
    fig_dir = out_dir / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    protocol = payload["spec"]["protocol"]
    if protocol == "MlpInit":
        return _mlp_figures(payload, out_dir, fig_dir)
    if protocol == "TreeSplit":
        return _tree_figure(payload, fig_dir)
    return _forest_figure(payload, fig_dir)
