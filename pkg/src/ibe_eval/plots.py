"""Figure rendering from the emitted report series.

Reads only the delimited/JSON report files, never the upstream artifacts,
and writes PNGs next to them under ``<run_dir>/report/figures/``. Figures
are a convenience view; the CSV/JSON files remain the canonical outputs.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import MissingUpstream


def _read_csv(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_ablation(report_dir: Path, out_dir: Path) -> Path:
    rows = _read_csv(report_dir / "ablation.csv")
    cumulative = [r for r in rows if r["block"] == "cumulative"]
    singles = [r for r in rows if r["block"] == "feature"]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    for ax, block, title in ((axes[0], singles, "single feature"), (axes[1], cumulative, "cumulative")):
        labels = [r["label"] for r in block]
        values = [float(r["accuracy"]) for r in block]
        ax.barh(range(len(block)), values, color="#4878a8")
        ax.set_yticks(range(len(block)), labels)
        ax.invert_yaxis()
        ax.set_xlim(0, 1)
        ax.set_xlabel("selection accuracy")
        ax.set_title(title)
        ax.axvline(0.5, color="gray", linestyle=":", linewidth=1)
    out = out_dir / "ablation.png"
    _save(fig, out)
    return out


def plot_regression(report_dir: Path, out_dir: Path) -> Path:
    report = json.loads((report_dir / "regression.json").read_text(encoding="utf-8"))
    entries = report["entries"]
    names = list(entries)
    coefs = [entries[n]["coefficient"] for n in names]
    errors = [entries[n]["std_error"] for n in names]
    markers = [entries[n]["marker"] for n in names]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.barh(range(len(names)), coefs, xerr=errors, color="#6aa84f", capsize=3)
    ax.set_yticks(range(len(names)), [f"{n} {m}" for n, m in zip(names, markers)])
    ax.invert_yaxis()
    ax.axvline(0.0, color="black", linewidth=1)
    ax.set_xlabel("univariate coefficient vs correctness")
    ax.set_title("feature correlation with question accuracy")
    out = out_dir / "regression.png"
    _save(fig, out)
    return out


def plot_hedges(report_dir: Path, out_dir: Path) -> Path:
    rows = _read_csv(report_dir / "hedges.csv")
    categories = ("epistemic", "doxatic", "conditional")
    means = {}
    for label, name in ((1, "correct"), (0, "incorrect")):
        subset = [r for r in rows if int(r["label"]) == label]
        if subset:
            means[name] = [
                sum(int(r[c]) for r in subset) / max(1, sum(int(r["total_tokens"]) for r in subset))
                for c in categories
            ]
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.35
    for offset, (name, values) in enumerate(means.items()):
        positions = [i + offset * width for i in range(len(categories))]
        ax.bar(positions, values, width=width, label=name)
    ax.set_xticks([i + width / 2 for i in range(len(categories))], categories)
    ax.set_ylabel("cue tokens per token")
    ax.set_title("hedge cue rates by category")
    ax.legend()
    out = out_dir / "hedges.png"
    _save(fig, out)
    return out


def plot_directions(report_dir: Path, out_dir: Path) -> Path:
    rows = _read_csv(report_dir / "directions.csv")
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.bar(
        [r["direction"] for r in rows],
        [float(r["accuracy"]) for r in rows],
        color=("#4878a8", "#c05050")[: len(rows)],
    )
    ax.set_ylim(0, 1)
    ax.axhline(0.5, color="gray", linestyle=":", linewidth=1)
    ax.set_ylabel("selection accuracy")
    ax.set_title("accuracy by causal direction")
    out = out_dir / "directions.png"
    _save(fig, out)
    return out


def render_figures(run_dir: Path) -> list[Path]:
    """Render every figure the report series support; returns written paths."""
    report_dir = Path(run_dir) / "report"
    if not (report_dir / "summary.json").exists():
        raise MissingUpstream("no report found; run the report stage first")
    out_dir = report_dir / "figures"
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [
        plot_ablation(report_dir, out_dir),
        plot_regression(report_dir, out_dir),
        plot_hedges(report_dir, out_dir),
    ]
    if (report_dir / "directions.csv").exists():
        written.append(plot_directions(report_dir, out_dir))
    return written
