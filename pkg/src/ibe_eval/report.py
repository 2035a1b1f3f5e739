"""Report emission: delimited series and JSON summaries from a finished run.

Everything written here is plain CSV/JSON so external tooling (including the
bundled ``ibe-eval plot`` command) can render figures from it; no plotting
happens during report emission itself.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .errors import DataError
from .model import IbeFeatureVector
from .scoring import (
    ablation,
    accuracy,
    cohens_kappa,
    directionality_breakdown,
    regression_report,
    spearman,
)


def _read_annotations(path: Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                {
                    "example_id": row["example_id"],
                    "rater_a": int(row["rater_a"]),
                    "rater_b": int(row["rater_b"]),
                }
            )
    if not rows:
        raise DataError(f"{path}: no annotation rows")
    return rows


def emit_report(runner) -> Path:
    """Write ablation CSV, regression JSON, hedge/direction series, and the
    run summary into ``<run_dir>/report/``."""
    from .pipeline import ARTIFACTS, read_jsonl, write_json

    run_dir: Path = runner.run_dir
    config = runner.config
    report_dir = run_dir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)

    feature_rows = read_jsonl(run_dir / ARTIFACTS["features"])
    selections = read_jsonl(run_dir / ARTIFACTS["evaluate"])
    if not feature_rows or not selections:
        raise DataError("report needs non-empty features and evaluate artifacts")
    examples = runner._load_run_dataset()
    model_manifest = json.loads((run_dir / "features.manifest.json").read_text(encoding="utf-8"))

    vectors = [IbeFeatureVector.from_dict(r["features"]) for r in feature_rows]
    labels = [int(r["label"]) for r in feature_rows]

    # ablation table: single-feature block, then the cumulative build-up
    grouped: dict[str, list[IbeFeatureVector]] = {}
    for row, vector in zip(feature_rows, vectors):
        grouped.setdefault(row["example_id"], []).append(vector)
    ordered_ids = sorted(grouped)
    golds = {e.id: e.gold_index for e in examples}
    table = ablation(
        vectors,
        labels,
        [grouped[example_id] for example_id in ordered_ids],
        [golds[example_id] for example_id in ordered_ids],
    )
    with open(report_dir / "ablation.csv", "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["block", "label", "features", "accuracy"])
        for row in table:
            block = "feature" if not row.label.startswith(("random", "+")) else "cumulative"
            writer.writerow([block, row.label, " ".join(row.features), repr(row.accuracy)])

    # univariate regression analysis
    report = regression_report(vectors, labels, standardize=config.standardize_report)
    write_json(report_dir / "regression.json", report.to_dict())

    # per-candidate hedge series
    with open(report_dir / "hedges.csv", "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "example_id",
                "candidate_index",
                "label",
                "epistemic",
                "doxatic",
                "conditional",
                "total_tokens",
                "hedge_ratio",
            ]
        )
        for row in feature_rows:
            counts = row["hedge_counts"]
            cues = counts["epistemic"] + counts["doxatic"] + counts["conditional"]
            ratio = cues / counts["total_tokens"] if counts["total_tokens"] else 0.0
            writer.writerow(
                [
                    row["example_id"],
                    row["candidate_index"],
                    row["label"],
                    counts["epistemic"],
                    counts["doxatic"],
                    counts["conditional"],
                    counts["total_tokens"],
                    repr(ratio),
                ]
            )

    # accuracy by causal direction
    selected = {row["example_id"]: row["selected_index"] for row in selections}
    ordered_examples = [e for e in examples if e.id in selected]
    breakdown = directionality_breakdown(
        ordered_examples, [selected[e.id] for e in ordered_examples]
    )
    with open(report_dir / "directions.csv", "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["direction", "accuracy"])
        for direction in sorted(breakdown):
            writer.writerow([direction, repr(breakdown[direction])])

    # optional agreement statistics against a two-rater annotation file
    agreement = None
    if config.annotations_path:
        annotations = _read_annotations(Path(config.annotations_path))
        by_id = {a["example_id"]: a for a in annotations}
        shared = [e.id for e in ordered_examples if e.id in by_id]
        if len(shared) >= 3:
            rater_a = [by_id[i]["rater_a"] for i in shared]
            rater_b = [by_id[i]["rater_b"] for i in shared]
            picks = [selected[i] for i in shared]
            rho_a, p_a = spearman([float(v) for v in picks], [float(v) for v in rater_a])
            rho_b, p_b = spearman([float(v) for v in picks], [float(v) for v in rater_b])
            agreement = {
                "n": len(shared),
                "rater_kappa": cohens_kappa(rater_a, rater_b),
                "spearman_vs_rater_a": {"rho": rho_a, "p_value": p_a},
                "spearman_vs_rater_b": {"rho": rho_b, "p_value": p_b},
            }
            write_json(report_dir / "agreement.json", agreement)

    flagged = sorted(
        f"{row['example_id']}/{row['candidate_index']}"
        for row in feature_rows
        if row["self_evident"]
    )
    overall = accuracy(
        [selected[e.id] for e in ordered_examples], [e.gold_index for e in ordered_examples]
    )
    summary = {
        "n_examples": len(ordered_examples),
        "n_candidates": len(feature_rows),
        "accuracy": overall,
        "by_direction": breakdown,
        "self_evident": {
            "count": len(flagged),
            "rate": len(flagged) / len(feature_rows),
            "flagged": flagged,
        },
        "scorer_backend": model_manifest.get("backend", "fallback"),
        "scorer_substitutions": model_manifest.get("substitutions", []),
        "has_agreement": agreement is not None,
    }
    summary_path = report_dir / "summary.json"
    write_json(summary_path, summary)
    return summary_path
