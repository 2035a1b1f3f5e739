"""Acceptance criteria, one test per criterion, run with fallback scorers and
replay transcripts only: no network, no ML models.

Each test prints a single ``[acceptance] criterion N: PASS`` line so a -s run
reads as a checklist; a failure simply fails the test.
"""

import json
import math
import random
import time
from pathlib import Path

import pytest

from conftest import fixture_config
from oracles import (
    kappa_oracle,
    oracle_min_rules,
    oracle_satisfiable,
    spearman_oracle,
    t_two_sided_quadrature,
)
from test_solver import chain_program_and_embedder, one_hot_embedder, program_tokens, random_ground_program

from ibe_eval.metrics import (
    UncertaintyMode,
    concept_drift,
    linguistic_uncertainty,
    stepwise_entailment,
)
from ibe_eval.model import EntailmentHypothesis, ExplanationStep, IbeFeatureVector, StructuredExplanation
from ibe_eval.pipeline import StageRunner, read_jsonl
from ibe_eval.scorers import EntailmentProbs
from ibe_eval.scoring import cohens_kappa, fit_linear, spearman, t_two_sided_p, univariate_regression
from ibe_eval.solver import prove


def ok(number: int, message: str) -> None:
    print(f"[acceptance] criterion {number}: PASS - {message}")


def test_criterion_1_solver_oracle_equivalence():
    rng = random.Random(20260111)
    started = time.monotonic()
    for _ in range(1000):
        program = random_ground_program(rng)
        embedder = one_hot_embedder(program_tokens(program))
        result = prove(program, embedder, max_depth=300)
        assert result.satisfied == oracle_satisfiable(program)
        if result.satisfied:
            assert result.depth == max(1, oracle_min_rules(program))
    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"1000 programs took {elapsed:.1f}s"
    ok(1, f"1000/1000 random ground programs agree with the forward-chaining oracle ({elapsed:.1f}s)")


def test_criterion_2_threshold_semantics():
    checked = 0
    for s in [round(0.1 * i, 1) for i in range(2, 11)]:
        for k in range(1, 7):
            program, embedder = chain_program_and_embedder(s, k)
            result = prove(program, embedder)
            expected = math.prod([s] * k)
            assert result.satisfied == (expected > 0.13), (s, k)
            if result.satisfied:
                assert result.depth == k
                assert result.proof_score == pytest.approx(expected, rel=1e-9)
            checked += 1
    ok(2, f"acceptance iff s^k > 0.13 on the full {checked}-point (s, k) grid")


def test_criterion_3_drift_oracle(scorers, fixtures_dir):
    from oracles import drift_oracle

    cases = json.loads((fixtures_dir / "drift_cases.json").read_text(encoding="utf-8"))
    assert len(cases) == 200
    for case in cases:
        hypothesis = EntailmentHypothesis.from_dict(case["hypothesis"])
        explanation = StructuredExplanation.from_dict(case["explanation"])
        value = concept_drift(hypothesis, explanation, scorers.pos)
        assert value == drift_oracle(hypothesis, explanation, scorers.pos)
        assert value == case["expected_drift"]
    ok(3, "concept drift equals the independent set-difference oracle on 200 fixtures")


def _explanation(n_steps: int, assumptions=None, summary="s"):
    hypothesis = EntailmentHypothesis("acc", 0, "p", "c")
    assumptions = assumptions or ["a"] * n_steps
    steps = tuple(
        ExplanationStep(i + 1, f"if {i}", f"then {i}", assumptions[i]) for i in range(n_steps)
    )
    return StructuredExplanation(hypothesis, steps, summary, "")


def test_criterion_4_coherence_arithmetic():
    explanation = _explanation(4)
    fixed = stepwise_entailment(explanation, lambda p, h: EntailmentProbs(0.9, 0.05, 0.05))
    assert fixed == pytest.approx(0.85, abs=1e-12)

    rng = random.Random(13)
    for _ in range(10_000):
        n = rng.randint(1, 5)
        triples = []
        for _ in range(n):
            entail = rng.random()
            contradiction = rng.random() * (1.0 - entail)
            triples.append(EntailmentProbs(entail, 1.0 - entail - contradiction, contradiction))
        rows = iter(triples)
        value = stepwise_entailment(_explanation(n), lambda p, h: next(rows))
        assert -1.0 <= value <= 1.0
        expected = sum(t.entail - t.contradiction for t in triples) / n
        assert value == pytest.approx(expected, abs=1e-12)
    ok(4, "stepwise entailment equals mean(P_e - P_c) to 1e-12 over 10k random mock trials")


def test_criterion_5_uncertainty_arithmetic():
    rng = random.Random(29)
    for _ in range(2_000):
        n = rng.randint(1, 5)
        assumptions = [f"assumption {i}" if rng.random() < 0.8 else "" for i in range(n)]
        summary = "summary" if rng.random() < 0.8 else ""
        table = {text: rng.uniform(1, 6) for text in assumptions + [summary] if text}
        scorer = lambda sentence: table[sentence]  # noqa: E731
        explanation = _explanation(n, assumptions, summary)

        used = [7.0 - table[a] for a in assumptions if a]
        mean_term = sum(used) / len(used) if used else 0.0
        sum_term = sum(used)
        summary_term = 7.0 - table[summary] if summary else 0.0

        average = linguistic_uncertainty(explanation, scorer, UncertaintyMode.AVERAGE)
        total = linguistic_uncertainty(explanation, scorer, UncertaintyMode.SUM)
        assert average == pytest.approx(mean_term + summary_term, abs=1e-12)
        assert total == pytest.approx(sum_term + summary_term, abs=1e-12)
    ok(5, "uncertainty equals mean-assumption + summary (and the sum variant) to 1e-12")


def test_criterion_6_ols_exactness():
    rng = random.Random(101)
    rows, labels = [], []
    for _ in range(40):
        depth, drift = rng.randint(0, 8), rng.randint(0, 8)
        coherence = rng.uniform(-1, 1)
        rows.append({"depth": depth, "drift": drift, "coherence": coherence})
        labels.append(0.5 * depth - 1.25 * drift + 2.0 * coherence - 0.75)
    model = fit_linear(rows, labels, ("depth", "drift", "coherence"))
    assert model.weights["depth"] == pytest.approx(0.5, abs=1e-9)
    assert model.weights["drift"] == pytest.approx(-1.25, abs=1e-9)
    assert model.weights["coherence"] == pytest.approx(2.0, abs=1e-9)
    assert model.intercept == pytest.approx(-0.75, abs=1e-9)

    # univariate p-values against the independently coded quadrature oracle
    x = [rng.uniform(0, 10) for _ in range(30)]
    y = [0.3 * v + rng.gauss(0, 2) for v in x]
    entry = univariate_regression(x, y)
    expected_p = t_two_sided_quadrature(entry.t_statistic, len(x) - 2)
    assert entry.p_value == pytest.approx(expected_p, abs=1e-6)
    for t, df, pinned in [(2.0, 10, 0.0733880347707393), (4.0, 28, 0.0004202068570999806)]:
        assert t_two_sided_p(t, df) == pytest.approx(pinned, abs=1e-6)
    ok(6, "noise-free OLS recovers coefficients to 1e-9; p-values match quadrature to 1e-6")


GOLDEN_FILES = [
    "dataset.jsonl",
    "explanations.jsonl",
    "programs.jsonl",
    "proofs.jsonl",
    "features.jsonl",
    "model.json",
    "selections.jsonl",
    "report/summary.json",
    "report/ablation.csv",
    "report/regression.json",
    "report/hedges.csv",
    "report/directions.csv",
    "report/agreement.json",
]


def test_criterion_7_end_to_end_replay(tmp_path, golden_dir):
    first = StageRunner(fixture_config(tmp_path / "first"))
    first.run_all()
    second = StageRunner(fixture_config(tmp_path / "second"))
    second.run_all()
    for name in GOLDEN_FILES:
        bytes_first = (first.run_dir / name).read_bytes()
        assert bytes_first == (second.run_dir / name).read_bytes(), f"{name} differs across runs"
        assert bytes_first == (golden_dir / name).read_bytes(), f"{name} differs from golden"
    summary = json.loads((first.run_dir / "report" / "summary.json").read_text())
    assert summary["accuracy"] == 0.85
    assert summary["self_evident"]["count"] == 2
    ablation_lines = (first.run_dir / "report" / "ablation.csv").read_text().splitlines()
    assert any(line.startswith("cumulative,random,") and line.endswith("0.5") for line in ablation_lines)
    ok(7, f"two replay runs and the committed goldens agree byte-for-byte on {len(GOLDEN_FILES)} artifacts")


def test_criterion_8_tautology_gate(golden_dir):
    rows = read_jsonl(golden_dir / "features.jsonl")
    flagged = {
        (r["example_id"], r["candidate_index"])
        for r in rows
        if r["features"]["depth"] == 1 and r["features"]["drift"] == 0
    }
    reported = {(r["example_id"], r["candidate_index"]) for r in rows if r["self_evident"]}
    assert flagged == reported
    assert reported == {("ex01-balloon", 0), ("ex16-lamp", 1)}
    ok(8, "self-evident flag holds exactly when depth=1 and drift=0 (2 fixtures flagged)")


def test_criterion_9_statistics():
    x = [3.0, 1.0, 4.0, 1.5, 9.0, 2.6]
    assert spearman(x, x)[0] == 1.0
    assert spearman(x, [-v for v in x])[0] == -1.0
    assert cohens_kappa(["a", "b", "a"], ["a", "b", "a"]) == 1.0

    rng = random.Random(99)
    xs = [rng.randint(0, 9) * 1.0 for _ in range(25)]
    ys = [v + rng.gauss(0, 3) for v in xs]
    rho, p = spearman(xs, ys)
    oracle_rho, oracle_p = spearman_oracle(xs, ys)
    assert rho == pytest.approx(oracle_rho, abs=1e-9)
    assert p == pytest.approx(oracle_p, abs=1e-9)

    a = ["y", "y", "n", "y", "n", "n", "y", "y", "n", "y", "n", "y"]
    b = ["y", "n", "n", "y", "n", "y", "y", "y", "n", "y", "n", "n"]
    assert cohens_kappa(a, b) == pytest.approx(kappa_oracle(a, b), abs=1e-9)
    assert cohens_kappa(a, b) == pytest.approx(0.5, abs=1e-12)
    ok(9, "spearman and kappa match independent oracles to 1e-9; identities exact")


def test_criterion_10_replication_mode_documented():
    readme = (Path(__file__).parent.parent / "README.md").read_text(encoding="utf-8")
    assert "replication" in readme.lower()
    print(
        "[acceptance] criterion 10: SKIP - live-LLM replication is documented but "
        "non-gating (depends on external services and checkpoints)"
    )


# --- secondary component hooks (run when the sidecar build exists) ----------

SIDECAR_DIR = Path(__file__).parent.parent.parent / "sidecar"


def sidecar_available() -> bool:
    return (SIDECAR_DIR / "dist" / "main.js").exists()


@pytest.mark.skipif(not sidecar_available(), reason="sidecar not built")
def test_criterion_11_sidecar_protocol_conformance():
    from ibe_eval.sidecar_client import SidecarClient

    with SidecarClient(command=f"node {SIDECAR_DIR / 'dist' / 'main.js'}") as client:
        health = client.health()
        assert health["protocol"] == "1"
        assert set(health["models"]) == {"entail", "certainty", "hedge"}
        entail = client.request(
            "entail", premise="a balloon is pricked", hypothesis="the balloon may deflate"
        )
        total = entail["entail"] + entail["neutral"] + entail["contradiction"]
        assert total == pytest.approx(1.0, abs=1e-6)
        certainty = client.request("certainty", sentence="the blocks may fall")
        assert 1.0 <= certainty["certainty"] <= 6.0
        hedge = client.request("hedge", sentence="if the balloon is pricked it may deflate")
        labels = {label for _, label in hedge["tokens"]}
        assert labels <= {"none", "epistemic", "doxatic", "conditional"}
    ok(11, "sidecar health/entail/certainty/hedge honor the protocol invariants")


@pytest.mark.skipif(not sidecar_available(), reason="sidecar not built")
def test_criterion_12_capability_fallback(tmp_path):
    config = fixture_config(
        tmp_path / "runs",
        scorer_backend="sidecar",
        sidecar_command=(
            f"node {SIDECAR_DIR / 'dist' / 'main.js'} --disable certainty"
        ),
    )
    runner = StageRunner(config)
    for stage in ("generate", "formalize", "prove", "features"):
        runner.run(stage)
    manifest = json.loads((runner.run_dir / "features.manifest.json").read_text())
    assert manifest["backend"] == "sidecar"
    assert "certainty" in manifest["substitutions"]
    rows = read_jsonl(runner.artifact_path("features"))
    assert len(rows) == 40
    ok(12, "core completed the fixture run with the certainty op downgraded to fallback")
