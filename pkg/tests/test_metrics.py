import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import drift_oracle

from ibe_eval.errors import ScorerError, ValidationError
from ibe_eval.metrics import (
    HedgeCounts,
    NounScope,
    UncertaintyMode,
    classify_hedges,
    compute_features,
    concept_drift,
    extract_nouns,
    hedge_ratio,
    is_self_evident,
    linguistic_uncertainty,
    stepwise_entailment,
)
from ibe_eval.model import (
    EntailmentHypothesis,
    ExplanationStep,
    IbeFeatureVector,
    ProofResult,
    StructuredExplanation,
)
from ibe_eval.scorers import EntailmentProbs, ScorerSuite


def make_explanation(steps, summary="", premise="the balloon", conclusion="the balloon popped"):
    hypothesis = EntailmentHypothesis("e", 0, premise, conclusion)
    return StructuredExplanation(
        hypothesis=hypothesis,
        steps=tuple(
            ExplanationStep(i + 1, if_c, then_c, assumption)
            for i, (if_c, then_c, assumption) in enumerate(steps)
        ),
        summary=summary,
        raw_response="",
    )


class TestExtractNouns:
    def test_hand_tagged_sentence(self, scorers):
        assert extract_nouns("The balloons were pricked by a needle", scorers.pos) == {
            "balloon",
            "needle",
        }

    def test_empty_text(self, scorers):
        assert extract_nouns("", scorers.pos) == set()

    def test_verbs_only(self, scorers):
        assert extract_nouns("run runs running", scorers.pos) == set()


class TestConceptDrift:
    def test_hand_computed_difference(self, scorers):
        explanation = make_explanation(
            [("the needle turns", "air pressure drops", "air flows out")],
            premise="the balloon",
            conclusion="the balloon popped",
        )
        assert concept_drift(explanation.hypothesis, explanation, scorers.pos) == 3

    def test_subset_gives_zero(self, scorers):
        explanation = make_explanation(
            [("the balloon wobbles", "the balloon pops", "balloons are fragile")]
        )
        assert concept_drift(explanation.hypothesis, explanation, scorers.pos) == 0

    def test_no_nouns_gives_zero(self, scorers):
        explanation = make_explanation([("it wobbles", "it pops", "")])
        assert concept_drift(explanation.hypothesis, explanation, scorers.pos) == 0

    def test_duplicates_do_not_count_twice(self, scorers):
        explanation = make_explanation(
            [
                ("the needle turns", "the needle turns fast", "needles turn"),
                ("the needle spins", "the needle glints", ""),
            ]
        )
        assert concept_drift(explanation.hypothesis, explanation, scorers.pos) == 1

    def test_scope_excludes_assumptions_when_asked(self, scorers):
        explanation = make_explanation(
            [("the balloon wobbles", "the balloon pops", "a needle did it")]
        )
        hyp = explanation.hypothesis
        assert concept_drift(hyp, explanation, scorers.pos, NounScope.CLAUSES) == 0
        assert concept_drift(hyp, explanation, scorers.pos, NounScope.CLAUSES_ASSUMPTIONS) == 1

    def test_matches_oracle_on_fixture_corpus(self, scorers, fixtures_dir):
        cases = json.loads((fixtures_dir / "drift_cases.json").read_text())
        assert len(cases) == 200
        for case in cases:
            hypothesis = EntailmentHypothesis.from_dict(case["hypothesis"])
            explanation = StructuredExplanation.from_dict(case["explanation"])
            expected = drift_oracle(hypothesis, explanation, scorers.pos)
            assert concept_drift(hypothesis, explanation, scorers.pos) == expected
            assert expected == case["expected_drift"]


def constant_entailment(entail, neutral, contradiction):
    return lambda p, h: EntailmentProbs(entail, neutral, contradiction)


class TestStepwiseEntailment:
    def test_constant_scorer_four_steps(self):
        explanation = make_explanation([("a", "b", ""), ("b", "c", ""), ("c", "d", ""), ("d", "e", "")])
        value = stepwise_entailment(explanation, constant_entailment(0.9, 0.05, 0.05))
        assert value == pytest.approx(0.85, abs=1e-12)

    def test_uniform_scorer_is_zero(self):
        explanation = make_explanation([("a", "b", "")])
        value = stepwise_entailment(explanation, constant_entailment(1 / 3, 1 / 3, 1 / 3))
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_opposite_steps_average_to_zero(self):
        responses = iter([EntailmentProbs(1.0, 0.0, 0.0), EntailmentProbs(0.0, 0.0, 1.0)])
        explanation = make_explanation([("a", "b", ""), ("b", "c", "")])
        assert stepwise_entailment(explanation, lambda p, h: next(responses)) == pytest.approx(0.0)

    def test_scorer_failure_names_step(self):
        def broken(p, h):
            raise RuntimeError("boom")

        explanation = make_explanation([("a", "b", "")])
        with pytest.raises(ScorerError, match="step 1"):
            stepwise_entailment(explanation, broken)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=6))
    def test_bounded_under_random_probabilities(self, raw_pairs):
        triples = []
        for a, b in raw_pairs:
            entail = min(a, 1.0)
            contradiction = min(b, 1.0 - entail)
            triples.append(EntailmentProbs(entail, 1.0 - entail - contradiction, contradiction))
        rows = iter(triples)
        explanation = make_explanation([("a", "b", "")] * len(triples))
        value = stepwise_entailment(explanation, lambda p, h: next(rows))
        assert -1.0 <= value <= 1.0


def certainty_table(table, default=6.0):
    return lambda sentence: table.get(sentence, default)


class TestLinguisticUncertainty:
    def test_maximal_certainty_floor(self):
        explanation = make_explanation([("a", "b", "sure thing")], summary="all clear")
        value = linguistic_uncertainty(explanation, certainty_table({}))
        assert value == pytest.approx(2.0, abs=1e-12)

    def test_mean_plus_summary(self):
        explanation = make_explanation(
            [("a", "b", "first"), ("b", "c", "second")], summary="the end"
        )
        scorer = certainty_table({"first": 5.0, "second": 3.0, "the end": 4.0})
        assert linguistic_uncertainty(explanation, scorer) == pytest.approx(6.0, abs=1e-12)

    def test_single_assumption_no_summary(self):
        explanation = make_explanation([("a", "b", "shaky claim")], summary="")
        scorer = certainty_table({"shaky claim": 1.0})
        assert linguistic_uncertainty(explanation, scorer) == pytest.approx(6.0, abs=1e-12)

    def test_empty_assumptions_contribute_zero(self):
        explanation = make_explanation([("a", "b", ""), ("b", "c", "")], summary="the end")
        scorer = certainty_table({"the end": 4.0})
        assert linguistic_uncertainty(explanation, scorer) == pytest.approx(3.0, abs=1e-12)

    def test_sum_mode(self):
        explanation = make_explanation(
            [("a", "b", "first"), ("b", "c", "second")], summary="the end"
        )
        scorer = certainty_table({"first": 5.0, "second": 3.0, "the end": 4.0})
        value = linguistic_uncertainty(explanation, scorer, UncertaintyMode.SUM)
        assert value == pytest.approx((2.0 + 4.0) + 3.0, abs=1e-12)

    def test_out_of_range_certainty_rejected(self):
        explanation = make_explanation([("a", "b", "x")])
        with pytest.raises(ScorerError, match="outside"):
            linguistic_uncertainty(explanation, certainty_table({"x": 9.0}))

    def test_monotone_in_certainty(self):
        explanation = make_explanation(
            [("a", "b", "first"), ("b", "c", "second")], summary="the end"
        )
        rng = random.Random(5)
        for _ in range(100):
            base = {k: rng.uniform(1, 6) for k in ("first", "second", "the end")}
            lowered = dict(base)
            key = rng.choice(list(base))
            lowered[key] = max(1.0, base[key] - rng.uniform(0, 2))
            high = linguistic_uncertainty(explanation, certainty_table(base))
            low = linguistic_uncertainty(explanation, certainty_table(lowered))
            assert low >= high - 1e-12


class TestHedges:
    def test_epistemic_may(self, scorers):
        explanation = make_explanation([("the blocks are stacked", "the blocks may fall", "")])
        counts = classify_hedges(explanation, scorers.hedges)
        assert counts.epistemic >= 1

    def test_conditional_and_epistemic(self, scorers):
        explanation = make_explanation(
            [("things happen", "results follow", "if the balloon is pricked it may deflate")]
        )
        counts = classify_hedges(explanation, scorers.hedges)
        assert counts.conditional >= 1
        assert counts.epistemic >= 1

    def test_clean_text_all_zeros(self, scorers):
        explanation = make_explanation([("the sun rose", "the sky brightened", "dawn arrived")])
        counts = classify_hedges(explanation, scorers.hedges)
        assert counts.total_cues == 0
        assert counts.total_tokens > 0

    def test_ratio(self):
        assert hedge_ratio(HedgeCounts(1, 1, 0, 20)) == pytest.approx(0.1)
        assert hedge_ratio(HedgeCounts(0, 0, 0, 10)) == 0.0
        assert hedge_ratio(HedgeCounts(5, 0, 0, 5)) == 1.0

    def test_ratio_zero_tokens_rejected(self):
        with pytest.raises(ValidationError):
            hedge_ratio(HedgeCounts(0, 0, 0, 0))


class TestSelfEvident:
    def test_depth_one_drift_zero(self):
        assert is_self_evident(IbeFeatureVector(1, 1, 0, 0.5, 2.0))

    def test_depth_two(self):
        assert not is_self_evident(IbeFeatureVector(1, 2, 0, 0.5, 2.0))

    def test_drift_three(self):
        assert not is_self_evident(IbeFeatureVector(1, 1, 3, 0.5, 2.0))


class TestComputeFeatures:
    def _suite(self, scorers):
        return ScorerSuite(
            entailment=constant_entailment(0.85, 0.1, 0.05),
            certainty=lambda s: 4.0,
            hedges=scorers.hedges,
            pos=scorers.pos,
        )

    def test_assembly(self, scorers):
        explanation = make_explanation(
            [("the needle turns", "air pressure drops", "air escapes")],
            summary="a needle popped it",
        )
        proof = ProofResult(True, 0.9, 2, ("rule:0", "rule:1"))
        vector = compute_features(explanation.hypothesis, explanation, proof, self._suite(scorers))
        assert vector.consistency == 1
        assert vector.depth == 2
        assert vector.drift == 3
        assert vector.coherence == pytest.approx(0.8, abs=1e-12)
        assert vector.uncertainty == pytest.approx(6.0, abs=1e-12)

    def test_unsatisfied_proof_still_computes_others(self, scorers):
        explanation = make_explanation([("a thing", "another thing", "an assumption")])
        proof = ProofResult(False, 0.0, 0, ())
        vector = compute_features(explanation.hypothesis, explanation, proof, self._suite(scorers))
        assert vector.consistency == 0
        assert vector.depth == 0
        assert vector.coherence == pytest.approx(0.8, abs=1e-12)
        assert vector.uncertainty > 0
