"""Criterion metrics over structured explanations.

Parsimony's concept drift counts nouns an explanation introduces beyond the
premise and conclusion; coherence averages entailment strength across the
If-Then steps; linguistic uncertainty inverts sentence-certainty scores for
the assumptions and summary. Proof depth and the consistency bit come from
the solver and are assembled here into the final feature vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ScorerError, ValidationError
from .model import EntailmentHypothesis, IbeFeatureVector, ProofResult, StructuredExplanation
from .scorers import HEDGE_CATEGORIES, ScorerSuite
from .solver import consistency


class NounScope(str, Enum):
    """Which explanation text feeds noun extraction for concept drift."""

    CLAUSES = "clauses"
    CLAUSES_ASSUMPTIONS = "clauses_assumptions"
    FULL = "full"  # clauses + assumptions + summary


class UncertaintyMode(str, Enum):
    """Aggregate assumption uncertainty by mean (default) or by sum."""

    AVERAGE = "average"
    SUM = "sum"


def extract_nouns(text: str, pos_tagger) -> set[str]:
    """Lowercase lemma set of the tokens the tagger marks NOUN."""
    if not text.strip():
        return set()
    return {t.lemma for t in pos_tagger(text) if t.tag == "NOUN"}


def explanation_texts(
    explanation: StructuredExplanation, scope: NounScope = NounScope.CLAUSES_ASSUMPTIONS
) -> list[str]:
    """The explanation fragments covered by a noun scope, in order."""
    texts: list[str] = []
    for step in explanation.steps:
        texts.append(step.if_clause)
        texts.append(step.then_clause)
        if scope is not NounScope.CLAUSES and step.assumption:
            texts.append(step.assumption)
    if scope is NounScope.FULL and explanation.summary:
        texts.append(explanation.summary)
    return texts


def concept_drift(
    hypothesis: EntailmentHypothesis,
    explanation: StructuredExplanation,
    pos_tagger,
    scope: NounScope = NounScope.CLAUSES_ASSUMPTIONS,
) -> int:
    """Count of nouns in the explanation that appear in neither the premise
    nor the conclusion (set semantics, so duplicates do not matter)."""
    hypothesis_nouns = extract_nouns(hypothesis.premise, pos_tagger) | extract_nouns(
        hypothesis.conclusion, pos_tagger
    )
    explanation_nouns: set[str] = set()
    for text in explanation_texts(explanation, scope):
        explanation_nouns |= extract_nouns(text, pos_tagger)
    return len(explanation_nouns - hypothesis_nouns)


def stepwise_entailment(explanation: StructuredExplanation, entailment_scorer) -> float:
    """Mean over steps of P(entail) - P(contradiction) between If and Then."""
    if not explanation.steps:
        raise ValidationError("stepwise entailment needs at least one step")
    strengths = []
    for step in explanation.steps:
        try:
            probs = entailment_scorer(step.if_clause, step.then_clause)
        except Exception as exc:
            raise ScorerError(f"entailment scorer failed on step {step.index}: {exc}") from exc
        strengths.append(probs.entail - probs.contradiction)
    return sum(strengths) / len(strengths)


def uncertainty_of(sentence: str, certainty_scorer) -> float:
    """Scale inversion: certainty in [1,6] becomes uncertainty 7 - certainty."""
    try:
        certainty = certainty_scorer(sentence)
    except Exception as exc:
        raise ScorerError(f"certainty scorer failed: {exc}") from exc
    if not (1.0 <= certainty <= 6.0):
        raise ScorerError(f"certainty scorer returned {certainty}, outside [1,6]")
    return 7.0 - certainty


def linguistic_uncertainty(
    explanation: StructuredExplanation,
    certainty_scorer,
    mode: UncertaintyMode = UncertaintyMode.AVERAGE,
) -> float:
    """Assumption uncertainty (mean or sum) plus summary uncertainty.

    Steps with empty assumptions are skipped; with no usable assumptions the
    assumption term is 0, and an empty summary contributes 0.
    """
    if not explanation.steps:
        raise ValidationError("linguistic uncertainty needs at least one step")
    scores = [
        uncertainty_of(assumption, certainty_scorer)
        for assumption in explanation.assumptions
        if assumption.strip()
    ]
    if not scores:
        assumption_term = 0.0
    elif mode is UncertaintyMode.SUM:
        assumption_term = sum(scores)
    else:
        assumption_term = sum(scores) / len(scores)
    summary_term = (
        uncertainty_of(explanation.summary, certainty_scorer) if explanation.summary.strip() else 0.0
    )
    return assumption_term + summary_term


@dataclass(frozen=True)
class HedgeCounts:
    """Per-category hedge-cue token counts over a whole explanation."""

    epistemic: int
    doxatic: int
    conditional: int
    total_tokens: int

    @property
    def total_cues(self) -> int:
        return self.epistemic + self.doxatic + self.conditional

    def to_dict(self) -> dict[str, int]:
        return {
            "epistemic": self.epistemic,
            "doxatic": self.doxatic,
            "conditional": self.conditional,
            "total_tokens": self.total_tokens,
        }

    @classmethod
    def from_dict(cls, d) -> "HedgeCounts":
        return cls(
            epistemic=int(d["epistemic"]),
            doxatic=int(d["doxatic"]),
            conditional=int(d["conditional"]),
            total_tokens=int(d["total_tokens"]),
        )


def classify_hedges(explanation: StructuredExplanation, hedge_tagger) -> HedgeCounts:
    """Token counts per hedge category over clauses, assumptions, and summary."""
    counts = dict.fromkeys(HEDGE_CATEGORIES, 0)
    total = 0
    texts: list[str] = []
    for step in explanation.steps:
        texts.extend((step.if_clause, step.then_clause))
        if step.assumption:
            texts.append(step.assumption)
    if explanation.summary:
        texts.append(explanation.summary)
    for text in texts:
        for _, label in hedge_tagger(text):
            total += 1
            if label != "none":
                counts[label] += 1
    return HedgeCounts(
        epistemic=counts["epistemic"],
        doxatic=counts["doxatic"],
        conditional=counts["conditional"],
        total_tokens=total,
    )


def hedge_ratio(counts: HedgeCounts) -> float:
    """Fraction of tokens that are hedge cues."""
    if counts.total_tokens == 0:
        raise ValidationError("hedge ratio undefined for zero tokens")
    return counts.total_cues / counts.total_tokens


def is_self_evident(features: IbeFeatureVector) -> bool:
    """A proof depth of exactly 1 with zero concept drift marks an
    explanation that merely restates the tested relation."""
    return features.depth == 1 and features.drift == 0


def compute_features(
    hypothesis: EntailmentHypothesis,
    explanation: StructuredExplanation,
    proof: ProofResult,
    scorers: ScorerSuite,
    noun_scope: NounScope = NounScope.CLAUSES_ASSUMPTIONS,
    uncertainty_mode: UncertaintyMode = UncertaintyMode.AVERAGE,
) -> IbeFeatureVector:
    """Assemble the five-feature criterion vector for one candidate."""
    try:
        coherence = stepwise_entailment(explanation, scorers.entailment)
    except ScorerError as exc:
        raise ScorerError(f"coherence: {exc}") from exc
    try:
        uncertainty = linguistic_uncertainty(explanation, scorers.certainty, uncertainty_mode)
    except ScorerError as exc:
        raise ScorerError(f"uncertainty: {exc}") from exc
    return IbeFeatureVector(
        consistency=consistency(proof),
        depth=proof.depth if proof.satisfied else 0,
        drift=concept_drift(hypothesis, explanation, scorers.pos, noun_scope),
        coherence=coherence,
        uncertainty=uncertainty,
    )
