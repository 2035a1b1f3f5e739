"""Plausibility scoring and selection for competing natural-language
explanations in multiple-choice causal question answering.

The pipeline generates an If-Then explanation per answer candidate, checks
logical consistency with a weak-unification backward-chaining prover,
measures parsimony (proof depth, concept drift), coherence (step-wise
entailment), and linguistic uncertainty, then picks the candidate whose
feature vector scores highest under a fitted linear model.
"""

from .model import (
    Atom,
    CqaExample,
    Direction,
    EntailmentHypothesis,
    ExplanationStep,
    IbeFeatureVector,
    LinearModel,
    LogicProgram,
    ProofResult,
    Rule,
    ScoredCandidate,
    Source,
    StructuredExplanation,
    Term,
    validate_example,
)
from .solver import EmbeddingProvider, consistency, prove, weak_unify

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "CqaExample",
    "Direction",
    "EmbeddingProvider",
    "EntailmentHypothesis",
    "ExplanationStep",
    "IbeFeatureVector",
    "LinearModel",
    "LogicProgram",
    "ProofResult",
    "Rule",
    "ScoredCandidate",
    "Source",
    "StructuredExplanation",
    "Term",
    "consistency",
    "prove",
    "validate_example",
    "weak_unify",
    "__version__",
]
