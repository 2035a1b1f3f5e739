"""Domain types shared across the pipeline.

Everything here is an immutable value object: construction validates the
invariants, ``to_dict``/``from_dict`` give a JSON-safe round-trip, and there
is no behavior beyond that. Candidate indices are 0-based everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from .errors import ValidationError

FEATURE_NAMES = ("consistency", "depth", "drift", "coherence", "uncertainty")


class Direction(str, Enum):
    CAUSE = "cause"
    EFFECT = "effect"


class Source(str, Enum):
    COPA = "copa"
    ECARE = "ecare"
    CUSTOM = "custom"


class TermKind(str, Enum):
    CONSTANT = "constant"
    VARIABLE = "variable"


@dataclass(frozen=True)
class CqaExample:
    """A multiple-choice causal question: pick the most plausible cause or effect."""

    id: str
    context: str
    direction: Direction
    candidates: tuple[str, ...]
    gold_index: int
    source: Source = Source.CUSTOM

    def __post_init__(self) -> None:
        if len(self.candidates) < 2:
            raise ValidationError(f"example {self.id!r}: needs >= 2 candidates")
        for i, cand in enumerate(self.candidates):
            if not cand.strip():
                raise ValidationError(f"example {self.id!r}: empty candidate at index {i}")
        if not (0 <= self.gold_index < len(self.candidates)):
            raise ValidationError(
                f"example {self.id!r}: gold index out of range "
                f"({self.gold_index} with {len(self.candidates)} candidates)"
            )
        if not self.context.strip():
            raise ValidationError(f"example {self.id!r}: empty context")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "context": self.context,
            "direction": self.direction.value,
            "candidates": list(self.candidates),
            "gold_index": self.gold_index,
            "source": self.source.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "CqaExample":
        return cls(
            id=d["id"],
            context=d["context"],
            direction=Direction(d["direction"]),
            candidates=tuple(d["candidates"]),
            gold_index=int(d["gold_index"]),
            source=Source(d.get("source", "custom")),
        )


def validate_example(example: CqaExample) -> CqaExample:
    """Return the example unchanged if all invariants hold.

    Construction already validates, so this is the hook for values arriving
    from deserialization paths that bypass the constructor.
    """
    if not isinstance(example.direction, Direction):
        raise ValidationError(f"example {example.id!r}: bad direction {example.direction!r}")
    # re-run the constructor checks against current field values
    CqaExample(
        id=example.id,
        context=example.context,
        direction=example.direction,
        candidates=example.candidates,
        gold_index=example.gold_index,
        source=example.source,
    )
    return example


@dataclass(frozen=True)
class EntailmentHypothesis:
    """Premise/conclusion pair derived from one answer candidate.

    Cause questions treat the candidate as premise and the context as
    conclusion; effect questions reverse the mapping.
    """

    example_id: str
    candidate_index: int
    premise: str
    conclusion: str

    def __post_init__(self) -> None:
        if not self.premise.strip():
            raise ValidationError(f"hypothesis {self.example_id}/{self.candidate_index}: empty premise")
        if not self.conclusion.strip():
            raise ValidationError(f"hypothesis {self.example_id}/{self.candidate_index}: empty conclusion")

    def to_dict(self) -> dict[str, Any]:
        return {
            "example_id": self.example_id,
            "candidate_index": self.candidate_index,
            "premise": self.premise,
            "conclusion": self.conclusion,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "EntailmentHypothesis":
        return cls(
            example_id=d["example_id"],
            candidate_index=int(d["candidate_index"]),
            premise=d["premise"],
            conclusion=d["conclusion"],
        )


@dataclass(frozen=True)
class ExplanationStep:
    """One If-Then step plus the commonsense assumption backing it."""

    index: int  # 1-based
    if_clause: str
    then_clause: str
    assumption: str = ""

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValidationError(f"step index must be >= 1, got {self.index}")
        if not self.if_clause.strip():
            raise ValidationError(f"step {self.index}: empty if-clause")
        if not self.then_clause.strip():
            raise ValidationError(f"step {self.index}: empty then-clause")

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "if_clause": self.if_clause,
            "then_clause": self.then_clause,
            "assumption": self.assumption,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExplanationStep":
        return cls(
            index=int(d["index"]),
            if_clause=d["if_clause"],
            then_clause=d["then_clause"],
            assumption=d.get("assumption", ""),
        )


@dataclass(frozen=True)
class StructuredExplanation:
    """Ordered If-Then steps with assumptions, a summary, and the raw text."""

    hypothesis: EntailmentHypothesis
    steps: tuple[ExplanationStep, ...]
    summary: str
    raw_response: str
    parse_warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValidationError("explanation needs at least one step")
        for pos, step in enumerate(self.steps, start=1):
            if step.index != pos:
                raise ValidationError(
                    f"step indices must be consecutive from 1: position {pos} has index {step.index}"
                )

    @property
    def assumptions(self) -> tuple[str, ...]:
        return tuple(s.assumption for s in self.steps)

    def to_dict(self) -> dict[str, Any]:
        return {
            "hypothesis": self.hypothesis.to_dict(),
            "steps": [s.to_dict() for s in self.steps],
            "summary": self.summary,
            "raw_response": self.raw_response,
            "parse_warnings": list(self.parse_warnings),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "StructuredExplanation":
        return cls(
            hypothesis=EntailmentHypothesis.from_dict(d["hypothesis"]),
            steps=tuple(ExplanationStep.from_dict(s) for s in d["steps"]),
            summary=d.get("summary", ""),
            raw_response=d.get("raw_response", ""),
            parse_warnings=tuple(d.get("parse_warnings", ())),
        )


@dataclass(frozen=True)
class Term:
    """A constant or variable; variables begin with an uppercase letter."""

    kind: TermKind
    name: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("term name must be nonempty")
        starts_upper = self.name[0].isupper()
        if self.kind is TermKind.VARIABLE and not starts_upper:
            raise ValidationError(f"variable name must start uppercase: {self.name!r}")
        if self.kind is TermKind.CONSTANT and starts_upper:
            raise ValidationError(f"constant name must not start uppercase: {self.name!r}")

    @classmethod
    def const(cls, name: str) -> "Term":
        return cls(TermKind.CONSTANT, name)

    @classmethod
    def var(cls, name: str) -> "Term":
        return cls(TermKind.VARIABLE, name)

    @classmethod
    def from_token(cls, token: str) -> "Term":
        kind = TermKind.VARIABLE if token[:1].isupper() else TermKind.CONSTANT
        return cls(kind, token)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "name": self.name}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Term":
        return cls(TermKind(d["kind"]), d["name"])


@dataclass(frozen=True)
class Atom:
    """predicate(args...); 0-ary atoms have an empty argument tuple."""

    predicate: str
    args: tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        if not self.predicate:
            raise ValidationError("atom predicate must be nonempty")

    @property
    def is_ground(self) -> bool:
        return all(t.kind is TermKind.CONSTANT for t in self.args)

    def render(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({', '.join(t.name for t in self.args)})"

    def to_dict(self) -> dict[str, Any]:
        return {"predicate": self.predicate, "args": [t.to_dict() for t in self.args]}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Atom":
        return cls(d["predicate"], tuple(Term.from_dict(t) for t in d.get("args", ())))


@dataclass(frozen=True)
class Rule:
    """Definite clause: head :- body (body nonempty)."""

    head: Atom
    body: tuple[Atom, ...]

    def __post_init__(self) -> None:
        if not self.body:
            raise ValidationError(f"rule {self.head.render()}: body must be nonempty")

    def render(self) -> str:
        return f"{self.head.render()} :- {', '.join(a.render() for a in self.body)}."

    def to_dict(self) -> dict[str, Any]:
        return {"head": self.head.to_dict(), "body": [a.to_dict() for a in self.body]}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Rule":
        return cls(Atom.from_dict(d["head"]), tuple(Atom.from_dict(a) for a in d["body"]))


@dataclass(frozen=True)
class LogicProgram:
    """Rules, ground facts, and the single query the prover must satisfy."""

    rules: tuple[Rule, ...]
    facts: tuple[Atom, ...]
    query: Atom

    def __post_init__(self) -> None:
        if not self.facts:
            raise ValidationError("program needs at least one fact")
        for fact in self.facts:
            if not fact.is_ground:
                raise ValidationError(f"fact must be ground: {fact.render()}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "rules": [r.to_dict() for r in self.rules],
            "facts": [f.to_dict() for f in self.facts],
            "query": self.query.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "LogicProgram":
        return cls(
            rules=tuple(Rule.from_dict(r) for r in d.get("rules", ())),
            facts=tuple(Atom.from_dict(f) for f in d["facts"]),
            query=Atom.from_dict(d["query"]),
        )


@dataclass(frozen=True)
class ProofResult:
    """Outcome of backward chaining: accept bit, score, rule depth, chain.

    ``chain`` holds references like ``rule:3`` in application order; a query
    closed directly by a fact holds a single ``fact:<i>`` entry so depth is
    floored at 1 (the diagnostics keep the raw rule count).
    """

    satisfied: bool
    proof_score: float
    depth: int
    chain: tuple[str, ...]
    diagnostics: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.satisfied:
            if self.depth < 1 or self.depth != len(self.chain):
                raise ValidationError(
                    f"satisfied proof needs depth == |chain| >= 1, got depth={self.depth}, "
                    f"|chain|={len(self.chain)}"
                )
            if self.proof_score <= 0.0:
                raise ValidationError("satisfied proof needs proof_score above the threshold")
        else:
            if self.depth != 0 or self.chain or self.proof_score != 0.0:
                raise ValidationError("unsatisfied proof must have depth 0, empty chain, score 0")
        if not (0.0 <= self.proof_score <= 1.0):
            raise ValidationError(f"proof_score out of [0,1]: {self.proof_score}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "satisfied": self.satisfied,
            "proof_score": self.proof_score,
            "depth": self.depth,
            "chain": list(self.chain),
            "diagnostics": dict(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ProofResult":
        return cls(
            satisfied=bool(d["satisfied"]),
            proof_score=float(d["proof_score"]),
            depth=int(d["depth"]),
            chain=tuple(d.get("chain", ())),
            diagnostics=dict(d.get("diagnostics", {})),
        )


@dataclass(frozen=True)
class IbeFeatureVector:
    """The five selection-criterion features for one candidate explanation."""

    consistency: int
    depth: int
    drift: int
    coherence: float
    uncertainty: float

    def __post_init__(self) -> None:
        if self.consistency not in (0, 1):
            raise ValidationError(f"consistency must be 0 or 1, got {self.consistency}")
        if self.depth < 0 or self.drift < 0:
            raise ValidationError("depth and drift must be non-negative")
        if self.consistency == 0 and self.depth != 0:
            raise ValidationError("inconsistent explanations must have depth 0")
        if not (-1.0 <= self.coherence <= 1.0):
            raise ValidationError(f"coherence out of [-1,1]: {self.coherence}")
        if self.uncertainty < 0.0:
            raise ValidationError(f"uncertainty must be non-negative: {self.uncertainty}")

    def value(self, feature: str) -> float:
        if feature not in FEATURE_NAMES:
            raise ValidationError(f"unknown feature {feature!r}")
        return float(getattr(self, feature))

    def to_dict(self) -> dict[str, Any]:
        return {name: getattr(self, name) for name in FEATURE_NAMES}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "IbeFeatureVector":
        return cls(
            consistency=int(d["consistency"]),
            depth=int(d["depth"]),
            drift=int(d["drift"]),
            coherence=float(d["coherence"]),
            uncertainty=float(d["uncertainty"]),
        )


@dataclass(frozen=True)
class ScoredCandidate:
    """A candidate's feature vector, its linear plausibility score, and the pick."""

    candidate_index: int
    features: IbeFeatureVector
    plausibility: float
    selected: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "candidate_index": self.candidate_index,
            "features": self.features.to_dict(),
            "plausibility": self.plausibility,
            "selected": self.selected,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ScoredCandidate":
        return cls(
            candidate_index=int(d["candidate_index"]),
            features=IbeFeatureVector.from_dict(d["features"]),
            plausibility=float(d["plausibility"]),
            selected=bool(d["selected"]),
        )


@dataclass(frozen=True)
class LinearModel:
    """Linear plausibility model: intercept + sum of weight * feature.

    ``standardize_means``/``standardize_stds`` are populated when the model
    was fitted on z-scored features; ``flags`` records fitting degeneracies
    (e.g. ``rank_deficient``).
    """

    weights: Mapping[str, float]
    intercept: float
    feature_order: tuple[str, ...]
    standardize_means: Mapping[str, float] = field(default_factory=dict)
    standardize_stds: Mapping[str, float] = field(default_factory=dict)
    training_fingerprint: str = ""
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if set(self.feature_order) != set(self.weights):
            raise ValidationError(
                f"feature_order {sorted(self.feature_order)} must match weight keys "
                f"{sorted(self.weights)}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "weights": {k: self.weights[k] for k in self.feature_order},
            "intercept": self.intercept,
            "feature_order": list(self.feature_order),
            "standardize_means": dict(self.standardize_means),
            "standardize_stds": dict(self.standardize_stds),
            "training_fingerprint": self.training_fingerprint,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "LinearModel":
        return cls(
            weights={k: float(v) for k, v in d["weights"].items()},
            intercept=float(d["intercept"]),
            feature_order=tuple(d["feature_order"]),
            standardize_means={k: float(v) for k, v in d.get("standardize_means", {}).items()},
            standardize_stds={k: float(v) for k, v in d.get("standardize_stds", {}).items()},
            training_fingerprint=d.get("training_fingerprint", ""),
            flags=tuple(d.get("flags", ())),
        )


def significance_marker(p_value: float) -> str:
    """Star notation: *** below 0.001, ** below 0.01, * below 0.05, else empty."""
    if p_value < 0.001:
        return "***"
    if p_value < 0.01:
        return "**"
    if p_value < 0.05:
        return "*"
    return ""


@dataclass(frozen=True)
class RegressionEntry:
    """Univariate regression statistics for one feature."""

    coefficient: float
    std_error: float
    t_statistic: float
    p_value: float
    marker: str

    def __post_init__(self) -> None:
        if self.marker != significance_marker(self.p_value):
            raise ValidationError(
                f"marker {self.marker!r} does not match p-value {self.p_value}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "coefficient": self.coefficient,
            "std_error": self.std_error,
            "t_statistic": self.t_statistic,
            "p_value": self.p_value,
            "marker": self.marker,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RegressionEntry":
        return cls(
            coefficient=float(d["coefficient"]),
            std_error=float(d["std_error"]),
            t_statistic=float(d["t_statistic"]),
            p_value=float(d["p_value"]),
            marker=d["marker"],
        )


@dataclass(frozen=True)
class RegressionReport:
    """Per-feature univariate regression entries plus fit metadata."""

    entries: Mapping[str, RegressionEntry]
    n_rows: int
    standardized: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "entries": {k: v.to_dict() for k, v in sorted(self.entries.items())},
            "n_rows": self.n_rows,
            "standardized": self.standardized,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RegressionReport":
        return cls(
            entries={k: RegressionEntry.from_dict(v) for k, v in d["entries"].items()},
            n_rows=int(d["n_rows"]),
            standardized=bool(d["standardized"]),
        )
