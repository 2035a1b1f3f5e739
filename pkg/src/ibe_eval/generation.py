"""Explanation generation: prompts, response parsing, and the judge baseline.

The LLM is asked to restate each answer candidate as a premise/conclusion
pair, explain the entailment as enumerated If-Then steps with one assumption
each, and close with a summary. Parsing is total: any text either yields a
:class:`StructuredExplanation` or a typed parse error.
"""

from __future__ import annotations

import re

from .errors import MalformedStep, NoStepsFound, UnparseableVerdict, ValidationError
from .model import (
    CqaExample,
    Direction,
    EntailmentHypothesis,
    ExplanationStep,
    StructuredExplanation,
    validate_example,
)
from .transcripts import LlmClient, LlmRequest, TranscriptStore

# One worked cause-direction example embedded in every generation prompt.
WORKED_EXAMPLE = """\
Context: The streets were wet in the morning.
Question: What was the cause of this?
Candidate answer: It rained during the night.

Premise: It rained during the night.
Conclusion: The streets were wet in the morning.
Step 1: IF it rains during the night, THEN water falls on the streets.
Assumption: Rainfall deposits water on exposed surfaces.
Step 2: IF water falls on the streets, THEN the streets become wet.
Assumption: Surfaces that collect water stay wet until they dry.
Summary: Overnight rain left water on the streets, so they were wet in the morning."""

_QUESTION_BY_DIRECTION = {
    Direction.CAUSE: "What was the cause of this?",
    Direction.EFFECT: "What happened as a result?",
}


def to_eev(example: CqaExample, candidate_index: int) -> EntailmentHypothesis:
    """Recast one answer candidate as an entailment premise/conclusion pair.

    Cause questions: the candidate is the premise and the context the
    conclusion. Effect questions reverse the relationship.
    """
    if not (0 <= candidate_index < len(example.candidates)):
        raise ValidationError(
            f"candidate index {candidate_index} out of range for example {example.id!r}"
        )
    candidate = example.candidates[candidate_index]
    if example.direction is Direction.CAUSE:
        premise, conclusion = candidate, example.context
    else:
        premise, conclusion = example.context, candidate
    return EntailmentHypothesis(
        example_id=example.id,
        candidate_index=candidate_index,
        premise=premise,
        conclusion=conclusion,
    )


def build_explanation_prompt(example: CqaExample, candidate_index: int) -> str:
    """Deterministic generation prompt for one (example, candidate) pair."""
    validate_example(example)
    hypothesis = to_eev(example, candidate_index)
    question = _QUESTION_BY_DIRECTION[example.direction]
    return f"""\
You evaluate candidate answers to causal questions by explaining them.

First convert the question and the candidate answer into an entailment pair:
write a "Premise:" line and a "Conclusion:" line. For cause questions the
candidate answer is the premise and the context is the conclusion; for effect
questions the context is the premise and the candidate answer is the
conclusion.

Then explain, step by step, why the premise entails the conclusion. Each step
must be an If-Then statement on its own line, enumerated with the header
"Step 1:", "Step 2:", and so on, written as "Step N: IF <condition>, THEN
<consequence>." Directly after each step, add an "Assumption:" line stating
the causal or commonsense assumption the step relies on. Finish with a
"Summary:" line restating the whole explanation in one sentence.

Example:

{WORKED_EXAMPLE}

Now explain the following candidate.

Context: {example.context}
Question: {question}
Candidate answer: {example.candidates[candidate_index]}
"""


_STEP_HEADER = re.compile(r"(?:^|(?<=[.!?]\s))[ \t]*Step[ \t]+(\d+)[ \t]*[:.]", re.IGNORECASE | re.MULTILINE)
_SUMMARY = re.compile(r"\bSummary[ \t]*:", re.IGNORECASE)
_ASSUMPTION = re.compile(r"\bAssumption[ \t]*:", re.IGNORECASE)
_IF_THEN = re.compile(r"\bIF\b(.*?)[,;]?\s*\bTHEN\b(.*)", re.IGNORECASE | re.DOTALL)
_THEN_ONLY = re.compile(r"(.*?)[,;]?\s*\bTHEN\b(.*)", re.IGNORECASE | re.DOTALL)


def _clean_clause(text: str) -> str:
    return text.strip().strip(".").strip()


def parse_explanation_response(raw: str, hypothesis: EntailmentHypothesis) -> StructuredExplanation:
    """Extract ordered steps, assumptions, and the summary from raw LLM output.

    Malformed steps are dropped with a warning rather than failing the whole
    parse; a response with no step headers raises :class:`NoStepsFound`, and
    one where no step carries a THEN marker raises :class:`MalformedStep`.
    """
    if not raw.strip():
        raise NoStepsFound("empty response")

    warnings: list[str] = []

    # the summary section is the last Summary: marker in the response
    summary_match = None
    for summary_match in _SUMMARY.finditer(raw):
        pass
    if summary_match:
        body = raw[: summary_match.start()]
        summary = raw[summary_match.end() :].strip()
    else:
        body = raw
        summary = ""
        warnings.append("no summary section in response")

    headers = list(_STEP_HEADER.finditer(body))
    if not headers:
        raise NoStepsFound("no 'Step N' headers in response")

    steps: list[ExplanationStep] = []
    for pos, header in enumerate(headers):
        block_end = headers[pos + 1].start() if pos + 1 < len(headers) else len(body)
        block = body[header.end() : block_end]

        assumption_match = _ASSUMPTION.search(block)
        if assumption_match:
            clause_part = block[: assumption_match.start()]
            assumption = _clean_clause(block[assumption_match.end() :])
        else:
            clause_part = block
            assumption = ""
        if not assumption:
            warnings.append(f"step {pos + 1}: empty assumption")

        match = _IF_THEN.search(clause_part) or _THEN_ONLY.search(clause_part)
        if not match or not _clean_clause(match.group(1)) or not _clean_clause(match.group(2)):
            warnings.append(f"step {pos + 1}: dropped malformed step (no If/Then clauses)")
            continue

        declared = int(header.group(1))
        index = len(steps) + 1
        if declared != index:
            warnings.append(f"step {pos + 1}: renumbered from declared index {declared}")
        steps.append(
            ExplanationStep(
                index=index,
                if_clause=_clean_clause(match.group(1)),
                then_clause=_clean_clause(match.group(2)),
                assumption=assumption,
            )
        )

    if not steps:
        raise MalformedStep("every step lacked If/Then markers")

    return StructuredExplanation(
        hypothesis=hypothesis,
        steps=tuple(steps),
        summary=summary,
        raw_response=raw,
        parse_warnings=tuple(warnings),
    )


def generate_explanations(
    example: CqaExample,
    client: LlmClient,
    store: TranscriptStore,
    model: str,
    temperature: float = 0.0,
    max_tokens: int = 1024,
) -> list[StructuredExplanation]:
    """One structured explanation per candidate, resolved through the store."""
    explanations = []
    for index in range(len(example.candidates)):
        hypothesis = to_eev(example, index)
        request = LlmRequest(
            model=model,
            prompt=build_explanation_prompt(example, index),
            temperature=temperature,
            max_tokens=max_tokens,
        )
        try:
            response = store.fetch(request, client)
        except Exception as exc:
            from .errors import ReplayMiss

            if isinstance(exc, ReplayMiss):
                raise ReplayMiss(
                    f"example {example.id!r} candidate {index}: {exc}",
                    fingerprint=exc.fingerprint,
                    candidate_index=index,
                ) from exc
            raise
        explanations.append(parse_explanation_response(response, hypothesis))
    return explanations


def _render_for_judge(explanation: StructuredExplanation) -> str:
    lines = [
        f"Step {s.index}: IF {s.if_clause}, THEN {s.then_clause}. Assumption: {s.assumption}"
        for s in explanation.steps
    ]
    if explanation.summary:
        lines.append(f"Summary: {explanation.summary}")
    return "\n".join(lines)


def build_judge_prompt(
    example: CqaExample, explanations: tuple[StructuredExplanation, StructuredExplanation]
) -> str:
    first, second = explanations
    return f"""\
You are shown two competing explanations. Identify which explanation is more
plausible. Answer with "Explanation 1" or "Explanation 2" only.

Explanation 1:
{_render_for_judge(first)}

Explanation 2:
{_render_for_judge(second)}

Which explanation is more plausible?
"""


_VERDICT = re.compile(r"\b(?:explanation\s*)?([12])\b", re.IGNORECASE)


def judge_baseline(
    example: CqaExample,
    explanations: tuple[StructuredExplanation, StructuredExplanation],
    client: LlmClient,
    store: TranscriptStore,
    model: str,
    temperature: float = 0.0,
    max_tokens: int = 16,
) -> int:
    """Comparison baseline: ask the LLM which of two explanations is more plausible."""
    if len(explanations) != 2:
        raise ValidationError(f"judge needs exactly two explanations, got {len(explanations)}")
    request = LlmRequest(
        model=model,
        prompt=build_judge_prompt(example, explanations),
        temperature=temperature,
        max_tokens=max_tokens,
    )
    response = store.fetch(request, client)
    return parse_judge_verdict(response)


def parse_judge_verdict(response: str) -> int:
    """Map a judge response onto candidate index 0 or 1."""
    match = _VERDICT.search(response)
    if not match:
        raise UnparseableVerdict(
            f"judge response names neither explanation: {response[:120]!r}",
            raw_response=response,
        )
    return int(match.group(1)) - 1
