"""Turning structured explanations into logic programs.

Two paths produce the same :class:`LogicProgram` shape: LLM autoformalization
(each If-Then step becomes an implication rule, the premise grounding atoms,
the conclusion the query) and a deterministic offline encoder that lowers
whole clauses to 0-ary predicates and lets weak unification bridge the
lexical gaps between them.

Text format, one clause per line, UTF-8:

    % comment
    head :- body1, body2.
    fact.
    ?- query.
"""

from __future__ import annotations

import logging
import re

from .errors import LogicSyntaxError, MissingQuery, NoFacts, ValidationError
from .model import Atom, LogicProgram, Rule, StructuredExplanation, Term
from .model import EntailmentHypothesis
from .transcripts import LlmClient, LlmRequest, TranscriptStore

logger = logging.getLogger(__name__)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class _LineScanner:
    """Single-clause tokenizer that reports 1-based line/column on failure."""

    def __init__(self, text: str, line: int):
        self.text = text
        self.line = line
        self.pos = 0

    def error(self, message: str) -> LogicSyntaxError:
        return LogicSyntaxError(message, self.line, self.pos + 1)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, literal: str) -> None:
        self.skip_ws()
        if not self.text.startswith(literal, self.pos):
            raise self.error(f"expected {literal!r}")
        self.pos += len(literal)

    def try_consume(self, literal: str) -> bool:
        self.skip_ws()
        if self.text.startswith(literal, self.pos):
            self.pos += len(literal)
            return True
        return False

    def identifier(self) -> str:
        self.skip_ws()
        match = _IDENT.match(self.text, self.pos)
        if not match:
            raise self.error("expected identifier")
        self.pos = match.end()
        return match.group(0)

    def atom(self) -> Atom:
        predicate = self.identifier().lower()
        args: list[Term] = []
        if self.try_consume("("):
            while True:
                token = self.identifier()
                if token[0].isupper():
                    args.append(Term.var(token))
                else:
                    args.append(Term.const(token.lower()))
                self.skip_ws()
                if self.try_consume(","):
                    continue
                if self.try_consume(")"):
                    break
                raise self.error("expected ',' or ')'")
        return Atom(predicate, tuple(args))

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)


def parse_logic_text(text: str) -> LogicProgram:
    """Parse clause-per-line logic text into a validated program."""
    if not text.strip():
        raise LogicSyntaxError("empty program text", 1, 1)

    rules: list[Rule] = []
    facts: list[Atom] = []
    query: Atom | None = None

    for lineno, raw_line in enumerate(text.split("\n"), start=1):
        line = raw_line.split("%", 1)[0].rstrip()
        if not line.strip():
            continue
        scanner = _LineScanner(line, lineno)
        if scanner.try_consume("?-"):
            if query is not None:
                raise scanner.error("second query clause (exactly one allowed)")
            query = scanner.atom()
            scanner.expect(".")
        else:
            head = scanner.atom()
            if scanner.try_consume(":-"):
                body = [scanner.atom()]
                while scanner.try_consume(","):
                    body.append(scanner.atom())
                scanner.expect(".")
                rules.append(Rule(head, tuple(body)))
            else:
                scanner.expect(".")
                if not head.is_ground:
                    raise LogicSyntaxError(f"fact must be ground: {head.render()}", lineno, 1)
                facts.append(head)
        if not scanner.at_end():
            raise scanner.error("trailing content after clause")

    if query is None:
        raise MissingQuery("program has no '?-' query clause")
    if not facts:
        raise NoFacts("program has no ground facts")

    program = LogicProgram(rules=tuple(rules), facts=tuple(facts), query=query)
    if is_trivially_satisfied(program):
        logger.warning("query %s already appears verbatim as a fact", query.render())
    return program


def render_program(program: LogicProgram) -> str:
    """Pretty-print a program; inverse of :func:`parse_logic_text`."""
    lines = [rule.render() for rule in program.rules]
    lines.extend(f"{fact.render()}." for fact in program.facts)
    lines.append(f"?- {program.query.render()}.")
    return "\n".join(lines) + "\n"


def is_trivially_satisfied(program: LogicProgram) -> bool:
    """True when the query atom appears verbatim among the facts."""
    return any(fact == program.query for fact in program.facts)


def build_formalization_prompt(
    hypothesis: EntailmentHypothesis, explanation: StructuredExplanation
) -> str:
    """Deterministic translation prompt from an explanation to logic clauses."""
    if not explanation.steps:
        raise ValidationError("explanation has no steps to formalize")
    step_lines = "\n".join(
        f"Step {s.index}: IF {s.if_clause}, THEN {s.then_clause}." for s in explanation.steps
    )
    return f"""\
Translate the explanation below into a definite-clause logic program.

Rules of the translation:
- Each If-Then step becomes exactly one implication rule written as
  `head :- body.` where the body encodes the If clause and the head the
  Then clause.
- The premise becomes one or more grounding atoms, written as `atom.` lines.
- The conclusion becomes the query, written as `?- atom.`.
- Predicates and constants are lowercase snake_case identifiers; variables
  start with an uppercase letter. Every clause ends with a period.

Answer with exactly three labeled sections:

RULES:
<one rule per line>

FACTS:
<one fact per line>

QUERY:
<one query line>

Premise: {hypothesis.premise}
Conclusion: {hypothesis.conclusion}
{step_lines}
"""


_SECTION = re.compile(r"^[ \t]*(RULES|FACTS|QUERY)[ \t]*:", re.IGNORECASE | re.MULTILINE)


def _extract_sections(response: str) -> dict[str, list[str]]:
    matches = list(_SECTION.finditer(response))
    if not matches:
        raise LogicSyntaxError("response has no RULES/FACTS/QUERY sections", 1, 1)
    sections: dict[str, list[str]] = {}
    for pos, match in enumerate(matches):
        end = matches[pos + 1].start() if pos + 1 < len(matches) else len(response)
        body = response[match.end() : end]
        lines = [
            line.strip()
            for line in body.split("\n")
            if line.strip() and not line.strip().startswith("```")
        ]
        sections[match.group(1).upper()] = lines
    return sections


def autoformalize(
    hypothesis: EntailmentHypothesis,
    explanation: StructuredExplanation,
    client: LlmClient,
    store: TranscriptStore,
    model: str,
    temperature: float = 0.0,
    max_tokens: int = 512,
) -> LogicProgram:
    """LLM-backed translation; the response is parsed and validated."""
    request = LlmRequest(
        model=model,
        prompt=build_formalization_prompt(hypothesis, explanation),
        temperature=temperature,
        max_tokens=max_tokens,
    )
    response = store.fetch(request, client)
    try:
        sections = _extract_sections(response)
        lines = list(sections.get("RULES", []))
        lines.extend(sections.get("FACTS", []))
        for query_line in sections.get("QUERY", []):
            if not query_line.startswith("?-"):
                query_line = f"?- {query_line}"
            lines.append(query_line)
        return parse_logic_text("\n".join(lines))
    except LogicSyntaxError as exc:
        exc.raw_response = response  # type: ignore[attr-defined]
        raise


def normalize_predicate(text: str, max_length: int = 64) -> str:
    """Lower a natural-language clause to a snake_case 0-ary predicate name."""
    cleaned = re.sub(r"[^a-z0-9]+", "_", text.lower()).strip("_")
    cleaned = cleaned[:max_length].rstrip("_")
    return cleaned or "statement"


def fallback_formalize(
    hypothesis: EntailmentHypothesis, explanation: StructuredExplanation
) -> LogicProgram:
    """Deterministic offline encoder: whole clauses become 0-ary predicates.

    No argument extraction is attempted; weak unification downstream bridges
    the lexical gaps between clause-derived predicate names.
    """
    if not explanation.steps:
        raise ValidationError("explanation has no steps to formalize")
    rules = []
    for step in explanation.steps:
        head = normalize_predicate(step.then_clause)
        body = normalize_predicate(step.if_clause)
        if head == body:
            logger.warning(
                "step %d of %s/%d normalizes to a self-loop rule %s :- %s",
                step.index,
                hypothesis.example_id,
                hypothesis.candidate_index,
                head,
                body,
            )
        rules.append(Rule(Atom(head), (Atom(body),)))
    program = LogicProgram(
        rules=tuple(rules),
        facts=(Atom(normalize_predicate(hypothesis.premise)),),
        query=Atom(normalize_predicate(hypothesis.conclusion)),
    )
    if is_trivially_satisfied(program):
        logger.warning(
            "query of %s/%d already appears verbatim as a fact",
            hypothesis.example_id,
            hypothesis.candidate_index,
        )
    return program
