"""Pluggable scorer boundary: NLI entailment, sentence certainty, hedge
tagging, and POS tagging.

The built-in fallbacks below are deterministic lexicon/heuristic scorers so
the whole pipeline runs with zero ML dependencies; they are intentionally
crude stand-ins for the fine-tuned models a scorer sidecar can provide, and
runs record which backend produced each feature.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, NamedTuple

from .errors import ScorerError, ValidationError
from .solver import EmbeddingProvider, cosine

HEDGE_CATEGORIES = ("epistemic", "doxatic", "conditional")

_WORD = re.compile(r"[a-z0-9]+(?:'[a-z]+)?")


def tokenize(text: str) -> list[str]:
    return _WORD.findall(text.lower())


class EntailmentProbs(NamedTuple):
    entail: float
    neutral: float
    contradiction: float


class TokenTag(NamedTuple):
    token: str
    tag: str  # coarse: NOUN, FUNC, OTHER
    lemma: str


@dataclass
class ScorerSuite:
    """The four scorer callables the metrics depend on.

    ``substitutions`` accumulates op names that fell back to the built-in
    scorer after a backend declined them; run manifests persist it.
    """

    entailment: Callable[[str, str], EntailmentProbs]
    certainty: Callable[[str], float]
    hedges: Callable[[str], list[tuple[str, str]]]
    pos: Callable[[str], list[TokenTag]]
    backend: str = "fallback"
    substitutions: list[str] = field(default_factory=list)


# --- lexicon loading -------------------------------------------------------

def _read_tsv(path: Path) -> list[tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 'token<TAB>value'")
            pairs.append((parts[0], parts[1]))
    return pairs


def _data_path(name: str) -> Path:
    return Path(str(resources.files("ibe_eval").joinpath("data", name)))


def load_hedge_lexicon(path: str | Path | None = None) -> dict[str, str]:
    """Cue token -> category, from ``token<TAB>category`` lines."""
    path = Path(path) if path else _data_path("hedge_cues.tsv")
    lexicon = {}
    for token, category in _read_tsv(path):
        if category not in HEDGE_CATEGORIES:
            raise ValidationError(f"{path}: unknown hedge category {category!r} for {token!r}")
        lexicon[token.lower()] = category
    return lexicon


def load_noun_lexicon(path: str | Path | None = None) -> dict[str, str]:
    """Noun token -> lemma, from ``token<TAB>lemma`` lines."""
    path = Path(path) if path else _data_path("nouns.tsv")
    return {token.lower(): lemma.lower() for token, lemma in _read_tsv(path)}


# --- fallback scorers ------------------------------------------------------

_NEGATIONS = frozenset(
    {"not", "no", "never", "cannot", "nothing", "none", "nobody", "neither", "nor", "without"}
)

_STOPWORDS = frozenset(
    """a an the this that these those it its they them he she his her their our your my
    i we you is are was were be been being am do does did done has have had having
    will would shall should can could may might must of in on at by for with from
    to into onto over under about as and or but if then than because so very too
    also just only even still yet when while after before during again more most
    some any all both each few such own same other another not no once there here
    what which who whom whose why how out up down off""".split()
)

_NOUN_SUFFIXES = ("tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship", "hood", "ism")


class FallbackPosTagger:
    """Noun-lexicon tagger with plural stripping and suffix heuristics."""

    def __init__(self, noun_lexicon: dict[str, str]):
        self.nouns = noun_lexicon

    def _noun_lemma(self, token: str) -> str | None:
        if token in self.nouns:
            return self.nouns[token]
        if token.endswith("ies") and len(token) > 4:
            singular = token[:-3] + "y"
            if singular in self.nouns:
                return self.nouns[singular]
        for plural_suffix in ("es", "s"):
            if token.endswith(plural_suffix) and len(token) > len(plural_suffix) + 2:
                singular = token[: -len(plural_suffix)]
                if singular in self.nouns:
                    return self.nouns[singular]
        stripped = token[:-1] if token.endswith("s") and len(token) > 3 else token
        if stripped.endswith(_NOUN_SUFFIXES):
            return stripped
        return None

    def __call__(self, sentence: str) -> list[TokenTag]:
        tags = []
        for token in tokenize(sentence):
            if token in _STOPWORDS:
                tags.append(TokenTag(token, "FUNC", token))
                continue
            lemma = self._noun_lemma(token)
            if lemma is not None:
                tags.append(TokenTag(token, "NOUN", lemma))
            else:
                tags.append(TokenTag(token, "OTHER", token))
        return tags


class FallbackHedgeTagger:
    """Tags tokens against the committed cue lexicon; everything else is 'none'."""

    def __init__(self, lexicon: dict[str, str]):
        self.lexicon = lexicon

    def __call__(self, sentence: str) -> list[tuple[str, str]]:
        return [(token, self.lexicon.get(token, "none")) for token in tokenize(sentence)]


class FallbackCertaintyScorer:
    """Hedge-cue density mapped linearly onto the certainty scale.

    Density 0 maps to 6 (fully certain) and density >= 0.2 to 1; the scale
    mirrors the sentence-certainty models the sidecar can provide.
    """

    def __init__(self, lexicon: dict[str, str]):
        self.lexicon = lexicon

    def __call__(self, sentence: str) -> float:
        tokens = tokenize(sentence)
        if not tokens:
            raise ScorerError("certainty scorer got an empty sentence")
        cues = sum(1 for t in tokens if t in self.lexicon)
        density = cues / len(tokens)
        return max(1.0, min(6.0, 6.0 - 25.0 * density))


class FallbackEntailmentScorer:
    """Token-overlap plus embedding-cosine heuristic mapped to an NLI triple.

    A negation-presence mismatch between the two clauses swaps the entail
    and contradiction masses. The triple always sums to 1.
    """

    def __init__(self, embedder: EmbeddingProvider):
        self.embedder = embedder

    def _mean_vector(self, tokens: list[str]):
        import numpy as np

        return np.mean([self.embedder.token_vector(t) for t in sorted(set(tokens))], axis=0)

    def __call__(self, premise: str, hypothesis: str) -> EntailmentProbs:
        p_tokens = tokenize(premise)
        h_tokens = tokenize(hypothesis)
        if not p_tokens or not h_tokens:
            raise ScorerError("entailment scorer got an empty clause")
        overlap = len(set(p_tokens) & set(h_tokens)) / len(set(h_tokens))
        sim_cos = max(0.0, cosine(self._mean_vector(p_tokens), self._mean_vector(h_tokens)))
        sim = 0.5 * overlap + 0.5 * sim_cos
        entail = 0.1 + 0.8 * sim
        contradiction = 0.05 + 0.25 * (1.0 - sim)
        if (_NEGATIONS.isdisjoint(p_tokens)) != (_NEGATIONS.isdisjoint(h_tokens)):
            entail, contradiction = contradiction, entail
        return EntailmentProbs(entail, 1.0 - entail - contradiction, contradiction)


def fallback_suite(
    embedder: EmbeddingProvider,
    hedge_lexicon: dict[str, str] | None = None,
    noun_lexicon: dict[str, str] | None = None,
) -> ScorerSuite:
    """The all-heuristic suite used when no sidecar is configured."""
    hedges = hedge_lexicon if hedge_lexicon is not None else load_hedge_lexicon()
    nouns = noun_lexicon if noun_lexicon is not None else load_noun_lexicon()
    return ScorerSuite(
        entailment=FallbackEntailmentScorer(embedder),
        certainty=FallbackCertaintyScorer(hedges),
        hedges=FallbackHedgeTagger(hedges),
        pos=FallbackPosTagger(nouns),
        backend="fallback",
    )
