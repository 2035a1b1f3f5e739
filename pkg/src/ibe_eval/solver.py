"""Backward-chaining prover with embedding-based weak unification.

Atoms match by cosine similarity between the mean vectors of their
predicate-name tokens rather than by symbol equality alone. A proof is
accepted when the product of all unification scores along the chain clears
the acceptance threshold (0.13 by default). ``proof_score`` is that product;
``depth`` counts rules in the accepted chain and is the parsimony feature.

The search enumerates accepted proofs and keeps the best one, ordering by
proof score and then by rule count, so the reported depth is the minimal
rule count among maximal-score proofs; ties resolve to the first proof in
deterministic DFS order (matches sorted by descending score, then predicate
name, facts before rules, then clause position).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ValidationError
from .model import Atom, LogicProgram, ProofResult, Term, TermKind

DEFAULT_THRESHOLD = 0.13
DEFAULT_MAX_DEPTH = 10


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


class EmbeddingProvider:
    """Token -> fixed-dimension vector table with a total OOV policy.

    Out-of-vocabulary tokens embed to a deterministic pseudo-random unit
    vector seeded by the token's SHA-256, so lookups are reproducible across
    processes and platforms. Lookups are safe for concurrent readers.
    """

    def __init__(self, vectors: Mapping[str, np.ndarray], dim: int):
        self.dim = int(dim)
        self._vectors: dict[str, np.ndarray] = {}
        for token, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (self.dim,):
                raise ValidationError(
                    f"vector for {token!r} has shape {arr.shape}, expected ({self.dim},)"
                )
            self._vectors[token] = arr
        self._oov_cache: dict[str, np.ndarray] = {}
        self._phrase_cache: dict[str, np.ndarray] = {}

    @classmethod
    def from_table(cls, path: str | Path) -> "EmbeddingProvider":
        """Load the text table format: header ``d=<dim>``, then ``token v1 .. vd`` lines."""
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith("d="):
                raise ValidationError(f"{path}: first line must be 'd=<dim>', got {header!r}")
            dim = int(header[2:])
            vectors = {}
            for lineno, line in enumerate(fh, start=2):
                parts = line.split()
                if not parts:
                    continue
                token, values = parts[0], parts[1:]
                if len(values) != dim:
                    raise ValidationError(
                        f"{path}:{lineno}: token {token!r} has {len(values)} values, expected {dim}"
                    )
                vectors[token] = np.array([float(v) for v in values], dtype=np.float64)
        return cls(vectors, dim)

    def _oov_vector(self, token: str) -> np.ndarray:
        cached = self._oov_cache.get(token)
        if cached is None:
            seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:4], "big")
            raw = np.random.RandomState(seed).standard_normal(self.dim)
            cached = raw / np.linalg.norm(raw)
            self._oov_cache[token] = cached
        return cached

    def token_vector(self, token: str) -> np.ndarray:
        vec = self._vectors.get(token)
        return vec if vec is not None else self._oov_vector(token)

    def phrase_vector(self, name: str) -> np.ndarray:
        """Mean vector over the underscore-split tokens of an identifier."""
        cached = self._phrase_cache.get(name)
        if cached is None:
            tokens = [t for t in name.split("_") if t]
            if not tokens:
                raise ValidationError(f"cannot embed empty identifier {name!r}")
            cached = np.mean([self.token_vector(t) for t in tokens], axis=0)
            self._phrase_cache[name] = cached
        return cached

    def __contains__(self, token: str) -> bool:
        return token in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)


def _name_similarity(a: str, b: str, embedder: EmbeddingProvider) -> float:
    """String-equal names score 1.0; otherwise clamped cosine of token means."""
    if a == b:
        return 1.0
    return max(0.0, cosine(embedder.phrase_vector(a), embedder.phrase_vector(b)))


Subst = dict[str, Term]


def _resolve(term: Term, subst: Subst) -> Term:
    while term.kind is TermKind.VARIABLE and term.name in subst:
        term = subst[term.name]
    return term


def _unify_atoms(
    goal: Atom, head: Atom, embedder: EmbeddingProvider, subst: Subst
) -> tuple[float, Subst] | None:
    """Weak unification under an existing substitution.

    Returns the atom score (min over the predicate score and every ground
    argument-pair score) and the extended substitution, or None when the
    atoms cannot match (arity mismatch or a zero-similarity pair).
    """
    if len(goal.args) != len(head.args):
        return None
    score = _name_similarity(goal.predicate, head.predicate, embedder)
    if score <= 0.0:
        return None
    new_subst = dict(subst)
    for goal_term, head_term in zip(goal.args, head.args):
        left = _resolve(goal_term, new_subst)
        right = _resolve(head_term, new_subst)
        if left.kind is TermKind.VARIABLE:
            if right.kind is not TermKind.VARIABLE or left.name != right.name:
                new_subst[left.name] = right
            continue
        if right.kind is TermKind.VARIABLE:
            new_subst[right.name] = left
            continue
        pair = _name_similarity(left.name, right.name, embedder)
        if pair <= 0.0:
            return None
        score = min(score, pair)
    return score, new_subst


def weak_unify(a: Atom, b: Atom, embedder: EmbeddingProvider) -> float:
    """Similarity score in [0,1] for matching two atoms; 0.0 means no match."""
    result = _unify_atoms(a, b, embedder, {})
    return 0.0 if result is None else result[0]


def _apply(atom: Atom, subst: Subst) -> Atom:
    if not atom.args:
        return atom
    return Atom(atom.predicate, tuple(_resolve(t, subst) for t in atom.args))


def _rename(atom: Atom, suffix: str) -> Atom:
    """Standardize rule variables apart for one application."""
    if not atom.args:
        return atom
    return Atom(
        atom.predicate,
        tuple(
            Term.var(f"{t.name}__{suffix}") if t.kind is TermKind.VARIABLE else t
            for t in atom.args
        ),
    )


@dataclass
class _Goal:
    atom: Atom
    ancestors: frozenset[str]


@dataclass
class _Best:
    found: bool = False
    score: float = 0.0
    chain: tuple[str, ...] = ()
    rules_used: int = 0


def prove(
    program: LogicProgram,
    embedder: EmbeddingProvider,
    threshold: float = DEFAULT_THRESHOLD,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> ProofResult:
    """Depth-first backward chaining from the query with weak unification.

    A branch is cut when its score product can no longer exceed the
    threshold, when it revisits a goal already on its own ancestry (cycle
    safety), or when it would apply more than ``max_depth`` rules.
    """
    if not (0.0 < threshold < 1.0):
        raise ValidationError(f"threshold must be in (0,1), got {threshold}")
    if max_depth < 1:
        raise ValidationError(f"max_depth must be >= 1, got {max_depth}")

    best = _Best()
    diagnostics: dict[str, object] = {"cutoff": False, "expansions": 0}
    fresh = [0]

    def worse_than_best(score: float, rules_used: int) -> bool:
        if not best.found:
            return False
        if score < best.score:
            return True
        return score == best.score and rules_used >= best.rules_used

    def search(
        goals: list[_Goal],
        subst: Subst,
        score: float,
        chain: tuple[str, ...],
        rules_used: int,
    ) -> None:
        if score <= threshold or worse_than_best(score, rules_used):
            return
        if not goals:
            best.found = True
            best.score = score
            best.chain = chain
            best.rules_used = rules_used
            return
        goal, rest = goals[0], goals[1:]
        current = _apply(goal.atom, subst)
        rendered = current.render()
        if rendered in goal.ancestors:
            return
        diagnostics["expansions"] = int(diagnostics["expansions"]) + 1

        # candidate resolutions: (score, predicate, kind, position, body, subst)
        candidates: list[tuple[float, str, int, int, tuple[Atom, ...], Subst]] = []
        for j, fact in enumerate(program.facts):
            unified = _unify_atoms(current, fact, embedder, subst)
            if unified is not None:
                candidates.append((unified[0], fact.predicate, 0, j, (), unified[1]))
        for i, rule in enumerate(program.rules):
            fresh[0] += 1
            suffix = f"r{fresh[0]}"
            unified = _unify_atoms(current, _rename(rule.head, suffix), embedder, subst)
            if unified is not None:
                body = tuple(_rename(a, suffix) for a in rule.body)
                candidates.append((unified[0], rule.head.predicate, 1, i, body, unified[1]))
        candidates.sort(key=lambda c: (-c[0], c[1], c[2], c[3]))

        for step_score, _, kind, index, body, new_subst in candidates:
            new_score = score * step_score
            if new_score <= threshold:
                continue
            if kind == 0:
                # direct fact closure of the query gets a chain entry so a
                # rule-free proof still reports depth 1
                new_chain = chain + (f"fact:{index}",) if rules_used == 0 and not chain else chain
                search(rest, new_subst, new_score, new_chain, rules_used)
            else:
                if rules_used + 1 > max_depth:
                    diagnostics["cutoff"] = True
                    continue
                child_ancestors = goal.ancestors | {rendered}
                new_goals = [_Goal(b, child_ancestors) for b in body] + rest
                search(
                    new_goals,
                    new_subst,
                    new_score,
                    chain + (f"rule:{index}",),
                    rules_used + 1,
                )

    search([_Goal(program.query, frozenset())], {}, 1.0, (), 0)

    if not best.found:
        return ProofResult(
            satisfied=False, proof_score=0.0, depth=0, chain=(), diagnostics=dict(diagnostics)
        )

    diagnostics["rules_used"] = best.rules_used
    diagnostics["direct_fact"] = best.rules_used == 0
    # a query closed directly by a fact floors the parsimony depth at 1
    depth = max(1, best.rules_used)
    return ProofResult(
        satisfied=True,
        proof_score=best.score,
        depth=depth,
        chain=best.chain,
        diagnostics=dict(diagnostics),
    )


def consistency(result: ProofResult) -> int:
    """1 if the entailment query was satisfied, else 0."""
    return 1 if result.satisfied else 0
