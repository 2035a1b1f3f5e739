import math
import random

import numpy as np
import pytest

from oracles import oracle_min_rules, oracle_satisfiable, table_cosine

from ibe_eval.errors import ValidationError
from ibe_eval.formalize import parse_logic_text
from ibe_eval.model import Atom, LogicProgram, Rule, Term
from ibe_eval.pipeline import packaged_embedding_table
from ibe_eval.solver import EmbeddingProvider, consistency, cosine, prove, weak_unify


def one_hot_embedder(tokens) -> EmbeddingProvider:
    """Distinct tokens get orthogonal vectors: weak unification = exact match."""
    tokens = sorted(tokens)
    dim = len(tokens)
    return EmbeddingProvider(
        {token: np.eye(dim)[i] for i, token in enumerate(tokens)}, dim
    )


def program_tokens(program: LogicProgram):
    tokens = set()
    for atom in (
        *program.facts,
        program.query,
        *(r.head for r in program.rules),
        *(b for r in program.rules for b in r.body),
    ):
        tokens.update(atom.predicate.split("_"))
        tokens.update(t.name for t in atom.args)
    return tokens


class TestWeakUnify:
    def test_identity(self):
        emb = one_hot_embedder(["p", "x"])
        assert weak_unify(Atom("p", (Term.const("x"),)), Atom("p", (Term.const("x"),)), emb) == 1.0

    def test_arity_mismatch(self):
        emb = one_hot_embedder(["p", "a", "b"])
        a = Atom("p", (Term.const("a"),))
        b = Atom("p", (Term.const("a"), Term.const("b")))
        assert weak_unify(a, b, emb) == 0.0

    def test_committed_table_cosine_oracle(self, embedder):
        # independent mean+cosine computation straight off the table file
        expected = table_cosine(
            packaged_embedding_table(), "the_balloon_deflates", "the_balloon_deflated"
        )
        got = weak_unify(Atom("the_balloon_deflates"), Atom("the_balloon_deflated"), embedder)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(0.9847823369321187, abs=1e-9)  # pinned against table drift

    def test_argument_scores_use_min(self, embedder):
        a = Atom("holds", (Term.const("balloon"),))
        b = Atom("holds", (Term.const("needle"),))
        arg_score = max(
            0.0,
            cosine(embedder.phrase_vector("balloon"), embedder.phrase_vector("needle")),
        )
        assert weak_unify(a, b, embedder) == pytest.approx(min(1.0, arg_score), abs=1e-12)

    def test_variable_binds_without_penalty(self, embedder):
        a = Atom("holds", (Term.var("X"),))
        b = Atom("holds", (Term.const("balloon"),))
        assert weak_unify(a, b, embedder) == 1.0


class TestEmbeddingProvider:
    def test_cosine_self_is_one(self, embedder):
        vec = embedder.token_vector("balloon")
        assert cosine(vec, vec) == pytest.approx(1.0, abs=1e-12)

    def test_oov_is_deterministic_and_unit(self):
        emb1 = EmbeddingProvider({}, 32)
        emb2 = EmbeddingProvider({}, 32)
        v1, v2 = emb1.token_vector("zzz-unknown"), emb2.token_vector("zzz-unknown")
        assert np.allclose(v1, v2)
        assert np.linalg.norm(v1) == pytest.approx(1.0)

    def test_table_round_trip(self, tmp_path):
        path = tmp_path / "table.txt"
        path.write_text("d=3\nfoo 1.0 0.0 0.0\nbar 0.0 1.0 0.0\n")
        emb = EmbeddingProvider.from_table(path)
        assert len(emb) == 2
        assert "foo" in emb and "baz" not in emb

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "table.txt"
        path.write_text("dim 3\nfoo 1 0 0\n")
        with pytest.raises(ValidationError):
            EmbeddingProvider.from_table(path)

    def test_wrong_width_rejected(self, tmp_path):
        path = tmp_path / "table.txt"
        path.write_text("d=3\nfoo 1.0 0.0\n")
        with pytest.raises(ValidationError):
            EmbeddingProvider.from_table(path)


class TestProveExact:
    def test_single_exact_resolution(self):
        program = parse_logic_text("b :- a.\na.\n?- b.")
        result = prove(program, one_hot_embedder(program_tokens(program)))
        assert result.satisfied
        assert result.proof_score == 1.0
        assert result.depth == 1
        assert result.chain == ("rule:0",)

    def test_low_similarity_query_fails(self):
        # every cross-token similarity forced to 0.1: 0.1 <= 0.13 fails
        program = parse_logic_text("b :- a.\na.\n?- c.")
        s = 0.1
        vectors = {
            "a": np.array([1.0, 0.0, 0.0, 0.0]),
            "b": np.array([0.0, 1.0, 0.0, 0.0]),
            "c": np.array([s, math.sqrt(1 - s * s), 0.0, 0.0]),
        }
        # c-vs-b cosine is 0.1 while c-vs-a is s*1.0 = 0.1 as well
        vectors["c"] = s * vectors["a"] + math.sqrt(1 - s * s) * np.array([0.0, 0.0, 1.0, 0.0])
        emb = EmbeddingProvider(vectors, 4)
        result = prove(program, emb)
        assert not result.satisfied
        assert result.proof_score == 0.0
        assert result.depth == 0

    def test_direct_fact_floors_depth(self):
        program = parse_logic_text("a.\n?- a.")
        result = prove(program, one_hot_embedder({"a"}))
        assert result.satisfied
        assert result.depth == 1
        assert result.chain == ("fact:0",)
        assert result.diagnostics["rules_used"] == 0
        assert result.diagnostics["direct_fact"] is True
        assert consistency(result) == 1

    def test_minimal_chain_preferred_over_first_found(self):
        # rule order tempts DFS down the two-step path first
        program = parse_logic_text("q :- a.\nq :- b.\na :- c.\nc.\nb.\n?- q.")
        result = prove(program, one_hot_embedder(program_tokens(program)))
        assert result.satisfied
        assert result.depth == 1
        assert result.chain == ("rule:1",)

    def test_conjunctive_bodies_count_multiplicity(self):
        program = parse_logic_text("q :- a, a.\na :- f.\nf.\n?- q.")
        result = prove(program, one_hot_embedder(program_tokens(program)))
        assert result.satisfied
        assert result.depth == 3  # q once, a twice

    def test_cycle_terminates(self):
        program = parse_logic_text("a :- b.\nb :- a.\nf.\n?- a.")
        result = prove(program, one_hot_embedder(program_tokens(program)))
        assert not result.satisfied

    def test_variable_chain(self):
        program = parse_logic_text("mortal(X) :- human(X).\nhuman(socrates).\n?- mortal(socrates).")
        result = prove(program, one_hot_embedder(program_tokens(program)))
        assert result.satisfied
        assert result.depth == 1

    def test_determinism(self, embedder):
        program = parse_logic_text(
            "the_balloon_deflates :- the_balloon_is_pricked.\n"
            "the_balloon_was_pricked.\n?- the_balloon_deflated."
        )
        first = prove(program, embedder)
        second = prove(program, embedder)
        assert first == second

    def test_bad_threshold_rejected(self, embedder):
        program = parse_logic_text("a.\n?- a.")
        with pytest.raises(ValidationError):
            prove(program, embedder, threshold=1.5)


def chain_program_and_embedder(s: float, k: int):
    """A k-rule chain whose every rule-head unification scores exactly s.

    The fact closes the chain with an exact string match, so the proof score
    is s^k by construction; all other atom pairs are orthogonal.
    """
    rules = []
    for i in range(1, k + 1):
        body = Atom("g0") if i == 1 else Atom(f"g{i - 1}")
        rules.append(Rule(Atom(f"h{i}"), (body,)))
    program = LogicProgram(rules=tuple(rules), facts=(Atom("g0"),), query=Atom("q"))

    dim = 2 * (k + 2)
    vectors: dict[str, np.ndarray] = {}

    def basis(i):
        vec = np.zeros(dim)
        vec[i] = 1.0
        return vec

    pair_with = {"q": f"h{k}"}
    for i in range(1, k):
        pair_with[f"g{i}"] = f"h{i}"
    axis = 0
    for goal_name, head_name in pair_with.items():
        vectors[goal_name] = basis(axis)
        vectors[head_name] = s * basis(axis) + math.sqrt(1.0 - s * s) * basis(axis + 1)
        axis += 2
    vectors["g0"] = basis(axis)
    return program, EmbeddingProvider(vectors, dim)


class TestThresholdSemantics:
    @pytest.mark.parametrize("k", range(1, 7))
    @pytest.mark.parametrize("s", [round(0.1 * i, 1) for i in range(2, 11)])
    def test_grid(self, s, k):
        program, emb = chain_program_and_embedder(s, k)
        result = prove(program, emb)
        expected_product = math.prod([s] * k)
        assert result.satisfied == (expected_product > 0.13)
        if result.satisfied:
            assert result.depth == k
            assert result.proof_score == pytest.approx(expected_product, rel=1e-9)

    def test_uniform_06_boundary(self):
        # 0.6^3 = 0.216 accepted, 0.6^4 = 0.1296 rejected
        for k, accept in ((3, True), (4, False)):
            program, emb = chain_program_and_embedder(0.6, k)
            assert prove(program, emb).satisfied is accept


def random_ground_program(rng: random.Random) -> LogicProgram:
    n_atoms = rng.randint(4, 10)
    atoms = []
    for i in range(n_atoms):
        arity = rng.choice((0, 0, 1, 2))
        args = tuple(Term.const(f"c{rng.randint(0, 3)}") for _ in range(arity))
        atoms.append(Atom(f"p{i}", args))
    facts = tuple(rng.sample(atoms, rng.randint(1, min(5, n_atoms))))
    rules = []
    for _ in range(rng.randint(0, 8)):
        head_index = rng.randrange(1, n_atoms)
        body_size = rng.choice((1, 1, 1, 2))
        body = tuple(atoms[rng.randrange(0, head_index)] for _ in range(body_size))
        rules.append(Rule(atoms[head_index], body))  # heads above bodies: acyclic
    query = rng.choice(atoms)
    return LogicProgram(rules=tuple(rules), facts=facts, query=query)


class TestOracleEquivalence:
    def test_oracle_agreement_sample(self):
        rng = random.Random(4242)
        for _ in range(200):
            program = random_ground_program(rng)
            emb = one_hot_embedder(program_tokens(program))
            result = prove(program, emb, max_depth=300)
            assert result.satisfied == oracle_satisfiable(program)
            if result.satisfied:
                assert result.depth == max(1, oracle_min_rules(program))

    def test_monotonicity_in_threshold(self, embedder):
        program = parse_logic_text(
            "the_balloon_deflates :- the_balloon_is_pricked.\n"
            "the_balloon_was_pricked.\n?- the_balloon_deflated."
        )
        low = prove(program, embedder, threshold=0.13)
        for threshold in (0.3, 0.6, 0.9, 0.99):
            high = prove(program, embedder, threshold=threshold)
            if not low.satisfied:
                assert not high.satisfied
            if high.satisfied:
                assert high.proof_score > threshold

    def test_score_bounded_by_min_step(self):
        program, emb = chain_program_and_embedder(0.7, 3)
        result = prove(program, emb)
        assert result.satisfied
        assert result.proof_score <= 0.7 + 1e-12
