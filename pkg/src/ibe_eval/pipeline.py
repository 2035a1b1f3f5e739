"""Stage orchestration with on-disk caching.

Each stage reads its predecessors' JSONL artifacts from the run directory,
writes its own artifact atomically, and records a manifest of input content
hashes. Re-running a stage with unchanged inputs is a no-op; changed inputs
raise :class:`StaleArtifact` unless forced. Artifacts are UTF-8, LF, sorted
keys, so identical runs produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import formalize as formalize_mod
from . import generation
from .config import PipelineConfig
from .datasets import dump_canonical, load_canonical, load_copa, load_ecare
from .errors import ConfigError, DataError, MissingUpstream, StaleArtifact, UpstreamError
from .metrics import classify_hedges, compute_features, is_self_evident
from .model import (
    CqaExample,
    EntailmentHypothesis,
    IbeFeatureVector,
    ProofResult,
    ScoredCandidate,
    StructuredExplanation,
)
from .scorers import ScorerSuite, fallback_suite
from .solver import EmbeddingProvider, prove
from .scoring import fit_linear, load_model, save_model, score, select
from .transcripts import LlmClient, HttpChatClient, StoreMode, TranscriptStore

STAGES = ("generate", "formalize", "prove", "features", "fit", "evaluate", "report")

ARTIFACTS = {
    "generate": "explanations.jsonl",
    "formalize": "programs.jsonl",
    "prove": "proofs.jsonl",
    "features": "features.jsonl",
    "fit": "model.json",
    "evaluate": "selections.jsonl",
    "report": os.path.join("report", "summary.json"),
}

DATASET_ARTIFACT = "dataset.jsonl"


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_jsonl(path: Path, rows: Iterable[dict]) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    os.replace(tmp, path)


def read_jsonl(path: Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def write_json(path: Path, payload: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    os.replace(tmp, path)


def packaged_embedding_table() -> Path:
    return Path(str(resources.files("ibe_eval").joinpath("data", "embeddings_toy.txt")))


def load_embedder(config: PipelineConfig) -> EmbeddingProvider:
    table = config.embedding_table or packaged_embedding_table()
    return EmbeddingProvider.from_table(table)


def load_dataset(config: PipelineConfig, example_ids: Sequence[str] | None = None) -> list[CqaExample]:
    if config.dataset_format == "copa":
        examples = load_copa(config.dataset_path)
    elif config.dataset_format == "ecare":
        examples = load_ecare(config.dataset_path, config.sample_n, config.sample_seed)
    else:
        examples = load_canonical(config.dataset_path)
    if example_ids:
        wanted = set(example_ids)
        unknown = wanted - {e.id for e in examples}
        if unknown:
            raise DataError(f"unknown example ids: {sorted(unknown)}")
        examples = [e for e in examples if e.id in wanted]
    return examples


class _ReplayOnlyClient(LlmClient):
    def complete(self, request):  # pragma: no cover - guarded by store mode
        raise UpstreamError("replay mode must not reach the network")


def build_client(config: PipelineConfig) -> LlmClient:
    if config.transcript_mode == "replay":
        return _ReplayOnlyClient()
    if not config.base_url:
        raise ConfigError(f"transcript mode {config.transcript_mode!r} needs [llm] base_url")
    return HttpChatClient(config.base_url, api_key_env=config.api_key_env)


def build_store(config: PipelineConfig) -> TranscriptStore:
    if config.transcript_path is None:
        raise ConfigError("[transcripts] path is required")
    return TranscriptStore(config.transcript_path, StoreMode(config.transcript_mode))


def build_scorers(config: PipelineConfig, embedder: EmbeddingProvider) -> ScorerSuite:
    local = fallback_suite(embedder)
    if config.scorer_backend == "fallback":
        return local
    from .sidecar_client import SidecarClient, sidecar_suite

    client = SidecarClient(command=config.sidecar_command, url=config.sidecar_url)
    return sidecar_suite(client, local)


class StageRunner:
    """Runs stages inside one run directory, honoring the artifact cache."""

    def __init__(
        self,
        config: PipelineConfig,
        force: bool = False,
        example_ids: Sequence[str] | None = None,
    ):
        self.config = config
        self.force = force
        self.example_ids = tuple(example_ids or ())
        self.run_dir = config.run_dir
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self._fingerprint = config.fingerprint()

    # -- cache plumbing ----------------------------------------------------

    def artifact_path(self, stage: str) -> Path:
        return self.run_dir / ARTIFACTS[stage]

    def _manifest_path(self, stage: str) -> Path:
        return self.run_dir / f"{stage}.manifest.json"

    def _require(self, stage: str, name: str) -> Path:
        path = self.run_dir / name
        if not path.exists():
            raise MissingUpstream(
                f"stage {stage!r} needs {name}; run its upstream stage first"
            )
        return path

    def _stage_inputs(self, stage: str) -> dict[str, str]:
        config = self.config
        inputs: dict[str, str] = {}
        if self.example_ids:
            inputs["example_filter"] = ",".join(sorted(self.example_ids))
        if stage == "generate":
            inputs["dataset_source"] = sha256_file(config.dataset_path)
            if config.transcript_path and Path(config.transcript_path).exists():
                inputs["transcripts"] = sha256_file(config.transcript_path)
        elif stage == "formalize":
            inputs["explanations"] = sha256_file(self._require(stage, ARTIFACTS["generate"]))
            if config.formalizer == "llm" and config.transcript_path:
                inputs["transcripts"] = sha256_file(config.transcript_path)
        elif stage == "prove":
            inputs["programs"] = sha256_file(self._require(stage, ARTIFACTS["formalize"]))
            inputs["embeddings"] = sha256_file(
                config.embedding_table or packaged_embedding_table()
            )
        elif stage == "features":
            inputs["explanations"] = sha256_file(self._require(stage, ARTIFACTS["generate"]))
            inputs["proofs"] = sha256_file(self._require(stage, ARTIFACTS["prove"]))
            inputs["dataset"] = sha256_file(self._require(stage, DATASET_ARTIFACT))
        elif stage == "fit":
            inputs["features"] = sha256_file(self._require(stage, ARTIFACTS["features"]))
            inputs["features_subset"] = ",".join(config.fit_features)
        elif stage == "evaluate":
            inputs["features"] = sha256_file(self._require(stage, ARTIFACTS["features"]))
            inputs["model"] = sha256_file(self._require(stage, ARTIFACTS["fit"]))
            inputs["dataset"] = sha256_file(self._require(stage, DATASET_ARTIFACT))
        elif stage == "report":
            inputs["selections"] = sha256_file(self._require(stage, ARTIFACTS["evaluate"]))
            inputs["features"] = sha256_file(self._require(stage, ARTIFACTS["features"]))
            inputs["model"] = sha256_file(self._require(stage, ARTIFACTS["fit"]))
            inputs["dataset"] = sha256_file(self._require(stage, DATASET_ARTIFACT))
            inputs["standardize_report"] = str(config.standardize_report)
            if config.annotations_path:
                inputs["annotations"] = sha256_file(config.annotations_path)
        else:
            raise ConfigError(f"unknown stage {stage!r}")
        return inputs

    def run(self, stage: str) -> Path:
        if stage not in STAGES:
            raise ConfigError(f"unknown stage {stage!r}; choose from {', '.join(STAGES)}")
        artifact = self.artifact_path(stage)
        manifest_path = self._manifest_path(stage)
        inputs = self._stage_inputs(stage)
        if artifact.exists() and manifest_path.exists() and not self.force:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
            if manifest.get("inputs") == inputs and manifest.get("config") == self._fingerprint:
                return artifact  # cache hit
            raise StaleArtifact(
                f"{artifact.name} was built from different inputs; rerun with --force"
            )
        builder: Callable[[], dict] = getattr(self, f"_stage_{stage}")
        extra = builder() or {}
        manifest = {"stage": stage, "config": self._fingerprint, "inputs": inputs, **extra}
        write_json(manifest_path, manifest)
        return artifact

    def run_all(self) -> Path:
        for stage in STAGES:
            artifact = self.run(stage)
        return artifact

    # -- helpers -------------------------------------------------------------

    def _map_examples(self, items: Sequence, worker: Callable) -> list:
        if self.config.parallelism <= 1:
            return [worker(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.config.parallelism) as pool:
            return list(pool.map(worker, items))

    def _load_run_dataset(self) -> list[CqaExample]:
        return load_canonical(self._require("features", DATASET_ARTIFACT))

    def _explanation_rows(self) -> list[dict]:
        return read_jsonl(self.run_dir / ARTIFACTS["generate"])

    # -- stage bodies ----------------------------------------------------------

    def _stage_generate(self) -> dict:
        config = self.config
        examples = load_dataset(config, self.example_ids)
        dump_canonical(examples, self.run_dir / DATASET_ARTIFACT)
        store = build_store(config)
        client = build_client(config)

        def worker(example: CqaExample) -> list[dict]:
            explanations = generation.generate_explanations(
                example,
                client,
                store,
                model=config.model,
                temperature=config.temperature,
                max_tokens=config.max_tokens,
            )
            return [
                {
                    "example_id": example.id,
                    "candidate_index": i,
                    "explanation": explanation.to_dict(),
                }
                for i, explanation in enumerate(explanations)
            ]

        rows = [row for group in self._map_examples(examples, worker) for row in group]
        rows.sort(key=lambda r: (r["example_id"], r["candidate_index"]))
        write_jsonl(self.artifact_path("generate"), rows)
        return {}

    def _stage_formalize(self) -> dict:
        config = self.config
        rows = self._explanation_rows()
        if config.formalizer == "llm":
            store = build_store(config)
            client = build_client(config)

        def worker(row: dict) -> dict:
            explanation = StructuredExplanation.from_dict(row["explanation"])
            hypothesis = explanation.hypothesis
            if config.formalizer == "llm":
                program = formalize_mod.autoformalize(
                    hypothesis, explanation, client, store, model=config.model
                )
            else:
                program = formalize_mod.fallback_formalize(hypothesis, explanation)
            return {
                "example_id": row["example_id"],
                "candidate_index": row["candidate_index"],
                "program": formalize_mod.render_program(program),
                "trivially_satisfied": formalize_mod.is_trivially_satisfied(program),
            }

        out = self._map_examples(rows, worker)
        out.sort(key=lambda r: (r["example_id"], r["candidate_index"]))
        write_jsonl(self.artifact_path("formalize"), out)
        return {}

    def _stage_prove(self) -> dict:
        config = self.config
        embedder = load_embedder(config)
        rows = read_jsonl(self.run_dir / ARTIFACTS["formalize"])

        def worker(row: dict) -> dict:
            program = formalize_mod.parse_logic_text(row["program"])
            result = prove(program, embedder, threshold=config.threshold, max_depth=config.max_depth)
            return {
                "example_id": row["example_id"],
                "candidate_index": row["candidate_index"],
                "proof": result.to_dict(),
            }

        out = self._map_examples(rows, worker)
        out.sort(key=lambda r: (r["example_id"], r["candidate_index"]))
        write_jsonl(self.artifact_path("prove"), out)
        return {}

    def _stage_features(self) -> dict:
        config = self.config
        golds = {e.id: e.gold_index for e in self._load_run_dataset()}
        explanations = {
            (r["example_id"], r["candidate_index"]): StructuredExplanation.from_dict(
                r["explanation"]
            )
            for r in self._explanation_rows()
        }
        proofs = {
            (r["example_id"], r["candidate_index"]): ProofResult.from_dict(r["proof"])
            for r in read_jsonl(self.run_dir / ARTIFACTS["prove"])
        }
        missing = sorted(set(explanations) - set(proofs))
        if missing:
            raise DataError(f"proofs missing for {missing[:3]} (and possibly more)")
        embedder = load_embedder(config)
        suite = build_scorers(config, embedder)

        def worker(key: tuple[str, int]) -> dict:
            explanation = explanations[key]
            vector = compute_features(
                explanation.hypothesis,
                explanation,
                proofs[key],
                suite,
                noun_scope=config.noun_scope,
                uncertainty_mode=config.uncertainty_mode,
            )
            hedges = classify_hedges(explanation, suite.hedges)
            return {
                "example_id": key[0],
                "candidate_index": key[1],
                "features": vector.to_dict(),
                "self_evident": is_self_evident(vector),
                "hedge_counts": hedges.to_dict(),
                "label": 1 if golds[key[0]] == key[1] else 0,
            }

        out = self._map_examples(sorted(explanations), worker)
        write_jsonl(self.artifact_path("features"), out)
        return {"backend": suite.backend, "substitutions": sorted(suite.substitutions)}

    def _stage_fit(self) -> dict:
        config = self.config
        features_path = self.run_dir / ARTIFACTS["features"]
        rows = read_jsonl(features_path)
        vectors = [IbeFeatureVector.from_dict(r["features"]) for r in rows]
        labels = [int(r["label"]) for r in rows]
        model = fit_linear(
            vectors,
            labels,
            feature_subset=config.fit_features,
            training_fingerprint=sha256_file(features_path),
        )
        save_model(model, self.artifact_path("fit"))
        return {"flags": list(model.flags)}

    def _stage_evaluate(self) -> dict:
        model = load_model(self.artifact_path("fit"))
        examples = {e.id: e for e in self._load_run_dataset()}
        grouped: dict[str, list[dict]] = {}
        for row in read_jsonl(self.run_dir / ARTIFACTS["features"]):
            grouped.setdefault(row["example_id"], []).append(row)
        out = []
        for example_id in sorted(grouped):
            rows = sorted(grouped[example_id], key=lambda r: r["candidate_index"])
            vectors = [IbeFeatureVector.from_dict(r["features"]) for r in rows]
            chosen = select(model, vectors)
            candidates = [
                ScoredCandidate(
                    candidate_index=row["candidate_index"],
                    features=vector,
                    plausibility=score(model, vector),
                    selected=i == chosen,
                ).to_dict()
                for i, (row, vector) in enumerate(zip(rows, vectors))
            ]
            gold = examples[example_id].gold_index
            out.append(
                {
                    "example_id": example_id,
                    "gold_index": gold,
                    "selected_index": chosen,
                    "correct": chosen == gold,
                    "candidates": candidates,
                }
            )
        write_jsonl(self.artifact_path("evaluate"), out)
        return {}

    def _stage_report(self) -> dict:
        from .report import emit_report

        emit_report(self)
        return {}
