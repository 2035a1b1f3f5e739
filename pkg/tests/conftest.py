import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

from ibe_eval.config import PipelineConfig
from ibe_eval.datasets import load_canonical
from ibe_eval.pipeline import packaged_embedding_table
from ibe_eval.scorers import fallback_suite
from ibe_eval.solver import EmbeddingProvider

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return FIXTURES / "golden"


@pytest.fixture(scope="session")
def corpus():
    return load_canonical(FIXTURES / "corpus20.jsonl")


@pytest.fixture(scope="session")
def embedder() -> EmbeddingProvider:
    return EmbeddingProvider.from_table(packaged_embedding_table())


@pytest.fixture(scope="session")
def scorers(embedder):
    return fallback_suite(embedder)


def fixture_config(tmp_path: Path, **overrides) -> PipelineConfig:
    """Replay-mode config over the bundled 20-example corpus."""
    defaults = dict(
        dataset_path=FIXTURES / "corpus20.jsonl",
        dataset_format="canonical",
        transcript_path=FIXTURES / "transcripts20.jsonl",
        transcript_mode="replay",
        model="fixture-model",
        output_dir=tmp_path,
        annotations_path=FIXTURES / "annotations.csv",
    )
    defaults.update(overrides)
    return PipelineConfig(**defaults)


@pytest.fixture()
def replay_config(tmp_path):
    return fixture_config(tmp_path / "runs")
