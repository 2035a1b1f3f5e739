"""Pipeline configuration: sectioned key=value files with env overrides.

Relative paths resolve against the config file's directory so a run
directory can be moved wholesale. Secrets never live in the config: it only
names the environment variable that holds the API key. The semantic
fingerprint hashes input file *contents* (not paths) plus every knob that
can change results, so identical inputs map to the same run directory on
any machine.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .metrics import NounScope, UncertaintyMode
from .model import FEATURE_NAMES
from .solver import DEFAULT_MAX_DEPTH, DEFAULT_THRESHOLD

CACHE_DIR_ENV = "IBE_EVAL_CACHE_DIR"


@dataclass
class PipelineConfig:
    # dataset
    dataset_path: Path
    dataset_format: str = "canonical"  # canonical | copa | ecare
    sample_n: int | None = None
    sample_seed: int = 13
    # transcripts
    transcript_path: Path | None = None
    transcript_mode: str = "replay"  # replay | record | live
    # llm
    model: str = "offline"
    base_url: str = ""
    api_key_env: str = "IBE_EVAL_API_KEY"
    temperature: float = 0.0
    max_tokens: int = 1024
    # scorers
    scorer_backend: str = "fallback"  # fallback | sidecar
    sidecar_command: str = ""
    sidecar_url: str = ""
    # embeddings
    embedding_table: Path | None = None  # None -> packaged toy table
    # solver
    threshold: float = DEFAULT_THRESHOLD
    max_depth: int = DEFAULT_MAX_DEPTH
    # features
    uncertainty_mode: UncertaintyMode = UncertaintyMode.AVERAGE
    noun_scope: NounScope = NounScope.CLAUSES_ASSUMPTIONS
    # fit
    fit_features: tuple[str, ...] = FEATURE_NAMES
    standardize_report: bool = True
    # run
    output_dir: Path = Path("runs")
    parallelism: int = 1
    seed: int = 0
    formalizer: str = "fallback"  # fallback | llm
    # report
    annotations_path: Path | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.threshold < 1.0):
            raise ConfigError(f"solver threshold must be in (0,1), got {self.threshold}")
        if self.parallelism < 1:
            raise ConfigError(f"parallelism must be >= 1, got {self.parallelism}")
        if self.dataset_format not in ("canonical", "copa", "ecare"):
            raise ConfigError(f"unknown dataset format {self.dataset_format!r}")
        if self.transcript_mode not in ("replay", "record", "live"):
            raise ConfigError(f"unknown transcript mode {self.transcript_mode!r}")
        if self.scorer_backend not in ("fallback", "sidecar"):
            raise ConfigError(f"unknown scorer backend {self.scorer_backend!r}")
        if self.formalizer not in ("fallback", "llm"):
            raise ConfigError(f"unknown formalizer {self.formalizer!r}")
        for name in self.fit_features:
            if name not in FEATURE_NAMES:
                raise ConfigError(f"unknown fit feature {name!r}")

    @property
    def run_dir(self) -> Path:
        root = os.environ.get(CACHE_DIR_ENV)
        base = Path(root) if root else self.output_dir
        return base / self.fingerprint()[:16]

    def fingerprint(self) -> str:
        """Semantic hash naming the run directory: input contents plus every
        knob that changes the extracted data. Fit-time options (feature
        subset, report standardization) are tracked per stage instead, so
        refits reuse the same run directory."""
        payload = {
            "dataset": _content_hash(self.dataset_path),
            "dataset_format": self.dataset_format,
            "sample": [self.sample_n, self.sample_seed],
            "transcripts": _content_hash(self.transcript_path),
            "transcript_mode": self.transcript_mode,
            "llm": [self.model, self.temperature, self.max_tokens],
            "scorer_backend": self.scorer_backend,
            "embeddings": _content_hash(self.embedding_table) or "packaged",
            "solver": [repr(self.threshold), self.max_depth],
            "features": [self.uncertainty_mode.value, self.noun_scope.value],
            "formalizer": self.formalizer,
            "seed": self.seed,
            "annotations": _content_hash(self.annotations_path),
        }
        blob = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _content_hash(path: Path | None) -> str:
    if path is None:
        return ""
    if not Path(path).exists():
        return "missing"
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _resolve(base: Path, value: str) -> Path:
    p = Path(value).expanduser()
    return p if p.is_absolute() else (base / p).resolve()


def load_config(path: str | Path) -> PipelineConfig:
    """Read a sectioned key = value config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    base = path.parent.resolve()

    def get(section: str, key: str, default: str | None = None) -> str | None:
        if parser.has_option(section, key):
            return parser.get(section, key).strip()
        return default

    dataset_path = get("dataset", "path")
    if not dataset_path:
        raise ConfigError(f"{path}: [dataset] path is required")

    try:
        sample_n_raw = get("dataset", "sample_n")
        transcript_raw = get("transcripts", "path")
        embedding_raw = get("embeddings", "table")
        annotations_raw = get("report", "annotations")
        fit_raw = get("fit", "features")
        return PipelineConfig(
            dataset_path=_resolve(base, dataset_path),
            dataset_format=get("dataset", "format", "canonical"),
            sample_n=int(sample_n_raw) if sample_n_raw else None,
            sample_seed=int(get("dataset", "sample_seed", "13")),
            transcript_path=_resolve(base, transcript_raw) if transcript_raw else None,
            transcript_mode=get("transcripts", "mode", "replay"),
            model=get("llm", "model", "offline"),
            base_url=get("llm", "base_url", ""),
            api_key_env=get("llm", "api_key_env", "IBE_EVAL_API_KEY"),
            temperature=float(get("llm", "temperature", "0.0")),
            max_tokens=int(get("llm", "max_tokens", "1024")),
            scorer_backend=get("scorers", "backend", "fallback"),
            sidecar_command=get("scorers", "sidecar_command", ""),
            sidecar_url=get("scorers", "sidecar_url", ""),
            embedding_table=_resolve(base, embedding_raw) if embedding_raw else None,
            threshold=float(get("solver", "threshold", repr(DEFAULT_THRESHOLD))),
            max_depth=int(get("solver", "max_depth", str(DEFAULT_MAX_DEPTH))),
            uncertainty_mode=UncertaintyMode(get("features", "uncertainty_mode", "average")),
            noun_scope=NounScope(get("features", "noun_scope", "clauses_assumptions")),
            fit_features=tuple(
                name.strip() for name in fit_raw.split(",") if name.strip()
            )
            if fit_raw
            else FEATURE_NAMES,
            standardize_report=get("fit", "standardize_report", "true").lower() == "true",
            output_dir=_resolve(base, get("run", "output_dir", "runs")),
            parallelism=int(get("run", "parallelism", "1")),
            seed=int(get("run", "seed", "0")),
            formalizer=get("run", "formalizer", "fallback"),
            annotations_path=_resolve(base, annotations_raw) if annotations_raw else None,
        )
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
