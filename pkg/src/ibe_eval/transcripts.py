"""LLM request fingerprinting and the record/replay transcript store.

Replay mode makes the whole pipeline deterministic and offline: every
response is looked up by a stable content hash of the request. Record mode
persists live responses under the same hash so a later replay reproduces
the run byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import ReplayMiss, ValidationError


@dataclass(frozen=True)
class LlmRequest:
    model: str
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValidationError(f"temperature must be >= 0, got {self.temperature}")


def normalize_prompt(text: str) -> str:
    """Canonical prompt text: CRLF/CR folded to LF, trailing whitespace per line dropped."""
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    return "\n".join(line.rstrip() for line in lines)


def fingerprint(request: LlmRequest) -> str:
    """Stable SHA-256 hex digest over (model, temperature, max_tokens, normalized prompt).

    Invariant across processes and platforms: UTF-8 bytes, LF line endings,
    floats rendered by ``repr``.
    """
    payload = "\x00".join(
        [
            request.model,
            repr(float(request.temperature)),
            str(int(request.max_tokens)),
            normalize_prompt(request.prompt),
        ]
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class StoreMode(str, Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"


class TranscriptStore:
    """JSONL-backed map from request fingerprint to raw response text.

    One object per line with keys fingerprint, model, prompt, response,
    created_at. Writes are serialized behind a lock; reads are lock-free
    after load. In replay mode a missing fingerprint raises
    :class:`ReplayMiss` and no network call is ever issued.
    """

    def __init__(self, path: str | Path, mode: StoreMode = StoreMode.REPLAY):
        self.path = Path(path)
        self.mode = StoreMode(mode)
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        if self.path.exists():
            self._load()
        elif self.mode is StoreMode.REPLAY:
            raise ReplayMiss(f"replay store not found: {self.path}")

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValidationError(f"{self.path}:{lineno}: bad transcript line: {exc}") from exc
                self._entries[row["fingerprint"]] = row["response"]

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, fp: str) -> bool:
        return fp in self._entries

    def lookup(self, fp: str) -> str | None:
        return self._entries.get(fp)

    def fetch(self, request: LlmRequest, client: "LlmClient") -> str:
        """Resolve a request through the store according to its mode."""
        fp = fingerprint(request)
        cached = self._entries.get(fp)
        if cached is not None:
            return cached
        if self.mode is StoreMode.REPLAY:
            raise ReplayMiss(
                f"no transcript for fingerprint {fp[:12]}… (model={request.model})",
                fingerprint=fp,
            )
        response = client.complete(request)
        if self.mode is StoreMode.RECORD:
            self.record(request, response)
        return response

    def record(self, request: LlmRequest, response: str) -> str:
        """Persist a response under its fingerprint; returns the fingerprint."""
        fp = fingerprint(request)
        row = {
            "fingerprint": fp,
            "model": request.model,
            "prompt": request.prompt,
            "response": response,
            "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        with self._lock:
            self._entries[fp] = response
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
        return fp


class LlmClient:
    """Interface for chat-completion backends; see :class:`HttpChatClient`."""

    def complete(self, request: LlmRequest) -> str:  # pragma: no cover - interface
        raise NotImplementedError


class HttpChatClient(LlmClient):
    """OpenAI-style chat-completion client.

    All network specifics live here: base URL, model name, and the name of
    the environment variable holding the API key. Retries are bounded.
    """

    def __init__(
        self,
        base_url: str,
        api_key_env: str = "IBE_EVAL_API_KEY",
        timeout: float = 60.0,
        max_retries: int = 2,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.max_retries = max_retries

    def complete(self, request: LlmRequest) -> str:
        import os

        import requests

        from .errors import UpstreamError

        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        last_error: Exception | None = None
        for _ in range(self.max_retries + 1):
            try:
                resp = requests.post(
                    f"{self.base_url}/chat/completions",
                    json=body,
                    headers=headers,
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - all transport failures retry
                last_error = exc
        raise UpstreamError(f"chat completion failed after {self.max_retries + 1} attempts: {last_error}")


class ScriptedClient(LlmClient):
    """Test double answering from a prompt -> response mapping.

    ``match`` picks how prompts are keyed: exact prompt text, or any
    substring key contained in the prompt.
    """

    def __init__(self, responses: dict[str, str], match: str = "exact"):
        if match not in ("exact", "substring"):
            raise ValidationError(f"unknown match mode {match!r}")
        self.responses = dict(responses)
        self.match = match
        self.calls = 0

    def complete(self, request: LlmRequest) -> str:
        self.calls += 1
        if self.match == "exact":
            if request.prompt in self.responses:
                return self.responses[request.prompt]
        else:
            for key in sorted(self.responses):
                if key in request.prompt:
                    return self.responses[key]
        raise KeyError(f"scripted client has no response for prompt: {request.prompt[:80]!r}…")
