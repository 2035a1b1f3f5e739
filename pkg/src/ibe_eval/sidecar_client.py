"""Client for the scorer sidecar service.

The sidecar speaks newline-delimited JSON over stdio (primary transport,
spawned as a child process) or over HTTP POST /score. Each request carries
an id, an op (entail | certainty | hedge | health), and op-specific fields;
responses echo the id and arrive in request order per connection. Ops the
sidecar has disabled answer with a capability error, which the suite built
here maps onto the built-in fallback scorer, recording the substitution.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading

from .errors import CapabilityError, UpstreamError
from .scorers import EntailmentProbs, ScorerSuite

CAPABILITY_CODE = "capability"


class SidecarClient:
    """One connection to a sidecar, over stdio or HTTP."""

    def __init__(self, command: str = "", url: str = "", timeout: float = 30.0):
        if not command and not url:
            raise UpstreamError("sidecar needs a command line or an HTTP URL")
        self.url = url.rstrip("/")
        self.timeout = timeout
        self._lock = threading.Lock()
        self._next_id = 0
        self._process: subprocess.Popen | None = None
        if command:
            try:
                self._process = subprocess.Popen(
                    shlex.split(command),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.DEVNULL,
                    text=True,
                    encoding="utf-8",
                )
            except OSError as exc:
                raise UpstreamError(f"cannot spawn sidecar {command!r}: {exc}") from exc

    def close(self) -> None:
        if self._process is not None:
            if self._process.stdin:
                self._process.stdin.close()
            self._process.terminate()
            self._process.wait(timeout=10)
            self._process = None

    def __enter__(self) -> "SidecarClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _round_trip(self, request: dict) -> dict:
        if self._process is not None:
            proc = self._process
            with self._lock:  # per-connection ordering: one in-flight request
                assert proc.stdin is not None and proc.stdout is not None
                try:
                    proc.stdin.write(json.dumps(request, ensure_ascii=False) + "\n")
                    proc.stdin.flush()
                    line = proc.stdout.readline()
                except (BrokenPipeError, OSError) as exc:
                    raise UpstreamError(f"sidecar pipe failed: {exc}") from exc
            if not line:
                raise UpstreamError("sidecar closed its stdout")
            try:
                return json.loads(line)
            except json.JSONDecodeError as exc:
                raise UpstreamError(f"sidecar sent bad JSON: {line[:120]!r}") from exc
        import requests

        try:
            resp = requests.post(f"{self.url}/score", json=[request], timeout=self.timeout)
            resp.raise_for_status()
            body = resp.json()
        except Exception as exc:  # noqa: BLE001 - all transport failures map to upstream
            raise UpstreamError(f"sidecar HTTP call failed: {exc}") from exc
        if not isinstance(body, list) or len(body) != 1:
            raise UpstreamError(f"sidecar HTTP response shape unexpected: {body!r}")
        return body[0]

    def request(self, op: str, **payload) -> dict:
        self._next_id += 1
        request = {"id": str(self._next_id), "op": op, **payload}
        response = self._round_trip(request)
        if response.get("id") != request["id"]:
            raise UpstreamError(
                f"sidecar answered id {response.get('id')!r} to request {request['id']!r}"
            )
        error = response.get("error")
        if error:
            code = error.get("code", "") if isinstance(error, dict) else ""
            message = error.get("message", str(error)) if isinstance(error, dict) else str(error)
            if code == CAPABILITY_CODE:
                raise CapabilityError(f"sidecar op {op!r} disabled: {message}")
            raise UpstreamError(f"sidecar op {op!r} failed: {message}")
        return response

    def health(self) -> dict:
        return self.request("health")


class _SidecarOp:
    """Callable proxy that downgrades to the fallback on capability errors."""

    def __init__(self, call, fallback, op_name: str, suite: ScorerSuite):
        self._call = call
        self._fallback = fallback
        self._op_name = op_name
        self._suite = suite
        self._disabled = False

    def _record_substitution(self) -> None:
        self._disabled = True
        if self._op_name not in self._suite.substitutions:
            self._suite.substitutions.append(self._op_name)

    def __call__(self, *args):
        if self._disabled:
            return self._fallback(*args)
        try:
            return self._call(*args)
        except CapabilityError:
            self._record_substitution()
            return self._fallback(*args)


def sidecar_suite(client: SidecarClient, fallback: ScorerSuite) -> ScorerSuite:
    """Scorer suite backed by the sidecar, with per-op capability fallback.

    POS tagging is not a sidecar op and always uses the local tagger. The
    health probe marks ops the sidecar reports as disabled up front; a
    capability error at call time downgrades the op as well.
    """
    suite = ScorerSuite(
        entailment=fallback.entailment,
        certainty=fallback.certainty,
        hedges=fallback.hedges,
        pos=fallback.pos,
        backend="sidecar",
        substitutions=[],
    )

    def entail(premise: str, hypothesis: str) -> EntailmentProbs:
        resp = client.request("entail", premise=premise, hypothesis=hypothesis)
        return EntailmentProbs(
            float(resp["entail"]), float(resp["neutral"]), float(resp["contradiction"])
        )

    def certainty(sentence: str) -> float:
        return float(client.request("certainty", sentence=sentence)["certainty"])

    def hedges(sentence: str) -> list[tuple[str, str]]:
        resp = client.request("hedge", sentence=sentence)
        return [(token, label) for token, label in resp["tokens"]]

    ops = {
        "entail": _SidecarOp(entail, fallback.entailment, "entail", suite),
        "certainty": _SidecarOp(certainty, fallback.certainty, "certainty", suite),
        "hedge": _SidecarOp(hedges, fallback.hedges, "hedge", suite),
    }
    suite.entailment = ops["entail"]
    suite.certainty = ops["certainty"]
    suite.hedges = ops["hedge"]

    try:
        status = client.health()
    except UpstreamError:
        raise
    models = status.get("models", {})
    for op_name, proxy in ops.items():
        if models.get(op_name) in (None, "", "disabled"):
            proxy._record_substitution()
    return suite
