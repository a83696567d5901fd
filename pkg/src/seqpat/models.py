"""The completion interface every harness targets.

A model is anything with generate(request) -> text; complete() wraps it
with stop-sequence truncation. Local models are deterministic given their
seed and are the backbone of the offline test suite; RemoteModel speaks
the common completions-over-HTTP convention for real endpoints.
"""

from __future__ import annotations

import os
import random
import re
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import ConfigError, TransportError

__all__ = [
    "CompletionRequest",
    "ModelSpec",
    "ScriptedModel",
    "CallableModel",
    "RandomPolicyModel",
    "PcfgSearchModel",
    "PeriodRepeatModel",
    "RemoteModel",
    "complete",
    "score_logprob_choice",
    "TransportError",
]


@dataclass
class CompletionRequest:
    prompt: str
    max_tokens: int = 64
    stop: Sequence[str] = ()
    temperature: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if not self.prompt:
            raise ConfigError("prompt must be non-empty")
        if self.max_tokens < 1:
            raise ConfigError("max_tokens must be >= 1")
        if len(self.stop) > 4:
            raise ConfigError("at most 4 stop sequences are supported")


def _truncate_at_stop(text: str, stop: Sequence[str]) -> str:
    cut = len(text)
    for s in stop:
        idx = text.find(s)
        if idx >= 0:
            cut = min(cut, idx)
    return text[:cut]


def complete(model, request: CompletionRequest) -> str:
    """Run the model and truncate its output at the first stop sequence."""
    return _truncate_at_stop(model.generate(request), request.stop)


class ScriptedModel:
    """Fixed prompt -> completion table; unknown prompts return the default."""

    def __init__(self, table: dict[str, str], default: str = ""):
        self.table = dict(table)
        self.default = default

    def generate(self, request: CompletionRequest) -> str:
        return self.table.get(request.prompt, self.default)


class CallableModel:
    """Adapter for a plain prompt -> text function."""

    def __init__(self, fn: Callable[[str], str]):
        self.fn = fn

    def generate(self, request: CompletionRequest) -> str:
        return self.fn(request.prompt)


class RandomPolicyModel:
    """Emits a uniformly random action token per call; seeded, stateful.

    A request that carries its own seed is answered as a pure function of
    that seed, leaving the internal stream untouched.
    """

    def __init__(self, actions: Sequence[int] = (1, 2, 3, 4, 5), seed: int = 0):
        self.actions = list(actions)
        self.rng = random.Random(seed)

    def generate(self, request: CompletionRequest) -> str:
        if request.seed is not None:
            return str(random.Random(request.seed).choice(self.actions))
        return str(self.rng.choice(self.actions))


class PcfgSearchModel:
    """Solves grammar-benchmark prompts with the enumerative searcher."""

    def __init__(self, max_ops: int = 3, max_leaves: int = 3, node_budget: int = 5_000_000):
        self.max_ops = max_ops
        self.max_leaves = max_leaves
        self.node_budget = node_budget

    def generate(self, request: CompletionRequest) -> str:
        from . import pcfg

        try:
            examples, query_input = pcfg.parse_prompt(request.prompt)
        except Exception:
            return ""
        found = pcfg.search(
            examples,
            max_ops=self.max_ops,
            max_leaves=self.max_leaves,
            node_budget=self.node_budget,
        )
        if found is None:
            return ""
        program, partition = found
        out = pcfg.eval_program(program, pcfg.split_segments(query_input, partition))
        return pcfg.render_completion(out)


class PeriodRepeatModel:
    """Continues a comma-joined integer series by cycling its last `period` values."""

    def __init__(self, period: int, emit_values: int | None = None):
        if period < 1:
            raise ConfigError("period must be >= 1")
        self.period = period
        self.emit_values = emit_values

    def generate(self, request: CompletionRequest) -> str:
        values = [int(v) for v in re.findall(r"-?\d+", request.prompt)]
        if not values:
            return ""
        tail = values[-self.period :]
        n = self.emit_values if self.emit_values is not None else 4 * self.period
        out = [tail[i % len(tail)] for i in range(n)]
        return ", ".join(str(v) for v in out)


class _TokenBucket:
    """Simple thread-safe rate limiter: `rate` requests per second."""

    def __init__(self, rate: float):
        self.rate = rate
        self.lock = threading.Lock()
        self.next_free = 0.0

    def acquire(self):
        if self.rate <= 0:
            return
        with self.lock:
            now = time.monotonic()
            wait = self.next_free - now
            self.next_free = max(now, self.next_free) + 1.0 / self.rate
        if wait > 0:
            time.sleep(wait)


class RemoteModel:
    """Client for the common completions-over-HTTP convention.

    POSTs {model, prompt, max_tokens, stop, temperature} to base_url + path
    and reads the first choice's text. The credential is read from an
    environment variable at request time and never stored on the instance.
    """

    def __init__(
        self,
        base_url: str,
        model_name: str,
        path: str = "/v1/completions",
        credential_env: str = "SEQPAT_API_KEY",
        auth_header: str = "Authorization",
        auth_scheme: str = "Bearer",
        timeout_s: float = 60.0,
        retries: int = 3,
        backoff_s: float = 1.0,
        rate_limit_rps: float = 1.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.model_name = model_name
        self.path = path
        self.credential_env = credential_env
        self.auth_header = auth_header
        self.auth_scheme = auth_scheme
        self.timeout_s = timeout_s
        self.retries = retries
        self.backoff_s = backoff_s
        self.bucket = _TokenBucket(rate_limit_rps)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        credential = os.environ.get(self.credential_env, "")
        if credential:
            value = f"{self.auth_scheme} {credential}" if self.auth_scheme else credential
            headers[self.auth_header] = value
        return headers

    def generate(self, request: CompletionRequest) -> str:
        import requests

        payload = {
            "model": self.model_name,
            "prompt": request.prompt,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        }
        if request.stop:
            payload["stop"] = list(request.stop)
        last_error: Exception | None = None
        for attempt in range(self.retries):
            self.bucket.acquire()
            try:
                resp = requests.post(
                    self.base_url + self.path,
                    json=payload,
                    headers=self._headers(),
                    timeout=self.timeout_s,
                )
                resp.raise_for_status()
                data = resp.json()
                choices = data.get("choices") or []
                if not choices:
                    return ""
                return choices[0].get("text", "") or ""
            except Exception as exc:  # noqa: BLE001 - every failure is retried
                last_error = exc
                if attempt + 1 < self.retries:
                    time.sleep(self.backoff_s * (2**attempt))
        raise TransportError(f"remote completion failed after {self.retries} attempts: {last_error}")


def score_logprob_choice(model, prompt: str, candidates: Sequence[str]) -> str:
    """Pick the best candidate continuation for the prompt.

    Uses the backend's per-candidate scoring when it exposes
    score_candidates(prompt, candidates); otherwise falls back to a plain
    completion matched against the candidates (first candidate wins ties
    and no-matches, so a candidate is always returned).
    """
    if not candidates:
        raise ConfigError("candidates must be non-empty")
    candidates = list(candidates)
    if len(candidates) == 1:
        return candidates[0]
    scorer = getattr(model, "score_candidates", None)
    if scorer is not None:
        scores = scorer(prompt, candidates)
        best = max(range(len(candidates)), key=lambda i: scores[i])
        return candidates[best]
    text = complete(model, CompletionRequest(prompt=prompt, max_tokens=8))
    head = text.strip().split()[0] if text.strip() else ""
    for cand in candidates:
        if head == cand:
            return cand
    for cand in candidates:
        if text.strip().startswith(cand):
            return cand
    return candidates[0]


def external_token_counter(command: str) -> Callable[[str], int]:
    """Wrap an executable that reads text on stdin and prints a token count."""
    argv = shlex.split(command)

    def count(text: str) -> int:
        out = subprocess.run(
            argv, input=text.encode("utf-8"), capture_output=True, check=True
        )
        return int(out.stdout.strip())

    return count


@dataclass
class ModelSpec:
    """Declarative model configuration (CLI / config file)."""

    kind: str = "mock_scripted"
    # remote endpoint settings
    base_url: str = ""
    model_name: str = ""
    path: str = "/v1/completions"
    credential_env: str = "SEQPAT_API_KEY"
    timeout_s: float = 60.0
    retries: int = 3
    rate_limit_rps: float = 1.0
    # local model settings
    seed: int = 0
    actions: tuple[int, ...] = (1, 2, 3, 4, 5)
    period: int = 20
    max_ops: int = 3
    max_leaves: int = 3
    node_budget: int = 5_000_000
    table: dict = field(default_factory=dict)

    KINDS = (
        "remote",
        "mock_scripted",
        "mock_oracle",
        "random_policy",
        "pcfg_searcher",
        "period_repeat",
    )

    def build(self, oracle=None):
        """Instantiate the model; mock_oracle requires the harness's oracle."""
        if self.kind == "remote":
            if not self.base_url or not self.model_name:
                raise ConfigError("remote model requires base_url and model_name")
            return RemoteModel(
                base_url=self.base_url,
                model_name=self.model_name,
                path=self.path,
                credential_env=self.credential_env,
                timeout_s=self.timeout_s,
                retries=self.retries,
                rate_limit_rps=self.rate_limit_rps,
            )
        if self.kind == "mock_scripted":
            return ScriptedModel(self.table)
        if self.kind == "mock_oracle":
            if oracle is None:
                raise ConfigError("mock_oracle needs a harness-provided oracle model")
            return oracle
        if self.kind == "random_policy":
            return RandomPolicyModel(actions=self.actions, seed=self.seed)
        if self.kind == "pcfg_searcher":
            return PcfgSearchModel(
                max_ops=self.max_ops, max_leaves=self.max_leaves, node_budget=self.node_budget
            )
        if self.kind == "period_repeat":
            return PeriodRepeatModel(period=self.period)
        raise ConfigError(f"unknown model kind {self.kind!r} (expected one of {self.KINDS})")

    def public_config(self) -> dict:
        """Config as embedded in artifacts; never includes credential material."""
        return {
            "kind": self.kind,
            "base_url": self.base_url,
            "model_name": self.model_name,
            "credential_env": self.credential_env,
            "seed": self.seed,
            "period": self.period,
            "max_ops": self.max_ops,
            "max_leaves": self.max_leaves,
        }
