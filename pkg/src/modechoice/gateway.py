"""Backend-agnostic completion gateway with disk caching and retries.

Two backends are shipped: an HTTP chat-completion client (single user message,
temperature-controlled) and a deterministic mock that applies a simple choice
rule to the travel characteristics embedded in the prompt text. Completions
are cached on disk keyed by (model, temperature, prompt text), which makes
repeat runs free and, at temperature 0, lossless.
"""

from __future__ import annotations

import hashlib
import logging
import os
import random
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import requests

from .dataset import MODE_ORDER, ModeLabel
from .prompting import Prompt

logger = logging.getLogger(__name__)

MOCK_RULES = ("min_time", "min_cost", "generalized_cost", "fixed", "malformed")

_CHARACTERISTICS = re.compile(
    r"\{Travel time: \{Train: (\d+), Car: (\d+), Swissmetro: (\d+)\}, "
    r"Travel cost: \{Train: (\d+), Car: (\d+), Swissmetro: (\d+)\}\}"
)


class GatewayError(Exception):
    pass


class MissingCredential(GatewayError):
    def __init__(self, env_var: str):
        self.env_var = env_var
        super().__init__(f"environment variable {env_var} is not set")


class BackendExhausted(GatewayError):
    def __init__(self, last_status, message: str = ""):
        self.last_status = last_status
        super().__init__(message or f"backend gave up with status {last_status}")


class RequestTimedOut(GatewayError):
    pass


class TransientBackendError(GatewayError):
    """Retryable failure (rate limit, server error, timeout, dropped connection)."""

    def __init__(self, status, message: str = ""):
        self.status = status
        super().__init__(message or f"transient backend failure: {status}")


@dataclass
class BackendConfig:
    backend_kind: str = "mock"  # "http_chat" | "mock"
    model_name: str = "gpt-3.5-turbo-1106"
    temperature: float = 0.0
    endpoint_url: str = "https://api.openai.com/v1/chat/completions"
    timeout_seconds: float = 60.0
    max_retries: int = 3
    retry_backoff_base_seconds: float = 1.0
    max_parallel_requests: int = 4
    mock_rule: str = "generalized_cost"
    use_system_message: bool = False
    system_message_text: str = ""
    credential_env_var: str = "LLM_API_KEY"

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_parallel_requests < 1:
            raise ValueError("max_parallel_requests must be >= 1")


@dataclass(frozen=True)
class ModelCompletion:
    text: str
    situation_id: str
    backend_kind: str
    cache_hit: bool
    latency_ms: float
    attempt_count: int


@dataclass(frozen=True)
class CompletionFailure:
    """Per-item error record used by batch_complete; never aborts the batch."""

    situation_id: str
    error_type: str
    message: str


def cache_key(model_name: str, temperature: float, prompt_text: str) -> str:
    material = "\x1f".join([model_name, repr(float(temperature)), prompt_text])
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


class CompletionCache:
    """Digest-keyed text store, one file per completion, atomic writes."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.txt"

    def get(self, key: str) -> str | None:
        path = self._path(key)
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8")

    def put(self, key: str, text: str) -> None:
        # unique tmp per writer: concurrent puts of one key are identical by
        # construction at temperature 0, and last writer wins atomically
        tmp = self._path(key).with_suffix(f".tmp.{os.getpid()}.{threading.get_ident()}")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, self._path(key))


def parse_prompt_characteristics(
    prompt_text: str,
) -> tuple[dict[ModeLabel, int], dict[ModeLabel, int]]:
    """Recover the per-mode times/costs from a rendered prompt."""
    match = _CHARACTERISTICS.search(prompt_text)
    if not match:
        raise GatewayError("prompt contains no travel characteristics block")
    numbers = [int(g) for g in match.groups()]
    times = dict(zip(MODE_ORDER, numbers[:3]))
    costs = dict(zip(MODE_ORDER, numbers[3:]))
    return times, costs


class MockBackend:
    """Deterministic stand-in for a hosted model; a pure function of the prompt.

    Rules: min_time, min_cost, generalized_cost (time + cost, equal weights),
    fixed:<Mode> (constant answer), malformed (output the parser rejects).
    """

    kind = "mock"

    def __init__(self, rule: str = "generalized_cost"):
        base = rule.split(":", 1)[0]
        if base not in MOCK_RULES:
            raise ValueError(f"unknown mock rule {rule!r}; expected one of {MOCK_RULES}")
        if base == "fixed":
            label = rule.split(":", 1)[1] if ":" in rule else ""
            self._fixed = ModeLabel.from_name(label)
        self.rule = base
        self.calls = 0
        self._lock = threading.Lock()

    def generate(self, prompt_text: str) -> str:
        with self._lock:
            self.calls += 1
        if self.rule == "malformed":
            return "I cannot determine the best travel mode from the given information."
        if self.rule == "fixed":
            return f"Prediction: {self._fixed.display}\nReason: fixed-answer mock rule."
        times, costs = parse_prompt_characteristics(prompt_text)
        if self.rule == "min_time":
            score, why = times, "lowest travel time"
        elif self.rule == "min_cost":
            score, why = costs, "lowest travel cost"
        else:
            score = {m: times[m] + costs[m] for m in MODE_ORDER}
            why = "lowest combined travel time and cost"
        best = min(MODE_ORDER, key=lambda m: (score[m], m))
        return f"Prediction: {best.display}\nReason: {best.display} has the {why}."


class HttpChatBackend:
    """Chat-completion JSON client: single user message, first choice extracted."""

    kind = "http_chat"

    def __init__(self, cfg: BackendConfig):
        credential = os.environ.get(cfg.credential_env_var)
        if not credential:
            raise MissingCredential(cfg.credential_env_var)
        self._cfg = cfg
        self._headers = {"Authorization": f"Bearer {credential}"}

    def generate(self, prompt_text: str) -> str:
        cfg = self._cfg
        messages = []
        if cfg.use_system_message:
            messages.append({"role": "system", "content": cfg.system_message_text})
        messages.append({"role": "user", "content": prompt_text})
        body = {
            "model": cfg.model_name,
            "messages": messages,
            "temperature": cfg.temperature,
        }
        try:
            response = requests.post(
                cfg.endpoint_url,
                json=body,
                headers=self._headers,
                timeout=cfg.timeout_seconds,
            )
        except requests.Timeout:
            raise TransientBackendError("timeout", "request timed out") from None
        except requests.ConnectionError as exc:
            raise TransientBackendError("connection", f"connection failed: {exc}") from None
        if response.status_code == 429 or response.status_code >= 500:
            raise TransientBackendError(response.status_code)
        if response.status_code != 200:
            # Authentication and other client errors are not retryable.
            raise BackendExhausted(
                response.status_code,
                f"non-retryable status {response.status_code}: {response.text[:200]}",
            )
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise GatewayError(f"malformed completion response body: {exc}") from exc
        if not content:
            raise GatewayError("backend returned an empty completion")
        return content


def make_backend(cfg: BackendConfig):
    if cfg.backend_kind == "mock":
        return MockBackend(cfg.mock_rule)
    if cfg.backend_kind == "http_chat":
        return HttpChatBackend(cfg)
    raise ValueError(f"unknown backend_kind {cfg.backend_kind!r}")


def _generate_with_retries(backend, prompt_text: str, cfg: BackendConfig) -> tuple[str, int]:
    attempts = 0
    while True:
        attempts += 1
        try:
            return backend.generate(prompt_text), attempts
        except TransientBackendError as exc:
            if attempts > cfg.max_retries:
                if exc.status == "timeout":
                    raise RequestTimedOut(
                        f"timed out after {attempts} attempts"
                    ) from exc
                raise BackendExhausted(
                    exc.status, f"gave up after {attempts} attempts: {exc}"
                ) from exc
            delay = cfg.retry_backoff_base_seconds * (2 ** (attempts - 1))
            delay *= 1 + 0.25 * random.random()  # jitter to avoid retry bursts
            logger.warning(
                "transient backend failure (%s), retry %d/%d in %.2fs",
                exc.status,
                attempts,
                cfg.max_retries,
                delay,
            )
            if delay > 0:
                time.sleep(delay)


def complete(
    prompt: Prompt,
    cfg: BackendConfig,
    cache: CompletionCache | None,
    backend=None,
) -> ModelCompletion:
    """Complete one prompt, consulting the cache first and storing on success."""
    key = cache_key(cfg.model_name, cfg.temperature, prompt.full_text)
    if cache is not None:
        cached = cache.get(key)
        if cached is not None:
            return ModelCompletion(
                text=cached,
                situation_id=prompt.situation_id,
                backend_kind=cfg.backend_kind,
                cache_hit=True,
                latency_ms=0.0,
                attempt_count=0,
            )
    if backend is None:
        backend = make_backend(cfg)
    started = time.perf_counter()
    text, attempts = _generate_with_retries(backend, prompt.full_text, cfg)
    latency_ms = (time.perf_counter() - started) * 1000.0
    if not text:
        raise GatewayError("backend returned an empty completion")
    if cache is not None:
        cache.put(key, text)
    return ModelCompletion(
        text=text,
        situation_id=prompt.situation_id,
        backend_kind=cfg.backend_kind,
        cache_hit=False,
        latency_ms=latency_ms,
        attempt_count=attempts,
    )


def batch_complete(
    prompts: list[Prompt],
    cfg: BackendConfig,
    cache: CompletionCache | None,
    backend=None,
) -> list[ModelCompletion | CompletionFailure]:
    """Complete prompts with bounded parallelism, preserving input order.

    One item's failure never aborts the batch; failed positions hold a
    CompletionFailure record instead of a completion.
    """
    if not prompts:
        raise ValueError("prompts must be non-empty")
    if backend is None:
        backend = make_backend(cfg)  # credential problems surface before any work

    def one(prompt: Prompt) -> ModelCompletion | CompletionFailure:
        try:
            return complete(prompt, cfg, cache, backend=backend)
        except GatewayError as exc:
            logger.warning("completion failed for %s: %s", prompt.situation_id, exc)
            return CompletionFailure(
                situation_id=prompt.situation_id,
                error_type=type(exc).__name__,
                message=str(exc),
            )

    with ThreadPoolExecutor(max_workers=cfg.max_parallel_requests) as pool:
        return list(pool.map(one, prompts))
