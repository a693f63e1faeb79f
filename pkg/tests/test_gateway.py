import random
import threading
import time

import pytest

import modechoice.gateway as gateway
from modechoice.dataset import ModeLabel
from modechoice.gateway import (
    BackendConfig,
    BackendExhausted,
    CompletionCache,
    CompletionFailure,
    GatewayError,
    MissingCredential,
    MockBackend,
    RequestTimedOut,
    TransientBackendError,
    batch_complete,
    cache_key,
    complete,
    make_backend,
    parse_prompt_characteristics,
)
from modechoice.prompting import PromptTemplateConfig, build_prompt

from conftest import make_situation, random_situation

PROMPT_CFG = PromptTemplateConfig()
FAST_SM = build_prompt(make_situation(sid="fast-sm"), PROMPT_CFG)


def mock_cfg(**kwargs):
    kwargs.setdefault("backend_kind", "mock")
    kwargs.setdefault("retry_backoff_base_seconds", 0.0)
    return BackendConfig(**kwargs)


class FlakyBackend:
    kind = "mock"

    def __init__(self, failures, status=429):
        self.failures = failures
        self.status = status
        self.calls = 0

    def generate(self, prompt_text):
        self.calls += 1
        if self.calls <= self.failures:
            raise TransientBackendError(self.status)
        return "Prediction: Car\nReason: recovered."


def test_parse_prompt_characteristics_round_trip():
    times, costs = parse_prompt_characteristics(FAST_SM.full_text)
    assert times == {ModeLabel.TRAIN: 106, ModeLabel.CAR: 90, ModeLabel.SWISSMETRO: 34}
    assert costs == {ModeLabel.TRAIN: 72, ModeLabel.CAR: 70, ModeLabel.SWISSMETRO: 78}


@pytest.mark.parametrize(
    "rule,expected",
    [
        ("min_time", "Prediction: Swissmetro"),
        ("min_cost", "Prediction: Car"),
        ("generalized_cost", "Prediction: Swissmetro"),  # 178 / 160 / 112
        ("fixed:Train", "Prediction: Train"),
    ],
)
def test_mock_rules(rule, expected):
    assert MockBackend(rule).generate(FAST_SM.full_text).startswith(expected)


def test_mock_malformed_rule_defeats_parser():
    from modechoice.parsing import ParseFailure, parse_response

    text = MockBackend("malformed").generate(FAST_SM.full_text)
    with pytest.raises(ParseFailure):
        parse_response(text)


def test_mock_rejects_unknown_rule():
    with pytest.raises(ValueError):
        MockBackend("coin_flip")


def test_mock_is_pure_function_of_prompt():
    backend = MockBackend("generalized_cost")
    outputs = {backend.generate(FAST_SM.full_text) for _ in range(100)}
    assert len(outputs) == 1


def test_complete_uses_cache(tmp_path):
    cfg = mock_cfg()
    cache = CompletionCache(tmp_path / "cache")
    backend = MockBackend("min_time")
    first = complete(FAST_SM, cfg, cache, backend=backend)
    second = complete(FAST_SM, cfg, cache, backend=backend)
    assert first.cache_hit is False and first.attempt_count == 1
    assert second.cache_hit is True and second.attempt_count == 0
    assert second.text == first.text
    assert backend.calls == 1


def test_complete_retries_transient_failures(tmp_path):
    backend = FlakyBackend(failures=1)
    result = complete(FAST_SM, mock_cfg(max_retries=3), None, backend=backend)
    assert result.attempt_count == 2
    assert "Prediction: Car" in result.text


def test_complete_exhausts_retries(tmp_path):
    backend = FlakyBackend(failures=10, status=503)
    with pytest.raises(BackendExhausted) as err:
        complete(FAST_SM, mock_cfg(max_retries=2), None, backend=backend)
    assert err.value.last_status == 503
    assert backend.calls == 3  # initial + 2 retries


def test_complete_timeout_surfaces_as_timeout():
    backend = FlakyBackend(failures=10, status="timeout")
    with pytest.raises(RequestTimedOut):
        complete(FAST_SM, mock_cfg(max_retries=1), None, backend=backend)


def test_cache_key_sensitivity():
    rng = random.Random(23)
    base = cache_key("model-a", 0.0, FAST_SM.full_text)
    assert cache_key("model-a", 0.0, FAST_SM.full_text) == base
    for i in range(50):
        other = build_prompt(random_situation(rng, f"s{i}"), PROMPT_CFG)
        if other.full_text != FAST_SM.full_text:
            assert cache_key("model-a", 0.0, other.full_text) != base
    assert cache_key("model-b", 0.0, FAST_SM.full_text) != base
    assert cache_key("model-a", 0.5, FAST_SM.full_text) != base


def test_cache_round_trip(tmp_path):
    cache = CompletionCache(tmp_path)
    cache.put("k" * 64, "some completion")
    assert cache.get("k" * 64) == "some completion"
    assert cache.get("absent" + "0" * 58) is None


def test_batch_preserves_order(tmp_path):
    rng = random.Random(5)
    prompts = [build_prompt(random_situation(rng, f"s{i:03d}"), PROMPT_CFG) for i in range(10)]
    results = batch_complete(prompts, mock_cfg(), CompletionCache(tmp_path), MockBackend("min_cost"))
    assert [r.situation_id for r in results] == [p.situation_id for p in prompts]


def test_batch_isolates_failures(tmp_path):
    rng = random.Random(6)
    prompts = [build_prompt(random_situation(rng, f"s{i:03d}"), PROMPT_CFG) for i in range(10)]

    class FailsOne:
        kind = "mock"

        def generate(self, prompt_text):
            if prompts[4].full_text == prompt_text:
                raise TransientBackendError(500)
            return "Prediction: Train\nReason: ok."

    results = batch_complete(prompts, mock_cfg(max_retries=0), None, FailsOne())
    failures = [r for r in results if isinstance(r, CompletionFailure)]
    assert len(failures) == 1
    assert isinstance(results[4], CompletionFailure)
    assert results[4].situation_id == prompts[4].situation_id
    assert results[4].error_type == "BackendExhausted"
    assert all(not isinstance(r, CompletionFailure) for i, r in enumerate(results) if i != 4)


def test_batch_bounded_parallelism():
    rng = random.Random(8)
    prompts = [build_prompt(random_situation(rng, f"s{i:03d}"), PROMPT_CFG) for i in range(16)]

    class CountingBackend:
        kind = "mock"

        def __init__(self):
            self.lock = threading.Lock()
            self.active = 0
            self.peak = 0

        def generate(self, prompt_text):
            with self.lock:
                self.active += 1
                self.peak = max(self.peak, self.active)
            time.sleep(0.01)
            with self.lock:
                self.active -= 1
            return "Prediction: Car\nReason: ok."

    backend = CountingBackend()
    batch_complete(prompts, mock_cfg(max_parallel_requests=4), None, backend)
    assert backend.peak <= 4


def test_batch_matches_sequential_complete(tmp_path):
    rng = random.Random(9)
    prompts = [build_prompt(random_situation(rng, f"s{i:03d}"), PROMPT_CFG) for i in range(12)]
    cfg = mock_cfg(mock_rule="generalized_cost")
    batch = batch_complete(prompts, cfg, None, MockBackend("generalized_cost"))
    for prompt, result in zip(prompts, batch):
        single = complete(prompt, cfg, None, backend=MockBackend("generalized_cost"))
        assert result.text == single.text
        assert result.situation_id == single.situation_id


def test_batch_rerun_fully_cached(tmp_path):
    rng = random.Random(10)
    prompts = [build_prompt(random_situation(rng, f"s{i:03d}"), PROMPT_CFG) for i in range(6)]
    cache = CompletionCache(tmp_path)
    backend = MockBackend("min_time")
    first = batch_complete(prompts, mock_cfg(), cache, backend)
    calls_after_first = backend.calls
    second = batch_complete(prompts, mock_cfg(), cache, backend)
    assert backend.calls == calls_after_first
    assert all(r.cache_hit for r in second)
    assert [r.text for r in first] == [r.text for r in second]


def test_batch_requires_prompts():
    with pytest.raises(ValueError):
        batch_complete([], mock_cfg(), None, MockBackend("min_time"))


def test_missing_credential(monkeypatch):
    monkeypatch.delenv("LLM_API_KEY", raising=False)
    with pytest.raises(MissingCredential) as err:
        make_backend(BackendConfig(backend_kind="http_chat"))
    assert "LLM_API_KEY" in str(err.value)


class FakeResponse:
    def __init__(self, status_code, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload
        self.text = text

    def json(self):
        if self._payload is None:
            raise ValueError("no json")
        return self._payload


def _chat_payload(content):
    return {"choices": [{"message": {"role": "assistant", "content": content}}]}


def test_http_backend_wire_format(monkeypatch):
    monkeypatch.setenv("LLM_API_KEY", "sk-test")
    seen = {}

    def fake_post(url, json=None, headers=None, timeout=None):
        seen.update(url=url, body=json, headers=headers, timeout=timeout)
        return FakeResponse(200, _chat_payload("Prediction: Train\nReason: ok."))

    monkeypatch.setattr(gateway.requests, "post", fake_post)
    cfg = BackendConfig(backend_kind="http_chat", temperature=0.0, timeout_seconds=30)
    result = complete(FAST_SM, cfg, None)
    assert result.text == "Prediction: Train\nReason: ok."
    assert seen["url"] == cfg.endpoint_url
    assert seen["headers"]["Authorization"] == "Bearer sk-test"
    assert seen["timeout"] == 30
    assert seen["body"]["model"] == "gpt-3.5-turbo-1106"
    assert seen["body"]["temperature"] == 0.0
    assert seen["body"]["messages"] == [{"role": "user", "content": FAST_SM.full_text}]


def test_http_backend_retries_rate_limit(monkeypatch):
    monkeypatch.setenv("LLM_API_KEY", "sk-test")
    responses = [FakeResponse(429, text="slow down"), FakeResponse(200, _chat_payload("Prediction: Car\nReason: y"))]

    def fake_post(url, **kwargs):
        return responses.pop(0)

    monkeypatch.setattr(gateway.requests, "post", fake_post)
    cfg = BackendConfig(
        backend_kind="http_chat", max_retries=2, retry_backoff_base_seconds=0.0
    )
    result = complete(FAST_SM, cfg, None)
    assert result.attempt_count == 2


def test_http_backend_does_not_retry_auth_errors(monkeypatch):
    monkeypatch.setenv("LLM_API_KEY", "sk-bad")
    calls = {"n": 0}

    def fake_post(url, **kwargs):
        calls["n"] += 1
        return FakeResponse(401, text="bad key")

    monkeypatch.setattr(gateway.requests, "post", fake_post)
    cfg = BackendConfig(backend_kind="http_chat", max_retries=5, retry_backoff_base_seconds=0.0)
    with pytest.raises(BackendExhausted) as err:
        complete(FAST_SM, cfg, None)
    assert err.value.last_status == 401
    assert calls["n"] == 1


def test_http_backend_malformed_body(monkeypatch):
    monkeypatch.setenv("LLM_API_KEY", "sk-test")
    monkeypatch.setattr(
        gateway.requests, "post", lambda url, **kw: FakeResponse(200, {"unexpected": True})
    )
    cfg = BackendConfig(backend_kind="http_chat")
    with pytest.raises(GatewayError):
        complete(FAST_SM, cfg, None)
