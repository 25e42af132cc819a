"""Scripted and remote providers: lookup, retries, secret hygiene."""

from __future__ import annotations

import json
import logging

import httpx
import pytest

from odrmediator.prompting import (
    build_mediator_prompt,
    build_reformulation_prompt,
    ContextMessage,
)
from odrmediator.providers import (
    CompletionResult,
    EmptyCompletion,
    MissingApiKey,
    ProviderConfig,
    ProviderRejected,
    ProviderTag,
    ProviderTimeout,
    RateLimited,
    RemoteProvider,
    ScriptEntry,
    ScriptedProvider,
    ScriptParseError,
    load_script,
)

KEY_ENV = "TEST_LLM_API_KEY"
SECRET = "sk-super-secret-value-1234"


def _config(**overrides) -> ProviderConfig:
    defaults = dict(
        endpoint_url="https://llm.example/v1/chat/completions",
        model_id="test-model",
        api_key_env=KEY_ENV,
        request_timeout=5.0,
        max_retries=2,
    )
    defaults.update(overrides)
    return ProviderConfig(**defaults)


def _success_body(text: str) -> dict:
    return {"choices": [{"message": {"role": "assistant", "content": text}}]}


class TestScriptedProvider:
    def test_exact_match_on_final_user_turn(self):
        provider = ScriptedProvider([ScriptEntry("hello there", "rewritten hello")])
        bundle = build_reformulation_prompt("hello there")
        result = provider.complete(bundle)
        assert result.text == "rewritten hello"
        assert result.provider_tag is ProviderTag.SCRIPTED

    def test_matching_is_bit_exact(self):
        provider = ScriptedProvider([ScriptEntry("hello", "resp")])
        with pytest.raises(ProviderRejected):
            provider.complete(build_reformulation_prompt("hello "))

    def test_default_fallback(self):
        provider = ScriptedProvider([ScriptEntry(None, "OK")])
        assert provider.complete(build_reformulation_prompt("anything")).text == "OK"

    def test_miss_without_default_rejects(self):
        provider = ScriptedProvider([ScriptEntry("known", "resp")])
        with pytest.raises(ProviderRejected):
            provider.complete(build_reformulation_prompt("unknown"))

    def test_instructions_take_precedence_over_final_turn(self):
        context = [ContextMessage("m1", "John", "party", "the last line")]
        provider = ScriptedProvider(
            [
                ScriptEntry("John (party): the last line", "context response"),
                ScriptEntry("probe the insurance angle", "instruction response"),
            ]
        )
        plain = build_mediator_prompt(context)
        steered = build_mediator_prompt(context, "probe the insurance angle")
        assert provider.complete(plain).text == "context response"
        assert provider.complete(steered).text == "instruction response"

    def test_deterministic_across_calls(self):
        provider = ScriptedProvider([ScriptEntry(None, "stable")])
        bundle = build_reformulation_prompt("x")
        first = provider.complete(bundle)
        second = provider.complete(bundle)
        assert first.text == second.text == "stable"

    def test_blank_scripted_response_is_empty_completion(self):
        provider = ScriptedProvider([ScriptEntry(None, "   ")])
        with pytest.raises(EmptyCompletion):
            provider.complete(build_reformulation_prompt("x"))


class TestLoadScript:
    def test_load_demo_pairs(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text(
            json.dumps(
                [
                    {"match": "original one", "response": "rewrite one"},
                    {"match": None, "response": "default"},
                ]
            ),
            encoding="utf-8",
        )
        provider = load_script(path)
        assert provider.complete(build_reformulation_prompt("original one")).text == "rewrite one"
        assert provider.complete(build_reformulation_prompt("nope")).text == "default"

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text('[\n{"match": "a", "response": "b"},\n{"oops"\n]', encoding="utf-8")
        with pytest.raises(ScriptParseError) as exc_info:
            load_script(path)
        assert exc_info.value.line == 4

    def test_non_array_rejected(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text('{"match": "a"}', encoding="utf-8")
        with pytest.raises(ScriptParseError):
            load_script(path)

    def test_entry_without_response_rejected(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text('[{"match": "a"}]', encoding="utf-8")
        with pytest.raises(ScriptParseError):
            load_script(path)


class TestRemoteProvider:
    def test_successful_completion(self, monkeypatch):
        monkeypatch.setenv(KEY_ENV, SECRET)
        seen = {}

        def handler(request: httpx.Request) -> httpx.Response:
            seen["payload"] = json.loads(request.content)
            seen["auth"] = request.headers.get("authorization")
            return httpx.Response(200, json=_success_body("  a calm reply  "))

        provider = RemoteProvider(_config(), transport=httpx.MockTransport(handler))
        result = provider.complete(build_reformulation_prompt("angry words"))
        assert result.text == "a calm reply"
        assert result.provider_tag is ProviderTag.REMOTE
        assert result.latency >= 0
        assert seen["payload"]["model"] == "test-model"
        assert seen["payload"]["messages"][0]["role"] == "system"
        assert seen["payload"]["messages"][1] == {"role": "user", "content": "angry words"}
        assert seen["payload"]["temperature"] == 0.7
        assert seen["payload"]["max_tokens"] == 1024
        assert seen["auth"] == f"Bearer {SECRET}"

    def test_missing_api_key_before_any_network_call(self, monkeypatch):
        monkeypatch.delenv(KEY_ENV, raising=False)
        calls = []

        def handler(request):
            calls.append(request)
            return httpx.Response(200, json=_success_body("x"))

        provider = RemoteProvider(_config(), transport=httpx.MockTransport(handler))
        with pytest.raises(MissingApiKey):
            provider.complete(build_reformulation_prompt("x"))
        assert calls == []

    def test_retry_bound_on_server_errors(self, monkeypatch):
        monkeypatch.setenv(KEY_ENV, SECRET)
        calls = []
        sleeps = []

        def handler(request):
            calls.append(request)
            return httpx.Response(502, text="bad gateway")

        provider = RemoteProvider(
            _config(max_retries=2),
            transport=httpx.MockTransport(handler),
            sleeper=sleeps.append,
        )
        with pytest.raises(ProviderRejected) as exc_info:
            provider.complete(build_reformulation_prompt("x"))
        assert len(calls) == 3  # 1 + max_retries
        assert sleeps == [1.0, 2.0]  # exponential backoff from 1 s
        assert exc_info.value.status == 502

    def test_recovers_after_transient_failure(self, monkeypatch):
        monkeypatch.setenv(KEY_ENV, SECRET)
        responses = [
            httpx.Response(500, text="boom"),
            httpx.Response(200, json=_success_body("second try")),
        ]

        provider = RemoteProvider(
            _config(),
            transport=httpx.MockTransport(lambda request: responses.pop(0)),
            sleeper=lambda _: None,
        )
        assert provider.complete(build_reformulation_prompt("x")).text == "second try"

    def test_rate_limit_exhaustion(self, monkeypatch):
        monkeypatch.setenv(KEY_ENV, SECRET)
        provider = RemoteProvider(
            _config(max_retries=1),
            transport=httpx.MockTransport(lambda request: httpx.Response(429, text="slow down")),
            sleeper=lambda _: None,
        )
        with pytest.raises(RateLimited):
            provider.complete(build_reformulation_prompt("x"))

    def test_timeout_exhaustion(self, monkeypatch):
        monkeypatch.setenv(KEY_ENV, SECRET)

        def handler(request):
            raise httpx.ReadTimeout("too slow", request=request)

        provider = RemoteProvider(
            _config(max_retries=1),
            transport=httpx.MockTransport(handler),
            sleeper=lambda _: None,
        )
        with pytest.raises(ProviderTimeout):
            provider.complete(build_reformulation_prompt("x"))

    def test_client_error_never_retries(self, monkeypatch):
        monkeypatch.setenv(KEY_ENV, SECRET)
        calls = []

        def handler(request):
            calls.append(request)
            return httpx.Response(401, text="who are you")

        provider = RemoteProvider(_config(), transport=httpx.MockTransport(handler))
        with pytest.raises(ProviderRejected) as exc_info:
            provider.complete(build_reformulation_prompt("x"))
        assert len(calls) == 1
        assert exc_info.value.status == 401
        assert "who are you" in exc_info.value.body_excerpt

    def test_empty_completion_rejected(self, monkeypatch):
        monkeypatch.setenv(KEY_ENV, SECRET)
        provider = RemoteProvider(
            _config(),
            transport=httpx.MockTransport(
                lambda request: httpx.Response(200, json=_success_body("  "))
            ),
        )
        with pytest.raises(EmptyCompletion):
            provider.complete(build_reformulation_prompt("x"))

    def test_secret_never_logged_or_repred(self, monkeypatch, caplog):
        monkeypatch.setenv(KEY_ENV, SECRET)
        config = _config()
        provider = RemoteProvider(
            config,
            transport=httpx.MockTransport(
                lambda request: httpx.Response(200, json=_success_body("fine"))
            ),
        )
        with caplog.at_level(logging.DEBUG):
            provider.complete(build_reformulation_prompt("x"))
            try:
                RemoteProvider(
                    _config(max_retries=0),
                    transport=httpx.MockTransport(
                        lambda request: httpx.Response(500, text="err")
                    ),
                    sleeper=lambda _: None,
                ).complete(build_reformulation_prompt("x"))
            except ProviderRejected as exc:
                assert SECRET not in str(exc)
        for record in caplog.records:
            assert SECRET not in record.getMessage()
        assert SECRET not in repr(config)
        assert SECRET not in repr(provider.__dict__.get("config"))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ProviderConfig(
                endpoint_url="https://x",
                model_id="m",
                max_context_tokens=100,
                max_completion_tokens=100,
            )
        with pytest.raises(ValueError):
            ProviderConfig(endpoint_url="https://x", model_id="m", temperature=-1)


class TestCompletionResult:
    def test_text_must_be_non_empty(self):
        with pytest.raises(ValueError):
            CompletionResult("", 0.0, ProviderTag.SCRIPTED)
