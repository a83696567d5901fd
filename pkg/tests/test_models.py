import json
import os
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from seqpat import pcfg
from seqpat.errors import ConfigError, TransportError
from seqpat.models import (
    CallableModel,
    CompletionRequest,
    ModelSpec,
    PcfgSearchModel,
    PeriodRepeatModel,
    RandomPolicyModel,
    RemoteModel,
    ScriptedModel,
    complete,
    score_logprob_choice,
)


class TestCompletionRequest:
    def test_validation(self):
        with pytest.raises(ConfigError):
            CompletionRequest(prompt="")
        with pytest.raises(ConfigError):
            CompletionRequest(prompt="x", max_tokens=0)
        with pytest.raises(ConfigError):
            CompletionRequest(prompt="x", stop=(";",) * 5)


class TestLocalModels:
    def test_scripted_table(self):
        model = ScriptedModel({"p": "c"})
        assert complete(model, CompletionRequest(prompt="p")) == "c"
        assert complete(model, CompletionRequest(prompt="other")) == ""

    def test_stop_truncation(self):
        model = ScriptedModel({"p": "2010 慶; junk"})
        assert complete(model, CompletionRequest(prompt="p", stop=(";",))) == "2010 慶"

    def test_random_policy_deterministic(self):
        a = RandomPolicyModel(actions=(1, 2), seed=5)
        b = RandomPolicyModel(actions=(1, 2), seed=5)
        request = CompletionRequest(prompt="x")
        assert [a.generate(request) for _ in range(50)] == [b.generate(request) for _ in range(50)]

    def test_random_policy_honors_request_seed(self):
        model = RandomPolicyModel(actions=(1, 2, 3, 4, 5), seed=0)
        seeded = CompletionRequest(prompt="x", seed=42)
        assert model.generate(seeded) == model.generate(seeded)
        # and the internal stream is untouched by seeded requests
        fresh = RandomPolicyModel(actions=(1, 2, 3, 4, 5), seed=0)
        plain = CompletionRequest(prompt="x")
        model.generate(seeded)
        assert model.generate(plain) == fresh.generate(plain)

    def test_period_repeat_cycles_tail(self):
        model = PeriodRepeatModel(period=3, emit_values=6)
        out = complete(model, CompletionRequest(prompt="9, 1, 2, 3, "))
        assert out == "1, 2, 3, 1, 2, 3"

    def test_pcfg_searcher_matches_predict_with_search(self):
        suite = pcfg.make_suite(k_set=(4,), w_set=(0, 1, 3), n_per_cell=34, seed=77)
        model = PcfgSearchModel(max_ops=3)
        for task in suite[:100]:
            prompt = pcfg.build_prompt(task)
            out = complete(model, CompletionRequest(prompt=prompt, max_tokens=64, stop=(";",)))
            expected = pcfg.predict_with_search(task, max_ops=3)
            assert pcfg.parse_completion(out) == expected

    def test_pcfg_searcher_empty_on_garbage(self):
        model = PcfgSearchModel()
        assert complete(model, CompletionRequest(prompt="not a prompt")) == ""


class TestScoreLogprobChoice:
    def test_single_candidate(self):
        assert score_logprob_choice(ScriptedModel({}), "p", ["only"]) == "only"

    def test_argmax_with_scoring_backend(self):
        class Scorer(ScriptedModel):
            def score_candidates(self, prompt, candidates):
                return [len(c) for c in candidates]

        assert score_logprob_choice(Scorer({}), "p", ["a", "bbb", "cc"]) == "bbb"

    def test_fallback_equals_complete_then_match(self):
        model = ScriptedModel({"p": " 2 rest"})
        assert score_logprob_choice(model, "p", ["1", "2", "3"]) == "2"
        # no-match falls back to the first candidate
        empty = ScriptedModel({})
        assert score_logprob_choice(empty, "p", ["1", "2"]) == "1"

    def test_empty_candidates_rejected(self):
        with pytest.raises(ConfigError):
            score_logprob_choice(ScriptedModel({}), "p", [])


class _Handler(BaseHTTPRequestHandler):
    fail_times = 0
    saw_headers = []
    saw_payloads = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).saw_payloads.append(body)
        type(self).saw_headers.append(dict(self.headers))
        if type(self).fail_times > 0:
            type(self).fail_times -= 1
            self.send_response(500)
            self.end_headers()
            return
        out = json.dumps({"choices": [{"text": " 4 2;"}]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(out)))
        self.end_headers()
        self.wfile.write(out)

    def log_message(self, *args):
        pass


@pytest.fixture()
def http_endpoint():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _Handler.fail_times = 0
    _Handler.saw_headers = []
    _Handler.saw_payloads = []
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


class TestRemoteModel:
    def make_model(self, base, **kw):
        kw.setdefault("retries", 3)
        kw.setdefault("backoff_s", 0.01)
        kw.setdefault("rate_limit_rps", 1000.0)
        return RemoteModel(base_url=base, model_name="m-test", path="/v1/completions", **kw)

    def test_completion_and_payload(self, http_endpoint):
        model = self.make_model(http_endpoint)
        out = complete(model, CompletionRequest(prompt="1, 2,", max_tokens=8, stop=(";",)))
        assert out == " 4 2"
        payload = _Handler.saw_payloads[-1]
        assert payload["model"] == "m-test"
        assert payload["prompt"] == "1, 2,"
        assert payload["stop"] == [";"]

    def test_retries_then_succeeds(self, http_endpoint):
        _Handler.fail_times = 2
        model = self.make_model(http_endpoint)
        out = complete(model, CompletionRequest(prompt="x"))
        assert out == " 4 2;"
        assert len(_Handler.saw_payloads) == 3

    def test_exhaustion_raises_transport_error(self, http_endpoint):
        _Handler.fail_times = 10
        model = self.make_model(http_endpoint, retries=2)
        with pytest.raises(TransportError):
            complete(model, CompletionRequest(prompt="x"))

    def test_credential_from_env_only(self, http_endpoint, monkeypatch):
        monkeypatch.setenv("TEST_SEQPAT_KEY", "s3cret")
        model = self.make_model(http_endpoint, credential_env="TEST_SEQPAT_KEY")
        complete(model, CompletionRequest(prompt="x"))
        assert _Handler.saw_headers[-1]["Authorization"] == "Bearer s3cret"
        assert "s3cret" not in repr(vars(model))

    def test_no_header_without_credential(self, http_endpoint, monkeypatch):
        monkeypatch.delenv("TEST_SEQPAT_KEY", raising=False)
        model = self.make_model(http_endpoint, credential_env="TEST_SEQPAT_KEY")
        complete(model, CompletionRequest(prompt="x"))
        assert "Authorization" not in _Handler.saw_headers[-1]


class TestModelSpec:
    def test_known_kinds_build(self):
        assert ModelSpec(kind="mock_scripted").build()
        assert ModelSpec(kind="random_policy").build()
        assert ModelSpec(kind="pcfg_searcher").build()
        assert ModelSpec(kind="period_repeat").build()

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            ModelSpec(kind="telepathy").build()

    def test_oracle_requires_harness_oracle(self):
        with pytest.raises(ConfigError):
            ModelSpec(kind="mock_oracle").build()
        oracle = ScriptedModel({})
        assert ModelSpec(kind="mock_oracle").build(oracle=oracle) is oracle

    def test_remote_requires_endpoint(self):
        with pytest.raises(ConfigError):
            ModelSpec(kind="remote").build()

    def test_public_config_has_no_secret_values(self, monkeypatch):
        monkeypatch.setenv("MY_KEY_VAR", "hunter2")
        spec = ModelSpec(kind="remote", base_url="http://x", model_name="m",
                         credential_env="MY_KEY_VAR")
        text = json.dumps(spec.public_config())
        assert "hunter2" not in text
        assert "MY_KEY_VAR" in text  # the variable NAME is fine to record


class TestExternalTokenCounter:
    def test_counts_via_subprocess(self):
        from seqpat.models import external_token_counter

        counter = external_token_counter(
            "python3 -c \"import sys; print(len(sys.stdin.read().split()))\""
        )
        assert counter("one two three") == 3
        assert counter("") == 0
