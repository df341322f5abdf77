import json
import threading

import httpx
import pytest

from holdem_xai.model_client import (
    HTTPBackend,
    ModelClient,
    ModelEndpoint,
    ScriptedBackend,
    TransportError,
    sample_rng,
    sha256_text,
)


def endpoint(**kw):
    base = dict(base_url="http://model.test/v1", model_name="m1", max_retries=3)
    base.update(kw)
    return ModelEndpoint(**base)


def reply(text="hello", **usage):
    return httpx.Response(200, json={"choices": [{"message": {"content": text}}], "usage": usage})


def test_request_payload_and_usage():
    seen = []

    def handler(request):
        seen.append((request.url.path, json.loads(request.content)))
        return reply("ok", prompt_tokens=7, completion_tokens=2)

    be = HTTPBackend(endpoint(temperature=0.2, top_p=0.9), transport=httpx.MockTransport(handler))
    out = be.complete("prompt text", "decision")
    path, body = seen[0]
    assert path == "/v1/chat/completions"
    assert body == {"model": "m1", "messages": [{"role": "user", "content": "prompt text"}],
                    "temperature": 0.2, "top_p": 0.9}
    assert out.text == "ok" and out.prompt_tokens == 7 and out.completion_tokens == 2
    assert out.retry_count == 0 and out.prompt_hash == sha256_text("prompt text")


def test_retries_on_429_and_5xx_with_backoff():
    codes = iter([429, 503, 200])
    sleeps = []

    def handler(request):
        code = next(codes)
        return reply("done") if code == 200 else httpx.Response(code)

    be = HTTPBackend(endpoint(), transport=httpx.MockTransport(handler), sleep=sleeps.append)
    out = be.complete("p", "decision")
    assert out.text == "done" and out.retry_count == 2
    assert sleeps == [0.5, 1.0]


def test_retries_on_network_errors_then_gives_up():
    calls = []

    def handler(request):
        calls.append(1)
        raise httpx.ConnectError("refused", request=request)

    be = HTTPBackend(endpoint(max_retries=2), transport=httpx.MockTransport(handler), sleep=lambda s: None)
    with pytest.raises(TransportError, match="gave up after 3 attempts"):
        be.complete("p", "decision")
    assert len(calls) == 3


def test_client_errors_are_not_retried():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(401, text="bad key")

    be = HTTPBackend(endpoint(), transport=httpx.MockTransport(handler), sleep=lambda s: None)
    with pytest.raises(TransportError, match="HTTP 401"):
        be.complete("p", "decision")
    assert len(calls) == 1


def test_malformed_body_is_a_transport_error():
    be = HTTPBackend(endpoint(), transport=httpx.MockTransport(lambda r: httpx.Response(200, json={"x": 1})))
    with pytest.raises(TransportError, match="malformed"):
        be.complete("p", "decision")


def test_api_key_comes_from_environment(monkeypatch):
    seen = []

    def handler(request):
        seen.append(request.headers.get("authorization"))
        return reply()

    monkeypatch.setenv("HOLDEM_TEST_KEY", "sekret")
    HTTPBackend(endpoint(api_key_ref="HOLDEM_TEST_KEY"), transport=httpx.MockTransport(handler)).complete("p", "decision")
    assert seen == ["Bearer sekret"]
    monkeypatch.delenv("HOLDEM_TEST_KEY")
    with pytest.raises(TransportError):
        HTTPBackend(endpoint(api_key_ref="HOLDEM_TEST_KEY"))


def test_in_flight_cap_is_respected():
    gate = threading.Event()

    def handler(request):
        gate.wait(2.0)
        return reply()

    be = HTTPBackend(endpoint(max_in_flight=2), transport=httpx.MockTransport(handler))
    threads = [threading.Thread(target=be.complete, args=(f"p{i}", "decision")) for i in range(6)]
    for t in threads:
        t.start()
    threading.Timer(0.2, gate.set).start()
    for t in threads:
        t.join()
    assert be.peak_in_flight == 2


def test_scripted_backend_is_deterministic_per_sample():
    def policy(prompt, role, rng):
        return f"{role}:{rng.integers(1_000_000)}"

    a = ScriptedBackend("s", policy, seed=3)
    b = ScriptedBackend("s", policy, seed=3)
    assert a.complete("x", "decision", 1).text == b.complete("x", "decision", 1).text
    assert a.complete("x", "decision", 1).text != a.complete("x", "decision", 2).text
    assert a.complete("x", "decision").latency_s == 0.0


def test_sample_rng_separates_roles_and_samples():
    h = sha256_text("p")
    draws = {sample_rng(0, "m", role, h, sid).integers(2**62)
             for role in ("decision", "profile") for sid in (("reo", 0), ("rei", 0))}
    assert len(draws) == 4


def test_scripted_fixtures_take_precedence():
    be = ScriptedBackend("s", fixtures={("decision", sha256_text("p")): "fixed"})
    assert be.complete("p", "decision").text == "fixed"
    with pytest.raises(TransportError):
        be.complete("other", "decision")
    with pytest.raises(ValueError):
        ScriptedBackend("s")


def test_client_routes_and_validates():
    client = ModelClient({"s": ScriptedBackend("s", lambda p, r, g: "x")})
    assert client.complete("s", "p", "oracle_first_person").model_name == "s"
    with pytest.raises(TransportError):
        client.complete("missing", "p", "decision")
    with pytest.raises(ValueError):
        client.complete("s", "p", "chitchat")
