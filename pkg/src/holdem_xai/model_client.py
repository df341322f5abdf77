"""Chat-completion client with a deterministic scripted stand-in.

``HTTPBackend`` posts a minimal chat-completion request (model, messages,
temperature, top_p) to ``{base_url}/chat/completions``. ``ScriptedBackend``
answers from fixtures or a policy callback so whole runs can execute offline
and reproduce byte-for-byte.
"""

from __future__ import annotations

import hashlib
import logging
import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Hashable, Mapping, Protocol

import httpx
import numpy as np

from .config import EndpointSpec, GameConfig, RunManifest

logger = logging.getLogger(__name__)

ROLES = ("decision", "profile", "oracle_first_person", "oracle_second_person")


class TransportError(RuntimeError):
    """The endpoint could not produce a completion after all retries."""


@dataclass(frozen=True)
class Completion:
    text: str
    model_name: str
    prompt_hash: str
    latency_s: float
    prompt_tokens: int
    completion_tokens: int
    retry_count: int

    def usage(self) -> dict:
        return {
            "latency_s": self.latency_s,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "retry_count": self.retry_count,
        }


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class Backend(Protocol):
    model_name: str

    def complete(self, prompt: str, role: str, sample_id: Hashable = 0) -> Completion: ...


@dataclass(frozen=True)
class ModelEndpoint:
    base_url: str
    model_name: str
    api_key_ref: str | None = None  # name of the environment variable holding the key
    temperature: float = 0.2
    top_p: float = 1.0
    timeout: float = 60.0
    max_retries: int = 3
    max_in_flight: int = 4

    @classmethod
    def from_spec(cls, spec: EndpointSpec, game: GameConfig) -> "ModelEndpoint":
        if spec.base_url is None:
            raise ValueError(f"{spec.model_name} has no base_url")
        return cls(spec.base_url, spec.model_name, spec.api_key_env, game.temperature, game.top_p,
                   spec.timeout, spec.max_retries, spec.max_in_flight)


class HTTPBackend:
    """Sends prompts to a chat-completion endpoint with retries and a concurrency cap."""

    backoff_base = 0.5

    def __init__(
        self,
        endpoint: ModelEndpoint,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.model_name = endpoint.model_name
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(endpoint.max_in_flight)
        self._lock = threading.Lock()
        self.in_flight = 0
        self.peak_in_flight = 0
        headers = {}
        if endpoint.api_key_ref:
            key = os.environ.get(endpoint.api_key_ref)
            if key is None:
                raise TransportError(f"environment variable {endpoint.api_key_ref} is not set")
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(
            base_url=endpoint.base_url, headers=headers, timeout=endpoint.timeout, transport=transport
        )

    def _post(self, payload: dict) -> httpx.Response:
        with self._slots:
            with self._lock:
                self.in_flight += 1
                self.peak_in_flight = max(self.peak_in_flight, self.in_flight)
            try:
                return self._client.post("/chat/completions", json=payload)
            finally:
                with self._lock:
                    self.in_flight -= 1

    def complete(self, prompt: str, role: str, sample_id: Hashable = 0) -> Completion:
        ep = self.endpoint
        payload = {
            "model": ep.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": ep.temperature,
            "top_p": ep.top_p,
        }
        started = time.monotonic()
        last_error = "no attempt made"
        for attempt in range(ep.max_retries + 1):
            if attempt:
                self._sleep(self.backoff_base * 2 ** (attempt - 1))
            try:
                resp = self._post(payload)
            except httpx.HTTPError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                logger.warning("%s attempt %d failed: %s", ep.model_name, attempt + 1, last_error)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                logger.warning("%s attempt %d failed: %s", ep.model_name, attempt + 1, last_error)
                continue
            if resp.status_code >= 400:
                raise TransportError(f"{ep.model_name}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                data = resp.json()
                text = data["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise TransportError(f"{ep.model_name}: malformed response body ({exc})") from None
            if not isinstance(text, str):
                raise TransportError(f"{ep.model_name}: completion content is not text")
            usage = data.get("usage") or {}
            return Completion(
                text=text,
                model_name=ep.model_name,
                prompt_hash=sha256_text(prompt),
                latency_s=time.monotonic() - started,
                prompt_tokens=int(usage.get("prompt_tokens", 0)),
                completion_tokens=int(usage.get("completion_tokens", 0)),
                retry_count=attempt,
            )
        raise TransportError(f"{ep.model_name}: gave up after {ep.max_retries + 1} attempts ({last_error})")

    def close(self) -> None:
        self._client.close()


Policy = Callable[[str, str, np.random.Generator], str]


def sample_rng(seed: int, model_name: str, role: str, prompt_hash: str, sample_id: Hashable) -> np.random.Generator:
    """Generator fixed by everything that identifies one scripted sample."""
    material = f"{seed}|{model_name}|{role}|{prompt_hash}|{sample_id!r}".encode()
    return np.random.default_rng(int.from_bytes(hashlib.sha256(material).digest()[:8], "little"))


class ScriptedBackend:
    """Offline backend: fixture lookup by (role, prompt hash), else a policy callback.

    Latency is reported as 0.0 so that traces from scripted runs are byte-stable.
    """

    def __init__(
        self,
        model_name: str,
        policy: Policy | None = None,
        fixtures: Mapping[tuple[str, str], str] | None = None,
        seed: int = 0,
    ):
        if policy is None and not fixtures:
            raise ValueError("scripted backend needs a policy or fixtures")
        self.model_name = model_name
        self.policy = policy
        self.fixtures = dict(fixtures or {})
        self.seed = seed
        self.calls = 0

    def complete(self, prompt: str, role: str, sample_id: Hashable = 0) -> Completion:
        h = sha256_text(prompt)
        self.calls += 1
        text = self.fixtures.get((role, h))
        if text is None:
            if self.policy is None:
                raise TransportError(f"{self.model_name}: no fixture for role {role} and hash {h[:12]}")
            text = self.policy(prompt, role, sample_rng(self.seed, self.model_name, role, h, sample_id))
        return Completion(text, self.model_name, h, 0.0, len(prompt.split()), len(text.split()), 0)


class ModelClient:
    """Routes requests to the backend registered for each model name."""

    def __init__(self, backends: Mapping[str, Backend]):
        self.backends = dict(backends)

    def complete(self, model_name: str, prompt: str, role: str, sample_id: Hashable = 0) -> Completion:
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        try:
            backend = self.backends[model_name]
        except KeyError:
            raise TransportError(f"no backend for model {model_name!r}") from None
        before = sha256_text(prompt)
        out = backend.complete(prompt, role, sample_id)
        if not sha256_text(prompt) == before == out.prompt_hash:
            raise RuntimeError(f"{model_name}: prompt changed while in flight")
        return out


def build_client(manifest: RunManifest, offline: bool | None = None) -> ModelClient:
    """Backends for every endpoint in the manifest.

    With ``offline`` set, endpoints that need the network are left out, so
    any attempt to use them surfaces as a transport error instead of a request.
    """
    from .scripted import POLICIES

    offline = manifest.offline if offline is None else offline
    backends: dict[str, Backend] = {}
    for spec in manifest.endpoints:
        if spec.base_url is None:
            if spec.scripted_policy not in POLICIES:
                raise ValueError(f"{spec.model_name}: unknown scripted policy {spec.scripted_policy!r}")
            backends[spec.model_name] = ScriptedBackend(
                spec.model_name, POLICIES[spec.scripted_policy], seed=manifest.game.rng_seed
            )
        elif not offline:
            backends[spec.model_name] = HTTPBackend(ModelEndpoint.from_spec(spec, manifest.game))
    return ModelClient(backends)
