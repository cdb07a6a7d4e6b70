"""Model gateway: an OpenAI-compatible chat-completions client and a scripted mock.

Credentials and the default endpoint come from the environment
(STATEREP_API_KEY or OPENAI_API_KEY, STATEREP_ENDPOINT_URL), never from
config files.
"""

from __future__ import annotations

import base64
import enum
import logging
import os
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable

import httpx

from .core import ConfigError, ProtocolError, StateRepError
from .templates import PromptBundle, TemplateId

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.2
DEFAULT_TOP_P = 0.95
DEFAULT_MAX_OUTPUT_TOKENS = 512


class TransportError(StateRepError):
    """The endpoint could not be reached or kept failing; the episode is an incident."""


class Backend(str, enum.Enum):
    REMOTE = "Remote"
    MOCK = "Mock"


@dataclass(frozen=True)
class ModelConfig:
    backend: Backend = Backend.MOCK
    model_name: str = "mock"
    endpoint_url: str | None = None
    temperature: float = DEFAULT_TEMPERATURE
    top_p: float = DEFAULT_TOP_P
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    timeout: float = 60.0
    max_retries: int = 3
    backoff_base: float = 1.0
    max_in_flight: int = 8
    mock_policy: str | None = None

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "backend", Backend(self.backend))
        except ValueError:
            raise ConfigError(f"model.backend: {self.backend!r} is not Remote or Mock") from None
        if self.temperature < 0:
            raise ConfigError("model.temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ConfigError("model.top_p must be in (0, 1]")
        if self.max_output_tokens < 1 or self.max_retries < 0 or self.max_in_flight < 1:
            raise ConfigError("model.max_output_tokens and max_in_flight must be >= 1, max_retries >= 0")
        if self.backend is Backend.MOCK and not self.mock_policy:
            raise ConfigError("model.mock_policy is required for the Mock backend")

    def resolved_endpoint(self) -> str:
        url = self.endpoint_url or os.environ.get("STATEREP_ENDPOINT_URL")
        if not url:
            raise ConfigError("model.endpoint_url (or STATEREP_ENDPOINT_URL) is required for the Remote backend")
        return url.rstrip("/")


@dataclass(frozen=True)
class ModelReply:
    text: str
    input_tokens: int
    output_tokens: int
    latency: float = 0.0
    attempt_count: int = 1
    approximate_tokens: bool = False


def whitespace_count(text: str) -> int:
    return len(text.split())


MockPolicy = Callable[[PromptBundle], str]
_MOCKS: dict[str, MockPolicy] = {}
_MOCK_LOCK = threading.Lock()


def register_mock_policy(name: str, policy: MockPolicy) -> str:
    """Register a scripted policy; the returned name is the handle for ModelConfig.mock_policy."""
    with _MOCK_LOCK:
        if name in _MOCKS:
            raise ConfigError(f"mock policy {name!r} already registered")
        _MOCKS[name] = policy
    return name


def unregister_mock_policy(name: str) -> None:
    with _MOCK_LOCK:
        _MOCKS.pop(name, None)


def mock_policy(name: str) -> MockPolicy:
    from . import mocks  # noqa: F401  (registers the built-in policies)

    try:
        return _MOCKS[name]
    except KeyError:
        raise ConfigError(f"unknown mock policy {name!r}; registered: {sorted(_MOCKS)}") from None


def build_request(config: ModelConfig, bundle: PromptBundle) -> dict[str, Any]:
    """Chat-completions request body for one prompt bundle."""
    if bundle.image is not None:
        data_uri = "data:image/png;base64," + base64.b64encode(bundle.image).decode("ascii")
        content: Any = [
            {"type": "text", "text": bundle.user_text},
            {"type": "image_url", "image_url": {"url": data_uri}},
        ]
    else:
        content = bundle.user_text
    messages = [{"role": "system", "content": bundle.system_text}] if bundle.system_text else []
    messages.append({"role": "user", "content": content})
    return {
        "model": config.model_name,
        "messages": messages,
        "temperature": config.temperature,
        "top_p": config.top_p,
        "max_tokens": config.max_output_tokens,
    }


def parse_response(body: Any, bundle: PromptBundle) -> tuple[str, int, int, bool]:
    """(text, input_tokens, output_tokens, approximate) from a response body."""
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise ProtocolError("response lacks choices[0].message.content") from None
    if isinstance(content, list):
        content = "".join(p.get("text", "") for p in content if isinstance(p, dict))
    if not isinstance(content, str):
        raise ProtocolError("message content is not text")
    usage = body.get("usage") if isinstance(body, dict) else None
    if isinstance(usage, dict) and isinstance(usage.get("prompt_tokens"), int):
        out = usage.get("completion_tokens")
        return content, usage["prompt_tokens"], out if isinstance(out, int) else whitespace_count(content), False
    prompt_tokens = whitespace_count(bundle.system_text) + whitespace_count(bundle.user_text)
    return content, prompt_tokens, whitespace_count(content), True


def _transient(status: int) -> bool:
    return status == 429 or status >= 500


class Gateway:
    """Thread-safe; a semaphore caps the number of calls in flight."""

    def __init__(
        self,
        config: ModelConfig,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(config.max_in_flight)
        self._client: httpx.Client | None = None
        self._transport = transport
        self._policy = None
        if config.backend is Backend.MOCK:
            policy = mock_policy(config.mock_policy)
            # stateful policies expose fresh() so each gateway gets its own counters
            self._policy = policy.fresh() if hasattr(policy, "fresh") else policy

    @property
    def policy(self) -> MockPolicy | None:
        """This gateway's own mock policy instance (None for Remote)."""
        return self._policy

    def close(self) -> None:
        if self._client is not None:
            self._client.close()

    def __enter__(self) -> Gateway:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def chat(self, bundle: PromptBundle) -> ModelReply:
        with self._slots:
            if self._policy is not None:
                return self._mock_chat(bundle)
            return self._remote_chat(bundle)

    def _mock_chat(self, bundle: PromptBundle) -> ModelReply:
        assert self._policy is not None
        start = time.perf_counter()
        text = self._policy(bundle)
        return ModelReply(
            text,
            whitespace_count(bundle.system_text) + whitespace_count(bundle.user_text),
            whitespace_count(text),
            time.perf_counter() - start,
        )

    def _http(self) -> httpx.Client:
        if self._client is None:
            headers = {"Content-Type": "application/json"}
            key = os.environ.get("STATEREP_API_KEY") or os.environ.get("OPENAI_API_KEY")
            if key:
                headers["Authorization"] = f"Bearer {key}"
            self._client = httpx.Client(timeout=self.config.timeout, headers=headers, transport=self._transport)
        return self._client

    def _remote_chat(self, bundle: PromptBundle) -> ModelReply:
        url = self.config.resolved_endpoint() + "/chat/completions"
        payload = build_request(self.config, bundle)
        start = time.perf_counter()
        last_error = "no attempt made"
        for attempt in range(1, self.config.max_retries + 2):
            try:
                resp = self._http().post(url, json=payload)
            except httpx.TransportError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
            else:
                if resp.status_code == 200:
                    try:
                        body = resp.json()
                    except ValueError:
                        raise ProtocolError("response body is not JSON") from None
                    text, n_in, n_out, approx = parse_response(body, bundle)
                    if approx:
                        log.info("endpoint returned no usage block; token counts are whitespace approximations")
                    return ModelReply(text, n_in, n_out, time.perf_counter() - start, attempt, approx)
                last_error = f"HTTP {resp.status_code}"
                if not _transient(resp.status_code):
                    raise TransportError(f"{url}: {last_error} {resp.text[:200]}")
            if attempt <= self.config.max_retries:
                log.warning("attempt %d to %s failed (%s); retrying", attempt, url, last_error)
                self._sleep(self.config.backoff_base * 2 ** (attempt - 1))
        raise TransportError(f"{url}: gave up after {self.config.max_retries + 1} attempts ({last_error})")


def summariser_reply(bundle: PromptBundle, text: str = "scripted summary.") -> str | None:
    """Convenience for mock policies: a well-formed summariser reply, or None for agent prompts."""
    if bundle.template_id is TemplateId.SUMMARISER:
        return f"Summary: {text}"
    return None
