"""Chat-completions client used as a candidate generator.

The wire format is the common ``/chat/completions`` shape: a JSON body with
``model``, ``messages`` and sampling fields; the reply carries
``choices[0].message.content`` and ``finish_reason``.  A ``finish_reason`` of
``"length"`` means the output-token budget cut the answer short.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any

import httpx

from ..harness import DeadlineExceeded, TokenBudgetExceeded, TransportError

log = logging.getLogger(__name__)
audit_log = logging.getLogger("llmsynth.audit")


@dataclass
class LlmConfig:
    endpoint: str
    model_name: str
    temperature: float = 0.8
    top_p: float = 0.95
    top_k: int | None = 50
    max_output_tokens: int | None = None
    reasoning_effort: str | None = None
    api_key_env: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must lie in (0, 1]")
        if self.reasoning_effort not in (None, "low", "medium", "high"):
            raise ValueError(f"bad reasoning_effort {self.reasoning_effort!r}")


@dataclass
class Completion:
    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    reasoning_tokens: int | None = None


def request_body(prompt: str, config: LlmConfig) -> dict:
    system = getattr(prompt, "system", "")
    user = getattr(prompt, "user", str(prompt))
    messages = []
    if system:
        messages.append({"role": "system", "content": system})
    messages.append({"role": "user", "content": user})
    body: dict[str, Any] = {
        "model": config.model_name,
        "messages": messages,
        "temperature": config.temperature,
        "top_p": config.top_p,
    }
    if config.top_k is not None:
        body["top_k"] = config.top_k
    if config.max_output_tokens is not None:
        body["max_tokens"] = config.max_output_tokens
    if config.reasoning_effort is not None:
        body["reasoning_effort"] = config.reasoning_effort
    body.update(config.extra)
    return body


def llm_generate(prompt: str, config: LlmConfig, deadline: float, *,
                 client: httpx.Client | None = None) -> Completion:
    """Send one chat-completion request and return the assistant text.

    ``deadline`` is the number of seconds the call may take.
    """
    if deadline <= 0:
        raise DeadlineExceeded("no time left for generation")
    headers = {"Content-Type": "application/json"}
    if config.api_key_env:
        token = os.environ.get(config.api_key_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
    body = request_body(prompt, config)
    audit_log.debug("request %s", json.dumps(body))
    own = client is None
    client = client or httpx.Client()
    try:
        resp = client.post(config.endpoint, json=body, headers=headers, timeout=deadline)
    except httpx.TimeoutException as exc:
        raise DeadlineExceeded(f"no response within {deadline:.1f}s") from exc
    except httpx.HTTPError as exc:
        raise TransportError(f"request to {config.endpoint} failed: {exc}") from exc
    finally:
        if own:
            client.close()
    audit_log.debug("response %s %s", resp.status_code, resp.text)
    if resp.status_code >= 400:
        raise TransportError(f"HTTP {resp.status_code} from {config.endpoint}: {resp.text[:200]}")
    try:
        payload = resp.json()
        choice = payload["choices"][0]
        text = choice["message"].get("content") or ""
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise TransportError(f"unexpected response shape: {exc}") from exc
    usage = payload.get("usage") or {}
    details = usage.get("completion_tokens_details") or {}
    if choice.get("finish_reason") == "length":
        raise TokenBudgetExceeded(partial=text)
    return Completion(text, usage.get("prompt_tokens"), usage.get("completion_tokens"),
                      details.get("reasoning_tokens"))


class LlmGenerator:
    """Generator handle backed by :func:`llm_generate`; keeps token totals."""

    def __init__(self, config: LlmConfig):
        self.config = config
        self.calls = 0
        self.prompt_tokens = 0
        self.completion_tokens = 0

    def generate(self, prompt: str, timeout: float) -> str:
        self.calls += 1
        c = llm_generate(prompt, self.config, timeout)
        self.prompt_tokens += c.prompt_tokens or 0
        self.completion_tokens += c.completion_tokens or 0
        return c.text
