"""Client for an OpenAI-compatible chat-completion endpoint."""
from __future__ import annotations

import base64
import logging
import os
import time
from dataclasses import dataclass

import httpx

from ..errors import ConfigError, ProtocolError, TransportError

log = logging.getLogger(__name__)

ENV_URL, ENV_MODEL, ENV_TOKEN = "MMDRIVE_GEN_URL", "MMDRIVE_GEN_MODEL", "MMDRIVE_GEN_TOKEN"


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str
    token: str | None = None
    timeout: float = 30.0
    max_attempts: int = 3
    backoff_base: float = 0.5
    backoff_factor: float = 2.0

    @classmethod
    def from_env(cls, env=None, **overrides):
        env = os.environ if env is None else env
        vals = {"base_url": env.get(ENV_URL), "model": env.get(ENV_MODEL), "token": env.get(ENV_TOKEN)}
        vals.update({k: v for k, v in overrides.items() if v is not None})
        missing = [k for k in ("base_url", "model") if not vals.get(k)]
        if missing:
            raise ConfigError(f"endpoint not configured: set {', '.join(missing)} "
                              f"(env {ENV_URL} / {ENV_MODEL})")
        return cls(**vals)

    def delay(self, attempt: int) -> float:
        """Sleep before retry number ``attempt`` (1-based): 0.5 s, 1 s, 2 s, ..."""
        return self.backoff_base * self.backoff_factor ** (attempt - 1)


def _mime(image: bytes) -> str:
    if image.startswith(b"\x89PNG"):
        return "image/png"
    if image.startswith(b"\xff\xd8"):
        return "image/jpeg"
    return "application/octet-stream"


def build_request(model: str, prompt: str, image: bytes | None = None) -> dict:
    if image is None:
        content = prompt
    else:
        url = f"data:{_mime(image)};base64,{base64.b64encode(image).decode()}"
        content = [{"type": "text", "text": prompt}, {"type": "image_url", "image_url": {"url": url}}]
    return {"model": model, "messages": [{"role": "user", "content": content}]}


def parse_response(body) -> str:
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise ProtocolError("response has no choices[0].message.content") from None
    if not isinstance(content, str):
        raise ProtocolError(f"message content is {type(content).__name__}, expected text")
    return content


def http_generate(config: EndpointConfig, prompt: str, image: bytes | None = None,
                  *, client: httpx.Client | None = None, sleep=time.sleep) -> str:
    """POST one chat completion; retry 5xx, timeouts and connection failures with exponential backoff."""
    url = config.base_url.rstrip("/") + "/chat/completions"
    headers = {"Authorization": f"Bearer {config.token}"} if config.token else {}
    payload = build_request(config.model, prompt, image)
    own = client is None
    client = client or httpx.Client(timeout=config.timeout)
    status, reason = None, ""
    try:
        for attempt in range(1, config.max_attempts + 1):
            if attempt > 1:
                sleep(config.delay(attempt - 1))
            try:
                resp = client.post(url, json=payload, headers=headers)
            except (httpx.TimeoutException, httpx.TransportError) as e:
                status, reason = None, f"{type(e).__name__}: {e}"
                log.warning("attempt %d/%d failed: %s", attempt, config.max_attempts, reason)
                continue
            if resp.status_code >= 500:
                status, reason = resp.status_code, resp.text[:200]
                log.warning("attempt %d/%d: HTTP %d", attempt, config.max_attempts, status)
                continue
            if resp.status_code >= 300:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}",
                                     status=resp.status_code, attempts=attempt)
            try:
                body = resp.json()
            except ValueError:
                raise ProtocolError("response body is not JSON") from None
            return parse_response(body)
    finally:
        if own:
            client.close()
    raise TransportError(f"gave up after {config.max_attempts} attempts: {reason}",
                         status=status, attempts=config.max_attempts)


class HttpClient:
    """GenerationClient backed by :func:`http_generate`; one pooled connection per instance."""

    def __init__(self, config: EndpointConfig):
        self.config = config
        self.client_id = f"http:{config.model}"
        self._http = httpx.Client(timeout=config.timeout)

    def generate(self, prompt: str, image: bytes | None = None) -> str:
        return http_generate(self.config, prompt, image, client=self._http)

    def close(self):
        self._http.close()
