"""Text-generation clients: the contract, a deterministic mock, replay/record and a disk cache."""
from __future__ import annotations

import hashlib
import json
import re
import threading
from pathlib import Path
from typing import Protocol, runtime_checkable

from ..errors import ProtocolError

VIEW_TAG = re.compile(r"\[view:\s*([^\]]+?)\s*\]")
DESC_BLOCK = re.compile(r"\[descriptions\]\n(.*?)\n?\[/descriptions\]", re.S)


@runtime_checkable
class GenerationClient(Protocol):
    client_id: str

    def generate(self, prompt: str, image: bytes | None = None) -> str: ...


def content_key(prompt: str, image: bytes | None, model_id: str) -> str:
    """sha256 over length-prefixed (image, prompt, model) so no two inputs collide by concatenation."""
    h = hashlib.sha256()
    for part in (image or b"", prompt.encode(), model_id.encode()):
        h.update(len(part).to_bytes(8, "little"))
        h.update(part)
    return h.hexdigest()


class MockClient:
    """Deterministic stand-in.

    A prompt carrying a ``[view: name]`` tag yields ``DESC(name)``; a scene prompt
    yields its ``[descriptions]`` block lines joined by ``" | "``; anything else is echoed.
    """

    client_id = "mock"

    def __init__(self):
        self._lock = threading.Lock()
        self.calls = []

    def generate(self, prompt: str, image: bytes | None = None) -> str:
        with self._lock:
            self.calls.append(prompt)
        m = VIEW_TAG.search(prompt)
        if m:
            return f"DESC({m.group(1)})"
        m = DESC_BLOCK.search(prompt)
        if m:
            return " | ".join(line for line in m.group(1).splitlines() if line.strip())
        return prompt


class ReplayClient:
    """Answers from a recorded transcript: ``[{"key", "prompt", "response"}, ...]``."""

    def __init__(self, transcript, model_id="replay"):
        if isinstance(transcript, (str, Path)):
            transcript = json.loads(Path(transcript).read_text())
        self.client_id = f"replay:{model_id}"
        self.model_id = model_id
        self._table = {e["key"]: e["response"] for e in transcript}

    def generate(self, prompt: str, image: bytes | None = None) -> str:
        key = content_key(prompt, image, self.model_id)
        try:
            return self._table[key]
        except KeyError:
            raise ProtocolError(f"no recorded response for prompt {prompt[:40]!r}...") from None


class RecordingClient:
    """Wraps a client and keeps every exchange for later replay."""

    def __init__(self, inner, model_id="replay"):
        self.inner = inner
        self.model_id = model_id
        self.client_id = inner.client_id
        self._lock = threading.Lock()
        self.entries = {}

    def generate(self, prompt: str, image: bytes | None = None) -> str:
        out = self.inner.generate(prompt, image)
        key = content_key(prompt, image, self.model_id)
        with self._lock:
            self.entries[key] = {"key": key, "prompt": prompt, "response": out}
        return out

    def transcript(self):
        return [self.entries[k] for k in sorted(self.entries)]

    def save(self, path):
        Path(path).write_text(json.dumps(self.transcript(), indent=2, sort_keys=True) + "\n")


class CachedClient:
    """Disk cache in front of another client, keyed by content hash of (image, prompt, model id)."""

    def __init__(self, inner, cache_dir, model_id=None):
        self.inner = inner
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.model_id = model_id or inner.client_id
        self.client_id = inner.client_id
        self.hits = 0

    def _path(self, prompt, image):
        return self.cache_dir / f"{content_key(prompt, image, self.model_id)}.txt"

    def generate(self, prompt: str, image: bytes | None = None) -> str:
        path = self._path(prompt, image)
        if path.exists():
            self.hits += 1
            return path.read_text(encoding="utf-8")
        out = self.inner.generate(prompt, image)
        tmp = path.with_suffix(f".{threading.get_ident()}.tmp")
        tmp.write_text(out, encoding="utf-8")
        tmp.replace(path)
        return out
