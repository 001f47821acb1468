"""Chat/embedding backends behind a single small interface.

Two implementations ship:

* MockBackend -- a pure function of (payload, seed). Chat replies echo the
  salient words near the end of the prompt (stage templates put their dynamic
  content last), review prompts get a deterministic "Overall Score: <n>" line,
  and embeddings are seeded pseudo-random unit vectors. This is what golden
  tests and desk-scale runs use.
* HttpBackend -- a thin JSON-over-HTTP client for live model ports:
  POST {base}/chat  {"prompt": str}  ->  {"text": str}
  POST {base}/embed {"text": str}    ->  {"vector": [float, ...]}
"""

from __future__ import annotations

import hashlib
import json
import random
import re
import urllib.error
import urllib.request
from typing import Callable, Protocol

import numpy as np

from .errors import BackendError

REVIEW_MARKER = "Overall Score"

_WORD_RE = re.compile(r"[A-Za-z][A-Za-z0-9-]{3,}")

_FILLER = (
    "building", "on", "recent", "directions", "we", "examine", "how",
    "structured", "evidence", "informs", "the", "question", "and", "what",
    "mechanisms", "drive", "observed", "patterns", "across", "settings",
)


def stable_hash(*parts: object) -> int:
    """64-bit hash of the given parts, stable across processes and runs."""
    joined = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(joined.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class Backend(Protocol):
    mode: str

    def chat(self, prompt: str) -> str: ...

    def embed(self, text: str) -> np.ndarray: ...


class MockBackend:
    """Deterministic stand-in for chat and embedding models.

    ``score_sampler`` controls the distribution of review scores; it receives
    a seeded random.Random and must return an int in 1..10. The default is
    uniform over the full scale.
    """

    mode = "mock"

    def __init__(
        self,
        seed: int = 0,
        dim: int = 32,
        score_sampler: Callable[[random.Random], int] | None = None,
    ) -> None:
        if dim <= 0:
            raise BackendError(f"embedding dim must be positive, got {dim}")
        self.seed = seed
        self.dim = dim
        self.score_sampler = score_sampler or (lambda rng: rng.randint(1, 10))

    def chat(self, prompt: str) -> str:
        rng = random.Random(stable_hash(self.seed, "chat", prompt))
        echo = self._salient_words(prompt)
        body = " ".join(echo) if echo else " ".join(rng.sample(_FILLER, 6))
        flourish = " ".join(rng.choice(_FILLER) for _ in range(4))
        if REVIEW_MARKER in prompt:
            score = int(self.score_sampler(rng))
            return f"Assessment: {body} {flourish}\n{REVIEW_MARKER}: {score}"
        return f"{body} {flourish}"

    def embed(self, text: str) -> np.ndarray:
        gen = np.random.default_rng(stable_hash(self.seed, "embed", text))
        vec = gen.standard_normal(self.dim)
        return vec / np.linalg.norm(vec)

    @staticmethod
    def _salient_words(prompt: str, tail_chars: int = 400, limit: int = 16) -> list[str]:
        tail = prompt[-tail_chars:]
        seen: list[str] = []
        for word in _WORD_RE.findall(tail):
            if word not in seen:
                seen.append(word)
        return seen[-limit:]


class HttpBackend:
    """JSON-over-HTTP client for one live backend port."""

    mode = "live"

    def __init__(self, base_url: str, timeout: float = 60.0) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _post(self, route: str, payload: dict) -> dict:
        req = urllib.request.Request(
            f"{self.base_url}/{route}",
            data=json.dumps(payload).encode("utf-8"),
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise BackendError(f"backend call {route} failed: {exc}") from exc

    def chat(self, prompt: str) -> str:
        reply = self._post("chat", {"prompt": prompt})
        if "text" not in reply:
            raise BackendError("chat response missing 'text' field")
        return str(reply["text"])

    def embed(self, text: str) -> np.ndarray:
        reply = self._post("embed", {"text": text})
        if "vector" not in reply:
            raise BackendError("embed response missing 'vector' field")
        return np.asarray(reply["vector"], dtype=float)
