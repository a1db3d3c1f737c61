"""Content-addressed artifact store with single-flight recomputation.

Artifacts are immutable byte blobs keyed by the semantic coordinates that
produced them (kind, model, dataset digest, method parameters, image).
Writes are atomic (write-temp-then-rename) and concurrent identical misses
invoke the producer exactly once.
"""

from __future__ import annotations

import errno
import hashlib
import json
import os
import re
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

from .errors import IoFailureError, StorageFullError, ValidationError

KINDS = (
    "confidence",
    "distance",
    "projection",
    "accuracy",
    "attention",
    "overlay",
    "similarity",
    "cih",
    "contour",
    "roi",
)

_SAFE = re.compile(r"[^A-Za-z0-9._-]+")


def _sanitize(s: str) -> str:
    return _SAFE.sub("_", s) if s else ""


@dataclass(frozen=True)
class ArtifactKey:
    kind: str
    model_id: str = ""
    dataset_digest: str = ""
    method: str = ""
    params_digest: str = ""
    image_ref: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown artifact kind {self.kind!r}", detail=list(KINDS))

    def token(self) -> str:
        """Unique, filesystem-safe relative path for this key.

        The readable prefix is lossy (sanitized, truncated); uniqueness is
        carried by the sha256 of the exact field tuple.
        """
        fields = (
            self.kind,
            self.model_id,
            self.dataset_digest,
            self.method,
            self.params_digest,
            self.image_ref,
        )
        digest = hashlib.sha256(json.dumps(fields).encode()).hexdigest()[:16]
        label_parts = [
            _sanitize(p)
            for p in (self.method, self.params_digest, self.image_ref, self.dataset_digest)
            if p
        ]
        label = "__".join(label_parts)[:80]
        name = f"{label}__{digest}" if label else digest
        return f"{self.kind}/{_sanitize(self.model_id) or '_'}/{name}"


@dataclass
class StoreStats:
    hits: int = 0
    misses: int = 0
    puts: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def bump(self, attr: str):
        with self.lock:
            setattr(self, attr, getattr(self, attr) + 1)


class ArtifactStore:
    """Filesystem-backed store rooted at ``root``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.stats = StoreStats()
        self._flight_lock = threading.Lock()
        self._in_flight: dict[str, threading.Lock] = {}

    def path_for(self, key: ArtifactKey) -> Path:
        return self.root / key.token()

    def resolve_token(self, token: str) -> Path:
        """Map a token back to a path, rejecting traversal outside the root."""
        path = (self.root / token).resolve()
        if not str(path).startswith(str(self.root.resolve()) + os.sep):
            raise ValidationError(f"artifact token escapes store root: {token!r}")
        return path

    def put(self, key: ArtifactKey, payload: bytes) -> str:
        if not payload:
            raise ValidationError("artifact payload must be non-empty")
        path = self.path_for(key)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
            try:
                with os.fdopen(fd, "wb") as f:
                    f.write(payload)
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
        except OSError as e:
            if e.errno == errno.ENOSPC:
                raise StorageFullError(f"no space left writing {path}") from e
            raise IoFailureError(f"failed writing {path}: {e}") from e
        self.stats.bump("puts")
        return key.token()

    def get(self, key: ArtifactKey) -> bytes | None:
        path = self.path_for(key)
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            return None
        except OSError as e:
            raise IoFailureError(f"failed reading {path}: {e}") from e
        return data

    def has(self, key: ArtifactKey) -> bool:
        return self.path_for(key).is_file()

    def get_or_compute(self, key: ArtifactKey, producer: Callable[[], bytes]) -> bytes:
        """Cache hit returns stored bytes; a miss runs ``producer`` exactly once
        per key even under concurrent identical requests. Producer errors
        propagate and nothing is cached.
        """
        data = self.get(key)
        if data is not None:
            self.stats.bump("hits")
            return data
        token = key.token()
        with self._flight_lock:
            lock = self._in_flight.setdefault(token, threading.Lock())
        with lock:
            data = self.get(key)  # another flight may have landed meanwhile
            if data is not None:
                self.stats.bump("hits")
                return data
            self.stats.bump("misses")
            payload = producer()
            self.put(key, payload)
            return payload

    def keys(self) -> Iterator[str]:
        """Tokens of every stored artifact (relative paths under the root)."""
        for kind in KINDS:
            base = self.root / kind
            if not base.is_dir():
                continue
            for p in sorted(base.rglob("*")):
                if p.is_file() and not p.name.startswith(".tmp-"):
                    yield str(p.relative_to(self.root))

    def index_manifest(self) -> dict:
        return {"root": str(self.root), "keys": list(self.keys())}
