"""Content digest helpers. Registry-style digests are "sha256:" + 64 hex chars."""

from __future__ import annotations

import hashlib
import re
from typing import BinaryIO

DIGEST_RE = re.compile(r"^sha256:[0-9a-f]{64}$")

CHUNK_SIZE = 256 * 1024


def is_wellformed(digest: str) -> bool:
    return bool(DIGEST_RE.match(digest))


def digest_of(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def hex_of(digest: str) -> str:
    """Strip the algorithm prefix."""
    return digest.split(":", 1)[1]


class HashingWriter:
    """Wraps a write() sink and hashes everything passing through."""

    def __init__(self, sink):
        self._sink = sink
        self._hasher = hashlib.sha256()
        self.bytes_written = 0

    def write(self, data: bytes) -> int:
        self._hasher.update(data)
        self.bytes_written += len(data)
        self._sink.write(data)
        return len(data)

    def digest(self) -> str:
        return "sha256:" + self._hasher.hexdigest()


def copy_and_hash(src: BinaryIO, sink) -> tuple[str, int]:
    """Stream src to sink in chunks; return (digest, byte count)."""
    writer = HashingWriter(sink)
    while True:
        chunk = src.read(CHUNK_SIZE)
        if not chunk:
            break
        writer.write(chunk)
    return writer.digest(), writer.bytes_written
