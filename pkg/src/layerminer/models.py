"""Core identity types: image references, layer descriptors, manifests, repo metadata."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .digests import digest_of, is_wellformed
from .errors import UnsupportedMediaType

REPOSITORY_RE = re.compile(r"^[a-z0-9]+(?:[._\-/][a-z0-9]+)*$")
TAG_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_.\-]{0,127}$")

MT_DOCKER_MANIFEST = "application/vnd.docker.distribution.manifest.v2+json"
MT_DOCKER_MANIFEST_LIST = "application/vnd.docker.distribution.manifest.list.v2+json"
MT_OCI_MANIFEST = "application/vnd.oci.image.manifest.v1+json"
MT_OCI_INDEX = "application/vnd.oci.image.index.v1+json"

MANIFEST_TYPES = (MT_DOCKER_MANIFEST, MT_OCI_MANIFEST)
INDEX_TYPES = (MT_DOCKER_MANIFEST_LIST, MT_OCI_INDEX)

ACCEPT_HEADER = ", ".join(MANIFEST_TYPES + INDEX_TYPES)


@dataclass(frozen=True)
class ImageRef:
    """An image named by repository plus tag, optionally pinned by digest."""

    repository: str
    tag: str = "latest"
    digest: str | None = None

    def __post_init__(self):
        if not REPOSITORY_RE.match(self.repository):
            raise ValueError(f"invalid repository name: {self.repository!r}")
        if not TAG_RE.match(self.tag):
            raise ValueError(f"invalid tag: {self.tag!r}")
        if self.digest is not None and not is_wellformed(self.digest):
            raise ValueError(f"malformed digest: {self.digest!r}")

    @classmethod
    def parse(cls, text: str) -> "ImageRef":
        """Parse "repo[:tag][@digest]" into a reference."""
        digest = None
        if "@" in text:
            text, digest = text.split("@", 1)
        repo, sep, tag = text.partition(":")
        return cls(repo, tag if sep else "latest", digest)

    def __str__(self) -> str:
        base = f"{self.repository}:{self.tag}"
        return f"{base}@{self.digest}" if self.digest else base


@dataclass(frozen=True)
class LayerDescriptor:
    """One layer blob as listed in a manifest."""

    digest: str
    size_bytes: int
    media_type: str = "application/vnd.docker.image.rootfs.diff.tar.gzip"

    def __post_init__(self):
        if not is_wellformed(self.digest):
            raise ValueError(f"malformed layer digest: {self.digest!r}")
        if self.size_bytes < 0:
            raise ValueError("layer size must be non-negative")


@dataclass
class Manifest:
    """Parsed image manifest; layers are ordered base first."""

    schema_version: int
    media_type: str
    config_digest: str
    layers: list[LayerDescriptor]
    digest: str = ""
    raw: bytes = b""

    @classmethod
    def from_bytes(cls, raw: bytes, media_type: str | None = None) -> "Manifest":
        """Parse manifest JSON bytes. Raises UnsupportedMediaType for formats
        other than Docker schema 2 / OCI image manifests."""
        doc = json.loads(raw)
        mtype = media_type or doc.get("mediaType", "")
        if mtype not in MANIFEST_TYPES:
            raise UnsupportedMediaType(mtype or f"schemaVersion {doc.get('schemaVersion')}")
        layers = [
            LayerDescriptor(entry["digest"], entry.get("size", 0), entry.get("mediaType", ""))
            for entry in doc.get("layers", [])
        ]
        return cls(
            schema_version=doc.get("schemaVersion", 2),
            media_type=mtype,
            config_digest=doc.get("config", {}).get("digest", ""),
            layers=layers,
            digest=digest_of(raw),
            raw=raw,
        )


def is_index_type(media_type: str) -> bool:
    return media_type in INDEX_TYPES


def select_platform_manifest(raw: bytes, os_name: str, arch: str) -> str | None:
    """From manifest-list/index bytes, return the digest of the entry for the
    given platform, or None if no entry matches."""
    doc = json.loads(raw)
    for entry in doc.get("manifests", []):
        platform = entry.get("platform", {})
        if platform.get("os") == os_name and platform.get("architecture") == arch:
            return entry.get("digest")
    return None


@dataclass
class RepoMetadata:
    """Repository-level metadata as exposed by hub-style endpoints."""

    name: str
    description: str = ""
    tags: list[str] = field(default_factory=list)
    update_time: str | None = None
    pull_count: int | None = None
    dockerfile_text: str | None = None

    def __post_init__(self):
        if not REPOSITORY_RE.match(self.name):
            raise ValueError(f"invalid repository name: {self.name!r}")
