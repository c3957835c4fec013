"""Exception taxonomy shared across the toolkit."""


class LayerMinerError(Exception):
    """Base class for all layerminer errors."""


class DigestMismatch(LayerMinerError):
    """Bytes do not hash to the digest they were declared under."""

    def __init__(self, expected: str, actual: str, context: str = ""):
        self.expected = expected
        self.actual = actual
        self.context = context
        where = f" ({context})" if context else ""
        super().__init__(f"digest mismatch{where}: expected {expected}, got {actual}")


class RepoNotFound(LayerMinerError):
    """The registry does not know the requested repository."""


class AuthRequired(LayerMinerError):
    """The registry demands credentials we could not supply."""


class TransientError(LayerMinerError):
    """Retryable failure (5xx, timeout, connection reset) that persisted past retries."""


class ManifestNotFound(LayerMinerError):
    """No manifest for the requested tag or digest."""


class BlobNotFound(LayerMinerError):
    """No blob stored under the requested digest."""


class UnsupportedMediaType(LayerMinerError):
    """Manifest uses a media type we do not parse; carries the type for reporting."""

    def __init__(self, media_type: str):
        self.media_type = media_type
        super().__init__(f"unsupported manifest media type: {media_type!r}")


class FieldUnavailable(LayerMinerError):
    """A required metadata field could not be served by the registry."""


class StorageFull(LayerMinerError):
    """The store's filesystem ran out of space mid-write."""


class CorruptArchive(LayerMinerError):
    """Layer tar stream could not be read; position is the byte offset reached."""

    def __init__(self, message: str, position: int = 0):
        self.position = position
        super().__init__(f"{message} (at byte {position})")


class LayerUnavailable(LayerMinerError):
    """A source layer is neither in the store nor re-fetchable."""


class ConflictingKinds(LayerMinerError):
    """Malformed layer stack, e.g. a whiteout aimed at the filesystem root."""


class NoFrom(LayerMinerError):
    """Dockerfile has no FROM instruction, so no base chain exists."""


class EmptyDockerfile(LayerMinerError):
    """Strict-mode parse of a file that is empty once comments are removed."""


class NotComposeFile(LayerMinerError):
    """YAML document lacks the top-level services mapping."""


class MalformedYaml(LayerMinerError):
    """Input is not parseable YAML."""


class MissingPassData(LayerMinerError):
    """A report was requested for a pass that never ran."""


class FatalConfig(LayerMinerError):
    """Mining job configuration is unusable (bad endpoint, path, or schema)."""
