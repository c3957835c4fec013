"""layerminer: mine container image registries layer by layer.

Fetches images from a Docker Registry v2 endpoint (or a directory-backed
fixture registry), stores layer blobs content-addressed with dedup and
eviction, statically composes layer archives into filesystem views, and
extracts Dockerfile, configuration, and orchestration data into reports.
"""

__version__ = "0.1.0"

from .models import ImageRef, LayerDescriptor, Manifest, RepoMetadata

__all__ = [
    "ImageRef",
    "LayerDescriptor",
    "Manifest",
    "RepoMetadata",
    "__version__",
]
