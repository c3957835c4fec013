"""Static composition of layer tar archives into a unified filesystem view.

Layers are filesystem diffs. Scanning walks a (possibly gzipped) tar stream
once, hashing regular file content on the way. Composition stacks per-layer
record lists base to top, applying whiteout and opaque-whiteout deletions so
the result matches what sequentially extracting the layers would produce,
without ever unpacking anything to disk.
"""

from __future__ import annotations

import hashlib
import json
import logging
import posixpath
import re
import tarfile
from dataclasses import dataclass, replace
from typing import BinaryIO, Callable, Iterable, Sequence

from .errors import ConflictingKinds, CorruptArchive, LayerUnavailable

logger = logging.getLogger(__name__)

WHITEOUT_PREFIX = ".wh."
OPAQUE_MARKER = ".wh..wh..opq"

KIND_REGULAR = "regular"
KIND_DIRECTORY = "directory"
KIND_SYMLINK = "symlink"
KIND_HARDLINK = "hardlink"
KIND_WHITEOUT = "whiteout"
KIND_OPAQUE = "opaque-whiteout"

_READ_CHUNK = 256 * 1024


def normalize_path(name: str) -> str:
    """Normalize a tar member name to a rooted absolute path.

    Idempotent; strips "."/".." segments and duplicate separators. Names that
    are not valid UTF-8 (surrogates from tar decoding) are made JSON-safe.
    """
    try:
        name.encode("utf-8")
    except UnicodeEncodeError:
        name = name.encode("utf-8", "replace").decode("utf-8")
    path = posixpath.normpath("/" + name)
    # posixpath preserves a leading double slash; collapse it
    while path.startswith("//"):
        path = path[1:]
    # clamp ".." segments left at the root (paths merely starting with dots are fine)
    while path == "/.." or path.startswith("/../"):
        path = path[3:] or "/"
    return path


@dataclass
class FileRecord:
    """One filesystem entry as contributed by a layer."""

    path: str
    kind: str
    size_bytes: int = 0
    mode: int = 0
    link_target: str | None = None
    content_hash: str | None = None
    source_layer_digest: str = ""
    layer_index: int = 0
    note: str | None = None

    def to_json(self) -> str:
        doc = {
            "path": self.path,
            "kind": self.kind,
            "size": self.size_bytes,
            "mode": self.mode,
            "layer_digest": self.source_layer_digest,
            "layer_index": self.layer_index,
        }
        if self.link_target is not None:
            doc["link_target"] = self.link_target
        if self.content_hash is not None:
            doc["content_hash"] = self.content_hash
        if self.note is not None:
            doc["note"] = self.note
        return json.dumps(doc, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "FileRecord":
        doc = json.loads(line)
        return cls(
            path=doc["path"],
            kind=doc["kind"],
            size_bytes=doc.get("size", 0),
            mode=doc.get("mode", 0),
            link_target=doc.get("link_target"),
            content_hash=doc.get("content_hash"),
            source_layer_digest=doc.get("layer_digest", ""),
            layer_index=doc.get("layer_index", 0),
            note=doc.get("note"),
        )


@dataclass
class ImageFs:
    """Unified filesystem view of a composed layer stack."""

    entries: dict[str, FileRecord]
    layer_digests: list[str]

    def regular_files(self) -> list[FileRecord]:
        return [r for r in self.entries.values() if r.kind == KIND_REGULAR]

    def to_jsonl(self) -> str:
        lines = [self.entries[p].to_json() for p in sorted(self.entries)]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str, layer_digests: Sequence[str] = ()) -> "ImageFs":
        entries = {}
        for line in text.splitlines():
            if line.strip():
                rec = FileRecord.from_json(line)
                entries[rec.path] = rec
        return cls(entries, list(layer_digests))


def _hash_member(tar: tarfile.TarFile, member: tarfile.TarInfo, hash_name: str) -> str:
    hasher = hashlib.new(hash_name)
    extracted = tar.extractfile(member)
    if extracted is not None:
        while True:
            chunk = extracted.read(_READ_CHUNK)
            if not chunk:
                break
            hasher.update(chunk)
    return f"{hash_name}:{hasher.hexdigest()}"


def scan_layer(
    stream: BinaryIO, source_digest: str = "", hash_name: str = "sha256"
) -> list[FileRecord]:
    """Single streaming pass over a layer archive, one record per member.

    Compression is sniffed from the stream, not taken on faith from any media
    type. Whiteout markers become whiteout / opaque-whiteout records. Device
    and FIFO nodes are recorded as zero-size regular files and flagged.
    Hardlinks take the content hash of their target within the same layer.
    """
    records: list[FileRecord] = []
    latest: dict[str, FileRecord] = {}
    empty_hash = f"{hash_name}:{hashlib.new(hash_name).hexdigest()}"
    try:
        tar = tarfile.open(fileobj=stream, mode="r|*")
    except (tarfile.TarError, EOFError, OSError) as exc:
        raise CorruptArchive(f"unreadable archive: {exc}") from exc
    try:
        with tar:
            for member in tar:
                name = member.name
                base = posixpath.basename(name.rstrip("/"))
                dirname = posixpath.dirname(name.rstrip("/"))
                if base == OPAQUE_MARKER:
                    rec = FileRecord(
                        path=normalize_path(dirname),
                        kind=KIND_OPAQUE,
                        source_layer_digest=source_digest,
                    )
                elif base.startswith(WHITEOUT_PREFIX):
                    hidden = base[len(WHITEOUT_PREFIX):]
                    if not hidden:
                        logger.warning("whiteout with empty target: %r", name)
                        continue
                    rec = FileRecord(
                        path=normalize_path(posixpath.join(dirname, hidden)),
                        kind=KIND_WHITEOUT,
                        source_layer_digest=source_digest,
                    )
                elif member.isreg():
                    rec = FileRecord(
                        path=normalize_path(name),
                        kind=KIND_REGULAR,
                        size_bytes=member.size,
                        mode=member.mode,
                        content_hash=_hash_member(tar, member, hash_name),
                        source_layer_digest=source_digest,
                    )
                elif member.isdir():
                    rec = FileRecord(
                        path=normalize_path(name),
                        kind=KIND_DIRECTORY,
                        mode=member.mode,
                        source_layer_digest=source_digest,
                    )
                elif member.issym():
                    rec = FileRecord(
                        path=normalize_path(name),
                        kind=KIND_SYMLINK,
                        mode=member.mode,
                        link_target=member.linkname,
                        source_layer_digest=source_digest,
                    )
                elif member.islnk():
                    target_path = normalize_path(member.linkname)
                    target = latest.get(target_path)
                    rec = FileRecord(
                        path=normalize_path(name),
                        kind=KIND_HARDLINK,
                        size_bytes=target.size_bytes if target else 0,
                        mode=member.mode,
                        link_target=target_path,
                        content_hash=target.content_hash if target else None,
                        source_layer_digest=source_digest,
                        note=None if target else "dangling-hardlink",
                    )
                else:
                    # device/FIFO node: keep the path visible, flag it
                    rec = FileRecord(
                        path=normalize_path(name),
                        kind=KIND_REGULAR,
                        size_bytes=0,
                        mode=member.mode,
                        content_hash=empty_hash,
                        source_layer_digest=source_digest,
                        note="unsupported-entry-type",
                    )
                records.append(rec)
                latest[rec.path] = rec
    except (tarfile.TarError, EOFError) as exc:
        position = getattr(tar, "offset", 0)
        raise CorruptArchive(f"corrupt archive: {exc}", position=position) from exc
    return records


def compose(
    stacks: Sequence[Sequence[FileRecord]],
    layer_digests: Sequence[str] | None = None,
) -> ImageFs:
    """Stack per-layer record lists, base first, into a unified view.

    Later layers override earlier ones path-wise. A whiteout removes the
    hidden path and, for directories, its lower-layer subtree; an opaque
    whiteout clears a directory's lower-layer contents while keeping entries
    added in the same or higher layers. Whiteout records never survive. The
    root itself is not an entry, so whiteouts aimed at "/" are malformed.
    """
    if layer_digests is None:
        layer_digests = [
            layer[0].source_layer_digest if layer else "" for layer in stacks
        ]
    entries: dict[str, FileRecord] = {}
    for index, layer in enumerate(stacks):
        deletions = [r for r in layer if r.kind in (KIND_WHITEOUT, KIND_OPAQUE)]
        additions = [r for r in layer if r.kind not in (KIND_WHITEOUT, KIND_OPAQUE)]
        # deletions hide lower-layer state only, so apply them first
        for rec in deletions:
            if rec.path == "/":
                raise ConflictingKinds(f"{rec.kind} aimed at filesystem root")
            prefix = rec.path + "/"
            doomed = [p for p in entries if p.startswith(prefix)]
            if rec.kind == KIND_WHITEOUT:
                entries.pop(rec.path, None)
            for p in doomed:
                del entries[p]
        for rec in additions:
            if rec.path == "/":
                continue  # the root always exists and carries no record
            new = replace(rec, layer_index=index)
            existing = entries.get(new.path)
            if (
                existing is not None
                and existing.kind == KIND_DIRECTORY
                and new.kind != KIND_DIRECTORY
            ):
                # non-directory replacing a directory takes the subtree with it
                prefix = new.path + "/"
                for p in [p for p in entries if p.startswith(prefix)]:
                    del entries[p]
            entries[new.path] = new
    _add_implied_directories(entries)
    return ImageFs(entries=entries, layer_digests=list(layer_digests))


def _add_implied_directories(entries: dict[str, FileRecord]) -> None:
    """Ensure every ancestor directory of an entry exists as an entry."""
    needed: dict[str, FileRecord] = {}
    for rec in entries.values():
        parent = posixpath.dirname(rec.path)
        while parent != "/":
            if parent not in entries:
                prior = needed.get(parent)
                if prior is None or rec.layer_index > prior.layer_index:
                    needed[parent] = rec
            parent = posixpath.dirname(parent)
    for path, implier in needed.items():
        entries[path] = FileRecord(
            path=path,
            kind=KIND_DIRECTORY,
            mode=0o755,
            source_layer_digest=implier.source_layer_digest,
            layer_index=implier.layer_index,
            note="implied",
        )


def translate_glob(pattern: str) -> re.Pattern:
    """Compile a path glob where ``**`` spans directories and ``*``/``?`` do not.

    ``**/`` matches zero or more whole path segments, so ``/etc/**/*.conf``
    covers both ``/etc/a.conf`` and ``/etc/x/y.conf``.
    """
    out = ["^"]
    i = 0
    while i < len(pattern):
        ch = pattern[i]
        if ch == "*":
            if pattern[i : i + 2] == "**":
                if pattern[i + 2 : i + 3] == "/":
                    out.append("(?:[^/]+/)*")
                    i += 3
                else:
                    out.append(".*")
                    i += 2
            else:
                out.append("[^/]*")
                i += 1
        elif ch == "?":
            out.append("[^/]")
            i += 1
        elif ch == "[":
            j = pattern.find("]", i + 1)
            if j == -1:
                out.append(re.escape(ch))
                i += 1
            else:
                out.append(pattern[i : j + 1])
                i = j + 1
        else:
            out.append(re.escape(ch))
            i += 1
    out.append("$")
    return re.compile("".join(out))


def compile_predicate(predicate) -> Callable[[str], bool]:
    """Accept a glob, a list of globs, or a callable; return a path predicate."""
    if callable(predicate):
        return predicate
    patterns = [predicate] if isinstance(predicate, str) else list(predicate)
    compiled = [translate_glob(p) for p in patterns]
    return lambda path: any(rx.match(path) for rx in compiled)


def extract_files(
    fs: ImageFs,
    predicate,
    store,
    fetch: Callable[[str], None] | None = None,
) -> list[tuple[FileRecord, bytes | None]]:
    """Pull the content of matching entries by re-reading only their source layers.

    Only regular files yield bytes; matching symlinks, hardlinks, and
    directories are yielded with ``None`` and logged. Evicted layers are
    re-fetched through ``fetch(digest)`` when given, else LayerUnavailable.
    """
    match = compile_predicate(predicate)
    selected = [rec for rec in fs.entries.values() if match(rec.path)]
    if not selected:
        return []
    wanted_by_layer: dict[str, dict[str, FileRecord]] = {}
    results: dict[str, tuple[FileRecord, bytes | None]] = {}
    for rec in selected:
        if rec.kind == KIND_REGULAR:
            wanted_by_layer.setdefault(rec.source_layer_digest, {})[rec.path] = rec
        else:
            logger.info("extract: %s is a %s, no content stream", rec.path, rec.kind)
            results[rec.path] = (rec, None)
    for digest, wanted in wanted_by_layer.items():
        stream = store.get_layer(digest)
        if stream is None and fetch is not None:
            fetch(digest)
            stream = store.get_layer(digest)
        if stream is None:
            raise LayerUnavailable(f"layer {digest} is not in the store and cannot be fetched")
        contents: dict[str, bytes] = {}
        with stream, tarfile.open(fileobj=stream, mode="r|*") as tar:
            for member in tar:
                if not member.isreg():
                    continue
                path = normalize_path(member.name)
                if path in wanted:
                    extracted = tar.extractfile(member)
                    contents[path] = extracted.read() if extracted else b""
        for path, rec in wanted.items():
            results[path] = (rec, contents.get(path))
    return [results[p] for p in sorted(results)]
