"""Embedding collections, annotations and captions: on-disk formats and validated loading.

An embedding container is three sibling files sharing a base name:

    <name>.meta.json   {"format_version": 1, "count": N, "dim": D,
                        "dtype": "f32", "normalized": true|false}
    <name>.ids.txt     one image id per line, UTF-8, exactly N lines
    <name>.f32         N*D little-endian 32-bit floats, row-major

The payload must be exactly count*dim*4 bytes, and a save followed by a load
reproduces every float bit for bit.  NaN and infinity are rejected outright;
silent score corruption is worse than a failed load.

Annotations and captions are line-delimited JSON, one object per line:

    {"id": "<image id>", "labels": ["<label>", ...]}
    {"id": "<image id>", "captions": ["<caption>", ...]}

Caption lists must be non-empty; annotation lists may be empty.  Producers
typically supply several generated captions per image (e.g. ten captions
sampled with top-k k=5 at temperatures 0.1 and 0.4 from the prompt
"A picture of"); any non-empty list is accepted.  When the same id appears
on several lines the last one wins and a warning counter is bumped, so
batch re-ingestion stays tolerant but observable.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateId,
    EmptyId,
    IoFailure,
    MalformedLine,
    MalformedMeta,
    MissingFile,
    NormViolation,
    RejectedValue,
    SizeMismatch,
    UnknownId,
)

META_SUFFIX = ".meta.json"
IDS_SUFFIX = ".ids.txt"
PAYLOAD_SUFFIX = ".f32"
FORMAT_VERSION = 1
NORM_TOLERANCE = 1e-3


def _base_path(meta_path) -> Path:
    """Container base path: `x/emb.meta.json` and `x/emb` both mean base `x/emb`."""
    p = Path(meta_path)
    if p.name.endswith(META_SUFFIX):
        return p.with_name(p.name[: -len(META_SUFFIX)])
    return p


def container_paths(meta_path) -> tuple[Path, Path, Path]:
    """The (meta, ids, payload) file paths of a container."""
    base = _base_path(meta_path)
    return (
        base.with_name(base.name + META_SUFFIX),
        base.with_name(base.name + IDS_SUFFIX),
        base.with_name(base.name + PAYLOAD_SUFFIX),
    )


@dataclass(eq=False)
class EmbeddingStore:
    """An immutable N x D collection of float32 image embeddings with string ids."""

    ids: tuple[str, ...]
    vectors: np.ndarray
    dim: int
    normalized: bool = False
    name: str = "dataset"
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.ids = tuple(self.ids)
        vectors = np.asarray(self.vectors, dtype=np.float32)
        if vectors.size == 0:
            vectors = vectors.reshape(0, self.dim)
        if vectors.ndim != 2:
            raise MalformedMeta(f"vectors must be 2-D, got shape {vectors.shape}")
        if self.dim < 1:
            raise MalformedMeta(f"dim must be positive, got {self.dim}")
        if vectors.shape[0] > 0 and vectors.shape[1] != self.dim:
            raise SizeMismatch(
                f"dim {self.dim} declared but vectors have {vectors.shape[1]} columns"
            )
        if len(self.ids) != vectors.shape[0]:
            raise SizeMismatch(
                f"{len(self.ids)} ids but {vectors.shape[0]} vector rows"
            )
        vectors = vectors.reshape(vectors.shape[0], self.dim)
        vectors.setflags(write=False)
        self.vectors = vectors
        self._index = {}
        for i, image_id in enumerate(self.ids):
            if image_id == "":
                raise EmptyId(f"empty id at row {i}")
            if "\n" in image_id or "\r" in image_id:
                raise RejectedValue(f"id at row {i} contains a newline")
            if image_id in self._index:
                raise DuplicateId(f"duplicate id {image_id!r}")
            self._index[image_id] = i
        self.validate_values()

    def validate_values(self):
        """Re-check value constraints (finiteness, norm flag). Cheap, always safe."""
        if self.vectors.size and not np.isfinite(self.vectors).all():
            raise RejectedValue("store contains NaN or infinity")
        if self.normalized and len(self.ids):
            norms = np.linalg.norm(self.vectors.astype(np.float64), axis=1)
            worst = np.abs(norms - 1.0).max()
            if worst > NORM_TOLERANCE:
                row = int(np.abs(norms - 1.0).argmax())
                raise NormViolation(
                    f"normalized store has row {self.ids[row]!r} with norm {norms[row]:.6f}"
                )

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._index

    def index_of(self, image_id: str) -> int:
        try:
            return self._index[image_id]
        except KeyError:
            raise UnknownId(f"id not in store: {image_id!r}") from None

    def row(self, image_id: str) -> np.ndarray:
        return self.vectors[self.index_of(image_id)]

    def rows(self, image_ids) -> np.ndarray:
        """Gather rows for the given ids, preserving their order."""
        idx = [self.index_of(i) for i in image_ids]
        return self.vectors[idx] if idx else self.vectors[:0]


def load_store(meta_path) -> EmbeddingStore:
    """Load and validate an embedding container from its meta path (or base path)."""
    meta_file, ids_file, payload_file = container_paths(meta_path)
    for f in (meta_file, ids_file, payload_file):
        if not f.exists():
            raise MissingFile(str(f))
    try:
        meta = json.loads(meta_file.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise MalformedMeta(f"{meta_file}: {exc}") from exc
    if not isinstance(meta, dict):
        raise MalformedMeta(f"{meta_file}: expected a JSON object")
    if meta.get("format_version") != FORMAT_VERSION:
        raise MalformedMeta(f"unsupported format_version {meta.get('format_version')!r}")
    if meta.get("dtype") != "f32":
        raise MalformedMeta(f"unsupported dtype {meta.get('dtype')!r}")
    count = meta.get("count")
    dim = meta.get("dim")
    normalized = meta.get("normalized")
    if not isinstance(count, int) or isinstance(count, bool) or count < 0:
        raise MalformedMeta(f"count must be a non-negative integer, got {count!r}")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise MalformedMeta(f"dim must be a positive integer, got {dim!r}")
    if not isinstance(normalized, bool):
        raise MalformedMeta(f"normalized must be a boolean, got {normalized!r}")

    expected_bytes = count * dim * 4
    actual_bytes = os.path.getsize(payload_file)
    if actual_bytes != expected_bytes:
        raise SizeMismatch(
            f"payload is {actual_bytes} bytes, expected {count}*{dim}*4 = {expected_bytes}"
        )

    text = ids_file.read_text(encoding="utf-8")
    ids = text.splitlines() if text else []
    if len(ids) != count:
        raise SizeMismatch(f"{len(ids)} ids in {ids_file}, meta declares {count}")

    vectors = np.fromfile(payload_file, dtype="<f4").reshape(count, dim)
    return EmbeddingStore(
        ids=tuple(ids),
        vectors=vectors,
        dim=dim,
        normalized=normalized,
        name=_base_path(meta_path).name,
    )


def save_store(store: EmbeddingStore, meta_path) -> None:
    """Write the three container files. save then load is bit-identical."""
    store.validate_values()
    meta_file, ids_file, payload_file = container_paths(meta_path)
    meta = {
        "format_version": FORMAT_VERSION,
        "count": len(store.ids),
        "dim": store.dim,
        "dtype": "f32",
        "normalized": store.normalized,
    }
    try:
        meta_file.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
        ids_file.write_text(
            "\n".join(store.ids) + "\n" if store.ids else "", encoding="utf-8"
        )
        store.vectors.astype("<f4", copy=False).tofile(payload_file)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


@dataclass(eq=False)
class AnnotationSet:
    """Map from image id to its annotation labels (e.g. class names)."""

    by_id: dict
    duplicates: int = 0

    def get(self, image_id: str) -> tuple[str, ...]:
        return self.by_id.get(image_id, ())

    def __contains__(self, image_id: str) -> bool:
        return image_id in self.by_id

    def __len__(self) -> int:
        return len(self.by_id)


@dataclass(eq=False)
class CaptionSet:
    """Map from image id to its generated captions (non-empty per present key)."""

    by_id: dict
    duplicates: int = 0

    def get(self, image_id: str) -> tuple[str, ...]:
        return self.by_id.get(image_id, ())

    def __contains__(self, image_id: str) -> bool:
        return image_id in self.by_id

    def __len__(self) -> int:
        return len(self.by_id)


def read_id_records(path, key: str, allow_duplicates: bool = True):
    """Yield (line_number, id, value) from a line-delimited JSON file whose
    lines are objects carrying "id" plus the named key.  Structural problems
    raise MalformedLine with the offending line number; value validation is
    the caller's job."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    seen = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if line.strip() == "":
                raise MalformedLine(lineno, "blank line")
            try:
                obj = json.loads(line)
            except ValueError as exc:
                raise MalformedLine(lineno, f"invalid JSON ({exc})") from exc
            if not isinstance(obj, dict):
                raise MalformedLine(lineno, "expected a JSON object")
            image_id = obj.get("id")
            if not isinstance(image_id, str):
                raise MalformedLine(lineno, 'missing string "id"')
            if image_id == "":
                raise EmptyId(f"line {lineno}: empty id")
            if key not in obj:
                raise MalformedLine(lineno, f'missing "{key}"')
            if not allow_duplicates:
                if image_id in seen:
                    raise DuplicateId(f"line {lineno}: duplicate id {image_id!r}")
                seen.add(image_id)
            yield lineno, image_id, obj[key]


def _load_ldjson_lists(path, key: str, allow_empty_list: bool):
    by_id: dict = {}
    duplicates = 0
    for lineno, image_id, values in read_id_records(path, key):
        if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
            raise MalformedLine(lineno, f'"{key}" must be a list of strings')
        if not values and not allow_empty_list:
            raise MalformedLine(lineno, f'"{key}" must be non-empty')
        if image_id in by_id:
            duplicates += 1
        by_id[image_id] = tuple(values)
    return by_id, duplicates


def load_annotations(path) -> AnnotationSet:
    """Load an id -> labels map; later duplicate ids override earlier ones."""
    by_id, duplicates = _load_ldjson_lists(path, "labels", allow_empty_list=True)
    return AnnotationSet(by_id=by_id, duplicates=duplicates)


def load_captions(path) -> CaptionSet:
    """Load an id -> captions map; caption lists must be non-empty."""
    by_id, duplicates = _load_ldjson_lists(path, "captions", allow_empty_list=False)
    return CaptionSet(by_id=by_id, duplicates=duplicates)
