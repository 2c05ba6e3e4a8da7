"""Dataset scanning: apply a prompt model to every stored embedding and emit a
flag report of potentially inappropriate images.

An image is flagged when its class-1 probability strictly exceeds the decision
threshold.  Reports are totally ordered (descending probability, ties broken
by id) so that serialization is byte-stable, and the report file is a single
JSON header line followed by one JSON entry per line.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimMismatch,
    DuplicateId,
    EmptyDataset,
    IoFailure,
    MalformedLine,
    MalformedMeta,
    MissingFile,
)
from .kernels import score_batch
from .store import EmbeddingStore
from .tuning import PromptModel

SCAN_CHUNK = 8192
EMIT_MODES = ("flagged-only", "all")


@dataclass(frozen=True)
class FlagEntry:
    id: str
    p: float
    flagged: bool

    def __post_init__(self):
        if not self.id:
            raise ValueError("entry id must be non-empty")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"probability {self.p} outside [0, 1]")


@dataclass(eq=False)
class FlagReport:
    """Scan result. entries may be just the flagged subset (or even empty for a
    header-only summary); flagged_count always reflects the whole dataset."""

    dataset_name: str
    total_count: int
    threshold: float
    model_fingerprint: str
    flagged_count: int
    entries: tuple[FlagEntry, ...] = ()

    def __post_init__(self):
        self.entries = tuple(self.entries)
        if self.total_count < 0:
            raise ValueError("total_count must be nonnegative")
        if not 0 <= self.flagged_count <= self.total_count:
            raise ValueError("flagged_count must be within [0, total_count]")
        if len(self.entries) > self.total_count:
            raise ValueError("more entries than total_count")
        seen = set()
        for e in self.entries:
            if e.id in seen:
                raise DuplicateId(f"duplicate entry id {e.id!r}")
            seen.add(e.id)
            if e.flagged != (e.p > self.threshold):
                raise ValueError(
                    f"entry {e.id!r}: flagged must equal (p > threshold)"
                )
        keys = [(-e.p, e.id) for e in self.entries]
        if keys != sorted(keys):
            raise ValueError("entries must be sorted by descending p, then id")
        # Three valid shapes: complete (every image listed), flagged-only
        # (exactly the flagged subset listed), header-only (no entries).
        if self.entries:
            n_flagged = sum(e.flagged for e in self.entries)
            if len(self.entries) == self.total_count:
                if n_flagged != self.flagged_count:
                    raise ValueError("flagged_count does not match entries")
            elif not (n_flagged == len(self.entries) == self.flagged_count):
                raise ValueError(
                    "partial reports must list exactly the flagged entries"
                )

    def flagged_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.entries if e.flagged)


def scan(
    store: EmbeddingStore,
    model: PromptModel,
    decision_threshold: float = 0.5,
    emit: str = "flagged-only",
) -> FlagReport:
    """Score every embedding in fixed-size chunks and build the report."""
    if emit not in EMIT_MODES:
        raise ValueError(f"emit must be one of {EMIT_MODES}")
    if store.dim != model.dim:
        raise DimMismatch(
            f"store dim {store.dim} does not match model dim {model.dim}"
        )
    probs = np.empty(len(store), dtype=np.float64)
    for start in range(0, len(store), SCAN_CHUNK):
        chunk = store.vectors[start : start + SCAN_CHUNK]
        probs[start : start + SCAN_CHUNK] = score_batch(
            chunk, model.prompts, model.config.logit_scale
        )[:, 1]
    flagged_mask = probs > decision_threshold
    order = sorted(range(len(store)), key=lambda i: (-probs[i], store.ids[i]))
    entries = []
    for i in order:
        if emit == "all" or flagged_mask[i]:
            entries.append(
                FlagEntry(id=store.ids[i], p=float(probs[i]), flagged=bool(flagged_mask[i]))
            )
    return FlagReport(
        dataset_name=store.name,
        total_count=len(store),
        threshold=decision_threshold,
        model_fingerprint=model.fingerprint,
        flagged_count=int(flagged_mask.sum()),
        entries=tuple(entries),
    )


def flag_ratio(report: FlagReport) -> float:
    """Flagged fraction of the dataset."""
    if report.total_count <= 0:
        raise EmptyDataset("flag ratio of an empty dataset")
    return report.flagged_count / report.total_count


@dataclass(frozen=True)
class ReportDiff:
    only_a: tuple[str, ...]
    only_b: tuple[str, ...]
    both: tuple[str, ...]


def diff_reports(a: FlagReport, b: FlagReport) -> ReportDiff:
    """Partition the union of flagged ids by which report flags them."""
    set_a = set(a.flagged_ids())
    set_b = set(b.flagged_ids())
    return ReportDiff(
        only_a=tuple(sorted(set_a - set_b)),
        only_b=tuple(sorted(set_b - set_a)),
        both=tuple(sorted(set_a & set_b)),
    )


def report_to_bytes(report: FlagReport) -> bytes:
    header = {
        "dataset_name": report.dataset_name,
        "total_count": report.total_count,
        "threshold": report.threshold,
        "model_fingerprint": report.model_fingerprint,
        "flagged_count": report.flagged_count,
    }
    lines = [json.dumps(header, separators=(",", ":"))]
    for e in report.entries:
        lines.append(
            json.dumps(
                {"id": e.id, "p": e.p, "flagged": e.flagged}, separators=(",", ":")
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def save_report(report: FlagReport, path) -> None:
    try:
        Path(path).write_bytes(report_to_bytes(report))
    except OSError as exc:
        raise IoFailure(f"cannot write report: {exc}") from exc


def load_report(path) -> FlagReport:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"report file not found: {path}")
    with path.open("r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise MalformedMeta("report header line missing")
        try:
            header = json.loads(header_line)
        except ValueError as exc:
            raise MalformedMeta(f"report header is not valid JSON: {exc}") from None
        if not isinstance(header, dict):
            raise MalformedMeta("report header must be a JSON object")
        for key, kind in (
            ("dataset_name", str),
            ("total_count", int),
            ("threshold", (int, float)),
            ("model_fingerprint", str),
            ("flagged_count", int),
        ):
            if key not in header:
                raise MalformedMeta(f"report header missing {key!r}")
            if isinstance(header[key], bool) or not isinstance(header[key], kind):
                raise MalformedMeta(f"report header field {key!r} has wrong type")
        entries = []
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n").rstrip("\r")
            if line.strip() == "":
                raise MalformedLine(lineno, "blank line")
            try:
                obj = json.loads(line)
            except ValueError as exc:
                raise MalformedLine(lineno, f"invalid JSON ({exc})") from None
            if (
                not isinstance(obj, dict)
                or not isinstance(obj.get("id"), str)
                or isinstance(obj.get("p"), bool)
                or not isinstance(obj.get("p"), (int, float))
                or not isinstance(obj.get("flagged"), bool)
            ):
                raise MalformedLine(lineno, 'expected {"id","p","flagged"}')
            try:
                entries.append(
                    FlagEntry(id=obj["id"], p=float(obj["p"]), flagged=obj["flagged"])
                )
            except ValueError as exc:
                raise MalformedLine(lineno, str(exc)) from None
    try:
        return FlagReport(
            dataset_name=header["dataset_name"],
            total_count=header["total_count"],
            threshold=float(header["threshold"]),
            model_fingerprint=header["model_fingerprint"],
            flagged_count=header["flagged_count"],
            entries=tuple(entries),
        )
    except (ValueError, DuplicateId) as exc:
        if isinstance(exc, DuplicateId):
            raise
        raise MalformedMeta(f"inconsistent report: {exc}") from None
