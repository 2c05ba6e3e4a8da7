"""Human-in-the-loop review: an HTTP service over a flag report plus an
append-only decision log.

The log is line-delimited JSON, one decision per line. The effective verdict
for an id is the last record mentioning it; replaying the file reproduces the
in-memory state exactly. Appends are flushed and fsynced before the caller
gets an acknowledgment, so every acked decision survives a crash.
"""
from __future__ import annotations

import functools
import json
import os
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping
from urllib.parse import parse_qs, unquote, urlsplit

from .docgen import VERDICT_TO_BUCKET, build_datasheet, summarize_verdicts
from .errors import BindFailure, CorruptLog, IoFailure, UnknownId, VerdictInvalid
from .scan import FlagEntry, FlagReport
from .store import AnnotationSet, CaptionSet

VERDICTS = tuple(VERDICT_TO_BUCKET)
REPORT_FILTERS = ("pending", "confirmed", "rejected", "unsure", "all")
DEFAULT_PAGE_LIMIT = 50
MAX_PAGE_LIMIT = 500

IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png", ".gif", ".webp", ".bmp")
_IMAGE_TYPES = {
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".png": "image/png",
    ".gif": "image/gif",
    ".webp": "image/webp",
    ".bmp": "image/bmp",
}
_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".svg": "image/svg+xml",
    ".map": "application/json",
    ".ico": "image/x-icon",
    ".png": "image/png",
}
_MAX_BODY_BYTES = 1 << 20

_DECISION_KEYS = frozenset({"image_id", "verdict", "timestamp", "note", "reviewer"})


@dataclass(frozen=True)
class Decision:
    """One curator verdict on one flagged image."""

    image_id: str
    verdict: str
    timestamp: int
    note: str | None = None
    reviewer: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.image_id, str) or not self.image_id:
            raise ValueError("image_id must be a non-empty string")
        if self.verdict not in VERDICTS:
            raise VerdictInvalid(
                f"verdict must be one of {VERDICTS}, got {self.verdict!r}"
            )
        if isinstance(self.timestamp, bool) or not isinstance(self.timestamp, int):
            raise ValueError("timestamp must be an integer (UTC seconds)")
        for field in ("note", "reviewer"):
            value = getattr(self, field)
            if value is not None and not isinstance(value, str):
                raise ValueError(f"{field} must be a string when present")

    def to_dict(self) -> dict:
        out = {
            "image_id": self.image_id,
            "verdict": self.verdict,
            "timestamp": self.timestamp,
        }
        if self.note is not None:
            out["note"] = self.note
        if self.reviewer is not None:
            out["reviewer"] = self.reviewer
        return out

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_dict(cls, obj) -> "Decision":
        if not isinstance(obj, dict):
            raise ValueError("decision record must be a JSON object")
        extra = set(obj) - _DECISION_KEYS
        if extra:
            raise ValueError(f"unknown fields: {sorted(extra)}")
        if "image_id" not in obj or "verdict" not in obj or "timestamp" not in obj:
            raise ValueError("decision record needs image_id, verdict, timestamp")
        return cls(
            image_id=obj["image_id"],
            verdict=obj["verdict"],
            timestamp=obj["timestamp"],
            note=obj.get("note"),
            reviewer=obj.get("reviewer"),
        )


class DecisionLog:
    """Append-only decision history backed by a line-delimited JSON file.

    A missing file is an empty log. Records whose image_id is outside
    `known_ids` are skipped during replay (counted in `skipped`); appending
    one is an error. Malformed lines abort the replay with CorruptLog.
    """

    def __init__(self, path, known_ids: Iterable[str] | None = None):
        self._path = Path(path)
        self._known = frozenset(known_ids) if known_ids is not None else None
        self._decisions: list[Decision] = []
        self._effective: dict[str, str] = {}
        self._skipped = 0
        self._fh = None
        if self._path.exists():
            self._replay()

    def _replay(self) -> None:
        with open(self._path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line.strip():
                    raise CorruptLog(lineno, "blank line")
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorruptLog(lineno, f"invalid JSON: {exc.msg}") from None
                try:
                    decision = Decision.from_dict(obj)
                except (ValueError, VerdictInvalid) as exc:
                    raise CorruptLog(lineno, str(exc)) from None
                self._absorb(decision)

    def _absorb(self, decision: Decision) -> None:
        if self._known is not None and decision.image_id not in self._known:
            self._skipped += 1
            return
        self._decisions.append(decision)
        self._effective[decision.image_id] = decision.verdict

    def append(self, decision: Decision) -> None:
        """Durably write one decision, then apply it in memory."""
        if self._known is not None and decision.image_id not in self._known:
            raise UnknownId(f"id not in the flagged set: {decision.image_id!r}")
        if self._fh is None:
            try:
                self._fh = open(self._path, "a", encoding="utf-8")
            except OSError as exc:
                raise IoFailure(f"cannot open decision log: {exc}") from None
        try:
            self._fh.write(decision.to_json_line() + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except OSError as exc:
            raise IoFailure(f"cannot append to decision log: {exc}") from None
        self._absorb(decision)

    @property
    def path(self) -> Path:
        return self._path

    @property
    def decisions(self) -> tuple:
        return tuple(self._decisions)

    @property
    def effective(self) -> Mapping[str, str]:
        """Read-only view of id -> last verdict."""
        return MappingProxyType(self._effective)

    @property
    def skipped(self) -> int:
        return self._skipped

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "DecisionLog":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def _safe_name(name: str) -> bool:
    # one path component, no traversal, nothing hidden
    if not name or name.startswith("."):
        return False
    return not any(s in name for s in ("/", "\\", "..", "\x00"))


def _parse_bind(bind_address) -> tuple[str, int]:
    if isinstance(bind_address, tuple):
        host, port = bind_address
        return str(host), int(port)
    host, _, port = str(bind_address).rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"bind address must be host:port, got {bind_address!r}")
    return host, int(port)


class _Server(ThreadingHTTPServer):
    daemon_threads = True


class ReviewService:
    """Serves a flag report for human review and records verdicts.

    Reads run concurrently; decision writes are serialized through one lock
    and acknowledged only after the log append is durable.
    """

    def __init__(
        self,
        report: FlagReport,
        *,
        log_path,
        images_dir=None,
        captions: CaptionSet | None = None,
        annotations: AnnotationSet | None = None,
        bind_address="127.0.0.1:0",
        static_dir=None,
    ):
        flagged = tuple(e for e in report.entries if e.flagged)
        if len(flagged) != report.flagged_count:
            raise ValueError(
                "report must materialize every flagged entry to be reviewable"
            )
        self._report = report
        self._flagged = flagged
        self._flagged_ids = tuple(e.id for e in flagged)
        self._id_set = frozenset(self._flagged_ids)
        self._captions = captions if captions is not None else CaptionSet(by_id={})
        self._annotations = (
            annotations if annotations is not None else AnnotationSet(by_id={})
        )
        self._images_dir = Path(images_dir) if images_dir is not None else None
        self._static_dir = (
            Path(static_dir) if static_dir is not None else Path(__file__).parent / "static"
        )
        self._log = DecisionLog(log_path, known_ids=self._id_set)
        self._lock = threading.Lock()
        datasheet = build_datasheet(
            report, self._annotations, self._captions, generated_at=0
        )
        self._clouds = {c.kind: c.to_dict() for c in datasheet.clouds}
        host, port = _parse_bind(bind_address)
        handler = functools.partial(_RequestHandler, self)
        try:
            self._server = _Server((host, port), handler)
        except OSError as exc:
            raise BindFailure(f"cannot bind {host}:{port}: {exc}") from None
        self._thread: threading.Thread | None = None
        self._loop_started = False

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._server.server_address[:2]
        return host, port

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    @property
    def log(self) -> DecisionLog:
        return self._log

    @property
    def clouds(self) -> dict:
        return self._clouds

    def start(self) -> "ReviewService":
        self._thread = threading.Thread(
            target=self._server.serve_forever,
            kwargs={"poll_interval": 0.05},
            daemon=True,
        )
        self._loop_started = True
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._loop_started = True
        self._server.serve_forever(poll_interval=0.05)

    def shutdown(self) -> None:
        # BaseServer.shutdown blocks forever unless serve_forever is running
        if self._loop_started:
            self._server.shutdown()
            self._loop_started = False
        if self._thread is not None:
            self._thread.join()
            self._thread = None
        self._server.server_close()
        self._log.close()

    def __enter__(self) -> "ReviewService":
        return self

    def __exit__(self, *exc_info) -> None:
        self.shutdown()

    # review operations

    def record_decision(
        self,
        image_id: str,
        verdict: str,
        note: str | None = None,
        reviewer: str | None = None,
        timestamp: int | None = None,
    ) -> dict:
        """Validate, durably log, and apply one verdict; returns the summary."""
        if timestamp is None:
            timestamp = int(time.time())
        decision = Decision(
            image_id=image_id,
            verdict=verdict,
            timestamp=timestamp,
            note=note,
            reviewer=reviewer,
        )
        with self._lock:
            self._log.append(decision)
            return self._summary_locked()

    def review_summary(self) -> dict:
        with self._lock:
            return self._summary_locked()

    def _summary_locked(self) -> dict:
        counts = summarize_verdicts(self._flagged_ids, self._log.effective)
        flagged = len(self._flagged_ids)
        ratio = counts.confirmed / flagged if flagged else 0.0
        return {
            "total": self._report.total_count,
            "flagged": flagged,
            "confirmed": counts.confirmed,
            "rejected": counts.rejected,
            "unsure": counts.unsure,
            "pending": counts.pending,
            "ratio": ratio,
        }

    def report_page(self, offset: int, limit: int, filter_name: str) -> dict:
        if filter_name not in REPORT_FILTERS:
            raise ValueError(f"filter must be one of {REPORT_FILTERS}")
        effective = self._log.effective
        if filter_name == "all":
            matching = list(self._flagged)
        elif filter_name == "pending":
            matching = [e for e in self._flagged if e.id not in effective]
        else:
            matching = [
                e
                for e in self._flagged
                if e.id in effective
                and VERDICT_TO_BUCKET[effective[e.id]] == filter_name
            ]
        page = matching[offset : offset + limit]
        items = [self._item(entry, effective) for entry in page]
        return {
            "items": items,
            "total": len(matching),
            "offset": offset,
            "limit": limit,
            "filter": filter_name,
        }

    def _item(self, entry: FlagEntry, effective: Mapping[str, str]) -> dict:
        return {
            "id": entry.id,
            "p": entry.p,
            "flagged": True,
            "verdict": effective.get(entry.id),
            "labels": list(self._annotations.by_id.get(entry.id, ())),
            "captions": list(self._captions.by_id.get(entry.id, ())[:3]),
            "has_image": self.image_path(entry.id) is not None,
        }

    def image_path(self, image_id: str) -> Path | None:
        if self._images_dir is None or not _safe_name(image_id):
            return None
        candidates = []
        if Path(image_id).suffix.lower() in _IMAGE_TYPES:
            candidates.append(self._images_dir / image_id)
        candidates.extend(self._images_dir / (image_id + ext) for ext in IMAGE_EXTENSIONS)
        for candidate in candidates:
            if candidate.is_file():
                return candidate
        return None

    def static_file(self, name: str) -> Path | None:
        if not _safe_name(name):
            return None
        candidate = self._static_dir / name
        return candidate if candidate.is_file() else None


class _RequestHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def __init__(self, service: ReviewService, *args, **kwargs):
        self._service = service
        super().__init__(*args, **kwargs)

    def log_message(self, format, *args) -> None:
        pass

    def _send_bytes(self, code: int, body: bytes, content_type: str) -> None:
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, code: int, obj) -> None:
        body = json.dumps(obj, ensure_ascii=False).encode("utf-8")
        self._send_bytes(code, body, "application/json; charset=utf-8")

    def _send_error_json(self, code: int, error: str, message: str) -> None:
        self._send_json(code, {"error": error, "message": message})

    def do_GET(self) -> None:
        try:
            self._route_get()
        except (BrokenPipeError, ConnectionResetError):
            pass
        except Exception as exc:  # keep the server alive on handler bugs
            try:
                self._send_error_json(500, type(exc).__name__, str(exc))
            except OSError:
                pass

    def do_POST(self) -> None:
        try:
            self._route_post()
        except (BrokenPipeError, ConnectionResetError):
            pass
        except Exception as exc:
            try:
                self._send_error_json(500, type(exc).__name__, str(exc))
            except OSError:
                pass

    def _route_get(self) -> None:
        split = urlsplit(self.path)
        path = unquote(split.path)
        if path == "/api/report":
            self._handle_report(split.query)
        elif path.startswith("/api/image/"):
            self._handle_image(path[len("/api/image/") :])
        elif path == "/api/summary":
            self._send_json(200, self._service.review_summary())
        elif path == "/api/clouds":
            self._send_json(200, {"clouds": self._service.clouds})
        elif path.startswith("/api/"):
            self._send_error_json(404, "NotFound", f"no such endpoint: {path}")
        else:
            self._handle_static(path)

    def _handle_report(self, query: str) -> None:
        params = parse_qs(query)

        def single(name, default):
            values = params.get(name)
            if not values:
                return default
            return values[-1]

        try:
            offset = int(single("offset", "0"))
            limit = int(single("limit", str(DEFAULT_PAGE_LIMIT)))
        except ValueError:
            self._send_error_json(400, "BadRequest", "offset and limit must be integers")
            return
        filter_name = single("filter", "all")
        if offset < 0 or not 1 <= limit <= MAX_PAGE_LIMIT:
            self._send_error_json(
                400,
                "BadRequest",
                f"need offset >= 0 and 1 <= limit <= {MAX_PAGE_LIMIT}",
            )
            return
        try:
            page = self._service.report_page(offset, limit, filter_name)
        except ValueError as exc:
            self._send_error_json(400, "BadRequest", str(exc))
            return
        self._send_json(200, page)

    def _handle_image(self, image_id: str) -> None:
        path = self._service.image_path(image_id)
        if path is None:
            self._send_error_json(404, "NotFound", f"no image for id {image_id!r}")
            return
        body = path.read_bytes()
        content_type = _IMAGE_TYPES.get(path.suffix.lower(), "application/octet-stream")
        self._send_bytes(200, body, content_type)

    def _handle_static(self, path: str) -> None:
        name = "index.html" if path == "/" else path.lstrip("/")
        file = self._service.static_file(name)
        if file is None:
            self._send_error_json(404, "NotFound", f"no such asset: {path}")
            return
        content_type = _STATIC_TYPES.get(file.suffix.lower(), "application/octet-stream")
        self._send_bytes(200, file.read_bytes(), content_type)

    def _route_post(self) -> None:
        path = unquote(urlsplit(self.path).path)
        if path != "/api/decision":
            self._send_error_json(404, "NotFound", f"no such endpoint: {path}")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
        except ValueError:
            length = -1
        if length <= 0:
            self._send_error_json(400, "BadRequest", "a JSON body is required")
            return
        if length > _MAX_BODY_BYTES:
            self._send_error_json(413, "BadRequest", "body too large")
            return
        try:
            obj = json.loads(self.rfile.read(length).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            self._send_error_json(400, "BadRequest", "body must be valid JSON")
            return
        if not isinstance(obj, dict):
            self._send_error_json(400, "BadRequest", "body must be a JSON object")
            return
        image_id = obj.get("image_id")
        verdict = obj.get("verdict")
        note = obj.get("note")
        reviewer = obj.get("reviewer")
        if not isinstance(image_id, str) or not isinstance(verdict, str):
            self._send_error_json(
                400, "BadRequest", "image_id and verdict must be strings"
            )
            return
        if any(v is not None and not isinstance(v, str) for v in (note, reviewer)):
            self._send_error_json(400, "BadRequest", "note and reviewer must be strings")
            return
        try:
            summary = self._service.record_decision(
                image_id, verdict, note=note, reviewer=reviewer
            )
        except VerdictInvalid as exc:
            self._send_error_json(400, "VerdictInvalid", str(exc))
            return
        except UnknownId as exc:
            self._send_error_json(404, "UnknownId", str(exc))
            return
        self._send_json(200, {"summary": summary})


def serve(
    report: FlagReport,
    images_dir=None,
    captions: CaptionSet | None = None,
    annotations: AnnotationSet | None = None,
    *,
    log_path,
    bind_address="127.0.0.1:0",
    static_dir=None,
) -> ReviewService:
    """Build a ReviewService and start it on a background thread."""
    service = ReviewService(
        report,
        log_path=log_path,
        images_dir=images_dir,
        captions=captions,
        annotations=annotations,
        bind_address=bind_address,
        static_dir=static_dir,
    )
    return service.start()
