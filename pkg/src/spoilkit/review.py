"""Human review of fuzzy answer spans over HTTP.

Fuzzy matches are never exported without a human decision.  This module
serves the needs_review queue to an annotator (the browser UI lives in
frontend/), and records accept/reject/adjust decisions in an append-only
JSONL log, fsynced before each request is acknowledged.  On startup the
log is replayed to rebuild state, so a crash loses at most the decision
that was never acknowledged.  Re-deciding an example appends a new line;
the latest decision wins while the full history stays on disk.

HTTP API (JSON bodies, UTF-8):

    GET  /api/queue?limit=N            next N pending examples
    GET  /api/examples/{id}            full example + decision history
    POST /api/examples/{id}/decision   {action, adjusted_span?, reviewer}
    GET  /api/stats                    queue counts

Adjusted spans are re-scored server-side with the same window-F1 function
the labeler uses, and the new score is stored with the decision.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, unquote, urlparse

from .jsonio import dumps_line
from .spanlab import LabeledExample, read_labeled, score_span

__all__ = [
    "ReviewDecision",
    "ReviewQueueState",
    "ReviewStore",
    "LogCorruptError",
    "UnknownExampleError",
    "InvalidDecisionError",
    "decision_to_dict",
    "decision_from_dict",
    "read_decision_log",
    "latest_decisions",
    "apply_decisions",
    "create_server",
    "serve",
]

log = logging.getLogger(__name__)

ACTIONS = ("accept", "reject", "adjust")


class LogCorruptError(ValueError):
    """The decision log has an unreadable or invalid line."""


class UnknownExampleError(KeyError):
    """Decision referenced an example id that does not exist."""


class InvalidDecisionError(ValueError):
    """Decision payload violates the rules (bad action, bad span, ...)."""


@dataclass(frozen=True)
class ReviewDecision:
    example_id: str
    action: str
    adjusted_span: tuple[int, int] | None
    reviewer: str
    decided_at: str
    score: float | None = None  # window F1 of the adjusted span


@dataclass(frozen=True)
class ReviewQueueState:
    """Counts over the needs_review set: pending has no decision yet."""

    pending: tuple[str, ...]
    decided: tuple[str, ...]
    by_action: dict[str, int]

    def as_dict(self) -> dict:
        return {
            "pending": len(self.pending),
            "decided": len(self.decided),
            "by_action": dict(self.by_action),
        }


def decision_to_dict(decision: ReviewDecision) -> dict:
    d = {
        "example_id": decision.example_id,
        "action": decision.action,
        "reviewer": decision.reviewer,
        "decided_at": decision.decided_at,
    }
    if decision.adjusted_span is not None:
        d["adjusted_span"] = list(decision.adjusted_span)
    if decision.score is not None:
        d["score"] = decision.score
    return d


def decision_from_dict(d: dict) -> ReviewDecision:
    span = d.get("adjusted_span")
    return ReviewDecision(
        example_id=str(d["example_id"]),
        action=str(d["action"]),
        adjusted_span=(int(span[0]), int(span[1])) if span is not None else None,
        reviewer=str(d.get("reviewer", "")),
        decided_at=str(d.get("decided_at", "")),
        score=float(d["score"]) if d.get("score") is not None else None,
    )


def read_decision_log(path: str | Path) -> list[ReviewDecision]:
    """Read every decision in log order; corrupt lines raise with their number."""
    decisions = []
    path = Path(path)
    if not path.exists():
        return decisions
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                decisions.append(decision_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise LogCorruptError(f"{path}: corrupt decision on line {line_no}: {exc}")
    return decisions


def latest_decisions(decisions: list[ReviewDecision]) -> dict[str, ReviewDecision]:
    """Latest-wins view of a decision sequence, keyed by example id."""
    effective: dict[str, ReviewDecision] = {}
    for decision in decisions:
        effective[decision.example_id] = decision
    return effective


def apply_decisions(
    examples: list[LabeledExample], decisions: list[ReviewDecision]
) -> list[LabeledExample]:
    """Attach each example's effective decision (for the export gate)."""
    from dataclasses import replace

    effective = latest_decisions(decisions)
    return [
        replace(e, review=effective[e.post.id]) if e.post.id in effective else e
        for e in examples
    ]


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


class ReviewStore:
    """Review state over a labeled corpus, durably logged to one JSONL file.

    Readers take the lock only for cheap snapshots; each write appends one
    log line, fsyncs, then updates in-memory state, so acknowledged
    decisions survive a crash and replay rebuilds identical state.
    """

    def __init__(self, examples: list[LabeledExample], log_path: str | Path):
        self._examples = {e.post.id: e for e in examples}
        if len(self._examples) != len(examples):
            raise ValueError("labeled file contains duplicate example ids")
        self._queue_order = [
            e.post.id for e in examples if e.span.status == "needs_review"
        ]
        self._reviewable = set(self._queue_order)
        self._history: dict[str, list[ReviewDecision]] = {}
        self._lock = threading.Lock()
        self._log_path = Path(log_path)

        for line_no, decision in enumerate(read_decision_log(self._log_path), start=1):
            try:
                self._validate(decision.example_id, decision.action, decision.adjusted_span)
            except (UnknownExampleError, InvalidDecisionError) as exc:
                raise LogCorruptError(
                    f"{self._log_path}: invalid decision on line {line_no}: {exc}"
                )
            self._remember(self._rescored(decision))

        self._log_file = open(self._log_path, "a", encoding="utf-8", newline="\n")

    # -- state ------------------------------------------------------------

    def _validate(
        self, example_id: str, action: str, adjusted_span: tuple[int, int] | None
    ) -> None:
        if example_id not in self._examples:
            raise UnknownExampleError(example_id)
        if example_id not in self._reviewable:
            raise InvalidDecisionError(
                f"example {example_id!r} is not in the review queue "
                f"(status {self._examples[example_id].span.status!r})"
            )
        if action not in ACTIONS:
            raise InvalidDecisionError(f"unknown action {action!r}")
        if action == "adjust":
            if adjusted_span is None:
                raise InvalidDecisionError("adjust requires adjusted_span")
            start, end = adjusted_span
            context = self._examples[example_id].post.context
            if not (0 <= start < end <= len(context)):
                raise InvalidDecisionError(
                    f"adjusted_span ({start}, {end}) invalid for context of "
                    f"length {len(context)}"
                )
        elif adjusted_span is not None:
            raise InvalidDecisionError(f"action {action!r} must not carry a span")

    def _rescored(self, decision: ReviewDecision) -> ReviewDecision:
        if decision.action != "adjust":
            return decision
        example = self._examples[decision.example_id]
        start, end = decision.adjusted_span
        score = score_span(example.post.context, example.post.answer, start, end)
        return ReviewDecision(
            example_id=decision.example_id,
            action=decision.action,
            adjusted_span=decision.adjusted_span,
            reviewer=decision.reviewer,
            decided_at=decision.decided_at,
            score=score,
        )

    def _remember(self, decision: ReviewDecision) -> None:
        self._history.setdefault(decision.example_id, []).append(decision)

    def record_decision(
        self,
        example_id: str,
        action: str,
        adjusted_span: tuple[int, int] | None = None,
        reviewer: str = "",
        decided_at: str | None = None,
    ) -> tuple[ReviewDecision, ReviewQueueState]:
        """Validate, durably append, then apply one decision."""
        with self._lock:
            self._validate(example_id, action, adjusted_span)
            decision = self._rescored(
                ReviewDecision(
                    example_id=example_id,
                    action=action,
                    adjusted_span=adjusted_span,
                    reviewer=reviewer,
                    decided_at=decided_at or _utc_now(),
                )
            )
            self._log_file.write(dumps_line(decision_to_dict(decision)) + "\n")
            self._log_file.flush()
            os.fsync(self._log_file.fileno())
            self._remember(decision)
            return decision, self._state()

    def _effective(self) -> dict[str, ReviewDecision]:
        return {eid: history[-1] for eid, history in self._history.items()}

    def _state(self) -> ReviewQueueState:
        effective = self._effective()
        by_action = {action: 0 for action in ACTIONS}
        for decision in effective.values():
            by_action[decision.action] += 1
        return ReviewQueueState(
            pending=tuple(i for i in self._queue_order if i not in effective),
            decided=tuple(i for i in self._queue_order if i in effective),
            by_action=by_action,
        )

    def state(self) -> ReviewQueueState:
        with self._lock:
            return self._state()

    def queue(self, limit: int = 10) -> list[LabeledExample]:
        """Next pending examples, in labeled-file order."""
        with self._lock:
            pending = self._state().pending[: max(0, limit)]
            return [self._examples[i] for i in pending]

    def example(self, example_id: str) -> LabeledExample:
        if example_id not in self._examples:
            raise UnknownExampleError(example_id)
        return self._examples[example_id]

    def history(self, example_id: str) -> list[ReviewDecision]:
        with self._lock:
            return list(self._history.get(example_id, []))

    def decisions(self) -> list[ReviewDecision]:
        """Effective (latest) decisions, for the export gate."""
        with self._lock:
            return list(self._effective().values())

    def close(self) -> None:
        self._log_file.close()


# -- HTTP layer -------------------------------------------------------------


def _example_payload(example: LabeledExample) -> dict:
    return {
        "id": example.post.id,
        "title": example.post.question,
        "answer": example.post.answer,
        "context": example.post.context,
        "span": {"start": example.span.start, "end": example.span.end},
        "score": example.span.score,
        "status": example.span.status,
    }


class _ReviewHandler(BaseHTTPRequestHandler):
    server: "ReviewServer"

    def log_message(self, format, *args):  # keep request noise out of stderr
        log.debug("%s %s", self.address_string(), format % args)

    def _send_json(self, status: int, payload: dict) -> None:
        body = (dumps_line(payload) + "\n").encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_file(self, path: Path) -> None:
        content_type = mimetypes.guess_type(str(path))[0] or "application/octet-stream"
        body = path.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        url = urlparse(self.path)
        store = self.server.store
        if url.path == "/api/stats":
            self._send_json(200, store.state().as_dict())
            return
        if url.path == "/api/queue":
            params = parse_qs(url.query)
            try:
                limit = int(params.get("limit", ["10"])[0])
            except ValueError:
                self._send_json(422, {"error": "limit must be an integer"})
                return
            cards = [_example_payload(e) for e in store.queue(limit)]
            self._send_json(200, {"examples": cards})
            return
        if url.path.startswith("/api/examples/"):
            example_id = unquote(url.path[len("/api/examples/") :])
            try:
                example = store.example(example_id)
            except UnknownExampleError:
                self._send_json(404, {"error": f"unknown example {example_id!r}"})
                return
            self._send_json(
                200,
                {
                    "example": _example_payload(example),
                    "decisions": [
                        decision_to_dict(d) for d in store.history(example_id)
                    ],
                },
            )
            return
        self._serve_static(url.path)

    def _serve_static(self, path: str) -> None:
        root = self.server.static_dir
        if root is None:
            self._send_json(404, {"error": "not found"})
            return
        relative = path.lstrip("/") or "index.html"
        candidate = (root / relative).resolve()
        if not candidate.is_relative_to(root.resolve()) or not candidate.is_file():
            self._send_json(404, {"error": "not found"})
            return
        self._send_file(candidate)

    def do_POST(self):
        url = urlparse(self.path)
        if not (url.path.startswith("/api/examples/") and url.path.endswith("/decision")):
            self._send_json(404, {"error": "not found"})
            return
        example_id = unquote(url.path[len("/api/examples/") : -len("/decision")])
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
            action = payload["action"]
            reviewer = payload.get("reviewer", "")
            raw_span = payload.get("adjusted_span")
            span = (int(raw_span[0]), int(raw_span[1])) if raw_span is not None else None
        except (json.JSONDecodeError, KeyError, ValueError, TypeError, IndexError):
            self._send_json(400, {"error": "malformed decision body"})
            return
        try:
            decision, state = self.server.store.record_decision(
                example_id, action, span, reviewer
            )
        except UnknownExampleError:
            self._send_json(404, {"error": f"unknown example {example_id!r}"})
            return
        except InvalidDecisionError as exc:
            self._send_json(422, {"error": str(exc)})
            return
        self._send_json(
            200, {"decision": decision_to_dict(decision), "stats": state.as_dict()}
        )


class ReviewServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, store: ReviewStore, static_dir: Path | None = None):
        super().__init__(address, _ReviewHandler)
        self.store = store
        self.static_dir = static_dir


def create_server(
    store: ReviewStore, bind: str = "127.0.0.1:8765", static_dir: str | Path | None = None
) -> ReviewServer:
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"bind must be host:port, got {bind!r}")
    return ReviewServer(
        (host, int(port)),
        store,
        Path(static_dir) if static_dir is not None else None,
    )


def serve(
    labeled_file: str | Path,
    log_file: str | Path,
    bind: str = "127.0.0.1:8765",
    static_dir: str | Path | None = None,
) -> None:
    """Run the review service until interrupted.

    Replays the decision log on startup (refusing to start on a corrupt
    line), then serves the API; every decision is fsynced before the
    response goes out, so shutdown at any point is safe.
    """
    store = ReviewStore(read_labeled(labeled_file), log_file)
    server = create_server(store, bind, static_dir)
    state = store.state()
    log.info(
        "review service on http://%s:%d (%d pending, %d decided)",
        *server.server_address[:2],
        len(state.pending),
        len(state.decided),
    )
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        store.close()
