"""Core data model and ingestion of raw scraped dumps.

A dump is a file of (clickbait title, article, user answer) records from
one source.  Ingestion validates each record, strips HTML from article
bodies, normalizes all text to NFKC (one canonical form for every
downstream character offset), and returns an immutable Corpus.  Records
that fail validation are dropped and counted per reason, never fatal.

Dump schemas (documented bit-exactly in the README):

* JSONL: one object per line, ``{"id"?, "title", "article", "answer",
  "url"?, "fetched_at"?}``; a missing id is synthesized as a content hash.
* CSV: header row ``id,title,article,answer,url``; empty cells mean absent.
"""

from __future__ import annotations

import csv
import hashlib
import json
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone
from html.parser import HTMLParser
from pathlib import Path

from .jsonio import read_jsonl, write_jsonl

__all__ = [
    "SOURCES",
    "ClickbaitPost",
    "CorpusStats",
    "Corpus",
    "extract_article_text",
    "ingest_dump",
    "read_corpus",
    "write_corpus",
    "post_to_dict",
    "post_from_dict",
]

SOURCES = ("reddit", "facebook", "other")

# Elements whose text never belongs in an article body.
_SKIP_TAGS = frozenset(
    {"script", "style", "nav", "head", "title", "noscript", "template", "iframe", "svg"}
)
# Elements that break the text flow; boundaries become newlines.
_BLOCK_TAGS = frozenset(
    {
        "p", "div", "br", "h1", "h2", "h3", "h4", "h5", "h6",
        "li", "ul", "ol", "dl", "dt", "dd",
        "table", "thead", "tbody", "tr", "td", "th",
        "blockquote", "pre", "section", "article", "header", "footer",
        "aside", "figure", "figcaption", "hr", "main", "form",
    }
)


@dataclass(frozen=True)
class ClickbaitPost:
    """One (context, question, answer) triple with provenance.

    question is the clickbait title, context the article body, answer the
    user-written spoiler.  All three are non-empty, NFKC-normalized, and
    the context carries no HTML tags.
    """

    id: str
    source: str
    question: str
    context: str
    answer: str
    url: str | None = None
    fetched_at: datetime | None = None


@dataclass(frozen=True)
class CorpusStats:
    count: int
    per_source_counts: dict[str, int]
    dropped_count: int = 0
    drop_reasons: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Corpus:
    """Immutable ordered collection of validated posts."""

    posts: tuple[ClickbaitPost, ...]
    stats: CorpusStats

    @classmethod
    def from_posts(
        cls, posts: list[ClickbaitPost] | tuple[ClickbaitPost, ...],
        drop_reasons: dict[str, int] | None = None,
    ) -> "Corpus":
        posts = tuple(posts)
        seen: set[str] = set()
        per_source: dict[str, int] = {}
        for post in posts:
            if post.id in seen:
                raise ValueError(f"duplicate post id {post.id!r}")
            seen.add(post.id)
            per_source[post.source] = per_source.get(post.source, 0) + 1
        drop_reasons = dict(drop_reasons or {})
        return cls(
            posts=posts,
            stats=CorpusStats(
                count=len(posts),
                per_source_counts=per_source,
                dropped_count=sum(drop_reasons.values()),
                drop_reasons=drop_reasons,
            ),
        )


class _TextExtractor(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_startendtag(self, tag, attrs):
        if tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            if self._skip_depth > 0:
                self._skip_depth -= 1
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_data(self, data):
        if self._skip_depth == 0:
            self.parts.append(data)


def _extract_once(text: str) -> str:
    parser = _TextExtractor()
    parser.feed(text)
    parser.close()
    lines = []
    for raw_line in "".join(parser.parts).split("\n"):
        line = " ".join(raw_line.split())
        if line:
            lines.append(line)
    return "\n".join(lines)


def extract_article_text(raw_html: str) -> str:
    """Best-effort plain text from possibly-malformed HTML.

    Script/style/nav content is removed, block-element boundaries become
    newlines, entities are decoded, and whitespace runs collapse.  Runs to
    a fixed point, so the function is idempotent — feeding it plain text
    (or its own output) is safe.  May return "" for empty pages; callers
    decide whether that is an error.
    """
    current = raw_html
    for _ in range(16):  # decoded entities may reveal new markup; re-strip
        extracted = _extract_once(current)
        if extracted == current:
            return extracted
        current = extracted
    return current


def _normalize_inline(text: str) -> str:
    """NFKC plus whitespace collapse, for single-line fields."""
    return " ".join(unicodedata.normalize("NFKC", text).split())


def _normalize_context(text: str) -> str:
    """NFKC for extracted article text, keeping line structure."""
    normalized = unicodedata.normalize("NFKC", text)
    lines = [" ".join(line.split()) for line in normalized.split("\n")]
    return "\n".join(line for line in lines if line)


def _content_id(source: str, question: str, context: str, answer: str) -> str:
    digest = hashlib.sha1(
        "\x00".join((source, question, context, answer)).encode("utf-8")
    ).hexdigest()
    return digest[:16]


def _parse_fetched_at(value) -> datetime | None:
    if value in (None, ""):
        return None
    try:
        parsed = datetime.fromisoformat(str(value).replace("Z", "+00:00"))
    except ValueError:
        return None
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def _record_to_post(
    record: dict, source: str, split_delimiter: str | None
) -> tuple[ClickbaitPost | None, str | None]:
    """Validate one dump record. Returns (post, None) or (None, drop_reason)."""
    title = record.get("title")
    article = record.get("article")
    answer = record.get("answer")
    if title is None:
        return None, "missing_title"
    if article is None:
        return None, "missing_article"

    title = _normalize_inline(str(title))
    if split_delimiter and (answer is None or not str(answer).strip()):
        head, sep, tail = title.partition(split_delimiter)
        if sep:
            title, answer = head.strip(), tail.strip()
    if answer is None:
        return None, "missing_answer"

    question = _normalize_inline(title)
    context = _normalize_context(extract_article_text(str(article)))
    answer = _normalize_inline(str(answer))
    if not question:
        return None, "empty_title"
    if not context:
        return None, "empty_article"
    if not answer:
        return None, "empty_answer"

    raw_id = record.get("id")
    post_id = str(raw_id).strip() if raw_id not in (None, "") else ""
    if not post_id:
        post_id = _content_id(source, question, context, answer)

    url = record.get("url")
    if url in (None, ""):
        url = None
    else:
        url = str(url).strip() or None

    return (
        ClickbaitPost(
            id=post_id,
            source=source,
            question=question,
            context=context,
            answer=answer,
            url=url,
            fetched_at=_parse_fetched_at(record.get("fetched_at")),
        ),
        None,
    )


def _iter_jsonl_records(path: Path):
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                yield None
                continue
            yield record if isinstance(record, dict) else None


CSV_HEADER = ["id", "title", "article", "answer", "url"]


def _iter_csv_records(path: Path):
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or list(reader.fieldnames) != CSV_HEADER:
            raise ValueError(
                f"{path}: CSV header must be exactly {','.join(CSV_HEADER)}"
            )
        for row in reader:
            yield {k: (v if v != "" else None) for k, v in row.items() if k is not None}


def ingest_dump(
    path: str | Path,
    source: str,
    format: str = "jsonl",
    split_delimiter: str | None = None,
) -> Corpus:
    """Ingest one pre-scraped dump file into a validated Corpus.

    Invalid records are dropped and tallied in the corpus stats by reason
    (missing_*/empty_* fields, invalid_json, duplicate_id); only an
    unreadable file or unknown format/source aborts the ingest.

    split_delimiter handles forum posts that pack "title | answer" into
    the title field: when set and the record has no answer of its own, the
    title is split at the first occurrence.
    """
    if source not in SOURCES:
        raise ValueError(f"unknown source {source!r}, expected one of {SOURCES}")
    path = Path(path)
    if format == "jsonl":
        records = _iter_jsonl_records(path)
    elif format == "csv":
        records = _iter_csv_records(path)
    else:
        raise ValueError(f"unknown dump format {format!r}, expected jsonl or csv")

    posts: list[ClickbaitPost] = []
    seen_ids: set[str] = set()
    drop_reasons: dict[str, int] = {}

    def drop(reason: str) -> None:
        drop_reasons[reason] = drop_reasons.get(reason, 0) + 1

    for record in records:
        if record is None:
            drop("invalid_json")
            continue
        post, reason = _record_to_post(record, source, split_delimiter)
        if post is None:
            drop(reason)
            continue
        if post.id in seen_ids:
            drop("duplicate_id")
            continue
        seen_ids.add(post.id)
        posts.append(post)

    return Corpus.from_posts(posts, drop_reasons)


def post_to_dict(post: ClickbaitPost) -> dict:
    d = {
        "id": post.id,
        "source": post.source,
        "question": post.question,
        "context": post.context,
        "answer": post.answer,
    }
    if post.url is not None:
        d["url"] = post.url
    if post.fetched_at is not None:
        d["fetched_at"] = post.fetched_at.isoformat().replace("+00:00", "Z")
    return d


def post_from_dict(d: dict) -> ClickbaitPost:
    return ClickbaitPost(
        id=str(d["id"]),
        source=str(d["source"]),
        question=str(d["question"]),
        context=str(d["context"]),
        answer=str(d["answer"]),
        url=d.get("url"),
        fetched_at=_parse_fetched_at(d.get("fetched_at")),
    )


def write_corpus(path: str | Path, corpus: Corpus) -> Path:
    """Write the corpus as canonical JSONL, one post per line."""
    return write_jsonl(path, (post_to_dict(p) for p in corpus.posts))


def read_corpus(path: str | Path) -> Corpus:
    """Read a corpus file produced by write_corpus (sources may be mixed)."""
    posts = [post_from_dict(record) for _, record in read_jsonl(path)]
    return Corpus.from_posts(posts)
