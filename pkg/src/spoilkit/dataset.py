"""Title tagging, train/validation/test splitting, and training-file export.

The labeled corpus is split 8/1/1 per source (stratified, seeded, and
deterministic) and exported two ways: a SQuAD-v2-style JSON file for
extractive trainers, where every answer is a verified character-offset
span, and a plain JSONL of (id, question, context, answer) for abstractive
trainers, which keeps summary-style answers that have no span.  A
predictions-template JSONL gives external model runners the exact id set
to fill in.

All files use canonical serialization (sorted keys, UTF-8, LF), so
re-exporting identical data is byte-identical.
"""

from __future__ import annotations

import logging
import math
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .jsonio import write_json, write_jsonl
from .metrics import tokenize
from .spanlab import LabeledExample

__all__ = [
    "TitleTag",
    "DataSplit",
    "ExportGateError",
    "tag_title",
    "split_corpus",
    "write_split",
    "read_split",
    "effective_span",
    "export_extractive",
    "parse_extractive",
    "export_abstractive",
    "export_predictions_template",
]

log = logging.getLogger(__name__)

PARTS = ("train", "validation", "test")
TAGS = ("list_style", "vague", "question_form")

_LIST_STYLE_PATTERNS = (
    re.compile(r"^\s*\d+\b"),  # "10 reasons why..."
    re.compile(r"\btop\s+\d+\b", re.IGNORECASE),  # "Top 5 things..."
    re.compile(r"\b\d+\s+(?:reasons?|things?|ways?)\b", re.IGNORECASE),
)
_INTERROGATIVES = frozenset(
    {"what", "who", "whom", "whose", "where", "when", "why", "how", "which"}
)


@dataclass(frozen=True)
class TitleTag:
    post_id: str
    tags: frozenset[str]


def tag_title(title: str, post_id: str = "") -> TitleTag:
    """Tag a clickbait title by surface shape.

    list_style: leading number, "Top N", or "N reasons/things/ways" — the
    answer is usually multi-span and resists extraction.  question_form:
    ends with "?" or starts with an interrogative.  vague: at most six
    tokens with no numeric quantity.
    """
    if not title or not title.strip():
        raise ValueError("tag_title requires a non-empty title")
    tags = set()
    if any(p.search(title) for p in _LIST_STYLE_PATTERNS):
        tags.add("list_style")
    tokens = tokenize(title).tokens
    if title.rstrip().endswith("?") or (tokens and tokens[0] in _INTERROGATIVES):
        tags.add("question_form")
    has_quantity = any(any(c.isdigit() for c in t) for t in tokens)
    if len(tokens) <= 6 and not has_quantity:
        tags.add("vague")
    return TitleTag(post_id=post_id, tags=frozenset(tags))


@dataclass(frozen=True)
class DataSplit:
    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]
    seed: int

    def part(self, name: str) -> tuple[str, ...]:
        if name not in PARTS:
            raise ValueError(f"unknown split part {name!r}, expected one of {PARTS}")
        return getattr(self, name)

    def all_ids(self) -> tuple[str, ...]:
        return self.train + self.validation + self.test


def _part_sizes(n: int) -> tuple[int, int, int]:
    """8/1/1 within integer rounding: validation rounds up, test down."""
    n_validation = math.ceil(n / 10)
    n_test = n // 10
    return n - n_validation - n_test, n_validation, n_test


def split_corpus(examples: Sequence[LabeledExample], seed: int) -> DataSplit:
    """Deterministic stratified 8/1/1 split of labeled examples.

    Examples are grouped by source so Reddit/Facebook proportions carry
    into every part; strata with fewer than 10 examples collapse into a
    shared pool (with a warning).  The same seed always yields the same
    split; the per-stratum shuffles are seeded from (seed, stratum).
    """
    if not examples:
        raise ValueError("split_corpus requires a non-empty example list")
    strata: dict[str, list[str]] = {}
    for example in examples:
        strata.setdefault(example.post.source, []).append(example.post.id)

    pooled: list[str] = []
    for source in sorted(strata):
        if len(strata[source]) < 10:
            log.warning(
                "stratum %r has %d examples (<10); collapsing into shared pool",
                source,
                len(strata[source]),
            )
            pooled.extend(strata.pop(source))
    if pooled:
        strata["__pool__"] = pooled

    train: list[str] = []
    validation: list[str] = []
    test: list[str] = []
    for source in sorted(strata):
        ids = list(strata[source])
        random.Random(f"{seed}:{source}").shuffle(ids)
        n_train, n_validation, _ = _part_sizes(len(ids))
        train.extend(ids[:n_train])
        validation.extend(ids[n_train : n_train + n_validation])
        test.extend(ids[n_train + n_validation :])
    return DataSplit(
        train=tuple(train), validation=tuple(validation), test=tuple(test), seed=seed
    )


def write_split(path: str | Path, split: DataSplit) -> Path:
    return write_json(
        path,
        {
            "seed": split.seed,
            "train": list(split.train),
            "validation": list(split.validation),
            "test": list(split.test),
        },
    )


def read_split(path: str | Path) -> DataSplit:
    import json

    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return DataSplit(
        train=tuple(d["train"]),
        validation=tuple(d["validation"]),
        test=tuple(d["test"]),
        seed=int(d["seed"]),
    )


class ExportGateError(ValueError):
    """An unverified span would have leaked into an extractive export."""


def effective_span(example: LabeledExample) -> tuple[int, int]:
    """The span to export: the reviewer's adjustment if present, else the auto span."""
    if example.review is not None and example.review.action == "adjust":
        return example.review.adjusted_span
    return example.span.start, example.span.end


def _is_admitted(example: LabeledExample) -> bool:
    """Export gate: auto-accepted, or human-reviewed accept/adjust."""
    if example.span.status == "auto_accepted":
        return True
    if example.review is not None:
        return example.review.action in ("accept", "adjust")
    return False


def _select_part(
    examples: Sequence[LabeledExample], split: DataSplit, part: str
) -> list[LabeledExample]:
    by_id = {e.post.id: e for e in examples}
    missing = [i for i in split.part(part) if i not in by_id]
    if missing:
        raise ValueError(f"split part {part!r} references unknown ids: {missing[:5]}")
    return [by_id[i] for i in split.part(part)]


def export_extractive(
    examples: Sequence[LabeledExample],
    split: DataSplit,
    part: str,
    path: str | Path,
    flagged_ids: Iterable[str] = (),
) -> Path:
    """Write the part as a SQuAD-v2-style file of verified spans.

    Includes an example iff its span was auto-accepted or a reviewer
    accepted/adjusted it; rejected examples (no trustworthy span — the
    deletion rule) and reviewer-rejected ones are silently excluded, as are
    cleaner-flagged ids.  An example still awaiting review is a hard error:
    finish the review queue before exporting.
    """
    flagged = set(flagged_ids)
    data = []
    for example in _select_part(examples, split, part):
        if example.post.id in flagged:
            continue
        if not _is_admitted(example):
            if example.span.status == "needs_review" and example.review is None:
                raise ExportGateError(
                    f"example {example.post.id!r} is still awaiting review; "
                    "decide it or re-label before exporting"
                )
            continue
        start, end = effective_span(example)
        context = example.post.context
        data.append(
            {
                "title": example.post.id,
                "paragraphs": [
                    {
                        "context": context,
                        "qas": [
                            {
                                "id": example.post.id,
                                "question": example.post.question,
                                "answers": [
                                    {
                                        "text": context[start:end],
                                        "answer_start": start,
                                    }
                                ],
                                "is_impossible": False,
                            }
                        ],
                    }
                ],
            }
        )
    return write_json(path, {"version": "v2.0", "data": data})


def parse_extractive(path: str | Path) -> list[tuple[str, str, str, str, int]]:
    """Read a SQuAD-style export back as (id, question, context, text, start).

    Validates the self-consistency contract: every answer text equals the
    context slice at its answer_start.
    """
    import json

    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    rows = []
    for article in payload["data"]:
        for paragraph in article["paragraphs"]:
            context = paragraph["context"]
            for qa in paragraph["qas"]:
                answer = qa["answers"][0]
                text, start = answer["text"], answer["answer_start"]
                if context[start : start + len(text)] != text:
                    raise ValueError(
                        f"corrupt export: answer text mismatch for id {qa['id']!r}"
                    )
                rows.append((qa["id"], qa["question"], context, text, start))
    return rows


def export_abstractive(
    examples: Sequence[LabeledExample],
    split: DataSplit,
    part: str,
    path: str | Path,
    flagged_ids: Iterable[str] = (),
) -> Path:
    """Write the part as JSONL of {id, question, context, answer}.

    Span status is irrelevant here — summary-style answers that extractive
    export excludes are exactly what an abstractive trainer wants.  Only
    cleaner-flagged ids are dropped (pass flagged_ids=() to keep them).
    """
    flagged = set(flagged_ids)
    records = (
        {
            "id": e.post.id,
            "question": e.post.question,
            "context": e.post.context,
            "answer": e.post.answer,
        }
        for e in _select_part(examples, split, part)
        if e.post.id not in flagged
    )
    return write_jsonl(path, records)


def export_predictions_template(
    examples: Sequence[LabeledExample],
    split: DataSplit,
    part: str,
    path: str | Path,
    flagged_ids: Iterable[str] = (),
) -> Path:
    """Template for external model runners: one {id, prediction: ""} per example."""
    flagged = set(flagged_ids)
    records = (
        {"id": e.post.id, "prediction": ""}
        for e in _select_part(examples, split, part)
        if e.post.id not in flagged
    )
    return write_jsonl(path, records)
