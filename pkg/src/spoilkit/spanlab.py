"""Answer-span localization: find where the user's spoiler sits in the article.

The scraped data has (context, question, answer) but no answer span, so
extractive training data must be recovered by string-similarity search.
Exact token-sequence matches are auto-accepted when unique; ambiguous
multi-occurrence answers are rejected (they cannot be trusted as a single
span); everything else is scored by sliding token windows and either
routed to human review, or rejected as below-threshold / a holistic
summary that has no span at all.

Matching is case-insensitive and punctuation-tolerant: both sides are run
through the shared alphanumeric tokenizer, so "Cheers." finds "cheers" and
differing punctuation never blocks a match, while offsets always map back
to the raw context at token boundaries.  Defining "exact" at the token
level keeps every emitted score reproducible: re-scoring the covered slice
against the answer with the window F1 returns the stored score.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

from .corpus import ClickbaitPost, post_from_dict, post_to_dict
from .jsonio import read_jsonl, write_jsonl
from .metrics import TokenSeq, tokenize

if TYPE_CHECKING:  # runtime import would be circular; review imports spanlab
    from .review import ReviewDecision

__all__ = [
    "SpanLabel",
    "LabeledExample",
    "LabelerConfig",
    "multiset_f1",
    "score_span",
    "find_exact_span",
    "find_fuzzy_span",
    "label_example",
    "label_corpus",
    "status_histogram",
    "write_labeled",
    "read_labeled",
    "labeled_to_dict",
    "labeled_from_dict",
]

METHODS = ("exact", "fuzzy")
STATUSES = ("auto_accepted", "needs_review", "rejected")
REJECT_REASONS = ("below_threshold", "ambiguous_multiple", "answer_is_summary")


@dataclass(frozen=True)
class SpanLabel:
    """A candidate answer span: raw character offsets plus similarity score.

    Spans produced by the find_* functions carry status needs_review until
    label_example adjudicates them.
    """

    start: int
    end: int
    score: float
    method: str
    status: str = "needs_review"
    reject_reason: str | None = None

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span offsets ({self.start}, {self.end})")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"span score {self.score} outside [0, 1]")
        if self.method not in METHODS:
            raise ValueError(f"unknown span method {self.method!r}")
        if self.method == "exact" and self.score != 1.0:
            raise ValueError("exact spans must have score 1.0")
        if self.status not in STATUSES:
            raise ValueError(f"unknown span status {self.status!r}")
        if (self.status == "rejected") != (self.reject_reason is not None):
            raise ValueError("rejected status and reject_reason must appear together")
        if self.reject_reason is not None and self.reject_reason not in REJECT_REASONS:
            raise ValueError(f"unknown reject reason {self.reject_reason!r}")


@dataclass(frozen=True)
class LabeledExample:
    """A post plus its located span and, once adjudicated, the review decision."""

    post: ClickbaitPost
    span: SpanLabel
    review: "ReviewDecision | None" = None

    def __post_init__(self):
        if self.span.end > len(self.post.context):
            raise ValueError(
                f"span end {self.span.end} beyond context length "
                f"{len(self.post.context)} for post {self.post.id!r}"
            )


@dataclass(frozen=True)
class LabelerConfig:
    """Thresholds for the fuzzy matcher.

    tau: minimum window score to consider the answer locatable.
    delta: ambiguity margin — a disjoint runner-up within delta of the
        best score makes the example ambiguous.
    window_slack: windows range over answer length +/- this many tokens.
    """

    tau: float = 0.65
    delta: float = 0.05
    window_slack: int = 3

    def __post_init__(self):
        if not (0.0 < self.tau <= 1.0):
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if not (0.0 <= self.delta < self.tau):
            raise ValueError(f"delta must be in [0, tau), got {self.delta}")
        if self.window_slack < 0:
            raise ValueError(f"window_slack must be >= 0, got {self.window_slack}")


def multiset_f1(a: Sequence[str], b: Sequence[str]) -> float:
    """Token-multiset F1: 2*overlap / (|a| + |b|); 0 when both empty."""
    if not a and not b:
        return 0.0
    overlap = sum((Counter(a) & Counter(b)).values())
    return 2.0 * overlap / (len(a) + len(b))


def score_span(context: str, answer: str, start: int, end: int) -> float:
    """Window F1 of the context slice [start, end) against the answer.

    This is the scoring function used for fuzzy windows and for re-scoring
    human-adjusted spans in review.
    """
    return multiset_f1(tokenize(context[start:end]).tokens, tokenize(answer).tokens)


def _require_nfkc(name: str, text: str) -> None:
    if not unicodedata.is_normalized("NFKC", text):
        raise ValueError(f"{name} must be NFKC-normalized (ingest does this)")


def find_exact_span(context: str, answer: str) -> list[SpanLabel]:
    """All exact occurrences of the answer in the context.

    Exact means the answer's token sequence appears contiguously in the
    context's token sequence (case-insensitive, punctuation ignored as
    separators).  Offsets cover the matched tokens in the raw context, so
    surrounding punctuation is not included.  Empty list: no exact match.
    """
    if not context or not answer:
        raise ValueError("context and answer must be non-empty")
    _require_nfkc("context", context)
    _require_nfkc("answer", answer)
    ctx = tokenize(context)
    ans = tokenize(answer)
    m = len(ans)
    if m == 0:
        return []
    spans = []
    for i in range(len(ctx) - m + 1):
        if ctx.tokens[i : i + m] == ans.tokens:
            spans.append(
                SpanLabel(
                    start=ctx.offsets[i][0],
                    end=ctx.offsets[i + m - 1][1],
                    score=1.0,
                    method="exact",
                )
            )
    return spans


def _window_lengths(answer_len: int, slack: int, n_tokens: int) -> range:
    lo = max(1, answer_len - slack)
    hi = min(answer_len + slack, n_tokens)
    return range(lo, hi + 1)


def _enumerate_windows(
    ctx: TokenSeq, ans: TokenSeq, cfg: LabelerConfig, min_score: float
) -> list[tuple[float, int, int]]:
    """All (score, char_start, char_end) windows scoring >= min_score.

    Scores are maintained incrementally while the window slides: the
    clipped-overlap count changes by at most one per token added/removed.
    """
    ans_counts = Counter(ans.tokens)
    n = len(ctx)
    results: list[tuple[float, int, int]] = []
    for length in _window_lengths(len(ans), cfg.window_slack, n):
        window_counts: Counter = Counter()
        overlap = 0
        denom = length + len(ans)
        for i in range(n):
            token = ctx.tokens[i]
            if window_counts[token] < ans_counts[token]:
                overlap += 1
            window_counts[token] += 1
            if i >= length:
                old = ctx.tokens[i - length]
                window_counts[old] -= 1
                if window_counts[old] < ans_counts[old]:
                    overlap -= 1
            if i >= length - 1:
                score = 2.0 * overlap / denom
                if score >= min_score:
                    start_tok = i - length + 1
                    results.append(
                        (score, ctx.offsets[start_tok][0], ctx.offsets[i][1])
                    )
    return results


def _ranked(windows: list[tuple[float, int, int]]) -> list[tuple[float, int, int]]:
    return sorted(windows, key=lambda w: (-w[0], w[1], w[2]))


def _suppress_overlaps(
    ranked: list[tuple[float, int, int]]
) -> list[tuple[float, int, int]]:
    """Keep the best window per region: overlapping lower-scored ones go.

    Overlapping local maxima describe one region, not genuine ambiguity, so
    only character-disjoint candidates survive.
    """
    kept: list[tuple[float, int, int]] = []
    for score, start, end in ranked:
        if all(end <= ks or ke <= start for _, ks, ke in kept):
            kept.append((score, start, end))
    return kept


def find_fuzzy_span(context: str, answer: str, cfg: LabelerConfig) -> list[SpanLabel]:
    """Best-scoring disjoint token windows for a non-exact answer.

    Slides windows of the answer length +/- window_slack over the context,
    scores each by token-multiset F1 against the answer, suppresses
    overlapping candidates, and returns those scoring at least tau - delta,
    best first.  Offsets map to raw characters at token boundaries.
    """
    if not context or not answer:
        raise ValueError("context and answer must be non-empty")
    _require_nfkc("context", context)
    _require_nfkc("answer", answer)
    ctx = tokenize(context)
    ans = tokenize(answer)
    if len(ans) == 0 or len(ctx) == 0:
        return []
    windows = _enumerate_windows(ctx, ans, cfg, cfg.tau - cfg.delta)
    return [
        SpanLabel(start=start, end=end, score=score, method="fuzzy")
        for score, start, end in _suppress_overlaps(_ranked(windows))
    ]


def _best_window_any(context: str, answer: str, cfg: LabelerConfig) -> SpanLabel | None:
    """Highest-scoring window with no threshold, for rejected labels."""
    ctx = tokenize(context)
    ans = tokenize(answer)
    if len(ans) == 0 or len(ctx) == 0:
        return None
    windows = _enumerate_windows(ctx, ans, cfg, 0.0)
    if not windows:
        return None
    score, start, end = _ranked(windows)[0]
    return SpanLabel(start=start, end=end, score=score, method="fuzzy")


def label_example(post: ClickbaitPost, cfg: LabelerConfig | None = None) -> LabeledExample:
    """Locate the answer span for one cleaned post.

    Exact path: a unique exact occurrence is auto-accepted; two or more
    occurrences are rejected as ambiguous (an ambiguous span cannot be
    trusted for training).  Fuzzy path: a clear best window at or above tau
    goes to human review — never silently accepted; a disjoint runner-up
    within delta of the best means ambiguity; below tau the example is
    rejected, and below tau/2 it is classified as a summary-style answer
    with no span in the text.
    """
    cfg = cfg or LabelerConfig()
    exact = find_exact_span(post.context, post.answer)
    if len(exact) == 1:
        return LabeledExample(post=post, span=replace(exact[0], status="auto_accepted"))
    if len(exact) > 1:
        return LabeledExample(
            post=post,
            span=replace(
                exact[0], status="rejected", reject_reason="ambiguous_multiple"
            ),
        )

    candidates = find_fuzzy_span(post.context, post.answer, cfg)
    if candidates and candidates[0].score >= cfg.tau:
        best = candidates[0]
        runner_up = candidates[1] if len(candidates) > 1 else None
        if runner_up is not None and runner_up.score >= best.score - cfg.delta:
            return LabeledExample(
                post=post,
                span=replace(
                    best, status="rejected", reject_reason="ambiguous_multiple"
                ),
            )
        return LabeledExample(post=post, span=best)  # needs_review

    best = candidates[0] if candidates else _best_window_any(post.context, post.answer, cfg)
    if best is None:
        # Context or answer tokenizes to nothing; no window exists.
        return LabeledExample(
            post=post,
            span=SpanLabel(
                start=0,
                end=len(post.context),
                score=0.0,
                method="fuzzy",
                status="rejected",
                reject_reason="answer_is_summary",
            ),
        )
    reason = "answer_is_summary" if best.score < cfg.tau / 2 else "below_threshold"
    return LabeledExample(
        post=post, span=replace(best, status="rejected", reject_reason=reason)
    )


def label_corpus(
    posts: Sequence[ClickbaitPost], cfg: LabelerConfig | None = None
) -> list[LabeledExample]:
    cfg = cfg or LabelerConfig()
    return [label_example(post, cfg) for post in posts]


def status_histogram(examples: Sequence[LabeledExample]) -> dict:
    """Label-run summary: counts by status and by reject reason."""
    by_status = {status: 0 for status in STATUSES}
    by_reason: dict[str, int] = {}
    for example in examples:
        by_status[example.span.status] += 1
        if example.span.reject_reason:
            reason = example.span.reject_reason
            by_reason[reason] = by_reason.get(reason, 0) + 1
    return {"total": len(examples), "by_status": by_status, "by_reject_reason": by_reason}


def _span_to_dict(span: SpanLabel) -> dict:
    d = {
        "start": span.start,
        "end": span.end,
        "score": span.score,
        "method": span.method,
        "status": span.status,
    }
    if span.reject_reason is not None:
        d["reject_reason"] = span.reject_reason
    return d


def _span_from_dict(d: dict) -> SpanLabel:
    return SpanLabel(
        start=int(d["start"]),
        end=int(d["end"]),
        score=float(d["score"]),
        method=str(d["method"]),
        status=str(d["status"]),
        reject_reason=d.get("reject_reason"),
    )


def labeled_to_dict(example: LabeledExample) -> dict:
    d = post_to_dict(example.post)
    d["span"] = _span_to_dict(example.span)
    return d


def labeled_from_dict(d: dict) -> LabeledExample:
    post_fields = {k: v for k, v in d.items() if k != "span"}
    return LabeledExample(
        post=post_from_dict(post_fields), span=_span_from_dict(d["span"])
    )


def write_labeled(path: str | Path, examples: Sequence[LabeledExample]) -> Path:
    """Labeled output: canonical JSONL, one example per line."""
    return write_jsonl(path, (labeled_to_dict(e) for e in examples))


def read_labeled(path: str | Path) -> list[LabeledExample]:
    return [labeled_from_dict(record) for _, record in read_jsonl(path)]
