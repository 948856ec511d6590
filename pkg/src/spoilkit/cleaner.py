"""Rule-based cleaning and noise-flagging of user answers.

Reddit/Facebook spoilers carry chatter that is useless for QA training:
click-count footers, "video in comments" notes, thank-yous, and posts that
criticize the article instead of answering it.  Cleaning strips the
chatter; flagging marks answers that look toxic or opinion-only.  Flags
are advisory — flagged posts stay in the corpus and are dropped at export
time by default, so the call is auditable and reversible.

Rules live in an INI-style config (see rules/default_rules.cfg): sections
[strip], [toxic], [opinion], one ``name = regex`` per line, applied
case-insensitively in file order.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .corpus import ClickbaitPost, Corpus
from .jsonio import read_jsonl, write_jsonl

__all__ = [
    "Rule",
    "RuleSet",
    "CleaningOutcome",
    "clean_answer",
    "flag_noise",
    "clean_corpus",
    "cleaning_summary",
    "write_outcomes",
    "read_outcomes",
    "flagged_ids",
]

ACTIONS = ("kept", "rewritten", "flagged_toxic", "flagged_opinion", "dropped")
FLAGGED_ACTIONS = ("flagged_toxic", "flagged_opinion")


@dataclass(frozen=True)
class Rule:
    name: str
    pattern: re.Pattern


@dataclass(frozen=True)
class CleaningOutcome:
    """What cleaning did to one post's answer."""

    post_id: str
    action: str
    rewritten_answer: str | None = None
    matched_rule: str = ""

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"unknown cleaning action {self.action!r}")
        if self.action == "rewritten" and not self.rewritten_answer:
            raise ValueError("rewritten outcome requires a non-empty rewritten_answer")
        if self.action != "kept" and not self.matched_rule:
            raise ValueError(f"action {self.action!r} requires a matched_rule")


def _compile(name: str, pattern: str) -> Rule:
    try:
        return Rule(name=name, pattern=re.compile(pattern, re.IGNORECASE))
    except re.error as exc:
        raise ValueError(f"rule {name!r}: invalid pattern {pattern!r}: {exc}")


@dataclass(frozen=True)
class RuleSet:
    strip_patterns: tuple[Rule, ...] = ()
    toxic_patterns: tuple[Rule, ...] = ()
    opinion_patterns: tuple[Rule, ...] = ()
    version: str = "0"

    @classmethod
    def empty(cls) -> "RuleSet":
        return cls()

    @classmethod
    def from_config_text(cls, text: str) -> "RuleSet":
        parser = configparser.ConfigParser(interpolation=None)
        parser.read_string(text)
        sections = {}
        for section in ("strip", "toxic", "opinion"):
            rules = []
            if parser.has_section(section):
                for name, pattern in parser.items(section):
                    rules.append(_compile(name, pattern.strip()))
            sections[section] = tuple(rules)
        version = "0"
        if parser.has_section("meta"):
            version = parser.get("meta", "version", fallback="0")
        return cls(
            strip_patterns=sections["strip"],
            toxic_patterns=sections["toxic"],
            opinion_patterns=sections["opinion"],
            version=version,
        )

    @classmethod
    def from_config(cls, path: str | Path) -> "RuleSet":
        return cls.from_config_text(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def default(cls) -> "RuleSet":
        text = (
            resources.files("spoilkit").joinpath("rules/default_rules.cfg")
            .read_text(encoding="utf-8")
        )
        return cls.from_config_text(text)


def _strip_match(match: re.Match) -> str:
    # Empty matches must not inject spaces, or answers could grow.
    return " " if match.group(0) else ""


def clean_answer(answer: str, rules: RuleSet, post_id: str = "") -> tuple[str, CleaningOutcome]:
    """Apply strip rules to one answer.

    Rules run in list order, each removing every match left to right.  If
    anything matched, the result is whitespace-collapsed and trimmed; an
    answer stripped to nothing is marked dropped.  The outcome records the
    first rule that changed the text.
    """
    if not answer:
        raise ValueError("clean_answer requires a non-empty answer")
    cleaned = answer
    first_rule = ""
    for rule in rules.strip_patterns:
        replaced = rule.pattern.sub(_strip_match, cleaned)
        if replaced != cleaned:
            if not first_rule:
                first_rule = rule.name
            cleaned = replaced
    if not first_rule:
        return answer, CleaningOutcome(post_id=post_id, action="kept")
    cleaned = " ".join(cleaned.split())
    if not cleaned:
        return "", CleaningOutcome(
            post_id=post_id, action="dropped", matched_rule=first_rule
        )
    if cleaned == answer:
        return answer, CleaningOutcome(post_id=post_id, action="kept")
    return cleaned, CleaningOutcome(
        post_id=post_id,
        action="rewritten",
        rewritten_answer=cleaned,
        matched_rule=first_rule,
    )


def flag_noise(answer: str, rules: RuleSet, post_id: str = "") -> CleaningOutcome:
    """Flag an answer as toxic or opinion if any pattern matches.

    Toxic patterns take precedence.  Flags are advisory; export drops
    flagged examples by default but can be told to keep them.
    """
    if not answer:
        raise ValueError("flag_noise requires a non-empty answer")
    for rule in rules.toxic_patterns:
        if rule.pattern.search(answer):
            return CleaningOutcome(
                post_id=post_id, action="flagged_toxic", matched_rule=rule.name
            )
    for rule in rules.opinion_patterns:
        if rule.pattern.search(answer):
            return CleaningOutcome(
                post_id=post_id, action="flagged_opinion", matched_rule=rule.name
            )
    return CleaningOutcome(post_id=post_id, action="kept")


def clean_corpus(corpus: Corpus, rules: RuleSet) -> tuple[Corpus, list[CleaningOutcome]]:
    """Clean every post's answer; returns the new corpus plus one outcome per input post.

    Rewrites are applied in place, emptied answers drop their posts, and
    flag outcomes take precedence over the rewrite bookkeeping (the
    rewritten answer is still applied and recorded).
    """
    kept_posts: list[ClickbaitPost] = []
    outcomes: list[CleaningOutcome] = []
    for post in corpus.posts:
        cleaned, outcome = clean_answer(post.answer, rules, post_id=post.id)
        if outcome.action == "dropped":
            outcomes.append(outcome)
            continue
        flag = flag_noise(cleaned, rules, post_id=post.id)
        if flag.action != "kept":
            outcome = replace(
                flag,
                rewritten_answer=cleaned if cleaned != post.answer else None,
            )
        if cleaned != post.answer:
            post = replace(post, answer=cleaned)
        kept_posts.append(post)
        outcomes.append(outcome)
    return Corpus.from_posts(
        kept_posts,
        {"cleaning_dropped": len(corpus.posts) - len(kept_posts)}
        if len(kept_posts) != len(corpus.posts)
        else {},
    ), outcomes


def cleaning_summary(outcomes: list[CleaningOutcome]) -> dict:
    """Action histogram plus the flagged fraction over all input posts."""
    by_action = {action: 0 for action in ACTIONS}
    for outcome in outcomes:
        by_action[outcome.action] += 1
    flagged = sum(by_action[a] for a in FLAGGED_ACTIONS)
    total = len(outcomes)
    return {
        "total": total,
        "by_action": by_action,
        "flagged_fraction": flagged / total if total else 0.0,
    }


def _outcome_to_dict(outcome: CleaningOutcome) -> dict:
    d = {"post_id": outcome.post_id, "action": outcome.action}
    if outcome.rewritten_answer is not None:
        d["rewritten_answer"] = outcome.rewritten_answer
    if outcome.matched_rule:
        d["matched_rule"] = outcome.matched_rule
    return d


def write_outcomes(path: str | Path, outcomes: list[CleaningOutcome]) -> Path:
    """Cleaning report: canonical JSONL, one outcome per input post."""
    return write_jsonl(path, (_outcome_to_dict(o) for o in outcomes))


def read_outcomes(path: str | Path) -> list[CleaningOutcome]:
    return [
        CleaningOutcome(
            post_id=str(record["post_id"]),
            action=str(record["action"]),
            rewritten_answer=record.get("rewritten_answer"),
            matched_rule=record.get("matched_rule", ""),
        )
        for _, record in read_jsonl(path)
    ]


def flagged_ids(outcomes: list[CleaningOutcome]) -> set[str]:
    return {o.post_id for o in outcomes if o.action in FLAGGED_ACTIONS}
