"""Dual-annotation handling: label resolution, inter-annotator agreement,
and per-user dangerous tweet counts.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import ParseResult, Tweet
from .errors import DataError, DegenerateStatisticWarning

log = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class AnnotationPair:
    """Two independent binary judgements for one tweet."""

    tweet_id: str
    label_a: bool
    label_b: bool


def parse_annotations(lines: Iterable[str]) -> ParseResult:
    """Parse an annotation JSONL stream into ``AnnotationPair`` records.

    Malformed rows and duplicate tweet ids are skipped with a warning.
    """
    records: list[AnnotationPair] = []
    seen: set[str] = set()
    skipped = 0
    try:
        for line in lines:
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                tid = row["tweet_id"]
                a = row["label_a"]
                b = row["label_b"]
                if not (isinstance(tid, str) and tid):
                    raise ValueError("bad tweet_id")
                if not (isinstance(a, bool) and isinstance(b, bool)):
                    raise ValueError("labels must be booleans")
            except (ValueError, KeyError, TypeError) as exc:
                skipped += 1
                log.warning("skipping malformed annotation row: %s", exc)
                continue
            if tid in seen:
                skipped += 1
                log.warning("skipping duplicate annotation for tweet %s", tid)
                continue
            seen.add(tid)
            records.append(AnnotationPair(tid, a, b))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"unreadable annotation stream: {exc}") from exc
    return ParseResult(records, skipped)


def resolve_label(pair: AnnotationPair) -> bool:
    """Final label for a dually annotated tweet: dangerous only if both
    annotators marked it dangerous."""
    return pair.label_a and pair.label_b


def cohens_kappa(pairs: Sequence[AnnotationPair]) -> float:
    """Cohen's kappa over binary annotation pairs.

    kappa = (p_o - p_e) / (1 - p_e) with p_e from the annotators' marginal
    yes rates.  When both marginals are degenerate (p_e = 1) the quotient is
    guarded: returns 1.0 if the raters agree everywhere, else 0.0, with a
    ``DegenerateStatisticWarning``.
    """
    n = len(pairs)
    if n == 0:
        raise ValueError("cohens_kappa requires at least one annotation pair")
    agree = sum(1 for p in pairs if p.label_a == p.label_b)
    yes_a = sum(1 for p in pairs if p.label_a)
    yes_b = sum(1 for p in pairs if p.label_b)
    p_o = agree / n
    pa = yes_a / n
    pb = yes_b / n
    p_e = pa * pb + (1.0 - pa) * (1.0 - pb)
    if p_e == 1.0:
        warnings.warn(
            "degenerate marginals in Cohen's kappa (p_e = 1)",
            DegenerateStatisticWarning,
            stacklevel=2,
        )
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def resolve_all(pairs: Iterable[AnnotationPair]) -> dict[str, bool]:
    """Map tweet id to its resolved label."""
    return {p.tweet_id: resolve_label(p) for p in pairs}


def danger_counts(
    tweets: Iterable[Tweet], labels: Mapping[str, bool]
) -> dict[str, int]:
    """Per-author count of tweets resolved as dangerous.

    Every distinct tweet author gets an entry, zero included.  Tweets with
    no resolved label count as not dangerous.
    """
    counts: dict[str, int] = {}
    for tweet in tweets:
        counts.setdefault(tweet.user_id, 0)
        if labels.get(tweet.id, False):
            counts[tweet.user_id] += 1
    return counts


def dangerous_users(counts: Mapping[str, int]) -> set[str]:
    """Users with at least one dangerous tweet."""
    return {user for user, n in counts.items() if n >= 1}
