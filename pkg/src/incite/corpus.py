"""Tweet corpus handling: ingestion, text normalization, lexicon filtering,
event classification, seed keyword expansion, and term frequency ratios.

All functions are pure; parse helpers consume iterables of JSON lines and
report malformed rows instead of aborting the whole stream.
"""

from __future__ import annotations

import json
import logging
import math
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError

log = logging.getLogger(__name__)

_URL_RE = re.compile(r"(?:https?://\S+|\bt\.co/\S+)", re.IGNORECASE)

_BUILTIN_EVENTS = ("CAA_NRC", "COVID19", "FARMERS")


@dataclass(frozen=True, order=True)
class EventLabel:
    """Named event; the three built-in events sort before custom ones."""

    rank: int = field(init=False, repr=False)
    name: str

    def __post_init__(self) -> None:
        try:
            rank = _BUILTIN_EVENTS.index(self.name)
        except ValueError:
            rank = len(_BUILTIN_EVENTS)
        object.__setattr__(self, "rank", rank)

    def __str__(self) -> str:
        return self.name


CAA_NRC = EventLabel("CAA_NRC")
COVID19 = EventLabel("COVID19")
FARMERS = EventLabel("FARMERS")


@dataclass(slots=True)
class Tweet:
    id: str
    user_id: str
    raw_text: str
    normalized_text: str
    created_at: datetime
    retweet_of_user: str | None = None
    is_quote: bool = False
    event: EventLabel | None = None
    danger_label: bool | None = None

    @property
    def tokens(self) -> list[str]:
        return self.normalized_text.split()


@dataclass(slots=True)
class UserProfile:
    id: str
    statuses_count: int
    followers_count: int
    friends_count: int
    favourites_count: int
    verified: bool
    category: str  # "politician", "unknown", or an influencer kind
    party: str | None = None
    description: str = ""


@dataclass(frozen=True)
class LexiconSet:
    """Per-event matching vocabulary.

    ``lexica`` are dangerous-speech indicator terms, ``negative_lexica``
    flip a match into counter speech, ``seed_keywords`` scope tweets to the
    event.  Every term must already be in normalized form.
    """

    event: EventLabel
    target_group: str
    lexica: tuple[str, ...]
    negative_lexica: tuple[str, ...]
    seed_keywords: tuple[str, ...]


@dataclass(frozen=True)
class TermRatio:
    term_a: str
    term_b: str
    count_a: int
    count_b: int
    ratio: float


def normalize_text(raw: str) -> str:
    """Normalize tweet text for lexicon matching.

    Lowercases, strips URLs, then replaces every character that is not a
    letter, digit, combining mark, ``#`` or ``@`` with a space and collapses
    runs of whitespace.  Emoji and punctuation disappear while hashtags and
    mentions keep their sigils.  The function is idempotent.
    """
    text = _URL_RE.sub(" ", raw.lower())
    kept = [
        ch if (ch in "#@" or unicodedata.category(ch)[0] in "LMN") else " "
        for ch in text
    ]
    return " ".join("".join(kept).split())


def _phrase_count(tokens: Sequence[str], phrase: Sequence[str]) -> int:
    """Number of non-overlapping occurrences of ``phrase`` in ``tokens``."""
    if not phrase:
        return 0
    count = 0
    i = 0
    span = len(phrase)
    while i + span <= len(tokens):
        if list(tokens[i : i + span]) == list(phrase):
            count += 1
            i += span
        else:
            i += 1
    return count


def contains_term(tokens: Sequence[str], term: str) -> bool:
    """True if the normalized term occurs in ``tokens`` as a token phrase."""
    return _phrase_count(tokens, term.split()) > 0


def _require(condition: bool, line_no: int, message: str) -> None:
    if not condition:
        raise ValueError(f"line {line_no}: {message}")


def _parse_timestamp(value: str) -> datetime:
    # RFC 3339 with a trailing Z is common in exports; fromisoformat on
    # Python 3.10 only accepts numeric offsets.
    if value.endswith(("Z", "z")):
        value = value[:-1] + "+00:00"
    return datetime.fromisoformat(value)


@dataclass(frozen=True)
class ParseResult:
    """Rows that parsed cleanly plus the number of rows that did not."""

    records: list
    skipped: int


def parse_tweets(lines: Iterable[str]) -> ParseResult:
    """Parse a tweet JSONL stream into ``Tweet`` records.

    Malformed rows are skipped and logged; an unreadable stream raises
    ``DataError``.  Text is normalized at ingest.
    """
    records: list[Tweet] = []
    skipped = 0
    try:
        for line_no, line in enumerate(lines, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                _require(isinstance(row, dict), line_no, "not an object")
                tid = row["id"]
                uid = row["user_id"]
                text = row["text"]
                created = row["created_at"]
                rt_of = row.get("retweet_of_user")
                quote = row.get("is_quote", False)
                _require(isinstance(tid, str) and tid != "", line_no, "bad id")
                _require(isinstance(uid, str) and uid != "", line_no, "bad user_id")
                _require(isinstance(text, str), line_no, "bad text")
                _require(isinstance(created, str), line_no, "bad created_at")
                _require(
                    rt_of is None or (isinstance(rt_of, str) and rt_of != ""),
                    line_no,
                    "bad retweet_of_user",
                )
                _require(isinstance(quote, bool), line_no, "bad is_quote")
                stamp = _parse_timestamp(created)
            except (ValueError, KeyError, TypeError) as exc:
                skipped += 1
                log.warning("skipping malformed tweet row: %s", exc)
                continue
            records.append(
                Tweet(
                    id=tid,
                    user_id=uid,
                    raw_text=text,
                    normalized_text=normalize_text(text),
                    created_at=stamp,
                    retweet_of_user=rt_of,
                    is_quote=quote,
                )
            )
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"unreadable tweet stream: {exc}") from exc
    return ParseResult(records, skipped)


def parse_users(lines: Iterable[str]) -> ParseResult:
    """Parse a user profile JSONL stream into ``UserProfile`` records."""
    records: list[UserProfile] = []
    skipped = 0
    count_fields = (
        "statuses_count",
        "followers_count",
        "friends_count",
        "favourites_count",
    )
    try:
        for line_no, line in enumerate(lines, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                _require(isinstance(row, dict), line_no, "not an object")
                uid = row["id"]
                _require(isinstance(uid, str) and uid != "", line_no, "bad id")
                counts = {}
                for name in count_fields:
                    value = row[name]
                    _require(
                        isinstance(value, int)
                        and not isinstance(value, bool)
                        and value >= 0,
                        line_no,
                        f"bad {name}",
                    )
                    counts[name] = value
                verified = row["verified"]
                _require(isinstance(verified, bool), line_no, "bad verified")
                category = row.get("category", "unknown")
                _require(isinstance(category, str), line_no, "bad category")
                party = row.get("party")
                _require(
                    party is None or isinstance(party, str), line_no, "bad party"
                )
                description = row.get("description", "")
                _require(isinstance(description, str), line_no, "bad description")
            except (ValueError, KeyError, TypeError) as exc:
                skipped += 1
                log.warning("skipping malformed user row: %s", exc)
                continue
            records.append(
                UserProfile(
                    id=uid,
                    verified=verified,
                    category=category.strip() or "unknown",
                    party=party,
                    description=description,
                    **counts,
                )
            )
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"unreadable user stream: {exc}") from exc
    return ParseResult(records, skipped)


def load_lexicons(documents: Iterable[Mapping]) -> dict[EventLabel, LexiconSet]:
    """Build per-event lexicon sets from parsed config documents.

    Raises ``ConfigError`` for missing fields, duplicate events, or terms
    that are not already normalized.
    """
    out: dict[EventLabel, LexiconSet] = {}
    for doc in documents:
        if doc is None:
            continue
        if not isinstance(doc, Mapping):
            raise ConfigError("lexicon document is not a mapping")
        try:
            name = doc["event"]
            target = doc["target_group"]
        except KeyError as exc:
            raise ConfigError(f"lexicon document missing key {exc}") from exc
        if not isinstance(name, str) or not name:
            raise ConfigError("lexicon event name must be a non-empty string")
        label = EventLabel(name)
        if label in out:
            raise ConfigError(f"duplicate lexicon document for event {name}")
        lists: dict[str, tuple[str, ...]] = {}
        for key in ("lexica", "negative_lexica", "seed_keywords"):
            terms = doc.get(key, [])
            if not isinstance(terms, (list, tuple)) or not all(
                isinstance(t, str) and t for t in terms
            ):
                raise ConfigError(f"{name}: {key} must be a list of strings")
            for term in terms:
                if normalize_text(term) != term:
                    raise ConfigError(
                        f"{name}: term {term!r} in {key} is not normalized"
                    )
            lists[key] = tuple(dict.fromkeys(terms))
        if not lists["lexica"]:
            raise ConfigError(f"{name}: lexica must not be empty")
        if not lists["seed_keywords"]:
            raise ConfigError(f"{name}: seed_keywords must not be empty")
        out[label] = LexiconSet(
            event=label,
            target_group=str(target),
            lexica=lists["lexica"],
            negative_lexica=lists["negative_lexica"],
            seed_keywords=lists["seed_keywords"],
        )
    if not out:
        raise ConfigError("no lexicon documents found")
    return out


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors; 0.0 if either is zero."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def expand_seed_keywords(
    seeds: Iterable[str],
    embeddings: Mapping[str, np.ndarray],
    threshold: float = 0.7,
    max_iter: int = 10,
) -> set[str]:
    """Grow a seed keyword set over an embedding vocabulary.

    Each round adds every vocabulary term whose cosine similarity to some
    current member reaches ``threshold``; rounds repeat until a fixed point
    or ``max_iter``.  Seeds missing from the vocabulary are dropped with a
    warning; if none survive, raises ``ValueError``.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    if max_iter < 0:
        raise ValueError(f"max_iter must be >= 0, got {max_iter}")
    vocab = list(embeddings)
    members: set[str] = set()
    for seed in seeds:
        if seed in embeddings:
            members.add(seed)
        else:
            log.warning("seed keyword %r missing from embedding vocabulary", seed)
    if not members:
        raise ValueError("no seed keyword is present in the embedding vocabulary")
    if not vocab:
        return members
    matrix = np.array([embeddings[t] for t in vocab], dtype=float)
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = matrix / safe[:, None]
    unit[norms == 0.0] = 0.0
    index = {term: i for i, term in enumerate(vocab)}
    for _ in range(max_iter):
        member_rows = unit[[index[m] for m in sorted(members)]]
        best = (unit @ member_rows.T).max(axis=1)
        additions = {
            vocab[i]
            for i in np.flatnonzero(best >= threshold)
            if vocab[i] not in members
        }
        if not additions:
            break
        members |= additions
    return members


def classify_event(
    tweet: Tweet, keyword_sets: Mapping[EventLabel, Iterable[str]]
) -> EventLabel | None:
    """Assign the event whose keyword set matches the most distinct terms.

    Returns ``None`` when nothing matches.  Ties break toward the smaller
    label under the built-ins-first ordering.
    """
    tokens = tweet.tokens
    best: EventLabel | None = None
    best_count = 0
    for label in sorted(keyword_sets):
        count = sum(1 for term in set(keyword_sets[label]) if contains_term(tokens, term))
        if count > best_count:
            best, best_count = label, count
    return best


def filter_candidates(tweets: Sequence[Tweet], lexicon: LexiconSet) -> list[Tweet]:
    """Keep tweets that match a lexicon term and no negative term.

    Duplicate tweet ids keep the first occurrence only.  Output order
    follows input order.
    """
    seen: set[str] = set()
    kept: list[Tweet] = []
    for tweet in tweets:
        if tweet.id in seen:
            continue
        seen.add(tweet.id)
        tokens = tweet.tokens
        if not any(contains_term(tokens, term) for term in lexicon.lexica):
            continue
        if any(contains_term(tokens, term) for term in lexicon.negative_lexica):
            continue
        kept.append(tweet)
    return kept


def term_frequency_ratio(
    tweets: Iterable[Tweet], term_a: str, term_b: str
) -> TermRatio:
    """Occurrence ratio of two normalized terms across a tweet collection.

    Counts non-overlapping token-phrase occurrences.  A zero denominator
    yields ``ratio = inf`` (or ``nan`` when both counts are zero).
    """
    phrase_a = term_a.split()
    phrase_b = term_b.split()
    if not phrase_a or not phrase_b:
        raise ValueError("terms must be non-empty")
    count_a = 0
    count_b = 0
    for tweet in tweets:
        tokens = tweet.tokens
        count_a += _phrase_count(tokens, phrase_a)
        count_b += _phrase_count(tokens, phrase_b)
    if count_b > 0:
        ratio = count_a / count_b
    elif count_a > 0:
        ratio = math.inf
    else:
        ratio = math.nan
    return TermRatio(term_a, term_b, count_a, count_b, ratio)
