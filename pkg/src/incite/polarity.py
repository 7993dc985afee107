"""User polarity measures.

Follower polarity tests how far a user's politician-following split leans
from the overall politician population split, via a goodness-of-fit
chi-square on the two observed counts.  Retweet polarity is the absolute
weighted mean stance of a user's retweeters.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

from ._dist import chi_square_sf
from .corpus import ParseResult
from .errors import DataError
from .graph import RetweetGraph

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.005


@dataclass(frozen=True, slots=True)
class PartyFollowing:
    """One user's politician-following counts against population totals."""

    bjp_followed: int
    inc_followed: int
    bjp_total: int
    inc_total: int

    def __post_init__(self) -> None:
        for name in ("bjp_followed", "inc_followed", "bjp_total", "inc_total"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.bjp_total + self.inc_total == 0:
            raise ValueError("politician population totals are both zero")
        if self.bjp_followed > self.bjp_total:
            raise ValueError("bjp_followed exceeds bjp_total")
        if self.inc_followed > self.inc_total:
            raise ValueError("inc_followed exceeds inc_total")


class FollowerPolarityParts(NamedTuple):
    chi_square: float
    p_value: float
    expected_bjp: float
    expected_inc: float


def follower_polarity_parts(pf: PartyFollowing) -> FollowerPolarityParts:
    """Chi-square goodness of fit of one user's following split against the
    population proportion, with one degree of freedom."""
    followed = pf.bjp_followed + pf.inc_followed
    if followed == 0:
        return FollowerPolarityParts(0.0, 1.0, 0.0, 0.0)
    total = pf.bjp_total + pf.inc_total
    expected_bjp = followed * pf.bjp_total / total
    expected_inc = followed * pf.inc_total / total
    chi2 = 0.0
    for observed, expected in (
        (pf.bjp_followed, expected_bjp),
        (pf.inc_followed, expected_inc),
    ):
        if expected > 0.0:
            chi2 += (observed - expected) ** 2 / expected
        elif observed > 0.0:
            chi2 = math.inf
    p = 0.0 if math.isinf(chi2) else chi_square_sf(chi2, 1.0)
    return FollowerPolarityParts(chi2, p, expected_bjp, expected_inc)


def follower_polarity(pf: PartyFollowing, alpha: float = DEFAULT_ALPHA) -> float:
    """Log-scaled chi-square when the deviation is significant, else 0.

    score = ln(1 + chi^2) if p <= alpha, 0 otherwise.  A user following
    politicians exactly in the population proportion scores exactly 0.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    parts = follower_polarity_parts(pf)
    if math.isinf(parts.chi_square):
        return math.inf
    if parts.p_value <= alpha:
        return math.log1p(parts.chi_square)
    return 0.0


def retweet_polarity(
    author: str,
    retweeters: Iterable[tuple[str, int]],
    stances: Mapping[str, float],
) -> float | None:
    """Absolute weighted mean stance of an author's retweeters.

    Weights are retweet counts; retweeters without a stance are skipped.
    Returns ``None`` when no retweeter carries a stance (undefined).
    """
    weighted = 0.0
    mass = 0.0
    for user, weight in retweeters:
        if weight <= 0:
            raise ValueError(f"retweet weight for {user} must be positive")
        stance = stances.get(user)
        if stance is None:
            continue
        weighted += weight * stance
        mass += weight
    if mass == 0.0:
        log.debug("no stanced retweeters for %s", author)
        return None
    return abs(weighted) / mass


def retweet_polarity_by_author(
    g: RetweetGraph, stances: Mapping[str, float]
) -> dict[str, float]:
    """Retweet polarity for every graph node where it is defined."""
    incoming: dict[int, list[tuple[str, int]]] = {}
    for s, d, w in zip(g.edge_src, g.edge_dst, g.edge_weight):
        incoming.setdefault(int(d), []).append((g.nodes[s], int(w)))
    out: dict[str, float] = {}
    for i, user in enumerate(g.nodes):
        value = retweet_polarity(user, incoming.get(i, []), stances)
        if value is not None:
            out[user] = value
    return out


def parse_stances(lines: Iterable[str]) -> ParseResult:
    """Parse a stance JSONL stream into (user_id, stance) pairs.

    Stances must lie in [-1, 1]; rows that do not are skipped.  Duplicate
    users keep the first stance.
    """
    records: list[tuple[str, float]] = []
    seen: set[str] = set()
    skipped = 0
    try:
        for line in lines:
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                uid = row["user_id"]
                stance = row["stance"]
                if not (isinstance(uid, str) and uid):
                    raise ValueError("bad user_id")
                if isinstance(stance, bool) or not isinstance(stance, (int, float)):
                    raise ValueError("stance must be a number")
                stance = float(stance)
                if not -1.0 <= stance <= 1.0:
                    raise ValueError(f"stance {stance} outside [-1, 1]")
            except (ValueError, KeyError, TypeError) as exc:
                skipped += 1
                log.warning("skipping malformed stance row: %s", exc)
                continue
            if uid in seen:
                skipped += 1
                log.warning("skipping duplicate stance for user %s", uid)
                continue
            seen.add(uid)
            records.append((uid, stance))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"unreadable stance stream: {exc}") from exc
    return ParseResult(records, skipped)


def parse_party_following(lines: Iterable[str]) -> ParseResult:
    """Parse per-user politician-following counts from JSONL rows with
    ``user_id``, ``bjp``, and ``inc`` fields."""
    records: list[tuple[str, int, int]] = []
    seen: set[str] = set()
    skipped = 0
    try:
        for line in lines:
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                uid = row["user_id"]
                bjp = row["bjp"]
                inc = row["inc"]
                if not (isinstance(uid, str) and uid):
                    raise ValueError("bad user_id")
                for name, value in (("bjp", bjp), ("inc", inc)):
                    if (
                        isinstance(value, bool)
                        or not isinstance(value, int)
                        or value < 0
                    ):
                        raise ValueError(f"bad {name} count")
            except (ValueError, KeyError, TypeError) as exc:
                skipped += 1
                log.warning("skipping malformed party-following row: %s", exc)
                continue
            if uid in seen:
                skipped += 1
                log.warning("skipping duplicate party-following row for %s", uid)
                continue
            seen.add(uid)
            records.append((uid, bjp, inc))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"unreadable party-following stream: {exc}") from exc
    return ParseResult(records, skipped)
