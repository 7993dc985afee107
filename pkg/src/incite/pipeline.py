"""Pipeline stages behind the command line.

Every stage reads its inputs (raw files or artifacts written by earlier
stages), computes with the library modules, and writes artifacts into the
output directory.  Artifacts are written to a ``.partial`` file first and
renamed on success, so a failed stage never leaves a truncated final file.
A ``manifest.json`` records the config digest, input digests, parameters,
and per-stage row counts; apart from timestamps it is a pure function of
the config and inputs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import warnings
import zlib
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from functools import cached_property
from pathlib import Path
from typing import Callable, IO, Iterable, Mapping

import numpy as np
import yaml

from . import __version__
from .annotate import (
    AnnotationPair,
    cohens_kappa,
    danger_counts,
    dangerous_users,
    parse_annotations,
    resolve_all,
)
from .corpus import (
    EventLabel,
    LexiconSet,
    Tweet,
    classify_event,
    expand_seed_keywords,
    filter_candidates,
    load_lexicons,
    normalize_text,
    parse_tweets,
    parse_users,
    term_frequency_ratio,
    UserProfile,
)
from .diffusion import (
    DEFAULT_CATEGORIES,
    assign_dac,
    average_dab,
    compute_dab,
    ecdf,
    jenks_breaks,
)
from .errors import ConfigError, DataError, DegenerateStatisticWarning
from .graph import (
    RetweetGraph,
    adjacency_entries,
    build_retweet_graph,
    eigenvector_centrality,
    export_dot,
    export_gexf,
    harmonic_closeness,
    indegree_centrality,
)
from .polarity import (
    PartyFollowing,
    follower_polarity_parts,
    parse_party_following,
    parse_stances,
    retweet_polarity_by_author,
)
from .stats import group_summary, linreg, one_way_anova, tukey_hsd

log = logging.getLogger(__name__)

MERGED_SCOPE = "MERGED"
ALL_SCOPE = "ALL"
_RESERVED_EVENT_NAMES = {MERGED_SCOPE, ALL_SCOPE, ""}


@dataclass(frozen=True)
class PipelineConfig:
    """Validated run configuration; paths are resolved against the config
    file location."""

    tweets: Path
    users: Path
    annotations: Path
    lexicons: Path
    stances: Path | None = None
    party_following: Path | None = None
    embeddings: Path | None = None
    out_dir: Path = Path("out")
    seed: int = 0
    steps: int = 2
    jenks_k: int = 3
    expansion_enabled: bool = False
    expansion_threshold: float = 0.7
    expansion_max_iter: int = 10
    polarity_alpha: float = 0.005
    stats_alpha: float = 0.05
    bootstrap: int = 2000
    term_pairs: tuple[tuple[str, str], ...] = ()
    export_dot: bool = False
    threads: int | None = None


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def load_config(path: str | os.PathLike) -> PipelineConfig:
    """Load and validate a YAML run configuration."""
    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {config_path}: {exc}") from exc
    _expect(isinstance(raw, dict), "config root must be a mapping")
    known = {
        "inputs",
        "out_dir",
        "seed",
        "diffusion",
        "expansion",
        "polarity",
        "stats",
        "terms",
        "export",
    }
    unknown = set(raw) - known
    _expect(not unknown, f"unknown config key(s): {sorted(unknown)}")
    base = config_path.parent

    def resolve(value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else base / p

    inputs = raw.get("inputs")
    _expect(isinstance(inputs, dict), "config needs an 'inputs' mapping")
    required = ("tweets", "users", "annotations", "lexicons")
    optional = ("stances", "party_following", "embeddings")
    unknown = set(inputs) - set(required) - set(optional)
    _expect(not unknown, f"unknown inputs key(s): {sorted(unknown)}")
    paths: dict[str, Path | None] = {}
    for name in required:
        value = inputs.get(name)
        _expect(isinstance(value, str) and value, f"inputs.{name} must be a path")
        paths[name] = resolve(value)
    for name in optional:
        value = inputs.get(name)
        if value is None:
            paths[name] = None
        else:
            _expect(isinstance(value, str) and value, f"inputs.{name} must be a path")
            paths[name] = resolve(value)

    out_dir = raw.get("out_dir", "out")
    _expect(isinstance(out_dir, str) and out_dir, "out_dir must be a path")
    seed = raw.get("seed", 0)
    _expect(_is_int(seed) and seed >= 0, "seed must be a nonnegative integer")

    diffusion = raw.get("diffusion") or {}
    _expect(isinstance(diffusion, dict), "diffusion must be a mapping")
    steps = diffusion.get("steps", 2)
    _expect(_is_int(steps) and steps >= 1, "diffusion.steps must be an integer >= 1")
    jenks_k = diffusion.get("jenks_k", 3)
    _expect(_is_int(jenks_k) and jenks_k >= 2, "diffusion.jenks_k must be >= 2")

    expansion = raw.get("expansion") or {}
    _expect(isinstance(expansion, dict), "expansion must be a mapping")
    exp_enabled = expansion.get("enabled", False)
    _expect(isinstance(exp_enabled, bool), "expansion.enabled must be a boolean")
    exp_threshold = expansion.get("threshold", 0.7)
    _expect(
        isinstance(exp_threshold, (int, float)) and 0.0 <= float(exp_threshold) <= 1.0,
        "expansion.threshold must be in [0, 1]",
    )
    exp_max_iter = expansion.get("max_iter", 10)
    _expect(_is_int(exp_max_iter) and exp_max_iter >= 0, "expansion.max_iter must be >= 0")
    _expect(
        not exp_enabled or paths["embeddings"] is not None,
        "expansion.enabled requires inputs.embeddings",
    )

    polarity_cfg = raw.get("polarity") or {}
    _expect(isinstance(polarity_cfg, dict), "polarity must be a mapping")
    polarity_alpha = polarity_cfg.get("alpha", 0.005)
    _expect(
        isinstance(polarity_alpha, (int, float)) and 0.0 < float(polarity_alpha) < 1.0,
        "polarity.alpha must be in (0, 1)",
    )

    stats_cfg = raw.get("stats") or {}
    _expect(isinstance(stats_cfg, dict), "stats must be a mapping")
    stats_alpha = stats_cfg.get("alpha", 0.05)
    _expect(
        isinstance(stats_alpha, (int, float)) and 0.0 < float(stats_alpha) < 1.0,
        "stats.alpha must be in (0, 1)",
    )
    bootstrap = stats_cfg.get("bootstrap", 2000)
    _expect(_is_int(bootstrap) and bootstrap >= 1, "stats.bootstrap must be >= 1")

    terms = raw.get("terms") or []
    _expect(isinstance(terms, list), "terms must be a list of [term_a, term_b] pairs")
    term_pairs = []
    for pair in terms:
        _expect(
            isinstance(pair, list)
            and len(pair) == 2
            and all(isinstance(t, str) and t for t in pair),
            f"terms entry {pair!r} must be a pair of terms",
        )
        term_pairs.append((pair[0], pair[1]))

    export = raw.get("export") or {}
    _expect(isinstance(export, dict), "export must be a mapping")
    dot = export.get("dot", False)
    _expect(isinstance(dot, bool), "export.dot must be a boolean")

    return PipelineConfig(
        tweets=paths["tweets"],
        users=paths["users"],
        annotations=paths["annotations"],
        lexicons=paths["lexicons"],
        stances=paths["stances"],
        party_following=paths["party_following"],
        embeddings=paths["embeddings"],
        out_dir=resolve(out_dir),
        seed=seed,
        steps=steps,
        jenks_k=jenks_k,
        expansion_enabled=exp_enabled,
        expansion_threshold=float(exp_threshold),
        expansion_max_iter=exp_max_iter,
        polarity_alpha=float(polarity_alpha),
        stats_alpha=float(stats_alpha),
        bootstrap=bootstrap,
        term_pairs=tuple(term_pairs),
        export_dot=dot,
    )


@dataclass
class RunContext:
    """Everything a stage needs: config, the config file digest, the output
    directory, and the selected events."""

    config: PipelineConfig
    config_digest: str
    event_filter: str | None = None
    recorded_inputs: dict[str, str] = field(default_factory=dict)

    @cached_property
    def out_dir(self) -> Path:
        self.config.out_dir.mkdir(parents=True, exist_ok=True)
        return self.config.out_dir

    @cached_property
    def lexicons(self) -> dict[EventLabel, LexiconSet]:
        text = self._read_input("lexicons", self.config.lexicons)
        try:
            documents = list(yaml.safe_load_all(text))
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed lexicon YAML: {exc}") from exc
        lexicons = load_lexicons(documents)
        for label in lexicons:
            if label.name in _RESERVED_EVENT_NAMES:
                raise ConfigError(f"event name {label.name!r} is reserved")
        return lexicons

    @cached_property
    def events(self) -> list[EventLabel]:
        all_events = sorted(self.lexicons)
        if self.event_filter is None:
            return all_events
        wanted = EventLabel(self.event_filter)
        if wanted not in self.lexicons:
            raise ConfigError(
                f"--event {self.event_filter!r} is not a configured event"
            )
        return [wanted]

    def _read_input(self, name: str, path: Path) -> str:
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise DataError(f"cannot read {name} input {path}: {exc}") from exc
        self.recorded_inputs[name] = hashlib.sha256(data).hexdigest()
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataError(f"{name} input {path} is not UTF-8: {exc}") from exc

    def read_input_lines(self, name: str, path: Path) -> list[str]:
        return self._read_input(name, path).splitlines()


def _atomic_write(path: Path, write_fn: Callable[[IO], None], binary: bool = False) -> None:
    tmp = path.with_name(path.name + ".partial")
    if binary:
        handle = open(tmp, "wb")
    else:
        handle = open(tmp, "w", encoding="utf-8", newline="")
    with handle:
        write_fn(handle)
    os.replace(tmp, path)


def _fmt(value) -> str:
    """Deterministic CSV cell formatting; None becomes an empty cell."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows: Iterable[Iterable]) -> None:
    def write(f: IO) -> None:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])

    _atomic_write(path, write)


def _write_jsonl(path: Path, rows: Iterable[Mapping]) -> None:
    def write(f: IO) -> None:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True))
            f.write("\n")

    _atomic_write(path, write)


def _read_artifact_lines(ctx: RunContext, name: str, producer: str) -> list[str]:
    path = ctx.out_dir / name
    if not path.exists():
        raise DataError(f"missing artifact {name}; run '{producer}' first")
    try:
        return path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read artifact {path}: {exc}") from exc


def _tweet_to_row(t: Tweet) -> dict:
    return {
        "id": t.id,
        "user_id": t.user_id,
        "text": t.raw_text,
        "normalized": t.normalized_text,
        "created_at": t.created_at.isoformat(),
        "retweet_of_user": t.retweet_of_user,
        "is_quote": t.is_quote,
        "event": t.event.name if t.event is not None else None,
    }


def _tweet_from_row(row: Mapping) -> Tweet:
    event = row.get("event")
    return Tweet(
        id=row["id"],
        user_id=row["user_id"],
        raw_text=row["text"],
        normalized_text=row["normalized"],
        created_at=datetime.fromisoformat(row["created_at"]),
        retweet_of_user=row.get("retweet_of_user"),
        is_quote=row.get("is_quote", False),
        event=EventLabel(event) if event else None,
    )


def _read_tweet_artifact(ctx: RunContext, name: str, producer: str) -> list[Tweet]:
    tweets = []
    for line in _read_artifact_lines(ctx, name, producer):
        if not line.strip():
            continue
        try:
            tweets.append(_tweet_from_row(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"corrupt artifact {name}: {exc}") from exc
    return tweets


def _user_to_row(u: UserProfile) -> dict:
    return {
        "id": u.id,
        "statuses_count": u.statuses_count,
        "followers_count": u.followers_count,
        "friends_count": u.friends_count,
        "favourites_count": u.favourites_count,
        "verified": u.verified,
        "category": u.category,
        "party": u.party,
        "description": u.description,
    }


def _read_user_artifact(ctx: RunContext, producer: str = "ingest") -> dict[str, UserProfile]:
    users: dict[str, UserProfile] = {}
    for line in _read_artifact_lines(ctx, "users_ingested.jsonl", producer):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            users[row["id"]] = UserProfile(**row)
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"corrupt artifact users_ingested.jsonl: {exc}") from exc
    return users


def _event_tweets(tweets: list[Tweet], label: EventLabel) -> list[Tweet]:
    return [t for t in tweets if t.event == label]


def _selected_tweets(tweets: list[Tweet], events: list[EventLabel]) -> list[Tweet]:
    wanted = set(events)
    return [t for t in tweets if t.event in wanted]


# ---------------------------------------------------------------------------
# stages


def stage_ingest(ctx: RunContext) -> dict:
    cfg = ctx.config
    tweet_lines = ctx.read_input_lines("tweets", cfg.tweets)
    user_lines = ctx.read_input_lines("users", cfg.users)
    tweets = parse_tweets(tweet_lines)
    users = parse_users(user_lines)
    unique_users: dict[str, UserProfile] = {}
    duplicate_users = 0
    for profile in users.records:
        if profile.id in unique_users:
            duplicate_users += 1
            log.warning("duplicate user profile %s ignored", profile.id)
        else:
            unique_users[profile.id] = profile
    _write_jsonl(
        ctx.out_dir / "tweets_ingested.jsonl",
        (_tweet_to_row(t) for t in tweets.records),
    )
    _write_jsonl(
        ctx.out_dir / "users_ingested.jsonl",
        (_user_to_row(u) for u in unique_users.values()),
    )
    return {
        "tweets": len(tweets.records),
        "tweets_skipped": tweets.skipped,
        "users": len(unique_users),
        "users_skipped": users.skipped + duplicate_users,
    }


def _keyword_sets(ctx: RunContext) -> dict[EventLabel, set[str]]:
    cfg = ctx.config
    sets = {
        label: set(lex.seed_keywords) for label, lex in ctx.lexicons.items()
    }
    if not cfg.expansion_enabled:
        return sets
    table: dict[str, np.ndarray] = {}
    dim = None
    for line in ctx.read_input_lines("embeddings", cfg.embeddings):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            term = row["term"]
            vector = np.asarray(row["vector"], dtype=float)
            if not isinstance(term, str) or vector.ndim != 1 or vector.size == 0:
                raise ValueError("bad embedding row")
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"malformed embeddings row: {exc}") from exc
        if dim is None:
            dim = vector.size
        elif vector.size != dim:
            raise DataError(
                f"embedding for {term!r} has dimension {vector.size}, expected {dim}"
            )
        table[term] = vector
    for label, lex in ctx.lexicons.items():
        try:
            sets[label] = expand_seed_keywords(
                lex.seed_keywords,
                table,
                threshold=cfg.expansion_threshold,
                max_iter=cfg.expansion_max_iter,
            )
        except ValueError as exc:
            raise DataError(f"seed expansion failed for {label}: {exc}") from exc
    return sets


def stage_classify_events(ctx: RunContext) -> dict:
    tweets = _read_tweet_artifact(ctx, "tweets_ingested.jsonl", "ingest")
    keyword_sets = _keyword_sets(ctx)
    per_event_tweets: dict[EventLabel, int] = {label: 0 for label in sorted(keyword_sets)}
    per_event_users: dict[EventLabel, set[str]] = {
        label: set() for label in keyword_sets
    }
    unmatched = 0
    for tweet in tweets:
        label = classify_event(tweet, keyword_sets)
        tweet.event = label
        if label is None:
            unmatched += 1
        else:
            per_event_tweets[label] += 1
            per_event_users[label].add(tweet.user_id)
    _write_jsonl(
        ctx.out_dir / "tweets_classified.jsonl", (_tweet_to_row(t) for t in tweets)
    )
    summary_rows = [
        [label.name, per_event_tweets[label], len(per_event_users[label])]
        for label in sorted(keyword_sets)
    ]
    summary_rows.append(["(none)", unmatched, ""])
    _write_csv(
        ctx.out_dir / "event_summary.csv", ["event", "tweets", "users"], summary_rows
    )
    rows = {f"tweets_{label.name}": per_event_tweets[label] for label in keyword_sets}
    rows["unmatched"] = unmatched
    return rows


def stage_filter(ctx: RunContext) -> dict:
    tweets = _read_tweet_artifact(ctx, "tweets_classified.jsonl", "classify-events")
    candidate_rows: list[dict] = []
    counts: dict[str, int] = {}
    for label in ctx.events:
        kept = filter_candidates(_event_tweets(tweets, label), ctx.lexicons[label])
        counts[label.name] = len(kept)
        candidate_rows.extend(_tweet_to_row(t) for t in kept)
    _write_jsonl(ctx.out_dir / "candidates.jsonl", candidate_rows)
    _write_csv(
        ctx.out_dir / "candidate_summary.csv",
        ["event", "candidates"],
        [[name, counts[name]] for name in sorted(counts)],
    )
    return {f"candidates_{name}": n for name, n in counts.items()}


def stage_kappa(ctx: RunContext) -> dict:
    candidates = _read_tweet_artifact(ctx, "candidates.jsonl", "filter")
    pairs_result = parse_annotations(
        ctx.read_input_lines("annotations", ctx.config.annotations)
    )
    by_id: dict[str, AnnotationPair] = {p.tweet_id: p for p in pairs_result.records}
    kappa_rows: list[list] = []
    label_rows: list[dict] = []
    manifest: dict[str, object] = {"annotations_skipped": pairs_result.skipped}
    matched_ids: set[str] = set()
    for label in ctx.events:
        event_pairs = [
            by_id[t.id] for t in candidates if t.event == label and t.id in by_id
        ]
        matched_ids.update(p.tweet_id for p in event_pairs)
        if not event_pairs:
            log.warning("no annotation pairs for event %s", label)
            kappa_rows.append([label.name, 0, None, None])
            manifest[f"pairs_{label.name}"] = 0
            continue
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DegenerateStatisticWarning)
            value = cohens_kappa(event_pairs)
        degenerate = any(
            issubclass(w.category, DegenerateStatisticWarning) for w in caught
        )
        print(f"kappa[{label.name}] = {value:.4f}")
        kappa_rows.append([label.name, len(event_pairs), value, degenerate])
        manifest[f"pairs_{label.name}"] = len(event_pairs)
        resolved = resolve_all(event_pairs)
        label_rows.extend(
            {"tweet_id": t.id, "event": label.name, "label": resolved[t.id]}
            for t in candidates
            if t.event == label and t.id in resolved
        )
    _write_csv(
        ctx.out_dir / "kappa.csv",
        ["event", "pairs", "kappa", "degenerate"],
        kappa_rows,
    )
    _write_jsonl(ctx.out_dir / "labels_resolved.jsonl", label_rows)
    manifest["annotations_unmatched"] = len(by_id) - len(matched_ids)
    return manifest


def _graph_artifacts(ctx: RunContext, scope: str, g: RetweetGraph) -> None:
    _write_csv(
        ctx.out_dir / f"graph_{scope}_nodes.csv",
        ["user_id", "originals"],
        [[u, int(w)] for u, w in zip(g.nodes, g.self_weight)],
    )
    _write_csv(
        ctx.out_dir / f"graph_{scope}_edges.csv",
        ["source", "target", "weight"],
        list(g.iter_edges()),
    )
    _write_csv(
        ctx.out_dir / f"graph_{scope}_adjacency.csv",
        ["row", "col", "value"],
        list(adjacency_entries(g)),
    )


def _build_event_graphs(
    ctx: RunContext, tweets: list[Tweet]
) -> tuple[dict[EventLabel, RetweetGraph], RetweetGraph]:
    graphs = {
        label: build_retweet_graph(_event_tweets(tweets, label))
        for label in ctx.events
    }
    merged = build_retweet_graph(_selected_tweets(tweets, ctx.events))
    return graphs, merged


def stage_build_graph(ctx: RunContext) -> dict:
    tweets = _read_tweet_artifact(ctx, "tweets_classified.jsonl", "classify-events")
    graphs, merged = _build_event_graphs(ctx, tweets)
    rows: dict[str, int] = {}
    for label, g in graphs.items():
        _graph_artifacts(ctx, label.name, g)
        rows[f"nodes_{label.name}"] = g.n_nodes
        rows[f"edges_{label.name}"] = g.n_edges
    _graph_artifacts(ctx, MERGED_SCOPE, merged)
    rows["nodes_MERGED"] = merged.n_nodes
    rows["edges_MERGED"] = merged.n_edges
    return rows


def _resolved_labels(ctx: RunContext) -> dict[str, bool]:
    labels: dict[str, bool] = {}
    for line in _read_artifact_lines(ctx, "labels_resolved.jsonl", "kappa"):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            labels[row["tweet_id"]] = bool(row["label"])
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"corrupt artifact labels_resolved.jsonl: {exc}") from exc
    return labels


def stage_dab(ctx: RunContext) -> dict:
    tweets = _read_tweet_artifact(ctx, "tweets_classified.jsonl", "classify-events")
    labels = _resolved_labels(ctx)
    graphs, _ = _build_event_graphs(ctx, tweets)
    manifest: dict[str, object] = {}
    per_event_normalized: dict[EventLabel, dict[str, float]] = {}
    for label in ctx.events:
        event_tweets = _event_tweets(tweets, label)
        counts = danger_counts(event_tweets, labels)
        result = compute_dab(graphs[label], counts, steps=ctx.config.steps)
        normalized = result.normalized_by_user()
        per_event_normalized[label] = normalized
        raw = result.raw_by_user()
        _write_csv(
            ctx.out_dir / f"dab_scores_{label.name}.csv",
            ["user_id", "event", "raw", "normalized"],
            [[u, label.name, raw[u], normalized[u]] for u in result.nodes],
        )
        _write_csv(
            ctx.out_dir / f"ecdf_{label.name}.csv",
            ["value", "fraction"],
            ecdf(normalized.values()),
        )
        manifest[f"users_{label.name}"] = len(result.nodes)
        manifest[f"dangerous_tweets_{label.name}"] = sum(counts.values())
        manifest[f"dangerous_users_{label.name}"] = len(dangerous_users(counts))
        manifest[f"zero_mass_{label.name}"] = result.zero_mass
    averaged = average_dab(per_event_normalized)
    _write_csv(
        ctx.out_dir / "dab_average_scores.csv",
        ["user_id", "score"],
        [[u, averaged[u]] for u in sorted(averaged)],
    )
    manifest["users_averaged"] = len(averaged)
    return manifest


def _category_labels(k: int) -> tuple[str, ...]:
    if k == len(DEFAULT_CATEGORIES):
        return DEFAULT_CATEGORIES
    return tuple(f"C{i}" for i in range(1, k + 1))


def _read_scores(
    ctx: RunContext, name: str, producer: str, value_col: str
) -> list[dict]:
    lines = _read_artifact_lines(ctx, name, producer)
    reader = csv.DictReader(lines)
    rows = []
    for row in reader:
        try:
            row[value_col] = float(row[value_col])
        except (KeyError, ValueError) as exc:
            raise DataError(f"corrupt artifact {name}: {exc}") from exc
        rows.append(row)
    return rows


def _classify_scope(
    ctx: RunContext, scope: str, scores: Mapping[str, float]
) -> tuple[dict[str, str], tuple[float, ...], dict[str, int]]:
    k = ctx.config.jenks_k
    labels = _category_labels(k)
    thresholds = jenks_breaks(scores.values(), k=k)
    categories = assign_dac(scores, thresholds, labels)
    counts = {name: 0 for name in labels}
    for cat in categories.values():
        counts[cat] += 1
    log.info("scope %s thresholds %s counts %s", scope, thresholds, counts)
    return categories, thresholds, counts


def stage_classify(ctx: RunContext) -> dict:
    k = ctx.config.jenks_k
    labels = _category_labels(k)
    manifest: dict[str, object] = {}
    threshold_rows: list[list] = []
    for label in ctx.events:
        rows = _read_scores(
            ctx, f"dab_scores_{label.name}.csv", "dab", "normalized"
        )
        scores = {row["user_id"]: row["normalized"] for row in rows}
        categories, thresholds, counts = _classify_scope(ctx, label.name, scores)
        _write_csv(
            ctx.out_dir / f"dab_{label.name}.csv",
            ["user_id", "event", "raw", "normalized", "category"],
            [
                [
                    row["user_id"],
                    label.name,
                    float(row["raw"]),
                    row["normalized"],
                    categories[row["user_id"]],
                ]
                for row in rows
            ],
        )
        flagged = sum(counts[name] for name in labels[1:])
        threshold_rows.append(
            [
                label.name,
                k,
                ";".join(repr(t) for t in thresholds),
                ";".join(f"{name}={counts[name]}" for name in labels),
                flagged / len(scores) if scores else None,
            ]
        )
        for name in labels:
            manifest[f"{name}_{label.name}"] = counts[name]
    avg_rows = _read_scores(ctx, "dab_average_scores.csv", "dab", "score")
    avg_scores = {row["user_id"]: row["score"] for row in avg_rows}
    categories, thresholds, counts = _classify_scope(ctx, "average", avg_scores)
    _write_csv(
        ctx.out_dir / "dab_average.csv",
        ["user_id", "score", "category"],
        [[u, avg_scores[u], categories[u]] for u in sorted(avg_scores)],
    )
    flagged = sum(counts[name] for name in labels[1:])
    threshold_rows.append(
        [
            "average",
            k,
            ";".join(repr(t) for t in thresholds),
            ";".join(f"{name}={counts[name]}" for name in labels),
            flagged / len(avg_scores) if avg_scores else None,
        ]
    )
    _write_csv(
        ctx.out_dir / "thresholds.csv",
        ["scope", "k", "thresholds", "category_counts", "fraction_flagged"],
        threshold_rows,
    )
    for name in labels:
        manifest[f"{name}_average"] = counts[name]
    return manifest


def stage_polarity(ctx: RunContext) -> dict:
    cfg = ctx.config
    tweets = _read_tweet_artifact(ctx, "tweets_classified.jsonl", "classify-events")
    users = _read_user_artifact(ctx)
    _, merged = _build_event_graphs(ctx, tweets)
    stance_map: dict[str, float] = {}
    if cfg.stances is not None:
        stance_rows = parse_stances(ctx.read_input_lines("stances", cfg.stances))
        stance_map = dict(stance_rows.records)
    rt_polarity = retweet_polarity_by_author(merged, stance_map)
    bjp_total = sum(
        1 for u in users.values() if u.category == "politician" and u.party == "BJP"
    )
    inc_total = sum(
        1 for u in users.values() if u.category == "politician" and u.party == "INC"
    )
    following: dict[str, tuple[int, int]] = {}
    ignored_follow_rows = 0
    if cfg.party_following is not None:
        follow_rows = parse_party_following(
            ctx.read_input_lines("party_following", cfg.party_following)
        )
        if follow_rows.records and bjp_total + inc_total == 0:
            raise DataError(
                "party_following rows given but no politician with a party "
                "appears in the users input"
            )
        node_set = set(merged.nodes)
        for uid, bjp, inc in follow_rows.records:
            if uid in node_set:
                following[uid] = (bjp, inc)
            else:
                ignored_follow_rows += 1
    out_rows: list[list] = []
    significant_count = 0
    for user in merged.nodes:
        rt_value = rt_polarity.get(user)
        fp_value = None
        significant = None
        if user in following:
            bjp, inc = following[user]
            try:
                pf = PartyFollowing(bjp, inc, bjp_total, inc_total)
            except ValueError as exc:
                raise DataError(f"party following for {user}: {exc}") from exc
            parts = follower_polarity_parts(pf)
            significant = parts.p_value <= cfg.polarity_alpha
            fp_value = math.log1p(parts.chi_square) if significant else 0.0
            if significant:
                significant_count += 1
        out_rows.append([user, rt_value, fp_value, significant])
    _write_csv(
        ctx.out_dir / "polarity.csv",
        ["user_id", "retweet_polarity", "follower_polarity", "significant"],
        out_rows,
    )
    return {
        "users": merged.n_nodes,
        "retweet_polarity_defined": len(rt_polarity),
        "follower_polarity_defined": len(following),
        "follower_polarity_significant": significant_count,
        "party_following_ignored": ignored_follow_rows,
        "bjp_total": bjp_total,
        "inc_total": inc_total,
    }


def _centrality_rows(g: RetweetGraph) -> tuple[list[list], bool]:
    indeg = indegree_centrality(g)
    harmonic = harmonic_closeness(g)
    eigen, converged = eigenvector_centrality(g)
    rows = [
        [u, indeg[u], harmonic[u], eigen[u]]
        for u in g.nodes
    ]
    return rows, converged


def stage_centrality(ctx: RunContext) -> dict:
    tweets = _read_tweet_artifact(ctx, "tweets_classified.jsonl", "classify-events")
    graphs, merged = _build_event_graphs(ctx, tweets)
    manifest: dict[str, object] = {}
    header = ["user_id", "indegree", "harmonic_closeness", "eigenvector"]
    for label, g in graphs.items():
        rows, converged = _centrality_rows(g)
        _write_csv(ctx.out_dir / f"centrality_{label.name}.csv", header, rows)
        manifest[f"eigenvector_converged_{label.name}"] = converged
    rows, converged = _centrality_rows(merged)
    _write_csv(ctx.out_dir / "centrality_MERGED.csv", header, rows)
    manifest["eigenvector_converged_MERGED"] = converged
    return manifest


def _polarity_columns(ctx: RunContext) -> dict[str, dict[str, float]]:
    lines = _read_artifact_lines(ctx, "polarity.csv", "polarity")
    out: dict[str, dict[str, float]] = {
        "retweet_polarity": {},
        "follower_polarity": {},
    }
    for row in csv.DictReader(lines):
        for column in out:
            cell = row.get(column, "")
            if cell:
                try:
                    out[column][row["user_id"]] = float(cell)
                except ValueError as exc:
                    raise DataError(f"corrupt artifact polarity.csv: {exc}") from exc
    return out


def stage_stats(ctx: RunContext) -> dict:
    cfg = ctx.config
    users = _read_user_artifact(ctx)
    avg_rows = _read_scores(ctx, "dab_average.csv", "classify", "score")
    polarity_cols = _polarity_columns(ctx)
    labels = _category_labels(cfg.jenks_k)

    table: list[tuple[str, float, str]] = []  # user, score, category
    missing_profiles = 0
    for row in avg_rows:
        table.append((row["user_id"], row["score"], row["category"]))
        if row["user_id"] not in users:
            missing_profiles += 1

    def attribute_values(name: str) -> dict[str, float]:
        if name in polarity_cols:
            return polarity_cols[name]
        values: dict[str, float] = {}
        for user, _, _ in table:
            profile = users.get(user)
            if profile is None:
                continue
            if name == "verified":
                values[user] = 1.0 if profile.verified else 0.0
            else:
                count = getattr(profile, name.removeprefix("log_") + "_count")
                values[user] = math.log1p(count)
        return values

    attributes = [
        "log_statuses",
        "log_followers",
        "log_friends",
        "log_favourites",
        "verified",
        "retweet_polarity",
        "follower_polarity",
    ]
    reg_rows: list[list] = []
    anova_rows: list[list] = []
    hsd_rows: list[list] = []
    median_rows: list[list] = []
    for name in attributes:
        values = attribute_values(name)
        paired = [
            (score, values[user], category)
            for user, score, category in table
            if user in values
        ]
        xs = [p[0] for p in paired]
        ys = [p[1] for p in paired]
        if len(paired) >= 3 and len(set(xs)) > 1:
            reg = linreg(xs, ys)
            reg_rows.append(
                [
                    name,
                    reg.n,
                    reg.slope,
                    reg.intercept,
                    reg.t_stat,
                    reg.p_value,
                    reg.r_squared,
                    "",
                ]
            )
        else:
            reg_rows.append([name, len(paired), None, None, None, None, None, "insufficient data"])
        groups = []
        group_labels = []
        for cat in labels:
            members = [y for _, y, c in paired if c == cat]
            if len(members) >= 2:
                groups.append(members)
                group_labels.append(cat)
            if members:
                seed = (cfg.seed, zlib.crc32(f"{name}:{cat}".encode()))
                summary = group_summary(members, n_bootstrap=cfg.bootstrap, seed=seed)
                median_rows.append(
                    [name, cat, summary.n, summary.median, summary.ci_low, summary.ci_high]
                )
        if len(groups) >= 2:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateStatisticWarning)
                result = one_way_anova(groups)
            anova_rows.append(
                [
                    name,
                    ";".join(group_labels),
                    result.df_between,
                    result.df_within,
                    result.f_stat,
                    result.p_value,
                    result.degenerate,
                    "",
                ]
            )
            for pair in tukey_hsd(groups, alpha=cfg.stats_alpha):
                hsd_rows.append(
                    [
                        name,
                        group_labels[pair.group_a],
                        group_labels[pair.group_b],
                        pair.mean_diff,
                        pair.q_stat,
                        pair.q_critical,
                        pair.significant,
                    ]
                )
        else:
            anova_rows.append(
                [name, ";".join(group_labels), None, None, None, None, None, "insufficient groups"]
            )
    _write_csv(
        ctx.out_dir / "stats_regression.csv",
        ["attribute", "n", "slope", "intercept", "t_stat", "p_value", "r_squared", "note"],
        reg_rows,
    )
    _write_csv(
        ctx.out_dir / "stats_anova.csv",
        ["attribute", "groups", "df_between", "df_within", "f_stat", "p_value", "degenerate", "note"],
        anova_rows,
    )
    _write_csv(
        ctx.out_dir / "stats_hsd.csv",
        ["attribute", "group_a", "group_b", "mean_diff", "q_stat", "q_critical", "significant"],
        hsd_rows,
    )
    _write_csv(
        ctx.out_dir / "stats_medians.csv",
        ["attribute", "category", "n", "median", "ci_low", "ci_high"],
        median_rows,
    )
    return {
        "users": len(table),
        "missing_profiles": missing_profiles,
        "attributes": len(attributes),
    }


def stage_terms(ctx: RunContext) -> dict:
    tweets = _read_tweet_artifact(ctx, "tweets_classified.jsonl", "classify-events")
    rows: list[list] = []
    for scope_label in ctx.events:
        scoped = _event_tweets(tweets, scope_label)
        for term_a, term_b in ctx.config.term_pairs:
            ratio = term_frequency_ratio(scoped, term_a, term_b)
            rows.append(
                [scope_label.name, term_a, term_b, ratio.count_a, ratio.count_b, ratio.ratio]
            )
    for term_a, term_b in ctx.config.term_pairs:
        ratio = term_frequency_ratio(tweets, term_a, term_b)
        rows.append([ALL_SCOPE, term_a, term_b, ratio.count_a, ratio.count_b, ratio.ratio])
    _write_csv(
        ctx.out_dir / "term_ratios.csv",
        ["scope", "term_a", "term_b", "count_a", "count_b", "ratio"],
        rows,
    )
    return {"pairs": len(ctx.config.term_pairs)}


def _categories_for(ctx: RunContext, name: str, producer: str) -> dict[str, str]:
    lines = _read_artifact_lines(ctx, name, producer)
    out: dict[str, str] = {}
    for row in csv.DictReader(lines):
        try:
            out[row["user_id"]] = row["category"]
        except KeyError as exc:
            raise DataError(f"corrupt artifact {name}: {exc}") from exc
    return out


def stage_export_gexf(ctx: RunContext) -> dict:
    tweets = _read_tweet_artifact(ctx, "tweets_classified.jsonl", "classify-events")
    graphs, merged = _build_event_graphs(ctx, tweets)
    written = 0
    for label, g in graphs.items():
        categories = _categories_for(ctx, f"dab_{label.name}.csv", "classify")
        _atomic_write(
            ctx.out_dir / f"network_{label.name}.gexf",
            lambda f, g=g, c=categories: export_gexf(g, c, f),
            binary=True,
        )
        written += 1
        if ctx.config.export_dot:
            _atomic_write(
                ctx.out_dir / f"network_{label.name}.dot",
                lambda f, g=g, c=categories: export_dot(g, c, f),
            )
            written += 1
    categories = _categories_for(ctx, "dab_average.csv", "classify")
    _atomic_write(
        ctx.out_dir / "network_MERGED.gexf",
        lambda f: export_gexf(merged, categories, f),
        binary=True,
    )
    written += 1
    if ctx.config.export_dot:
        _atomic_write(
            ctx.out_dir / "network_MERGED.dot",
            lambda f: export_dot(merged, categories, f),
        )
        written += 1
    return {"files": written}


def stage_report(ctx: RunContext) -> dict:
    report: dict = {"version": __version__, "events": {}, "scopes": {}}
    kappa_by_event: dict[str, dict] = {}
    for row in csv.DictReader(_read_artifact_lines(ctx, "kappa.csv", "kappa")):
        kappa_by_event[row["event"]] = {
            "pairs": int(row["pairs"]),
            "kappa": float(row["kappa"]) if row["kappa"] else None,
        }
    candidates_by_event: dict[str, int] = {}
    for row in csv.DictReader(
        _read_artifact_lines(ctx, "candidate_summary.csv", "filter")
    ):
        candidates_by_event[row["event"]] = int(row["candidates"])
    thresholds_by_scope: dict[str, dict] = {}
    for row in csv.DictReader(_read_artifact_lines(ctx, "thresholds.csv", "classify")):
        thresholds_by_scope[row["scope"]] = {
            "k": int(row["k"]),
            "thresholds": [float(t) for t in row["thresholds"].split(";") if t],
            "category_counts": {
                part.split("=")[0]: int(part.split("=")[1])
                for part in row["category_counts"].split(";")
                if part
            },
            "fraction_flagged": (
                float(row["fraction_flagged"]) if row["fraction_flagged"] else None
            ),
        }
    for label in ctx.events:
        scores = _read_scores(ctx, f"dab_scores_{label.name}.csv", "dab", "normalized")
        report["events"][label.name] = {
            "users": len(scores),
            "candidates": candidates_by_event.get(label.name),
            **kappa_by_event.get(label.name, {}),
            **thresholds_by_scope.get(label.name, {}),
        }
    report["scopes"]["average"] = thresholds_by_scope.get("average", {})

    def write(f: IO) -> None:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")

    _atomic_write(ctx.out_dir / "report.json", write)
    return {"events": len(report["events"])}


STAGE_ORDER: tuple[str, ...] = (
    "ingest",
    "classify-events",
    "filter",
    "kappa",
    "build-graph",
    "dab",
    "classify",
    "polarity",
    "centrality",
    "stats",
    "terms",
    "export-gexf",
    "report",
)

STAGES: dict[str, Callable[[RunContext], dict]] = {
    "ingest": stage_ingest,
    "classify-events": stage_classify_events,
    "filter": stage_filter,
    "kappa": stage_kappa,
    "build-graph": stage_build_graph,
    "dab": stage_dab,
    "classify": stage_classify,
    "polarity": stage_polarity,
    "centrality": stage_centrality,
    "stats": stage_stats,
    "terms": stage_terms,
    "export-gexf": stage_export_gexf,
    "report": stage_report,
}


def _manifest_parameters(cfg: PipelineConfig) -> dict:
    return {
        "seed": cfg.seed,
        "steps": cfg.steps,
        "jenks_k": cfg.jenks_k,
        "expansion_enabled": cfg.expansion_enabled,
        "expansion_threshold": cfg.expansion_threshold,
        "expansion_max_iter": cfg.expansion_max_iter,
        "polarity_alpha": cfg.polarity_alpha,
        "stats_alpha": cfg.stats_alpha,
        "bootstrap": cfg.bootstrap,
        "export_dot": cfg.export_dot,
    }


def _update_manifest(ctx: RunContext, stage: str, rows: dict) -> None:
    path = ctx.out_dir / "manifest.json"
    if path.exists():
        try:
            manifest = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise DataError(f"corrupt manifest.json: {exc}") from exc
    else:
        manifest = {}
    manifest["version"] = __version__
    manifest["config_digest"] = ctx.config_digest
    manifest["parameters"] = _manifest_parameters(ctx.config)
    manifest.setdefault("inputs", {}).update(ctx.recorded_inputs)
    stages = manifest.setdefault("stages", {})
    stages[stage] = {
        "completed_at": datetime.now(timezone.utc).isoformat(),
        "rows": rows,
    }

    def write(f: IO) -> None:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")

    _atomic_write(path, write)


def run_stage(ctx: RunContext, name: str) -> dict:
    """Run one stage and record it in the manifest."""
    if name not in STAGES:
        raise ConfigError(f"unknown stage {name!r}")
    log.info("running stage %s", name)
    rows = STAGES[name](ctx)
    _update_manifest(ctx, name, rows)
    return rows


def run_all(ctx: RunContext) -> None:
    """Run every stage in dependency order."""
    for name in STAGE_ORDER:
        run_stage(ctx, name)


def make_context(
    config_path: str | os.PathLike,
    out_dir: str | os.PathLike | None = None,
    event: str | None = None,
    seed: int | None = None,
    threads: int | None = None,
) -> RunContext:
    """Load config, apply command line overrides, and build a run context."""
    cfg = load_config(config_path)
    digest = hashlib.sha256(Path(config_path).read_bytes()).hexdigest()
    replacements: dict = {}
    if out_dir is not None:
        replacements["out_dir"] = Path(out_dir)
    if seed is not None:
        _expect(seed >= 0, "seed must be a nonnegative integer")
        replacements["seed"] = seed
    if threads is not None:
        _expect(threads >= 1, "threads must be >= 1")
        replacements["threads"] = threads
    if replacements:
        cfg = replace(cfg, **replacements)
    return RunContext(config=cfg, config_digest=digest, event_filter=event)
