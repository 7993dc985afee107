#!/usr/bin/env python3
"""Generate the synthetic fixture bundle used by the test suite.

Builds a deterministic 200-user corpus over three events with a planted
danger structure: per event, a handful of instigator accounts author the
dangerous candidates and retweet a few designated amplified accounts, so
diffusion concentrates scores on exactly those users while everyone else
stays at zero.  Annotation confusion counts are searched so the per-event
Cohen's kappa lands on the targets.  With --verify the script runs the
full pipeline on the freshly written bundle and asserts the tuned values.

Usage: python3 scripts/make_fixture.py --out fixture [--seed N] [--verify]
"""

from __future__ import annotations

import argparse
import json
import math
import shutil
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from incite.annotate import AnnotationPair, cohens_kappa  # noqa: E402

N_USERS = 200
KAPPA_TOL = 0.004

EVENTS = {
    "CAA_NRC": {
        "target_group": "muslims",
        "seeds": ["#caa", "nrc", "shaheenbagh"],
        "lexica": ["jihadi", "traitor", "antinational"],
        "negative": ["islamophobia"],
        "window": ("2019-12-15", "2020-03-10"),
        "participants": 160,
        "kappa": 0.92,
        "danger": [9, 8, 7, 6],       # dangerous tweets per instigator
        "dilution": [4, 3, 2, 1],     # retweet weight received per instigator
        "amplified": [
            # (originals, weight per instigator retweet, normal retweet mass)
            (10, 1, 16),
            (10, 1, 18),
            (10, 1, 20),
        ],
        "counter": 60,
        "noise": 30,
        "fraction_band": (0.03, 0.05),
    },
    "COVID19": {
        "target_group": "muslims",
        "seeds": ["#covid19", "corona", "lockdown"],
        "lexica": ["#coronajihad", "superspreader", "virus spreader"],
        "negative": ["misinformation"],
        "window": ("2020-03-25", "2020-06-30"),
        "participants": 170,
        "kappa": 0.73,
        "danger": [7],
        "dilution": [2],
        "amplified": [(10, 3, 18)],
        "counter": 50,
        "noise": 30,
        "fraction_band": (0.005, 0.02),
    },
    "FARMERS": {
        "target_group": "farmers",
        "seeds": ["#farmersprotest", "kisan", "mandi"],
        "lexica": ["khalistani", "deshdrohi"],
        "negative": ["dubbed"],
        "window": ("2020-11-26", "2021-02-15"),
        "participants": 150,
        "kappa": 0.88,
        "danger": [9, 8, 7, 6, 6],
        "dilution": [4, 3, 2, 1, 1],
        "amplified": [
            (10, 1, 15),
            (10, 1, 17),
            (10, 1, 19),
            (10, 1, 21),
        ],
        "counter": 45,
        "noise": 20,
        "fraction_band": (0.05, 0.07),
    },
}

FILLERS = [
    "today", "again", "everywhere", "openly", "sadly", "clearly", "finally",
    "quietly", "loudly", "once more", "as always", "this week", "right now",
]

NEUTRAL_TEMPLATES = [
    "people discussing {seed} developments {filler}",
    "long thread on the {seed} situation {filler}",
    "what does {seed} mean for ordinary families {filler}",
    "ground report from the {seed} gathering {filler}",
    "reading every update about {seed} {filler}",
]

DANGEROUS_TEMPLATES = [
    "these {lex} people are ruining {seed} debates and must be stopped {filler}",
    "every {lex} behind the {seed} stir deserves what is coming {filler}",
    "throw out the {lex} crowd hijacking {seed} {filler}",
    "{seed} has been overrun by {lex} muslim gangs drive them away {filler}",
]

AMBIGUOUS_TEMPLATES = [
    "is calling someone {lex} during {seed} ever justified {filler}",
    "saw another {lex} slur in a {seed} thread {filler}",
    "the word {lex} keeps trending with {seed} {filler}",
]

COUNTER_TEMPLATES = [
    "protesters are being {neg} as {lex} for joining {seed} marches {filler}",
    "stop the {neg} framing every {seed} voice as {lex} {filler}",
]

NOISE_TEXTS = [
    "good morning friends have a wonderful day",
    "match highlights were incredible last night",
    "new recipe turned out better than expected",
    "monsoon clouds over the city look beautiful",
]


def search_confusion(a: int, target: float) -> tuple[int, int, int]:
    """Find (b, c, d) disagreement/no-no counts whose kappa with ``a``
    yes-yes pairs is closest to the target."""
    best = None
    for b in range(0, 13):
        for c in range(0, 13):
            for d in range(40, 521, 1):
                n = a + b + c + d
                p_o = (a + d) / n
                pa = (a + b) / n
                pb = (a + c) / n
                p_e = pa * pb + (1 - pa) * (1 - pb)
                if p_e == 1.0:
                    continue
                kappa = (p_o - p_e) / (1 - p_e)
                err = abs(kappa - target)
                key = (err, b + c, d)
                if best is None or key < best[0]:
                    best = (key, (b, c, d))
    (err, _, _), picked = best
    if err > KAPPA_TOL:
        raise SystemExit(f"no confusion counts reach kappa {target} (err {err:.4f})")
    return picked


def iso(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class Fixture:
    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)
        self.seed = seed
        self.users = [f"u{i:04d}" for i in range(1, N_USERS + 1)]
        self.tweets: list[dict] = []
        self.annotations: list[dict] = []
        self.stances: dict[str, float] = {}
        self.party_following: dict[str, tuple[int, int]] = {}
        self.roles: dict[str, str] = {u: "normal" for u in self.users}
        self.plan: dict[str, dict] = {}
        self._tweet_seq = 0
        self._assign_roles()

    def _assign_roles(self) -> None:
        pool = list(self.users)
        self.rng.shuffle(pool)
        cursor = 0
        for name, spec in EVENTS.items():
            n_inst = len(spec["danger"])
            n_amp = len(spec["amplified"])
            instigators = pool[cursor : cursor + n_inst]
            cursor += n_inst
            amplified = pool[cursor : cursor + n_amp]
            cursor += n_amp
            for u in instigators:
                self.roles[u] = f"instigator:{name}"
            for u in amplified:
                self.roles[u] = f"amplified:{name}"
            self.plan[name] = {"instigators": instigators, "amplified": amplified}
        shared = pool[cursor:]
        for name, spec in EVENTS.items():
            exclusive = self.plan[name]["instigators"] + self.plan[name]["amplified"]
            need = spec["participants"] - len(exclusive)
            picked = list(self.rng.choice(shared, size=need, replace=False))
            self.plan[name]["normals"] = picked
        covered = set()
        for name in EVENTS:
            covered.update(self.plan[name]["normals"])
        missed = [u for u in shared if u not in covered]
        if missed:  # make sure every account tweets somewhere
            self.plan["COVID19"]["normals"].extend(missed)

    def next_id(self) -> str:
        self._tweet_seq += 1
        return f"t{self._tweet_seq:06d}"

    def add_tweet(self, user: str, text: str, window: tuple[str, str],
                  retweet_of: str | None = None, quote: bool = False) -> dict:
        lo = int(datetime.fromisoformat(window[0] + "T00:00:00+00:00").timestamp())
        hi = int(datetime.fromisoformat(window[1] + "T23:59:59+00:00").timestamp())
        row = {
            "id": self.next_id(),
            "user_id": user,
            "text": text,
            "created_at": iso(int(self.rng.integers(lo, hi))),
            "retweet_of_user": retweet_of,
            "is_quote": quote,
        }
        self.tweets.append(row)
        return row

    def pick(self, items, k=1):
        idx = self.rng.integers(0, len(items), size=k)
        chosen = [items[i] for i in idx]
        return chosen if k > 1 else chosen[0]

    def render(self, template: str, spec: dict) -> str:
        return template.format(
            seed=self.pick(spec["seeds"]),
            lex=self.pick(spec["lexica"]),
            neg=self.pick(spec["negative"]),
            filler=self.pick(FILLERS),
        )

    def build_event(self, name: str) -> None:
        spec = EVENTS[name]
        plan = self.plan[name]
        window = spec["window"]
        instigators = plan["instigators"]
        amplified = plan["amplified"]
        normals = plan["normals"]

        # neutral originals: everyone gets some, planted accounts get fixed
        # counts so the diffusion arithmetic stays on target
        neutral_by_user: dict[str, list[dict]] = {}
        for u in normals:
            n = int(self.rng.integers(3, 9))
            neutral_by_user[u] = [
                self.add_tweet(u, self.render(self.pick(NEUTRAL_TEMPLATES), spec), window)
                for _ in range(n)
            ]
        for u in instigators:
            neutral_by_user[u] = [
                self.add_tweet(u, self.render(self.pick(NEUTRAL_TEMPLATES), spec), window)
                for _ in range(6)
            ]
        for u, (n_orig, _, _) in zip(amplified, spec["amplified"]):
            neutral_by_user[u] = [
                self.add_tweet(u, self.render(self.pick(NEUTRAL_TEMPLATES), spec), window)
                for _ in range(n_orig)
            ]

        # dangerous candidates by instigators, annotated yes/yes
        dangerous_by_instigator: dict[str, list[dict]] = {}
        for u, count in zip(instigators, spec["danger"]):
            rows = [
                self.add_tweet(u, self.render(self.pick(DANGEROUS_TEMPLATES), spec), window)
                for _ in range(count)
            ]
            dangerous_by_instigator[u] = rows
            for row in rows:
                self.annotations.append(
                    {"tweet_id": row["id"], "label_a": True, "label_b": True}
                )

        # disagreement and clean-negative candidates to hit the kappa target
        a = sum(spec["danger"])
        b, c, d = search_confusion(a, spec["kappa"])
        for label_a, label_b, count in ((True, False, b), (False, True, c), (False, False, d)):
            for _ in range(count):
                author = self.pick(normals)
                row = self.add_tweet(
                    author, self.render(self.pick(AMBIGUOUS_TEMPLATES), spec), window
                )
                self.annotations.append(
                    {"tweet_id": row["id"], "label_a": label_a, "label_b": label_b}
                )

        # counter speech: matches a lexicon term plus a negative term
        for _ in range(spec["counter"]):
            self.add_tweet(
                self.pick(normals), self.render(self.pick(COUNTER_TEMPLATES), spec), window
            )

        # controlled dilution: normals retweet instigators' dangerous tweets
        audience_pool = list(normals)
        self.rng.shuffle(audience_pool)
        audience_cursor = 0
        for u, mass in zip(instigators, spec["dilution"]):
            side = 1.0 if self.rng.integers(0, 2) else -1.0
            self.stances.setdefault(u, side * float(self.rng.uniform(0.9, 0.98)))
            remaining = mass
            while remaining > 0:
                fan = audience_pool[audience_cursor % len(audience_pool)]
                audience_cursor += 1
                if fan == u:
                    continue
                original = self.pick(dangerous_by_instigator[u])
                self.add_tweet(
                    fan, f"rt @{u}: {original['text']}", window, retweet_of=u
                )
                remaining -= 1
                self.stances.setdefault(
                    fan, side * float(self.rng.uniform(0.8, 0.95))
                )

        # amplified accounts: retweeted by every instigator plus normal mass
        for m, (n_orig, weight, normal_mass) in zip(amplified, spec["amplified"]):
            for u in instigators:
                for _ in range(weight):
                    original = self.pick(neutral_by_user[m])
                    self.add_tweet(
                        u, f"rt @{m}: {original['text']}", window, retweet_of=m
                    )
            remaining = normal_mass
            while remaining > 0:
                fan = audience_pool[audience_cursor % len(audience_pool)]
                audience_cursor += 1
                if fan == m:
                    continue
                original = self.pick(neutral_by_user[m])
                self.add_tweet(
                    fan, f"rt @{m}: {original['text']}", window, retweet_of=m
                )
                remaining -= 1

        # background chatter: normals retweet each other's neutral originals
        # and a couple of quote tweets exercise the quote rule
        for u in normals:
            if self.rng.random() < 0.7:
                for _ in range(int(self.rng.integers(1, 5))):
                    other = self.pick(normals)
                    if other == u or not neutral_by_user.get(other):
                        continue
                    original = self.pick(neutral_by_user[other])
                    self.add_tweet(
                        u, f"rt @{other}: {original['text']}", window, retweet_of=other
                    )
        for _ in range(10):
            u, other = self.pick(normals, 2)
            if u == other or not neutral_by_user.get(other):
                continue
            original = self.pick(neutral_by_user[other])
            self.add_tweet(
                u,
                f"so much this {original['text']}",
                window,
                retweet_of=other,
                quote=True,
            )

        # off-topic noise that matches no event
        for _ in range(spec["noise"]):
            self.add_tweet(
                self.pick(normals), self.pick(NOISE_TEXTS), ("2020-07-01", "2020-07-31")
            )

    def finish_users(self) -> list[dict]:
        politician_pool = [u for u in self.users if self.roles[u] == "normal"]
        self.rng.shuffle(politician_pool)
        parties = ["BJP"] * 45 + ["INC"] * 35
        politicians = dict(zip(politician_pool[:80], parties))
        influencer_kinds = ["journalist", "media_house", "celebrity", "academic"]
        rows = []
        for u in self.users:
            role = self.roles[u]
            statuses = math.exp(self.rng.normal(6.2, 0.9))
            followers = math.exp(self.rng.normal(5.5, 1.2))
            friends = math.exp(self.rng.normal(5.2, 0.8))
            favourites = math.exp(self.rng.normal(5.8, 1.1))
            verified = bool(self.rng.random() < 0.08)
            category = "unknown"
            party = None
            if u in politicians:
                category = "politician"
                party = politicians[u]
                verified = bool(self.rng.random() < 0.6)
            elif self.rng.random() < 0.3:
                category = self.pick(influencer_kinds)
            if role.startswith("instigator"):
                statuses *= 10.0
                followers *= 2.0
                favourites *= 4.0
                verified = bool(self.rng.random() < 0.25)
            elif role.startswith("amplified"):
                statuses *= 2.0
                followers *= 30.0
                verified = bool(self.rng.random() < 0.8)
                category = self.pick(["media_house", "celebrity"])
                party = None
            rows.append(
                {
                    "id": u,
                    "statuses_count": int(statuses),
                    "followers_count": int(followers),
                    "friends_count": int(friends),
                    "favourites_count": int(favourites),
                    "verified": verified,
                    "category": category,
                    "party": party,
                    "description": f"synthetic account {u}",
                }
            )
        # stances for everyone not already aligned with an instigator
        for u in self.users:
            self.stances.setdefault(
                u, float(np.clip(self.rng.normal(0.0, 0.35), -1.0, 1.0))
            )
        # party following: planted accounts lean hard, normals stay near the
        # population proportion so their chi-square misses significance
        for u in self.users:
            role = self.roles[u]
            if role == "normal":
                n = int(self.rng.integers(4, 17))
                bjp = int(self.rng.binomial(n, 45 / 80))
            else:
                n = int(self.rng.integers(12, 21))
                bjp = n - int(self.rng.integers(0, 2)) if self.rng.random() < 0.5 else int(self.rng.integers(0, 2))
            inc = n - bjp
            self.party_following[u] = (min(bjp, 45), min(inc, 35))
        return rows

    def expected_kappas(self) -> dict[str, float]:
        by_event: dict[str, list[AnnotationPair]] = {name: [] for name in EVENTS}
        tweet_event = {}
        for row in self.tweets:
            for name, spec in EVENTS.items():
                if any(s in row["text"] for s in spec["seeds"]):
                    tweet_event[row["id"]] = name
                    break
        for ann in self.annotations:
            name = tweet_event[ann["tweet_id"]]
            by_event[name].append(
                AnnotationPair(ann["tweet_id"], ann["label_a"], ann["label_b"])
            )
        return {name: cohens_kappa(pairs) for name, pairs in by_event.items()}


def write_bundle(fx: Fixture, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    users = fx.finish_users()

    def dump_jsonl(name: str, rows) -> None:
        with open(out_dir / name, "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row, sort_keys=True) + "\n")

    dump_jsonl("tweets.jsonl", fx.tweets)
    dump_jsonl("users.jsonl", users)
    dump_jsonl("annotations.jsonl", fx.annotations)
    dump_jsonl(
        "stances.jsonl",
        (
            {"user_id": u, "stance": round(fx.stances[u], 4)}
            for u in sorted(fx.stances)
        ),
    )
    dump_jsonl(
        "party_following.jsonl",
        (
            {"user_id": u, "bjp": fx.party_following[u][0], "inc": fx.party_following[u][1]}
            for u in sorted(fx.party_following)
        ),
    )
    lexicon_docs = []
    for name, spec in EVENTS.items():
        lexicon_docs.append(
            "\n".join(
                [
                    f"event: {name}",
                    f"target_group: {spec['target_group']}",
                    "lexica: [" + ", ".join(f"'{t}'" for t in spec["lexica"]) + "]",
                    "negative_lexica: [" + ", ".join(f"'{t}'" for t in spec["negative"]) + "]",
                    "seed_keywords: [" + ", ".join(f"'{s}'" for s in spec["seeds"]) + "]",
                ]
            )
        )
    (out_dir / "lexicons.yaml").write_text(
        "---\n" + "\n---\n".join(lexicon_docs) + "\n", encoding="utf-8"
    )
    (out_dir / "config.yaml").write_text(
        "\n".join(
            [
                "inputs:",
                "  tweets: tweets.jsonl",
                "  users: users.jsonl",
                "  annotations: annotations.jsonl",
                "  lexicons: lexicons.yaml",
                "  stances: stances.jsonl",
                "  party_following: party_following.jsonl",
                "out_dir: out",
                f"seed: {fx.seed}",
                "diffusion:",
                "  steps: 2",
                "  jenks_k: 3",
                "polarity:",
                "  alpha: 0.005",
                "stats:",
                "  alpha: 0.05",
                "  bootstrap: 2000",
                "terms:",
                "  - [jihadi, muslim]",
                "  - [khalistani, kisan]",
                "export:",
                "  dot: true",
                "",
            ]
        ),
        encoding="utf-8",
    )


def verify(out_dir: Path) -> None:
    """Run the pipeline on the bundle and assert the tuned targets."""
    import csv

    from incite.pipeline import make_context, run_all

    work = Path(tempfile.mkdtemp(prefix="fixture_verify_"))
    try:
        ctx = make_context(out_dir / "config.yaml", out_dir=work)
        run_all(ctx)
        kappas = {}
        for row in csv.DictReader((work / "kappa.csv").read_text().splitlines()):
            kappas[row["event"]] = float(row["kappa"])
        for name, spec in EVENTS.items():
            err = abs(kappas[name] - spec["kappa"])
            status = "ok" if err <= 0.005 else "FAIL"
            print(f"  kappa[{name}] = {kappas[name]:.4f} (target {spec['kappa']}) {status}")
            assert err <= 0.005, f"kappa off target for {name}"
        flagged = {}
        for row in csv.DictReader((work / "thresholds.csv").read_text().splitlines()):
            flagged[row["scope"]] = (
                float(row["fraction_flagged"]),
                row["category_counts"],
            )
        for name, spec in EVENTS.items():
            frac, counts = flagged[name]
            lo, hi = spec["fraction_band"]
            status = "ok" if lo <= frac <= hi else "FAIL"
            print(f"  flagged[{name}] = {frac:.4f} ({counts}) band [{lo}, {hi}] {status}")
            assert lo <= frac <= hi, f"flagged fraction off band for {name}"
            planted_v = len(spec["danger"])
            planted_m = len(spec["amplified"])
            got = dict(part.split("=") for part in counts.split(";"))
            assert int(got["V"]) == planted_v, f"V != planted instigators for {name}"
            assert int(got["M"]) == planted_m, f"M != planted amplified for {name}"
        frac, counts = flagged["average"]
        got = dict(part.split("=") for part in counts.split(";"))
        assert int(got["M"]) >= 2 and int(got["V"]) >= 2, "averaged classes too small"
        print(f"  flagged[average] = {frac:.4f} ({counts}) ok")
        n_tweets = sum(1 for _ in open(out_dir / "tweets.jsonl", encoding="utf-8"))
        print(f"  tweets = {n_tweets}")
        assert 4200 <= n_tweets <= 5800, "tweet volume out of band"
    finally:
        shutil.rmtree(work, ignore_errors=True)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixture", help="output directory")
    parser.add_argument("--seed", type=int, default=20240801)
    parser.add_argument("--verify", action="store_true", help="run the pipeline and check targets")
    args = parser.parse_args()
    fx = Fixture(args.seed)
    for name in EVENTS:
        fx.build_event(name)
    out_dir = Path(args.out)
    write_bundle(fx, out_dir)
    expected = fx.expected_kappas()
    print(f"wrote {len(fx.tweets)} tweets, {len(fx.annotations)} annotation pairs")
    for name, value in expected.items():
        print(f"  planned kappa[{name}] = {value:.4f}")
    if args.verify:
        verify(out_dir)
        print("verification passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
