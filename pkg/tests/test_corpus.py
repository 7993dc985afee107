import json
import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incite.corpus import (
    CAA_NRC,
    COVID19,
    FARMERS,
    EventLabel,
    ParseResult,
    Tweet,
    classify_event,
    contains_term,
    cosine_similarity,
    expand_seed_keywords,
    filter_candidates,
    load_lexicons,
    normalize_text,
    parse_tweets,
    parse_users,
    term_frequency_ratio,
)
from incite.errors import ConfigError, DataError


def make_tweet(tid="t1", user="u1", text="hello", retweet_of=None, quote=False,
               event=None):
    return Tweet(
        id=tid,
        user_id=user,
        raw_text=text,
        normalized_text=normalize_text(text),
        created_at="2020-01-01T00:00:00+00:00",
        retweet_of_user=retweet_of,
        is_quote=quote,
        event=event,
    )


class TestNormalizeText:
    def test_frozen_example(self):
        raw = "Spread of #CoronaJihad!! https://t.co/xYz \U0001F600"
        assert normalize_text(raw) == "spread of #coronajihad"

    def test_urls_removed(self):
        assert normalize_text("see http://a.b/c and https://x.y/z?q=1 now") == "see and now"
        assert normalize_text("short t.co/abc123 link") == "short link"

    def test_mentions_and_hashtags_survive(self):
        assert normalize_text("RT @User: #Tag stays") == "rt @user #tag stays"

    def test_punctuation_to_space(self):
        assert normalize_text("a,b;c.d!e?f") == "a b c d e f"

    def test_devanagari_kept(self):
        assert normalize_text("किसान protest") == "किसान protest"

    def test_numbers_kept(self):
        assert normalize_text("covid19 in 2020") == "covid19 in 2020"

    @given(st.text(max_size=200))
    @settings(max_examples=300, deadline=None)
    def test_idempotent(self, raw):
        once = normalize_text(raw)
        assert normalize_text(once) == once

    @given(st.text(max_size=200))
    @settings(max_examples=300, deadline=None)
    def test_canonical_form(self, raw):
        out = normalize_text(raw)
        assert "  " not in out
        assert out == out.strip()
        assert out == out.lower()


class TestContainsTerm:
    def test_single_token(self):
        assert contains_term("the jihadi menace".split(), "jihadi")

    def test_token_boundaries(self):
        assert not contains_term("the jihadist menace".split(), "jihadi")
        assert not contains_term("khalistanis everywhere".split(), "khalistani")

    def test_phrase(self):
        assert contains_term("a virus spreader walks".split(), "virus spreader")
        assert not contains_term("virus in the spreader".split(), "virus spreader")

    def test_hashtag_term(self):
        assert contains_term("#coronajihad trending".split(), "#coronajihad")
        assert not contains_term("coronajihad trending".split(), "#coronajihad")


class _ExplodingLines:
    def __iter__(self):
        raise OSError("disk gone")


class TestParsers:
    def test_parse_tweets_good_and_bad(self):
        lines = [
            json.dumps({"id": "t1", "user_id": "u1", "text": "Hello!",
                        "created_at": "2020-01-02T03:04:05Z",
                        "retweet_of_user": None, "is_quote": False}),
            "not json",
            json.dumps({"id": "t2", "user_id": "u1", "text": "x",
                        "created_at": "bad-date",
                        "retweet_of_user": None, "is_quote": False}),
            json.dumps({"user_id": "u1", "text": "missing id",
                        "created_at": "2020-01-02T03:04:05Z"}),
            json.dumps({"id": "t3", "user_id": "u2", "text": "RT @u1: Hello!",
                        "created_at": "2020-01-02T03:04:06+00:00",
                        "retweet_of_user": "u1", "is_quote": False}),
        ]
        result = parse_tweets(lines)
        assert isinstance(result, ParseResult)
        assert [t.id for t in result.records] == ["t1", "t3"]
        assert result.skipped == 3
        assert result.records[0].normalized_text == "hello"
        assert result.records[0].created_at.tzinfo is not None
        assert result.records[1].retweet_of_user == "u1"

    def test_parse_users(self):
        lines = [
            json.dumps({"id": "u1", "statuses_count": 10, "followers_count": 5,
                        "friends_count": 2, "favourites_count": 1,
                        "verified": True, "category": "politician",
                        "party": "BJP", "description": "d"}),
            json.dumps({"id": "u2", "statuses_count": -1}),
        ]
        result = parse_users(lines)
        assert len(result.records) == 1
        assert result.records[0].party == "BJP"
        assert result.skipped == 1

    def test_stream_failure_is_data_error(self):
        with pytest.raises(DataError):
            parse_tweets(_ExplodingLines())
        with pytest.raises(DataError):
            parse_users(_ExplodingLines())


class TestLexicons:
    GOOD = [
        {
            "event": "CAA_NRC",
            "target_group": "muslims",
            "lexica": ["jihadi"],
            "negative_lexica": ["dubbed"],
            "seed_keywords": ["#caa"],
        }
    ]

    def test_load(self):
        sets = load_lexicons(self.GOOD)
        assert sets[CAA_NRC].event == CAA_NRC
        assert sets[CAA_NRC].lexica == ("jihadi",)

    @pytest.mark.parametrize(
        "patch",
        [
            {"event": None},
            {"lexica": []},
            {"seed_keywords": []},
            {"lexica": ["Jihadi!"]},
        ],
    )
    def test_invalid_documents(self, patch):
        doc = dict(self.GOOD[0])
        doc.update(patch)
        if doc["event"] is None:
            doc.pop("event")
        with pytest.raises(ConfigError):
            load_lexicons([doc])

    def test_duplicate_event(self):
        with pytest.raises(ConfigError):
            load_lexicons([self.GOOD[0], self.GOOD[0]])


class TestEventLabel:
    def test_builtin_order_precedes_custom(self):
        assert CAA_NRC < COVID19 < FARMERS
        assert FARMERS < EventLabel("AAA_CUSTOM")

    def test_custom_alphabetical(self):
        assert EventLabel("ALPHA") < EventLabel("BETA")

    def test_str_and_repr(self):
        assert str(CAA_NRC) == "CAA_NRC"
        assert "rank" not in repr(CAA_NRC)


class TestEmbeddings:
    def test_cosine(self):
        assert cosine_similarity([1, 0], [0, 1]) == pytest.approx(0.0)
        assert cosine_similarity([1, 2], [2, 4]) == pytest.approx(1.0)
        assert cosine_similarity([0, 0], [1, 1]) == 0.0

    def test_expansion_fixed_point(self):
        emb = {
            "#caa": [1.0, 0.0],
            "nrc": [0.98, 0.1],
            "detention": [0.9, 0.2],
            "cricket": [0.0, 1.0],
        }
        expanded = expand_seed_keywords(("#caa",), emb, threshold=0.9)
        assert expanded == {"#caa", "detention", "nrc"}

    def test_expansion_threshold(self):
        emb = {"a": [1.0, 0.0], "b": [0.0, 1.0]}
        assert expand_seed_keywords(("a",), emb, threshold=0.5) == {"a"}

    def test_missing_seed_warns(self, caplog):
        emb = {"a": [1.0, 0.0]}
        with caplog.at_level("WARNING"):
            out = expand_seed_keywords(("a", "ghost"), emb, threshold=0.99)
        assert out == {"a"}
        assert any("ghost" in rec.getMessage() for rec in caplog.records)

    def test_all_seeds_missing(self):
        with pytest.raises(ValueError):
            expand_seed_keywords(("ghost",), {"a": [1.0]}, threshold=0.5)


class TestClassifyAndFilter:
    def _sets(self):
        return load_lexicons(
            [
                {"event": "CAA_NRC", "target_group": "muslims",
                 "lexica": ["jihadi"], "negative_lexica": ["islamophobia"],
                 "seed_keywords": ["#caa", "nrc"]},
                {"event": "FARMERS", "target_group": "farmers",
                 "lexica": ["khalistani"], "negative_lexica": ["dubbed"],
                 "seed_keywords": ["kisan", "mandi"]},
            ]
        )

    def test_classify_majority(self):
        keyword_sets = {s.event: s.seed_keywords for s in self._sets().values()}
        t = make_tweet(text="#caa and nrc rules vs kisan news")
        assert classify_event(t, keyword_sets) == CAA_NRC

    def test_classify_tie_prefers_smaller_label(self):
        keyword_sets = {s.event: s.seed_keywords for s in self._sets().values()}
        t = make_tweet(text="#caa rules and kisan news")
        assert classify_event(t, keyword_sets) == CAA_NRC

    def test_classify_none(self):
        keyword_sets = {s.event: s.seed_keywords for s in self._sets().values()}
        assert classify_event(make_tweet(text="good morning"), keyword_sets) is None

    def test_filter_matches_lexicon(self):
        sets = self._sets()
        tweets = [
            make_tweet("t1", text="every jihadi out there"),
            make_tweet("t2", text="peaceful #caa march"),
            make_tweet("t3", text="the islamophobia of calling them jihadi"),
            make_tweet("t1", text="every jihadi out there"),
        ]
        kept = filter_candidates(tweets, sets[CAA_NRC])
        assert [t.id for t in kept] == ["t1"]

    def test_term_ratio(self):
        tweets = [make_tweet("t1", text="jihadi jihadi muslim"),
                  make_tweet("t2", text="jihadi day")]
        ratio = term_frequency_ratio(tweets, "jihadi", "muslim")
        assert ratio.count_a == 3 and ratio.count_b == 1
        assert ratio.ratio == pytest.approx(3.0)
        assert term_frequency_ratio(tweets, "jihadi", "ghost").ratio == math.inf
        assert math.isnan(term_frequency_ratio(tweets, "ghost", "phantom").ratio)


class TestTweet:
    def test_tokens(self):
        t = make_tweet(text="RT @a: Hello, World!")
        assert t.tokens == ["rt", "@a", "hello", "world"]

    def test_quote_flag(self):
        t = make_tweet(text="x", retweet_of="u9", quote=True)
        assert t.retweet_of_user == "u9" and t.is_quote
