import io
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incite.corpus import Tweet, normalize_text
from incite.graph import (
    RetweetGraph,
    adjacency,
    adjacency_entries,
    build_retweet_graph,
    eigenvector_centrality,
    export_dot,
    export_gexf,
    graph_from_mappings,
    harmonic_closeness,
    indegree_centrality,
    transition,
)
from tests.conftest import random_graph


def tweet(tid, user, text="hello world", retweet_of=None, quote=False):
    return Tweet(
        id=tid,
        user_id=user,
        raw_text=text,
        normalized_text=normalize_text(text),
        created_at="2020-01-01T00:00:00+00:00",
        retweet_of_user=retweet_of,
        is_quote=quote,
    )


def dense(g: RetweetGraph) -> np.ndarray:
    return adjacency(g).toarray().astype(float)


class TestBuild:
    def test_counts_originals_and_edges(self):
        tweets = [
            tweet("t1", "a"),
            tweet("t2", "a"),
            tweet("t3", "b", retweet_of="a"),
            tweet("t4", "b", retweet_of="a"),
            tweet("t5", "b", retweet_of="a"),
            tweet("t6", "b"),
        ]
        g = build_retweet_graph(tweets)
        assert g.nodes == ("a", "b")
        assert g.originals_of("a") == 2
        assert g.originals_of("b") == 1
        assert g.edge_weight_of("b", "a") == 3
        assert g.edge_weight_of("a", "b") == 0

    def test_quote_counts_as_original(self):
        g = build_retweet_graph(
            [tweet("t1", "a"), tweet("t2", "b", retweet_of="a", quote=True)]
        )
        assert g.originals_of("b") == 1
        assert g.n_edges == 0

    def test_self_retweet_counts_as_original(self):
        g = build_retweet_graph([tweet("t1", "a", retweet_of="a")])
        assert g.originals_of("a") == 1
        assert g.n_edges == 0

    def test_retweet_target_becomes_node(self):
        g = build_retweet_graph([tweet("t1", "a", retweet_of="z")])
        assert g.nodes == ("a", "z")
        assert g.originals_of("z") == 0

    def test_validation(self):
        with pytest.raises(ValueError):
            RetweetGraph(
                ("a", "b"),
                np.array([0]), np.array([0]),  # self edge
                np.array([1]), np.array([0, 0]),
            )
        with pytest.raises(ValueError):
            RetweetGraph(
                ("a", "b"),
                np.array([0, 0]), np.array([1, 1]),  # duplicate edge
                np.array([1, 2]), np.array([0, 0]),
            )
        with pytest.raises(ValueError):
            RetweetGraph(
                ("a", "b"),
                np.array([0]), np.array([1]),
                np.array([0]),  # non-positive weight
                np.array([0, 0]),
            )

    def test_adjacency_entries_row_major(self):
        g = graph_from_mappings({("b", "a"): 3}, {"a": 1, "b": 2})
        assert list(adjacency_entries(g)) == [("a", "a", 1), ("b", "a", 3), ("b", "b", 2)]


class TestTransition:
    def test_worked_example(self):
        a = np.array([[1.0, 3.0], [0.0, 2.0]])
        t = transition(a)
        assert np.allclose(t.matrix.toarray(), [[1.0, 0.0], [0.6, 0.4]], atol=1e-12)
        assert t.degenerate == ()

    def test_degenerate_row_gets_identity(self):
        a = np.array([[0.0, 1.0], [0.0, 1.0]])
        t = transition(a)
        dense_t = t.matrix.toarray()
        # column 0 of A is all zero, so row 0 of the transpose is patched
        assert dense_t[0, 0] == 1.0
        assert t.degenerate == (0,)
        assert np.allclose(dense_t.sum(axis=1), 1.0)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            transition(np.array([[1.0, -0.5], [0.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            transition(np.ones((2, 3)))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_rows_stochastic(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 12))
        a = rng.integers(0, 4, size=(n, n)).astype(float)
        # random zero columns force degenerate transition rows
        for col in range(n):
            if rng.random() < 0.3:
                a[:, col] = 0.0
        t = transition(a)
        sums = np.asarray(t.matrix.sum(axis=1)).ravel()
        assert np.all(np.abs(sums - 1.0) < 1e-9)


def brute_indegree(g: RetweetGraph) -> dict[str, float]:
    a = dense(g)
    np.fill_diagonal(a, 0.0)
    return {u: float(a[:, i].sum()) for i, u in enumerate(g.nodes)}


def brute_harmonic(g: RetweetGraph) -> dict[str, float]:
    n = g.n_nodes
    a = dense(g)
    np.fill_diagonal(a, 0.0)
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    dist[a > 0] = 1.0
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if dist[i, k] + dist[k, j] < dist[i, j]:
                    dist[i, j] = dist[i, k] + dist[k, j]
    out = {}
    for j, u in enumerate(g.nodes):
        total = 0.0
        for i in range(n):
            if i != j and np.isfinite(dist[i, j]):
                total += 1.0 / dist[i, j]
        out[u] = total
    return out


def brute_eigenvector(g: RetweetGraph) -> dict[str, float]:
    m = dense(g).T + np.eye(g.n_nodes)
    values, vectors = np.linalg.eig(m)
    lead = int(np.argmax(values.real))
    vec = np.abs(vectors[:, lead].real)
    vec = vec / np.linalg.norm(vec)
    return {u: float(vec[i]) for i, u in enumerate(g.nodes)}


class TestCentralities:
    def test_indegree_excludes_self(self):
        g = graph_from_mappings({("b", "a"): 3, ("c", "a"): 2}, {"a": 9, "b": 1, "c": 1})
        assert indegree_centrality(g) == {"a": 5.0, "b": 0.0, "c": 0.0}

    def test_harmonic_follows_edge_direction(self):
        # b -> a and c -> b: distances to a are 1 (from b) and 2 (from c)
        g = graph_from_mappings({("b", "a"): 1, ("c", "b"): 1}, {"a": 1, "b": 1, "c": 1})
        scores = harmonic_closeness(g)
        assert scores["a"] == pytest.approx(1.5)
        assert scores["b"] == pytest.approx(1.0)
        assert scores["c"] == 0.0

    def test_oracles_random_graphs(self, rng):
        for _ in range(200):
            g = random_graph(rng, max_nodes=8)
            assert indegree_centrality(g) == pytest.approx(brute_indegree(g))
            assert harmonic_closeness(g) == pytest.approx(brute_harmonic(g))

    def test_eigenvector_oracle_strongly_connected(self, rng):
        for _ in range(200):
            g = random_graph(rng, max_nodes=8, ensure_strong=True)
            result = eigenvector_centrality(g)
            assert result.converged
            oracle = brute_eigenvector(g)
            for u in g.nodes:
                assert result.scores[u] == pytest.approx(oracle[u], abs=1e-6)

    def test_eigenvector_zero_graph_uniform(self):
        g = graph_from_mappings({}, {"a": 0, "b": 0, "c": 0})
        with pytest.warns(UserWarning):
            result = eigenvector_centrality(g)
        expected = 1.0 / np.sqrt(3.0)
        assert all(v == pytest.approx(expected) for v in result.scores.values())


class TestExports:
    def _graph(self):
        return graph_from_mappings(
            {("b", "a"): 3, ("c", "a"): 1, ("c", "b"): 2},
            {"a": 2, "b": 1, "c": 0},
        )

    def test_gexf_roundtrip_networkx(self, tmp_path):
        nx = pytest.importorskip("networkx")
        g = self._graph()
        categories = {"a": "V", "b": "M", "c": "N"}
        path = tmp_path / "net.gexf"
        with open(path, "wb") as fh:
            export_gexf(g, categories, fh)
        back = nx.read_gexf(path)
        assert set(back.nodes) == {"a", "b", "c"}
        assert back.nodes["a"]["dac"] == "V"
        assert back.nodes["a"]["originals"] == 2
        assert back["b"]["a"]["weight"] == 3
        assert back.is_directed()

    def test_gexf_missing_category_raises(self):
        g = self._graph()
        with pytest.raises(ValueError):
            export_gexf(g, {"a": "V"}, io.BytesIO())

    def test_dot_contains_edges(self):
        g = self._graph()
        out = io.StringIO()
        export_dot(g, {"a": "V", "b": "M", "c": "N"}, out)
        text = out.getvalue()
        assert text.startswith("digraph")
        assert '"b" -> "a"' in text
        assert "weight=3" in text
