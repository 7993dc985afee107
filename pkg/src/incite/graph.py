"""Retweet graph construction and analysis.

Edges point from the retweeting user to the retweeted user and carry
retweet counts; the diagonal of the adjacency matrix carries each user's
original (non-retweet) tweet count.  Quote tweets count as originals and
never create edges.  Matrices are scipy.sparse CSR so memory stays
proportional to the number of edges.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable, Mapping, NamedTuple
from xml.etree import ElementTree as ET

import numpy as np
from scipy import sparse

from .corpus import Tweet

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RetweetGraph:
    """Directed weighted retweet graph over user id nodes.

    Parallel arrays hold the deduplicated edges in (source, target) sorted
    order; ``self_weight[i]`` is node i's original tweet count.
    """

    nodes: tuple[str, ...]
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_weight: np.ndarray
    self_weight: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.nodes)
        if len(set(self.nodes)) != n:
            raise ValueError("node ids must be unique")
        src = np.asarray(self.edge_src, dtype=np.int64)
        dst = np.asarray(self.edge_dst, dtype=np.int64)
        weight = np.asarray(self.edge_weight, dtype=np.int64)
        own = np.asarray(self.self_weight, dtype=np.int64)
        if not (src.shape == dst.shape == weight.shape):
            raise ValueError("edge arrays must have matching lengths")
        if own.shape != (n,):
            raise ValueError("self_weight must have one entry per node")
        if src.size:
            if src.min(initial=0) < 0 or src.max(initial=-1) >= n:
                raise ValueError("edge source index out of range")
            if dst.min(initial=0) < 0 or dst.max(initial=-1) >= n:
                raise ValueError("edge target index out of range")
            if (src == dst).any():
                raise ValueError("self edges are not allowed")
            if (weight <= 0).any():
                raise ValueError("edge weights must be positive")
        if (own < 0).any():
            raise ValueError("self weights must be >= 0")
        order = np.lexsort((dst, src))
        src, dst, weight = src[order], dst[order], weight[order]
        if src.size > 1:
            dup = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
            if dup.any():
                raise ValueError("duplicate edges are not allowed")
        object.__setattr__(self, "edge_src", src)
        object.__setattr__(self, "edge_dst", dst)
        object.__setattr__(self, "edge_weight", weight)
        object.__setattr__(self, "self_weight", own)

    @cached_property
    def index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.nodes)}

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return int(self.edge_src.size)

    def edge_weight_of(self, source: str, target: str) -> int:
        """Retweet count on the edge source -> target, 0 if absent."""
        i, j = self.index[source], self.index[target]
        lo = np.searchsorted(self.edge_src, i, side="left")
        hi = np.searchsorted(self.edge_src, i, side="right")
        pos = lo + np.searchsorted(self.edge_dst[lo:hi], j, side="left")
        if pos < hi and self.edge_dst[pos] == j:
            return int(self.edge_weight[pos])
        return 0

    def originals_of(self, user: str) -> int:
        return int(self.self_weight[self.index[user]])

    def iter_edges(self) -> Iterable[tuple[str, str, int]]:
        for s, d, w in zip(self.edge_src, self.edge_dst, self.edge_weight):
            yield self.nodes[s], self.nodes[d], int(w)


def build_retweet_graph(tweets: Iterable[Tweet]) -> RetweetGraph:
    """Aggregate tweets into a retweet graph.

    Nodes are tweet authors plus retweeted users, sorted.  A retweet row
    adds weight on author -> target; originals and quotes add to the
    author's self weight.  A self-retweet is folded into the self weight.
    """
    edge_counts: dict[tuple[str, str], int] = {}
    own_counts: dict[str, int] = {}
    node_set: set[str] = set()
    for tweet in tweets:
        node_set.add(tweet.user_id)
        target = tweet.retweet_of_user
        if target is not None and not tweet.is_quote:
            if target == tweet.user_id:
                log.debug("self-retweet by %s counted as original", tweet.user_id)
                own_counts[tweet.user_id] = own_counts.get(tweet.user_id, 0) + 1
                continue
            node_set.add(target)
            key = (tweet.user_id, target)
            edge_counts[key] = edge_counts.get(key, 0) + 1
        else:
            own_counts[tweet.user_id] = own_counts.get(tweet.user_id, 0) + 1
    nodes = tuple(sorted(node_set))
    index = {u: i for i, u in enumerate(nodes)}
    src = np.fromiter((index[u] for u, _ in edge_counts), np.int64, len(edge_counts))
    dst = np.fromiter((index[v] for _, v in edge_counts), np.int64, len(edge_counts))
    weight = np.fromiter(edge_counts.values(), np.int64, len(edge_counts))
    own = np.zeros(len(nodes), np.int64)
    for user, count in own_counts.items():
        own[index[user]] = count
    return RetweetGraph(nodes, src, dst, weight, own)


def graph_from_mappings(
    edges: Mapping[tuple[str, str], int], originals: Mapping[str, int]
) -> RetweetGraph:
    """Convenience constructor from edge and self-weight mappings."""
    node_set = {u for pair in edges for u in pair} | set(originals)
    nodes = tuple(sorted(node_set))
    index = {u: i for i, u in enumerate(nodes)}
    src = np.array([index[u] for u, _ in edges], np.int64)
    dst = np.array([index[v] for _, v in edges], np.int64)
    weight = np.array(list(edges.values()), np.int64)
    own = np.zeros(len(nodes), np.int64)
    for user, count in originals.items():
        own[index[user]] = count
    return RetweetGraph(nodes, src, dst, weight, own)


def adjacency(g: RetweetGraph) -> sparse.csr_matrix:
    """Weight matrix: entry (u, v) is u's retweets of v, diagonal is u's
    original tweet count."""
    n = g.n_nodes
    diag_idx = np.arange(n, dtype=np.int64)
    rows = np.concatenate([g.edge_src, diag_idx])
    cols = np.concatenate([g.edge_dst, diag_idx])
    data = np.concatenate([g.edge_weight, g.self_weight]).astype(np.float64)
    matrix = sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    matrix.eliminate_zeros()
    return matrix


class TransitionMatrix(NamedTuple):
    matrix: sparse.csr_matrix
    degenerate: tuple[int, ...]  # rows of the transpose that had zero mass


def transition(a) -> TransitionMatrix:
    """Row-stochastic transition matrix: the transpose of ``a``, row
    normalized.

    A zero row in the transpose (a user nobody retweets who also has no
    originals) becomes a self-loop with probability 1 and is flagged.
    """
    mat = a.tocsr() if sparse.issparse(a) else sparse.csr_matrix(np.asarray(a, float))
    rows, cols = mat.shape
    if rows != cols:
        raise ValueError(f"matrix must be square, got {mat.shape}")
    if mat.nnz and not np.isfinite(mat.data).all():
        raise ValueError("matrix entries must be finite")
    if mat.nnz and mat.data.min() < 0:
        raise ValueError("matrix entries must be >= 0")
    flipped = mat.transpose().tocsr()
    flipped.sum_duplicates()
    sums = np.asarray(flipped.sum(axis=1)).ravel()
    zero_rows = sums == 0.0
    scale = np.divide(1.0, sums, out=np.zeros_like(sums), where=~zero_rows)
    out = flipped.astype(np.float64, copy=True)
    out.data *= np.repeat(scale, np.diff(out.indptr))
    idx = np.flatnonzero(zero_rows)
    if idx.size:
        ones = sparse.coo_matrix(
            (np.ones(idx.size), (idx, idx)), shape=out.shape
        )
        out = (out + ones).tocsr()
    out.eliminate_zeros()
    return TransitionMatrix(out, tuple(int(i) for i in idx))


def indegree_centrality(g: RetweetGraph) -> dict[str, float]:
    """Total incoming retweet weight per node; self weights excluded."""
    totals = np.bincount(
        g.edge_dst, weights=g.edge_weight.astype(float), minlength=g.n_nodes
    )
    return {u: float(totals[i]) for i, u in enumerate(g.nodes)}


def _in_neighbor_lists(g: RetweetGraph) -> tuple[np.ndarray, np.ndarray]:
    """CSR-style in-neighbor lists: for node v, sources of edges into v."""
    order = np.argsort(g.edge_dst, kind="stable")
    starts = np.searchsorted(g.edge_dst[order], np.arange(g.n_nodes + 1))
    return g.edge_src[order], starts


def harmonic_closeness(g: RetweetGraph) -> dict[str, float]:
    """Harmonic closeness over directed hop distances.

    score(v) = sum over reachable x != v of 1 / d(x, v), where d follows
    edge direction (retweeter toward retweeted user).  Computed with one
    reverse breadth-first search per node; edge weights are ignored.
    """
    n = g.n_nodes
    neighbors, starts = _in_neighbor_lists(g)
    scores = np.zeros(n)
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for v in range(n):
        dist[:] = -1
        dist[v] = 0
        queue[0] = v
        head, tail = 0, 1
        total = 0.0
        while head < tail:
            cur = queue[head]
            head += 1
            d_next = dist[cur] + 1
            for x in neighbors[starts[cur] : starts[cur + 1]]:
                if dist[x] < 0:
                    dist[x] = d_next
                    queue[tail] = x
                    tail += 1
                    total += 1.0 / d_next
        scores[v] = total
    return {u: float(scores[i]) for i, u in enumerate(g.nodes)}


class EigenvectorResult(NamedTuple):
    scores: dict[str, float]
    converged: bool


def eigenvector_centrality(
    g: RetweetGraph, tol: float = 1e-8, max_iter: int = 1000
) -> EigenvectorResult:
    """Eigenvector centrality by power iteration; incoming weight confers
    score.

    Iterates x <- (W^T + I) x / ||.||_2 on the weight matrix W, so the
    identity shift breaks periodic cycles without changing eigenvectors.
    Returns unit-norm nonnegative scores and a convergence flag.  An
    all-zero matrix yields the uniform vector with a warning.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    n = g.n_nodes
    if n == 0:
        return EigenvectorResult({}, True)
    mat = adjacency(g).transpose().tocsr()
    uniform = np.full(n, 1.0 / np.sqrt(n))
    if mat.nnz == 0:
        warnings.warn("eigenvector centrality of an all-zero matrix", stacklevel=2)
        return EigenvectorResult(dict(zip(g.nodes, uniform)), True)
    x = uniform.copy()
    converged = False
    for _ in range(max_iter):
        y = mat @ x + x
        y /= np.linalg.norm(y)
        if np.abs(y - x).max() < tol:
            x = y
            converged = True
            break
        x = y
    return EigenvectorResult({u: float(x[i]) for i, u in enumerate(g.nodes)}, converged)


def _dot_escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"')


def export_gexf(
    g: RetweetGraph, categories: Mapping[str, str], stream: IO[bytes]
) -> None:
    """Write the graph as GEXF 1.2 with per-node danger category attributes.

    Every node must have a category; a missing one raises ``ValueError``.
    Output is deterministic: nodes in graph order, edges in sorted order.
    """
    missing = [u for u in g.nodes if u not in categories]
    if missing:
        raise ValueError(f"missing category for node(s): {missing[:5]}")
    root = ET.Element("gexf", xmlns="http://www.gexf.net/1.2draft", version="1.2")
    graph_el = ET.SubElement(
        root, "graph", mode="static", defaultedgetype="directed"
    )
    attrs_el = ET.SubElement(graph_el, "attributes", {"class": "node"})
    ET.SubElement(attrs_el, "attribute", id="dac", title="dac", type="string")
    ET.SubElement(
        attrs_el, "attribute", id="originals", title="originals", type="long"
    )
    nodes_el = ET.SubElement(graph_el, "nodes")
    for i, user in enumerate(g.nodes):
        node_el = ET.SubElement(nodes_el, "node", id=user, label=user)
        values = ET.SubElement(node_el, "attvalues")
        ET.SubElement(values, "attvalue", {"for": "dac", "value": categories[user]})
        ET.SubElement(
            values,
            "attvalue",
            {"for": "originals", "value": str(int(g.self_weight[i]))},
        )
    edges_el = ET.SubElement(graph_el, "edges")
    for k, (s, d, w) in enumerate(g.iter_edges()):
        ET.SubElement(
            edges_el,
            "edge",
            id=str(k),
            source=s,
            target=d,
            weight=str(int(w)),
        )
    ET.indent(root)
    tree = ET.ElementTree(root)
    tree.write(stream, encoding="UTF-8", xml_declaration=True)
    stream.write(b"\n")


def export_dot(
    g: RetweetGraph, categories: Mapping[str, str], stream: IO[str]
) -> None:
    """Write the graph in DOT format with dac node attributes."""
    missing = [u for u in g.nodes if u not in categories]
    if missing:
        raise ValueError(f"missing category for node(s): {missing[:5]}")
    stream.write("digraph retweets {\n")
    for user in g.nodes:
        stream.write(
            f'  "{_dot_escape(user)}" [dac="{_dot_escape(categories[user])}"];\n'
        )
    for s, d, w in g.iter_edges():
        stream.write(f'  "{_dot_escape(s)}" -> "{_dot_escape(d)}" [weight={w}];\n')
    stream.write("}\n")


def adjacency_entries(g: RetweetGraph) -> Iterable[tuple[str, str, int]]:
    """Nonzero weight-matrix entries as (row user, column user, value),
    diagonal included, in row-major node order."""
    by_row: dict[int, list[tuple[int, int]]] = {}
    for s, d, w in zip(g.edge_src, g.edge_dst, g.edge_weight):
        by_row.setdefault(int(s), []).append((int(d), int(w)))
    for i, user in enumerate(g.nodes):
        entries = by_row.get(i, [])
        if g.self_weight[i] > 0:
            entries.append((i, int(g.self_weight[i])))
        for j, w in sorted(entries):
            yield user, g.nodes[j], w
