"""Undirected unit-weight graphs and the volume/cut queries that structural
entropy is built from.

Graphs are immutable after construction and safe to share across threads.
Edge-list text format: one "u v" pair per line, `#` comments ignored,
0-based vertex ids.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Graph:
    node_count: int
    edges: frozenset  # pairs (u, v) with u < v
    degree: tuple
    adjacency: tuple  # per-vertex frozenset of neighbors

    @property
    def volume(self) -> int:
        return 2 * len(self.edges)


def build_graph(node_count: int, edge_pairs) -> Graph:
    """Validate and construct a Graph from (u, v) pairs.

    Duplicate edges collapse; self-loops and isolated vertices are rejected.
    """
    if node_count < 1:
        raise ValueError("graph must have at least one vertex")
    edges = set()
    for u, v in edge_pairs:
        if u == v:
            raise ValueError(f"self-loop on vertex {u}")
        if not (0 <= u < node_count and 0 <= v < node_count):
            raise ValueError(f"edge ({u}, {v}) out of range for {node_count} vertices")
        edges.add((min(u, v), max(u, v)))
    neighbors = [set() for _ in range(node_count)]
    for u, v in edges:
        neighbors[u].add(v)
        neighbors[v].add(u)
    degree = tuple(len(n) for n in neighbors)
    for v, d in enumerate(degree):
        if d == 0:
            raise ValueError(f"vertex {v} is isolated (degree 0)")
    return Graph(
        node_count=node_count,
        edges=frozenset(edges),
        degree=degree,
        adjacency=tuple(frozenset(n) for n in neighbors),
    )


def load_graph(text: str) -> Graph:
    """Parse an edge-list text into a validated Graph."""
    pairs = []
    max_vertex = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(fields[0]), int(fields[1])
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer vertex id in {raw!r}") from None
        if u < 0 or v < 0:
            raise ValueError(f"line {lineno}: negative vertex id in {raw!r}")
        if u == v:
            raise ValueError(f"line {lineno}: self-loop on vertex {u}")
        pairs.append((u, v))
        max_vertex = max(max_vertex, u, v)
    if not pairs:
        raise ValueError("edge list is empty")
    return build_graph(max_vertex + 1, pairs)


def load_graph_file(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return load_graph(fh.read())


def _check_subset(g: Graph, subset) -> frozenset:
    s = frozenset(subset)
    for v in s:
        if not (0 <= v < g.node_count):
            raise ValueError(f"vertex {v} out of range for {g.node_count} vertices")
    return s


def cut_size(g: Graph, subset) -> int:
    """Number of edges with exactly one endpoint in `subset`."""
    s = _check_subset(g, subset)
    return sum(len(g.adjacency[u] - s) for u in s)


def subset_volume(g: Graph, subset) -> int:
    """Sum of degrees over the vertices in `subset`."""
    s = _check_subset(g, subset)
    return sum(g.degree[u] for u in s)


def cross_edges(g: Graph, a, b) -> int:
    """Number of edges with one endpoint in `a` and the other in `b`.

    `a` and `b` are assumed disjoint.
    """
    if len(a) > len(b):
        a, b = b, a
    bs = frozenset(b)
    return sum(len(g.adjacency[u] & bs) for u in a)
