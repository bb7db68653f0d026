"""Combinatorial patterns: graphs, bigraphs, trees, decompositions.

Vertices are dense integer indices ``0..n-1``; any external labels belong to
the I/O layer.  All structures are immutable after construction so they can be
shared freely between the contraction engine and the experiment runners.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import BudgetError, ParseError, ValidationError

__all__ = [
    "Graph",
    "Bigraph",
    "Tree",
    "LabeledTree",
    "SeqTreeDecomposition",
    "IntPolynomial",
    "GraphStats",
    "parse_graph",
    "graph_to_edgelist",
    "graph_stats",
    "is_triangle_free",
    "star_decomposition",
    "search_order",
    "chromatic_polynomial",
    "elimination_order",
    "path",
    "cycle",
    "star",
    "complete",
    "complete_bipartite",
    "cube",
]

CHROMATIC_EDGE_BUDGET = 16


def _normalize_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Finite simple graph: no loops, no parallel edges."""

    vertex_count: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.vertex_count < 0:
            raise ValidationError("vertex_count must be nonnegative")
        for u, v in self.edges:
            if u == v:
                raise ValidationError(f"self-loop at vertex {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValidationError(f"edge ({u},{v}) out of range")
            if u > v:
                raise ValidationError("edges must be stored as (min,max) pairs")

    @staticmethod
    def from_edges(vertex_count: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        return Graph(vertex_count, frozenset(_normalize_edge(u, v) for u, v in edges))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.vertex_count)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def is_connected(self) -> bool:
        if self.vertex_count == 0:
            return True
        adj = self.adjacency()
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.vertex_count


@dataclass(frozen=True)
class Bigraph:
    """Bipartite pattern with an ordered bipartition (left, right).

    The orientation is part of the identity: ``reverse()`` swaps the classes
    and is an involution.
    """

    left_count: int
    right_count: int
    edges: frozenset[tuple[int, int]]  # (left index, right index)

    def __post_init__(self) -> None:
        for u, w in self.edges:
            if not (0 <= u < self.left_count):
                raise ValidationError(f"left index {u} out of range")
            if not (0 <= w < self.right_count):
                raise ValidationError(f"right index {w} out of range")

    def reverse(self) -> "Bigraph":
        return Bigraph(self.right_count, self.left_count,
                       frozenset((w, u) for u, w in self.edges))

    def to_graph(self) -> Graph:
        """Underlying simple graph; right vertices are shifted by left_count."""
        n = self.left_count + self.right_count
        return Graph.from_edges(n, ((u, self.left_count + w) for u, w in self.edges))

    def right_neighborhoods(self) -> list[tuple[int, ...]]:
        """For each right vertex, its left neighbors in ascending order."""
        nbrs: list[list[int]] = [[] for _ in range(self.right_count)]
        for u, w in sorted(self.edges):
            nbrs[w].append(u)
        return [tuple(sorted(ns)) for ns in nbrs]

    @staticmethod
    def from_json(text: str) -> "Bigraph":
        try:
            doc = json.loads(text)
            left, right = int(doc["left"]), int(doc["right"])
            edges = [(int(u), int(w)) for u, w in doc["edges"]]
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise ParseError(f"bad bigraph document: {exc}") from exc
        return Bigraph(left, right, frozenset(edges))

    def to_json(self) -> str:
        return json.dumps({"left": self.left_count, "right": self.right_count,
                           "edges": [list(e) for e in sorted(self.edges)]})


@dataclass(frozen=True)
class Tree:
    """A tree together with its leaf/interior partition.

    The partition is part of the identity: a single edge with both endpoints
    marked as leaves is a path, while the same edge with one endpoint interior
    is a 1-star.  A one-vertex tree has an empty leaf set.
    """

    graph: Graph
    leaves: frozenset[int]
    interior: frozenset[int]
    root: Optional[int] = None

    def __post_init__(self) -> None:
        g = self.graph
        if g.edge_count != g.vertex_count - 1 or not g.is_connected():
            raise ValidationError("underlying graph is not a tree")
        if self.leaves & self.interior:
            raise ValidationError("leaf and interior sets overlap")
        if self.leaves | self.interior != frozenset(range(g.vertex_count)):
            raise ValidationError("leaf/interior sets must partition the vertices")
        for v in self.leaves:
            if g.degree(v) > 1:
                raise ValidationError(f"leaf {v} has degree > 1")
        if self.root is not None and not (0 <= self.root < g.vertex_count):
            raise ValidationError("root out of range")

    @staticmethod
    def from_graph(g: Graph, root: Optional[int] = None) -> "Tree":
        """Default leaf assignment: vertices of degree <= 1 are leaves.

        A single vertex is interior (no leaves), so the one-vertex tree is
        the 0-star.
        """
        if g.vertex_count == 1:
            return Tree(g, frozenset(), frozenset({0}), root)
        leaves = frozenset(v for v in range(g.vertex_count) if g.degree(v) <= 1)
        return Tree(g, leaves, frozenset(range(g.vertex_count)) - leaves, root)

    @property
    def vertex_count(self) -> int:
        return self.graph.vertex_count


@dataclass(frozen=True)
class LabeledTree(Tree):
    """Tree whose vertices carry labels into a host graph.

    ``labels[i]`` is the host vertex represented by local vertex ``i``.
    """

    labels: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        super().__post_init__()
        if len(self.labels) != self.graph.vertex_count:
            raise ValidationError("labels length mismatch")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("labels must be distinct")

    def leaf_labels(self) -> frozenset[int]:
        return frozenset(self.labels[v] for v in self.leaves)

    def label_edges(self) -> set[tuple[int, int]]:
        return {_normalize_edge(self.labels[u], self.labels[v])
                for u, v in self.graph.edges}


@dataclass(frozen=True)
class SeqTreeDecomposition:
    """Edge-disjoint trees F_1..F_m over shared vertex labels.

    Each tree meets the union of the earlier ones exactly in its leaf set;
    the first tree is a singleton.  ``attachments[i]`` lists the host labels
    of the leaves of F_i (the vertices shared with the earlier union) in
    ascending order.
    """

    vertex_count: int
    trees: tuple[LabeledTree, ...]
    attachments: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if len(self.trees) != len(self.attachments):
            raise ValidationError("trees and attachments length mismatch")
        if self.trees and self.trees[0].vertex_count != 1:
            raise ValidationError("first tree must be a singleton")
        seen_vertices: set[int] = set()
        seen_edges: set[tuple[int, int]] = set()
        for i, (tree, z) in enumerate(zip(self.trees, self.attachments)):
            labels = set(tree.labels)
            shared = labels & seen_vertices
            if shared != set(z):
                raise ValidationError(
                    f"tree {i}: shared vertices {sorted(shared)} != attachment {list(z)}")
            if shared != tree.leaf_labels():
                raise ValidationError(
                    f"tree {i}: shared vertices are not exactly its leaves")
            for le in tree.label_edges():
                if le in seen_edges:
                    raise ValidationError(f"tree {i}: edge {le} reused")
                seen_edges.add(le)
            seen_vertices |= labels

    def covered_graph(self) -> Graph:
        edges: set[tuple[int, int]] = set()
        for tree in self.trees:
            edges |= tree.label_edges()
        return Graph.from_edges(self.vertex_count, edges)


@dataclass(frozen=True)
class GraphStats:
    max_degree: int
    girth: float  # math.inf for forests
    is_triangle_free: bool
    bipartition: Optional[tuple[tuple[int, ...], tuple[int, ...]]]


# ---------------------------------------------------------------------------
# parsing and construction helpers


def parse_graph(text: str) -> Graph:
    """Parse the edge-list format.

    Optional header line ``n=<int>`` pins the vertex count; otherwise it is
    one more than the largest index.  Each following non-comment line holds
    two distinct nonnegative integers.  ``#`` starts a comment.
    """
    vertex_count: Optional[int] = None
    edges: set[tuple[int, int]] = set()
    max_index = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("n="):
            try:
                vertex_count = int(line[2:])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad header {line!r}") from exc
            if vertex_count < 0:
                raise ParseError(f"line {lineno}: negative vertex count")
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: non-integer endpoint in {line!r}") from exc
        if u < 0 or v < 0:
            raise ParseError(f"line {lineno}: negative vertex index")
        if u == v:
            raise ParseError(f"line {lineno}: self-loop at {u}")
        edges.add(_normalize_edge(u, v))
        max_index = max(max_index, u, v)
    if vertex_count is None:
        vertex_count = max_index + 1
    elif max_index >= vertex_count:
        raise ParseError(f"edge index {max_index} exceeds declared n={vertex_count}")
    return Graph(vertex_count, frozenset(edges))


def graph_to_edgelist(g: Graph) -> str:
    lines = [f"n={g.vertex_count}"]
    lines += [f"{u} {v}" for u, v in g.sorted_edges()]
    return "\n".join(lines) + "\n"


def path(k: int) -> Graph:
    """Path with k edges (k+1 vertices)."""
    if k < 0:
        raise ValidationError("k must be >= 0")
    return Graph.from_edges(k + 1, ((i, i + 1) for i in range(k)))


def cycle(k: int) -> Graph:
    if k < 3:
        raise ValidationError("cycles need k >= 3")
    return Graph.from_edges(k, ((i, (i + 1) % k) for i in range(k)))


def star(k: int) -> Tree:
    """Star with k edges: center 0 (interior), leaves 1..k."""
    if k < 0:
        raise ValidationError("k must be >= 0")
    g = Graph.from_edges(k + 1, ((0, i) for i in range(1, k + 1)))
    return Tree(g, frozenset(range(1, k + 1)), frozenset({0}), root=0)


def complete(n: int) -> Graph:
    return Graph.from_edges(n, ((i, j) for i in range(n) for j in range(i + 1, n)))


def complete_bipartite(a: int, b: int) -> Bigraph:
    return Bigraph(a, b, frozenset((u, w) for u in range(a) for w in range(b)))


def cube() -> Graph:
    """The 3-dimensional hypercube Q_3."""
    edges = []
    for x in range(8):
        for bit in (1, 2, 4):
            y = x ^ bit
            if x < y:
                edges.append((x, y))
    return Graph.from_edges(8, edges)


# ---------------------------------------------------------------------------
# structural queries


def graph_stats(g: Graph) -> GraphStats:
    """Degree/girth/bipartition summary.

    Girth is found by a BFS from every vertex (shortest cycle through each
    start); the bipartition, when it exists, puts the lowest-index vertex of
    every component into the first class so downstream results are
    reproducible.
    """
    adj = g.adjacency()
    n = g.vertex_count
    max_degree = max((len(a) for a in adj), default=0)

    girth: float = math.inf
    for root in range(n):
        dist = {root: 0}
        parent = {root: -1}
        queue = [root]
        while queue:
            nxt: list[int] = []
            for u in queue:
                for w in adj[u]:
                    if w not in dist:
                        dist[w] = dist[u] + 1
                        parent[w] = u
                        nxt.append(w)
                    elif w != parent[u] and dist[w] >= dist[u]:
                        # non-tree edge closing a cycle through `root`
                        girth = min(girth, dist[u] + dist[w] + 1)
            queue = nxt

    color: dict[int, int] = {}
    bipartite = True
    for root in range(n):
        if root in color:
            continue
        color[root] = 0
        queue = [root]
        while queue and bipartite:
            u = queue.pop()
            for w in adj[u]:
                if w not in color:
                    color[w] = 1 - color[u]
                    queue.append(w)
                elif color[w] == color[u]:
                    bipartite = False
                    break
        if not bipartite:
            break
    bipartition = None
    if bipartite:
        left = tuple(v for v in range(n) if color[v] == 0)
        right = tuple(v for v in range(n) if color[v] == 1)
        bipartition = (left, right)

    return GraphStats(max_degree=max_degree, girth=girth,
                      is_triangle_free=girth > 3, bipartition=bipartition)


def is_triangle_free(g: Graph) -> bool:
    adj = g.adjacency()
    for u, v in g.edges:
        if adj[u] & adj[v]:
            return False
    return True


def search_order(t: Tree, root: int) -> list[int]:
    """Breadth-first order from `root`, children visited by ascending index.

    Every non-root vertex is adjacent to exactly one earlier vertex.
    """
    if not (0 <= root < t.graph.vertex_count):
        raise ValidationError(f"root {root} out of range")
    adj = t.graph.adjacency()
    order = [root]
    seen = {root}
    queue = [root]
    while queue:
        u = queue.pop(0)
        for w in sorted(adj[u]):
            if w not in seen:
                seen.add(w)
                order.append(w)
                queue.append(w)
    return order


def star_decomposition(g: Graph, order: Sequence[int]) -> SeqTreeDecomposition:
    """Decompose `g` into stars along a vertex ordering.

    The i-th tree is the star centered at ``order[i]`` whose leaves are the
    earlier neighbors; vertices with no earlier neighbor contribute singleton
    trees.  The trees are edge-disjoint and their union is `g`.
    """
    n = g.vertex_count
    if sorted(order) != list(range(n)):
        raise ValidationError("order must be a permutation of the vertices")
    adj = g.adjacency()
    placed: set[int] = set()
    trees: list[LabeledTree] = []
    attachments: list[tuple[int, ...]] = []
    for v in order:
        earlier = tuple(sorted(adj[v] & placed))
        k = len(earlier)
        base = star(k)
        labels = (v,) + earlier  # local 0 = center, locals 1..k = leaves
        trees.append(LabeledTree(base.graph, base.leaves, base.interior,
                                 root=0, labels=labels))
        attachments.append(earlier)
        placed.add(v)
    return SeqTreeDecomposition(n, tuple(trees), tuple(attachments))


# ---------------------------------------------------------------------------
# chromatic polynomial


@dataclass(frozen=True)
class IntPolynomial:
    """Dense integer polynomial, coefficients lowest degree first."""

    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.coeffs and self.coeffs[-1] == 0 and len(self.coeffs) > 1:
            raise ValidationError("leading coefficient must be nonzero")

    @staticmethod
    def from_coeffs(coeffs: Sequence[int]) -> "IntPolynomial":
        cs = list(coeffs)
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if not cs:
            cs = [0]
        return IntPolynomial(tuple(int(c) for c in cs))

    @property
    def degree(self) -> int:
        return 0 if self.coeffs == (0,) else len(self.coeffs) - 1

    def __call__(self, q):  # exact when q is int or Fraction
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * q + c
        return acc

    def __add__(self, other: "IntPolynomial") -> "IntPolynomial":
        m = max(len(self.coeffs), len(other.coeffs))
        cs = [0] * m
        for i, c in enumerate(self.coeffs):
            cs[i] += c
        for i, c in enumerate(other.coeffs):
            cs[i] += c
        return IntPolynomial.from_coeffs(cs)

    def __sub__(self, other: "IntPolynomial") -> "IntPolynomial":
        return self + IntPolynomial.from_coeffs([-c for c in other.coeffs])

    def __mul__(self, other: "IntPolynomial") -> "IntPolynomial":
        cs = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    cs[i + j] += a * b
        return IntPolynomial.from_coeffs(cs)

    def coefficient(self, k: int) -> int:
        return self.coeffs[k] if k < len(self.coeffs) else 0


_POLY_Q = IntPolynomial((0, 1))
_POLY_QM1 = IntPolynomial((-1, 1))


def chromatic_polynomial(g: Graph) -> IntPolynomial:
    """Chromatic polynomial by deletion-contraction.

    Budgeted to 16 edges; only small patterns are needed.  Subproblems are
    memoized on a canonical labeled form (isolated vertices stripped,
    remaining vertices relabeled in ascending order), and forests /
    disconnected graphs short-circuit.
    """
    if g.edge_count > CHROMATIC_EDGE_BUDGET:
        raise BudgetError(
            f"chromatic polynomial budget is {CHROMATIC_EDGE_BUDGET} edges, "
            f"got {g.edge_count}")
    memo: dict[tuple[int, tuple[tuple[int, int], ...]], IntPolynomial] = {}

    def solve(n: int, edges: frozenset[tuple[int, int]]) -> IntPolynomial:
        if not edges:
            poly = IntPolynomial.from_coeffs([0] * n + [1])  # q^n
            return poly
        touched = sorted({v for e in edges for v in e})
        isolated = n - len(touched)
        relabel = {v: i for i, v in enumerate(touched)}
        canon = tuple(sorted(_normalize_edge(relabel[u], relabel[v]) for u, v in edges))
        key = (len(touched), canon)
        core = memo.get(key)
        if core is None:
            core = _chromatic_core(len(touched), canon)
            memo[key] = core
        if isolated:
            core = core * IntPolynomial.from_coeffs([0] * isolated + [1])
        return core

    def _chromatic_core(n: int, edges: tuple[tuple[int, int], ...]) -> IntPolynomial:
        # split over connected components
        adj: dict[int, set[int]] = {v: set() for v in range(n)}
        for u, v in edges:
            adj[u].add(v)
            adj[v].add(u)
        comps: list[set[int]] = []
        unseen = set(range(n))
        while unseen:
            root = min(unseen)
            comp = {root}
            stack = [root]
            while stack:
                for w in adj[stack.pop()]:
                    if w not in comp:
                        comp.add(w)
                        stack.append(w)
            comps.append(comp)
            unseen -= comp
        if len(comps) > 1:
            result = IntPolynomial((1,))
            for comp in comps:
                vs = sorted(comp)
                relabel = {v: i for i, v in enumerate(vs)}
                sub = frozenset(_normalize_edge(relabel[u], relabel[v])
                                for u, v in edges if u in comp)
                result = result * solve(len(vs), sub)
            return result
        m = len(edges)
        if m == n - 1:  # connected + n-1 edges = tree
            poly = _POLY_Q
            for _ in range(m):
                poly = poly * _POLY_QM1
            return poly
        # deletion-contraction on the lowest edge
        e = min(edges)
        u, v = e
        rest = frozenset(edges) - {e}
        deleted = solve(n, rest)
        # contract v into u, drop duplicates and loops, relabel > v down by one
        contracted: set[tuple[int, int]] = set()
        for a, b in rest:
            a2 = u if a == v else a
            b2 = u if b == v else b
            if a2 == b2:
                continue
            a2 = a2 - 1 if a2 > v else a2
            b2 = b2 - 1 if b2 > v else b2
            contracted.add(_normalize_edge(a2, b2))
        return deleted - solve(n - 1, frozenset(contracted))

    return solve(g.vertex_count, g.edges)


# ---------------------------------------------------------------------------
# elimination order


def elimination_order(g: Graph) -> tuple[list[int], int]:
    """Greedy min-fill elimination order and its induced width.

    Ties are broken by lowest vertex index so the density engine is
    reproducible.  The width is the largest number of live neighbors any
    vertex has at its elimination step.
    """
    adj = {v: set(ns) for v, ns in enumerate(g.adjacency())}
    order: list[int] = []
    width = 0
    remaining = set(range(g.vertex_count))
    while remaining:
        best_v, best_fill = -1, None
        for v in sorted(remaining):
            nbrs = adj[v] & remaining
            fill = 0
            nl = sorted(nbrs)
            for i, a in enumerate(nl):
                for b in nl[i + 1:]:
                    if b not in adj[a]:
                        fill += 1
            if best_fill is None or fill < best_fill:
                best_v, best_fill = v, fill
        v = best_v
        nbrs = sorted(adj[v] & remaining)
        width = max(width, len(nbrs))
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1:]:
                adj[a].add(b)
                adj[b].add(a)
        remaining.discard(v)
        order.append(v)
    return order, width
