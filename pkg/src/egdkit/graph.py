"""Simple undirected graphs on contiguous vertex indices.

Everything here is immutable and deterministic.  Vertex sets are often
carried around as integer bitmasks, which is what the compiled kernels
expect as well.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import networkx as nx

from . import _backend


class GraphError(ValueError):
    """Raised for malformed graphs or violated graph preconditions."""


Edge = tuple[int, int]


def _norm(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """An undirected simple graph with vertices ``0..n-1``."""

    n: int
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 0:
            raise GraphError("vertex count must be non-negative")
        for u, v in self.edges:
            if not (0 <= u < v < self.n):
                raise GraphError(f"bad edge ({u}, {v}) for n={self.n}")

    @cached_property
    def edge_list(self) -> list[Edge]:
        return sorted(self.edges)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adj(self) -> tuple[frozenset[int], ...]:
        nb: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            nb[u].add(v)
            nb[v].add(u)
        return tuple(frozenset(s) for s in nb)

    @cached_property
    def masks(self) -> tuple[int, ...]:
        """Neighbourhood of each vertex as a bitmask."""
        out = [0] * self.n
        for u, v in self.edges:
            out[u] |= 1 << v
            out[v] |= 1 << u
        return tuple(out)

    def neighbors(self, v: int) -> list[int]:
        return sorted(self.adj[v])

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return _norm(u, v) in self.edges

    def with_edges(self, extra: Iterable[Edge]) -> "Graph":
        return make_graph(self.n, list(self.edges) + list(extra))

    def without_edges(self, drop: Iterable[Edge]) -> "Graph":
        gone = {_norm(*e) for e in drop}
        return Graph(self.n, frozenset(self.edges - gone))

    def induced(self, vertices: Sequence[int]) -> tuple["Graph", list[int]]:
        """Induced subgraph on ``vertices`` (relabelled in the given order).

        Returns the subgraph and the list mapping new index to old index.
        """
        verts = list(vertices)
        pos = {v: i for i, v in enumerate(verts)}
        es = [
            (pos[u], pos[v])
            for u, v in self.edges
            if u in pos and v in pos
        ]
        return make_graph(len(verts), es), verts

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        return components_mask(self.masks, (1 << self.n) - 1)[0] == (1 << self.n) - 1

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edge_list)
        return g

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def make_graph(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Build a graph, dropping duplicate edges.

    >>> make_graph(4, [(0, 1), (1, 0)]).m
    1
    """
    out = set()
    for e in edges:
        u, v = int(e[0]), int(e[1])
        if u == v:
            raise GraphError(f"self-loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
        out.add(_norm(u, v))
    return Graph(n, frozenset(out))


def from_networkx(g: nx.Graph) -> tuple[Graph, list]:
    nodes = sorted(g.nodes())
    pos = {v: i for i, v in enumerate(nodes)}
    return make_graph(len(nodes), [(pos[u], pos[v]) for u, v in g.edges()]), nodes


# ---------------------------------------------------------------- generators


def complete(n: int) -> Graph:
    if n < 1:
        raise GraphError("complete graph needs n >= 1")
    return make_graph(n, itertools.combinations(range(n), 2))


def complete_bipartite(a: int, b: int) -> Graph:
    if a < 1 or b < 1:
        raise GraphError("both sides must be non-empty")
    return make_graph(a + b, [(i, a + j) for i in range(a) for j in range(b)])


def complete_multipartite(*sizes: int) -> Graph:
    part, start = [], 0
    for s in sizes:
        part.append(range(start, start + s))
        start += s
    es = [
        (u, v)
        for p, q in itertools.combinations(part, 2)
        for u in p
        for v in q
    ]
    return make_graph(start, es)


def cycle(n: int) -> Graph:
    if n < 3:
        raise GraphError("cycle needs n >= 3")
    return make_graph(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> Graph:
    if n < 1:
        raise GraphError("path needs n >= 1")
    return make_graph(n, [(i, i + 1) for i in range(n - 1)])


def star(k: int) -> Graph:
    """Star with centre 0 and ``k`` leaves."""
    if k < 1:
        raise GraphError("star needs k >= 1")
    return make_graph(k + 1, [(0, i) for i in range(1, k + 1)])


def wheel_w5() -> Graph:
    """C4 on vertices 0..3 plus a hub 4 joined to all of them."""
    return make_graph(5, [(0, 1), (1, 2), (2, 3), (3, 0)] + [(i, 4) for i in range(4)])


def k5_minus_edge() -> Graph:
    return complete(5).without_edges([(3, 4)])


# ------------------------------------------------------------------ products


def strong_product(g: Graph, h: Graph) -> Graph:
    """Strong product with vertex ``(i, a)`` numbered ``i * h.n + a``."""
    if g.n == 0 or h.n == 0:
        raise GraphError("products need non-empty factors")
    es = []
    for i, j in itertools.product(range(g.n), repeat=2):
        if i != j and not g.has_edge(i, j):
            continue
        for a, b in itertools.product(range(h.n), repeat=2):
            if (i, a) >= (j, b):
                continue
            if a == b or h.has_edge(a, b):
                es.append((i * h.n + a, j * h.n + b))
    return make_graph(g.n * h.n, es)


def cartesian_product(g: Graph, h: Graph) -> Graph:
    if g.n == 0 or h.n == 0:
        raise GraphError("products need non-empty factors")
    es = []
    for i in range(g.n):
        for a, b in h.edges:
            es.append((i * h.n + a, i * h.n + b))
    for i, j in g.edges:
        for a in range(h.n):
            es.append((i * h.n + a, j * h.n + a))
    return make_graph(g.n * h.n, es)


# -------------------------------------------------------------- edge surgery


def delete_edge(g: Graph, e: Edge) -> Graph:
    e = _norm(*e)
    if e not in g.edges:
        raise GraphError(f"edge {e} not in graph")
    return Graph(g.n, g.edges - {e})


def delete_vertex(g: Graph, v: int) -> Graph:
    keep = [u for u in range(g.n) if u != v]
    return g.induced(keep)[0]


def contract_edge(g: Graph, e: Edge) -> Graph:
    """Contract ``e``; the smaller endpoint survives and higher indices shift down."""
    u, v = _norm(*e)
    if (u, v) not in g.edges:
        raise GraphError(f"edge {(u, v)} not in graph")

    def relabel(w: int) -> int:
        if w == v:
            return u
        return w - 1 if w > v else w

    es = set()
    for a, b in g.edges:
        a2, b2 = relabel(a), relabel(b)
        if a2 != b2:
            es.add(_norm(a2, b2))
    return Graph(g.n - 1, frozenset(es))


# ------------------------------------------------------------- connectivity


def components_mask(masks: Sequence[int], within: int) -> list[int]:
    """Connected components of the subgraph induced by the bitmask ``within``."""
    comps = []
    rest = within
    while rest:
        seed = rest & -rest
        comp = seed
        frontier = seed
        while frontier:
            low = frontier & -frontier
            frontier ^= low
            nb = masks[low.bit_length() - 1] & rest & ~comp
            comp |= nb
            frontier |= nb
        comps.append(comp)
        rest &= ~comp
    return comps


def components(g: Graph) -> list[list[int]]:
    return [bits(c) for c in components_mask(g.masks, (1 << g.n) - 1)]


def bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def to_mask(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


@dataclass(frozen=True)
class Block:
    """A block of a graph: its induced subgraph plus the map back to the host."""

    graph: Graph
    vertices: tuple[int, ...]


def blocks(g: Graph) -> tuple[list[Block], list[int]]:
    """Block-cut decomposition.

    Isolated vertices form single-vertex blocks.  Blocks are ordered by their
    smallest vertex, then lexicographically.
    """
    ng = g.to_networkx()
    sets = [sorted(c) for c in nx.biconnected_components(ng)]
    covered = set().union(*map(set, sets)) if sets else set()
    sets += [[v] for v in range(g.n) if v not in covered]
    sets.sort()
    cuts = sorted(nx.articulation_points(ng))
    return [Block(g.induced(s)[0], tuple(s)) for s in sets], cuts


def is_two_connected(g: Graph) -> bool:
    if g.n < 3 or not g.is_connected():
        return False
    return nx.is_biconnected(g.to_networkx())


# -------------------------------------------------------------- disjoint paths


def vertex_disjoint_paths(g: Graph, x: int, y: int) -> tuple[int, list[list[int]]]:
    """Maximum set of internally vertex-disjoint ``x``-``y`` paths.

    Uses unit vertex capacities on the split network.  A direct edge ``xy``
    counts as one path.
    """
    if x == y:
        raise GraphError("endpoints must differ")
    for v in (x, y):
        if not 0 <= v < g.n:
            raise GraphError(f"vertex {v} out of range")
    paths: list[list[int]] = []
    work = g
    if g.has_edge(x, y):
        paths.append([x, y])
        work = delete_edge(g, (x, y))

    # node v -> v_in = 2v, v_out = 2v+1
    cap: dict[tuple[int, int], int] = {}
    out: dict[int, list[int]] = {}

    def arc(a: int, b: int, c: int) -> None:
        if (a, b) not in cap:
            out.setdefault(a, []).append(b)
            out.setdefault(b, []).append(a)
            cap.setdefault((b, a), 0)
        cap[(a, b)] = cap.get((a, b), 0) + c

    big = g.n + 1
    for v in range(g.n):
        arc(2 * v, 2 * v + 1, big if v in (x, y) else 1)
    for u, v in work.edges:
        arc(2 * u + 1, 2 * v, 1)
        arc(2 * v + 1, 2 * u, 1)
    src, dst = 2 * x + 1, 2 * y
    flow = 0
    while True:
        prev = {src: src}
        q = deque([src])
        while q and dst not in prev:
            a = q.popleft()
            for b in sorted(out.get(a, [])):
                if b not in prev and cap[(a, b)] > 0:
                    prev[b] = a
                    q.append(b)
        if dst not in prev:
            break
        b = dst
        while b != src:
            a = prev[b]
            cap[(a, b)] -= 1
            cap[(b, a)] += 1
            b = a
        flow += 1

    # Decompose the flow: follow saturated original arcs from x.
    used: dict[int, list[int]] = {}
    for u, v in work.edges:
        for a, b in ((u, v), (v, u)):
            if cap[(2 * b, 2 * a + 1)] > 0 and cap[(2 * a + 1, 2 * b)] == 0:
                used.setdefault(a, []).append(b)
    for _ in range(flow):
        p = [x]
        while p[-1] != y:
            nxt = used[p[-1]].pop(0)
            p.append(nxt)
        paths.append(p)
    return len(paths), paths


# ---------------------------------------------------------------- chordality


@dataclass(frozen=True)
class CliqueTree:
    """Maximal cliques of a chordal graph arranged in a tree."""

    cliques: tuple[tuple[int, ...], ...]
    tree_edges: tuple[tuple[int, int], ...]
    peo: tuple[int, ...]


def mcs_order(g: Graph) -> list[int]:
    """Maximum cardinality search visit order, ties to the lowest index."""
    weight = [0] * g.n
    seen = [False] * g.n
    order = []
    for _ in range(g.n):
        best = -1
        for v in range(g.n):
            if not seen[v] and (best < 0 or weight[v] > weight[best]):
                best = v
        seen[best] = True
        order.append(best)
        for u in g.adj[best]:
            if not seen[u]:
                weight[u] += 1
    return order


def is_chordal(g: Graph) -> CliqueTree | None:
    """Return a clique tree when ``g`` is chordal, else ``None``."""
    order = mcs_order(g)
    pos = {v: i for i, v in enumerate(order)}
    cands = []
    for i, v in enumerate(order):
        earlier = [u for u in g.adj[v] if pos[u] < i]
        if earlier:
            # the latest earlier neighbour must see all the others
            parent = max(earlier, key=pos.__getitem__)
            rest = set(earlier) - {parent}
            if not rest <= g.adj[parent]:
                return None
        cands.append(frozenset(earlier) | {v})
    maximal = []
    for c in cands:
        if not any(c < d for d in cands) and c not in maximal:
            maximal.append(c)
    cliques = sorted(tuple(sorted(c)) for c in maximal)
    # Kruskal on separator sizes, largest first, ties by index pair.
    pairs = sorted(
        (
            (-len(set(cliques[i]) & set(cliques[j])), i, j)
            for i, j in itertools.combinations(range(len(cliques)), 2)
        )
    )
    root = list(range(len(cliques)))

    def find(a: int) -> int:
        while root[a] != a:
            root[a] = root[root[a]]
            a = root[a]
        return a

    tree = []
    for _, i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            root[ri] = rj
            tree.append((i, j))
    return CliqueTree(tuple(cliques), tuple(sorted(tree)), tuple(reversed(order)))


def clique_number(g: Graph) -> int:
    if g.n == 0:
        return 0
    return max(len(c) for c in nx.find_cliques(g.to_networkx()))


def maximal_cliques(g: Graph) -> list[tuple[int, ...]]:
    return sorted(tuple(sorted(c)) for c in nx.find_cliques(g.to_networkx()))


# ----------------------------------------------------------------- treewidth

TREEWIDTH_LIMIT = {"compiled": 22, "python": 16}


def treewidth_exact(g: Graph) -> int:
    """Exact treewidth by dynamic programming over vertex subsets.

    The table has 2^n entries, so n is capped (22 compiled, 16 pure Python).
    """
    limit = TREEWIDTH_LIMIT[_backend.BACKEND]
    if g.n > limit:
        raise GraphError(f"treewidth_exact supports n <= {limit} on the {_backend.BACKEND} backend")
    if g.n == 0:
        return -1
    return _backend.treewidth_dp(list(g.masks), g.n)


# -------------------------------------------------------------------- text IO


def to_text(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines += [f"{u} {v}" for u, v in g.edge_list]
    return "\n".join(lines) + "\n"


def parse_graph_lines(lines: list[str]) -> tuple[Graph, list[str]]:
    """Parse a graph from the head of ``lines``; return it and the leftovers."""
    body = [ln.strip() for ln in lines]
    body = [ln for ln in body if ln and not ln.startswith("#")]
    if not body:
        raise GraphError("empty graph text")
    try:
        n, m = (int(t) for t in body[0].split())
        edges = [tuple(int(t) for t in ln.split()) for ln in body[1 : 1 + m]]
    except ValueError as exc:
        raise GraphError(f"malformed graph text: {exc}") from None
    if len(edges) != m or any(len(e) != 2 for e in edges):
        raise GraphError("edge count does not match header")
    return make_graph(n, edges), body[1 + m :]


def from_text(text: str) -> Graph:
    return parse_graph_lines(text.splitlines())[0]
