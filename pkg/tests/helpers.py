"""Independent oracles and random corpora shared by the test modules."""

from __future__ import annotations

import itertools
from functools import lru_cache

import networkx as nx
import numpy as np

from egdkit.graph import (
    Graph,
    complete,
    complete_bipartite,
    contract_edge,
    is_two_connected,
    make_graph,
    strong_product,
)


@lru_cache(maxsize=None)
def _labelings(n: int, k: int) -> np.ndarray:
    """Every map V -> {-1 (unused), 0..k-1} as rows."""
    grid = np.array(list(itertools.product(range(-1, k), repeat=n)), dtype=np.int8)
    # every class must be used at least once
    keep = np.all([(grid == c).any(axis=1) for c in range(k)], axis=0)
    return grid[keep]


def brute_has_minor(host: Graph, model: Graph) -> bool:
    """Minor test by enumerating every partial partition of the host."""
    n, k = host.n, model.n
    if k == 0:
        return True
    if k > n or model.m > host.m:
        return False
    L = _labelings(n, k)
    A = np.zeros((n, n), dtype=bool)
    for u, v in host.edges:
        A[u, v] = A[v, u] = True
    ok = np.ones(len(L), dtype=bool)
    Ai = A.astype(np.int32)
    for c in range(k):
        member = L == c
        first = np.argmax(member, axis=1)
        reach = np.zeros_like(member)
        reach[np.arange(len(L)), first] = True
        for _ in range(n):
            reach = (reach | ((reach.astype(np.int32) @ Ai) > 0)) & member
        ok &= (reach == member).all(axis=1)
    # bit (a+1)*(k+1)+(b+1) records a host edge between classes a and b
    width = k + 1
    seen = np.zeros(len(L), dtype=np.int64)
    Ls = L.astype(np.int64) + 1
    for u, v in host.edges:
        seen |= np.left_shift(1, Ls[:, u] * width + Ls[:, v])
        seen |= np.left_shift(1, Ls[:, v] * width + Ls[:, u])
    need = 0
    for a, b in model.edges:
        need |= 1 << ((a + 1) * width + (b + 1))
    ok &= (seen & need) == need
    return bool(ok.any())


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    return make_graph(n, [e for e in itertools.combinations(range(n), 2) if rng.random() < p])


def random_tree(k: int, rng: np.random.Generator) -> Graph:
    return make_graph(k, [(i, int(rng.integers(0, i))) for i in range(1, k)])


def random_txk2_minor(rng: np.random.Generator, tree_max: int = 6, keep: float = 0.8) -> Graph:
    """Random subgraph of a random contraction of T x K2."""
    t = random_tree(int(rng.integers(2, tree_max + 1)), rng)
    g = strong_product(t, complete(2))
    for _ in range(int(rng.integers(0, 3))):
        if g.m == 0:
            break
        e = g.edge_list[int(rng.integers(0, g.m))]
        g = contract_edge(g, e)
    return make_graph(g.n, [e for e in g.edge_list if rng.random() < keep])


def random_series_parallel(rng: np.random.Generator, n_max: int = 12) -> Graph:
    """2-connected K4-minor-free graph grown by adding ear paths on edges."""
    n = int(rng.integers(3, 6))
    edges = [(i, (i + 1) % n) for i in range(n)]
    target = int(rng.integers(6, n_max + 1))
    while n < target:
        u, v = edges[int(rng.integers(0, len(edges)))]
        length = int(rng.integers(2, 4))
        inner = list(range(n, n + min(length - 1, target - n)))
        chain = [u, *inner, v]
        edges += list(zip(chain, chain[1:]))
        n += len(inner)
    return make_graph(n, edges)


def random_noF3K4(rng: np.random.Generator, n_max: int = 12) -> Graph:
    """Series-parallel growth filtered by the minor oracle against F3."""
    from egdkit.characterize import f3
    from egdkit.minors import has_minor

    while True:
        g = random_series_parallel(rng, n_max)
        if not has_minor(g, f3()):
            return g


def random_noF3H3_block(rng: np.random.Generator, n_max: int = 12) -> Graph | None:
    """A random 2-connected graph with n >= 6 from the T x K2 minor family (not K33)."""
    g = random_txk2_minor(rng, tree_max=6, keep=0.85)
    comps = [c for c in nx.biconnected_components(g.to_networkx()) if len(c) >= 6]
    if not comps:
        return None
    verts = sorted(max(comps, key=len))
    if len(verts) > n_max:
        return None
    b, _ = g.induced(verts)
    if not is_two_connected(b):
        return None
    if b.m == 9 and nx.is_isomorphic(b.to_networkx(), complete_bipartite(3, 3).to_networkx()):
        return None
    return b


def chordless_cycle_exists(g: Graph) -> bool:
    """True if some cycle of length >= 4 has no chord (brute force over vertex subsets)."""
    ng = g.to_networkx()
    for k in range(4, g.n + 1):
        for sub in itertools.combinations(range(g.n), k):
            h = ng.subgraph(sub)
            if h.number_of_edges() == k and all(d == 2 for _, d in h.degree()) and nx.is_connected(h):
                return True
    return False


def min_vertex_cut(g: Graph, x: int, y: int) -> int:
    """Smallest set of other vertices whose removal separates x from y (x, y non-adjacent)."""
    others = [v for v in range(g.n) if v not in (x, y)]
    ng = g.to_networkx()
    for k in range(len(others) + 1):
        for cut in itertools.combinations(others, k):
            h = ng.subgraph(v for v in range(g.n) if v not in cut)
            if not nx.has_path(h, x, y):
                return k
    return len(others)
