"""Constructive structure for graphs without F3/H3 minors.

Free-clique classification, the T x K2 contraction-minor witness, the two
chordal-extension procedures and the per-block report used by the low-rank
pipeline.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

import networkx as nx

from .characterize import decide_egd_le2, f3
from .graph import (
    Edge,
    Graph,
    GraphError,
    blocks,
    complete,
    complete_bipartite,
    components_mask,
    is_chordal,
    is_two_connected,
    make_graph,
    maximal_cliques,
    to_mask,
    vertex_disjoint_paths,
)
from .minors import MinorEmbedding, minor_embedding


class TheoryViolation(GraphError):
    """An input passed the stated checks but contradicts the expected structure."""


Pairing = tuple[tuple[int, int], tuple[int, int]]


def _pairings(c: tuple[int, int, int, int]) -> list[Pairing]:
    a, b, cc, d = sorted(c)
    return [((a, b), (cc, d)), ((a, cc), (b, d)), ((a, d), (b, cc))]


def _cross(p: Pairing) -> list[Edge]:
    (a, b), (c, d) = p
    return sorted(tuple(sorted(e)) for e in [(a, c), (a, d), (b, c), (b, d)])


# ------------------------------------------------------------ free cliques


@dataclass(frozen=True)
class FreeClassification:
    free_edges: frozenset[Edge]
    maximal_cliques: tuple[tuple[int, ...], ...]
    free_flags: tuple[bool, ...]
    sides: dict[int, Pairing]

    @property
    def is_free(self) -> bool:
        return all(self.free_flags)


def _check_chordal_block(g: Graph) -> None:
    if not is_two_connected(g):
        raise GraphError("precondition: graph must be 2-connected")
    if is_chordal(g) is None:
        raise GraphError("precondition: graph must be chordal")


def classify_free(g: Graph) -> FreeClassification:
    """Which edges and maximal cliques are free, plus sides of free 4-cliques."""
    _check_chordal_block(g)
    cliques = tuple(maximal_cliques(g))
    if max(len(c) for c in cliques) > 4:
        raise GraphError("precondition: clique number must be at most 4")
    count = Counter(e for c in cliques for e in itertools.combinations(c, 2))
    free = frozenset(e for e, k in count.items() if k == 1)
    flags, sides = [], {}
    for idx, c in enumerate(cliques):
        es = list(itertools.combinations(c, 2))
        busy = [e for e in es if e not in free]
        if len(c) <= 2:
            flags.append(True)
        elif len(c) == 3:
            flags.append(len(busy) < 3)
        else:
            ok = not any(set(e) & set(f) for e, f in itertools.combinations(busy, 2))
            flags.append(ok)
            if ok:
                for p in _pairings(c):
                    if all(e in p for e in busy):
                        sides[idx] = p
                        break
    return FreeClassification(free, cliques, tuple(flags), sides)


# -------------------------------------------------------- T x K2 witness


@dataclass(frozen=True)
class TxK2Embedding:
    tree: Graph
    pair_map: dict[int, tuple[int, int]]
    contraction_pairs: tuple[tuple[int, int, int], ...]

    def to_json(self) -> dict:
        return {
            "tree_edges": [list(e) for e in self.tree.edge_list],
            "pairs": {str(k): list(v) for k, v in sorted(self.pair_map.items())},
            "splits": [list(s) for s in self.contraction_pairs],
        }


def _split_triangle(g: Graph, cls: FreeClassification, tri: tuple[int, int, int]) -> tuple[Graph, tuple[int, int, int]]:
    choice = None
    for a in tri:
        for b in tri:
            if a == b:
                continue
            c = next(v for v in tri if v not in (a, b))
            ab, bc = tuple(sorted((a, b))), tuple(sorted((b, c)))
            if ab not in cls.free_edges and bc in cls.free_edges:
                choice = (a, b, c)
                break
        if choice:
            break
    if choice is None:
        if all(tuple(sorted(e)) in cls.free_edges for e in itertools.combinations(tri, 2)):
            choice = tuple(sorted(tri))
        else:
            raise TheoryViolation(f"triangle {tri} has no free edge")
    a, b, c = choice
    rest = to_mask(range(g.n)) & ~to_mask((a, b))
    comp_c = next(m for m in components_mask(g.masks, rest) if m >> c & 1)
    new = g.n
    es = set(g.edges)
    for u in g.adj[a]:
        if u != b and comp_c >> u & 1:
            es.discard(tuple(sorted((a, u))))
            es.add((u, new))
    es |= {(a, new), (b, new), (c, new), tuple(sorted((a, c)))}
    return make_graph(g.n + 1, es), (a, new, a)


def build_txk2_embedding(g: Graph) -> TxK2Embedding:
    """Witness a free chordal graph as a contraction minor of T x K2."""
    cls = classify_free(g)
    if not cls.is_free:
        raise GraphError("precondition: graph is not free")
    quads = [set(c) for c in cls.maximal_cliques if len(c) == 4]
    if any(len(p & q) >= 3 for p, q in itertools.combinations(quads, 2)):
        raise GraphError("precondition: contains K5 minus an edge")
    splits = []
    cur = g
    while True:
        cls = classify_free(cur)
        if not cls.is_free:
            raise TheoryViolation("a vertex split produced a non-free graph")
        tris = [c for c in cls.maximal_cliques if len(c) == 3]
        if not tris:
            break
        cur, sp = _split_triangle(cur, cls, tris[0])
        splits.append(sp)
    nodes: dict[tuple[int, int], int] = {}
    tree_edges = []
    for idx, c in enumerate(cls.maximal_cliques):
        if len(c) != 4:
            raise TheoryViolation(f"unexpected maximal clique {c}")
        s1, s2 = cls.sides[idx]
        for s in (s1, s2):
            nodes.setdefault(s, -1)
    for k, s in enumerate(sorted(nodes)):
        nodes[s] = k
    for idx, c in enumerate(cls.maximal_cliques):
        s1, s2 = cls.sides[idx]
        tree_edges.append((nodes[s1], nodes[s2]))
    used = [v for s in nodes for v in s]
    if len(used) != len(set(used)) or len(used) != cur.n:
        raise TheoryViolation("side pairs do not partition the vertices")
    tree = make_graph(len(nodes), tree_edges)
    if tree.m != tree.n - 1 or not tree.is_connected():
        raise TheoryViolation("side pairs do not form a tree")
    emb = TxK2Embedding(tree, {k: s for s, k in nodes.items()}, tuple(splits))
    if not verify_txk2(g, emb):
        raise TheoryViolation("witness failed the contraction check")
    return emb


def verify_txk2(g: Graph, emb: TxK2Embedding) -> bool:
    """Contract the splits inside (T x K2) and compare with ``g``."""
    n_exp = 2 * emb.tree.n
    es = set()
    for node, (p, q) in emb.pair_map.items():
        es.add(tuple(sorted((p, q))))
    for s, t in emb.tree.edges:
        for u in emb.pair_map[s]:
            for v in emb.pair_map[t]:
                es.add(tuple(sorted((u, v))))
    verts = sorted(v for pr in emb.pair_map.values() for v in pr)
    if verts != list(range(n_exp)):
        return False
    k = n_exp
    for a, b, orig in reversed(emb.contraction_pairs):
        if b != k - 1 or a != orig:
            return False
        merged = set()
        for u, v in es:
            u2, v2 = (a if u == b else u), (a if v == b else v)
            if u2 != v2:
                merged.add(tuple(sorted((u2, v2))))
        es = merged
        k -= 1
    if k != g.n:
        return False
    return es == set(g.edges) and nx.is_isomorphic(make_graph(k, es).to_networkx(), g.to_networkx())


# ------------------------------------------------------- chordal extensions


def chordless_cycles(g: Graph) -> list[list[int]]:
    """All chordless cycles of length >= 4, each once, starting at its minimum."""
    out = []
    for s in range(g.n):
        stack = [[s, p] for p in sorted(g.adj[s]) if p > s]
        while stack:
            P = stack.pop()
            last = P[-1]
            for w in sorted(g.adj[last]):
                if w <= s or w in P:
                    continue
                if any(w in g.adj[p] for p in P[1:-1]):
                    continue
                if w in g.adj[s]:
                    if len(P) >= 3 and P[1] < w:
                        out.append(P + [w])
                    continue
                stack.append(P + [w])
    return out


def _busy(g: Graph, cyc: list[int]) -> list[int]:
    m = len(cyc)
    res = []
    for i in range(m):
        u, v = cyc[i], cyc[(i + 1) % m]
        keep = to_mask(range(g.n)) & ~to_mask(c for c in cyc if c not in (u, v))
        masks = list(g.masks)
        masks[u] &= ~(1 << v)
        masks[v] &= ~(1 << u)
        comp = next(c for c in components_mask(masks, keep) if c >> u & 1)
        if comp >> v & 1:
            res.append(i)
    return res


def _fan(cyc: list[int], busy: list[int]) -> list[Edge]:
    m = len(cyc)
    if len(busy) > 2:
        raise TheoryViolation(f"circuit {cyc} has {len(busy)} busy edges")
    start = busy[0] if busy else 0
    v = [None] + [cyc[(start + i) % m] for i in range(m)]  # 1-indexed
    add = []
    if len(busy) == 2:
        k = (busy[1] - start) % m + 1
        add += [(v[1], v[i]) for i in range(3, k + 1)]
        add += [(v[k], v[i]) for i in range(k + 2, m + 1)]
    else:
        add += [(v[1], v[i]) for i in range(3, m)]
    return [tuple(sorted(e)) for e in add]


def _extend_noF3K4(g: Graph) -> Graph:
    changed = True
    while changed:
        changed = False
        for x, y in itertools.combinations(range(g.n), 2):
            if not g.has_edge(x, y) and vertex_disjoint_paths(g, x, y)[0] >= 3:
                g = g.with_edges([(x, y)])
                changed = True
    while is_chordal(g) is None:
        cyc = min(chordless_cycles(g), key=lambda c: (len(c), sorted(c)))
        new = [e for e in _fan(cyc, _busy(g, cyc)) if not g.has_edge(*e)]
        g = g.with_edges(new)
    return g


def _require(g: Graph, n_min: int = 6) -> None:
    if not is_two_connected(g):
        raise GraphError("precondition: graph must be 2-connected")
    if g.n < n_min:
        raise GraphError(f"precondition: need at least {n_min} vertices")


def chordal_extend_noF3K4(g: Graph) -> Graph:
    """Chordal supergraph without F3 or K4 minors (input must have neither)."""
    _require(g, 3)
    if minor_embedding(g, f3()) is not None:
        raise GraphError("precondition: graph has an F3 minor")
    if minor_embedding(g, complete(4)) is not None:
        raise GraphError("precondition: graph has a K4 minor")
    return _extend_noF3K4(g)


# ------------------------------------------------------------ K4 homeomorphs


@dataclass(frozen=True)
class HomeomorphK4:
    corners: tuple[int, int, int, int]
    paths: dict[tuple[int, int], tuple[int, ...]]
    sides: Pairing

    @property
    def vertices(self) -> set[int]:
        return {v for p in self.paths.values() for v in p}


def _bfs_path(g: Graph, allowed: set[int], src: int, dst_set: set[int]) -> list[int]:
    prev = {src: None}
    queue = [src]
    while queue:
        u = queue.pop(0)
        if u in dst_set:
            out = [u]
            while prev[out[-1]] is not None:
                out.append(prev[out[-1]])
            return out[::-1]
        for w in sorted(g.adj[u]):
            if w in allowed and w not in prev:
                prev[w] = u
                queue.append(w)
    raise TheoryViolation("branch set is not connected")


def _corner_paths(g: Graph, emb: MinorEmbedding):
    corners, legs = [], {}
    for i, b in enumerate(emb.branch_sets):
        bs = set(b)
        terms = {}
        for (p, q), (u, w) in emb.edge_witnesses.items():
            if i in (p, q):
                other = q if p == i else p
                terms[other] = u if u in bs else w
        t = [terms[o] for o in sorted(terms)]
        p12 = _bfs_path(g, bs, t[0], {t[1]})
        p3 = _bfs_path(g, bs, t[2], set(p12))
        centre = p3[-1]
        corners.append(centre)
        k = p12.index(centre)
        routes = {0: p12[: k + 1][::-1], 1: p12[k:], 2: p3[::-1]}
        for slot, o in enumerate(sorted(terms)):
            legs[(i, o)] = routes[slot]  # from centre to terminal
    paths = {}
    for (p, q), (u, w) in emb.edge_witnesses.items():
        paths[(p, q)] = tuple(legs[(p, q)] + legs[(q, p)][::-1])
    return corners, paths


def find_k4_homeomorph(g: Graph) -> HomeomorphK4 | None:
    """A K4 subdivision whose two sides carry every outside attachment."""
    emb = minor_embedding(g, complete(4))
    if emb is None:
        return None
    corners, mpaths = _corner_paths(g, emb)
    byc = {}
    for (p, q), pth in mpaths.items():
        a, b = corners[p], corners[q]
        byc[tuple(sorted((a, b)))] = pth if a < b else pth[::-1]
    hv = {v for p in byc.values() for v in p}
    outside = to_mask(range(g.n)) & ~to_mask(hv)
    attach = []
    for comp in components_mask(g.masks, outside):
        nb = set()
        for v in range(g.n):
            if comp >> v & 1:
                nb |= g.adj[v]
        attach.append(nb & hv)
    for pairing in _pairings(tuple(corners)):
        if any(len(byc[e]) > 2 for e in _cross(pairing)):
            continue
        s1, s2 = (set(byc[s]) for s in pairing)
        if all(att <= s1 or att <= s2 for att in attach):
            (c1, c3), (c2, c4) = pairing
            return HomeomorphK4((c1, c2, c3, c4), byc, pairing)
    raise TheoryViolation("no valid side assignment (the graph has an H3 minor)")


def _long_side_edges(g: Graph) -> list[Edge]:
    """Endpoint pairs of a long side of some K4 homeomorph, not yet adjacent."""
    ng = g.to_networkx()
    for x, y in itertools.combinations(range(g.n), 2):
        if g.has_edge(x, y):
            continue
        common = sorted(g.adj[x] & g.adj[y])
        for p, q in itertools.combinations(common, 2):
            h = ng.subgraph(v for v in range(g.n) if v not in (p, q))
            for pth in nx.all_simple_paths(h, x, y):
                inner = set(pth)
                if g.has_edge(p, q):
                    return [(x, y)]
                rest = ng.subgraph(v for v in range(g.n) if v not in inner)
                if nx.has_path(rest, p, q):
                    return [(x, y), (p, q)]
    return []


def _clique_sides(g: Graph, c: tuple[int, ...]) -> Pairing:
    cs = set(c)
    outside = to_mask(range(g.n)) & ~to_mask(c)
    atts = []
    for comp in components_mask(g.masks, outside):
        nb = set()
        for v in range(g.n):
            if comp >> v & 1:
                nb |= g.adj[v]
        atts.append(nb & cs)
    for p in _pairings(c):
        if all(a <= set(p[0]) or a <= set(p[1]) for a in atts):
            return p
    raise TheoryViolation(f"4-clique {c} has no valid sides")


def chordal_extend_noF3H3(g: Graph) -> Graph:
    """Chordal supergraph without F3 or H3 minors (input must have neither)."""
    _require(g)
    if g.m == 9 and nx.is_isomorphic(g.to_networkx(), complete_bipartite(3, 3).to_networkx()):
        raise GraphError("precondition: K3,3 is excluded")
    v = decide_egd_le2(g)
    if not v.answer:
        raise GraphError(f"precondition: graph has an {v.minor_name} minor")
    if minor_embedding(g, complete(4)) is None:
        return _extend_noF3K4(g)
    while True:
        extra = [e for e in _long_side_edges(g) if not g.has_edge(*e)]
        if not extra:
            break
        g = g.with_edges(extra)
    quads = [c for c in maximal_cliques(g) if len(c) == 4]
    drop = [_cross(_clique_sides(g, c))[0] for c in quads]
    q0 = _extend_noF3K4(g.without_edges(drop))
    return q0.with_edges(drop)


# ---------------------------------------------------------- block reports


@dataclass(frozen=True, eq=False)
class BlockReport:
    vertices: tuple[int, ...]
    kind: str  # "small", "K33", "TxK2", "OBSTRUCTED"
    graph: Graph
    extension: Graph | None = None
    embedding: TxK2Embedding | None = None
    witness: MinorEmbedding | None = None
    minor_name: str | None = None

    def to_json(self) -> dict:
        out = {"vertices": list(self.vertices), "kind": self.kind}
        if self.extension is not None:
            out["extension_edges"] = [list(e) for e in self.extension.edge_list]
        if self.embedding is not None:
            out["embedding"] = self.embedding.to_json()
        if self.witness is not None:
            out["minor"] = self.minor_name
            out["witness"] = [list(b) for b in self.witness.branch_sets]
        return out


def low_rank_structure(g: Graph) -> list[BlockReport]:
    reports = []
    for blk in blocks(g)[0]:
        b = blk.graph
        if b.n <= 5:
            reports.append(BlockReport(blk.vertices, "small", b))
            continue
        if b.m == 9 and b.n == 6 and nx.is_isomorphic(b.to_networkx(), complete_bipartite(3, 3).to_networkx()):
            reports.append(BlockReport(blk.vertices, "K33", b))
            continue
        v = decide_egd_le2(b)
        if not v.answer:
            reports.append(BlockReport(blk.vertices, "OBSTRUCTED", b, witness=v.witness, minor_name=v.minor_name))
            continue
        q = chordal_extend_noF3H3(b)
        reports.append(BlockReport(blk.vertices, "TxK2", b, extension=q, embedding=build_txk2_embedding(q)))
    return reports
