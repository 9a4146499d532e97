"""Minor containment with checkable branch-set certificates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from . import _backend
from .graph import Edge, Graph, GraphError, bits, blocks, components, is_two_connected

MODEL_LIMIT = 8


@dataclass(frozen=True)
class MinorEmbedding:
    """Branch sets (one per model vertex) and a host edge per model edge."""

    model: Graph
    branch_sets: tuple[tuple[int, ...], ...]
    edge_witnesses: dict[Edge, Edge]

    def to_json(self) -> dict:
        return {
            "branch_sets": [list(b) for b in self.branch_sets],
            "edge_witnesses": [[list(e), list(w)] for e, w in sorted(self.edge_witnesses.items())],
        }


def verify_embedding(host: Graph, emb: MinorEmbedding) -> bool:
    """Independent check of the three branch-set conditions."""
    seen: set[int] = set()
    if len(emb.branch_sets) != emb.model.n:
        return False
    for b in emb.branch_sets:
        if not b or seen & set(b) or any(not 0 <= v < host.n for v in b):
            return False
        seen |= set(b)
        # connectivity inside the branch set
        reach, stack = {b[0]}, [b[0]]
        while stack:
            u = stack.pop()
            for w in host.adj[u]:
                if w in b and w not in reach:
                    reach.add(w)
                    stack.append(w)
        if reach != set(b):
            return False
    for (i, j) in emb.model.edges:
        wit = emb.edge_witnesses.get((i, j))
        if wit is None or not host.has_edge(*wit):
            return False
        a, c = wit
        bi, bj = set(emb.branch_sets[i]), set(emb.branch_sets[j])
        if not ((a in bi and c in bj) or (a in bj and c in bi)):
            return False
    return True


@lru_cache(maxsize=256)
def _images(model: Graph) -> tuple[tuple[int, ...], tuple[tuple[int, ...], ...]]:
    """Edge masks of every relabelling of ``model`` inside K_k, lex order.

    Duplicate masks (automorphisms) keep their first permutation only.
    """
    k = model.n
    idx = {}
    t = 0
    for a in range(k):
        for b in range(a + 1, k):
            idx[(a, b)] = idx[(b, a)] = t
            t += 1
    masks, perms, seen = [], [], set()
    for perm in itertools.permutations(range(k)):
        m = 0
        for u, v in model.edges:
            m |= 1 << idx[(perm[u], perm[v])]
        if m not in seen:
            seen.add(m)
            masks.append(m)
            perms.append(perm)
    return tuple(masks), tuple(perms)


def _search(host: Graph, model: Graph, allow_unused: bool):
    masks, perms = _images(model)
    res = _backend.partition_search(list(host.masks), host.n, model.n, list(masks), allow_unused)
    if res is None:
        return None
    parts, hit = res
    perm = perms[hit]
    return [tuple(bits(parts[perm[i]])) for i in range(model.n)]


def _finish(host: Graph, model: Graph, branch: list[tuple[int, ...]]) -> MinorEmbedding:
    wit = {}
    owner = {v: i for i, b in enumerate(branch) for v in b}
    for i, j in model.edge_list:
        best = None
        for u in branch[i]:
            for w in sorted(host.adj[u]):
                if owner.get(w) == j:
                    cand = (u, w) if u < w else (w, u)
                    if best is None or cand < best:
                        best = cand
        wit[(i, j)] = best
    return MinorEmbedding(model, tuple(branch), wit)


def minor_embedding(host: Graph, model: Graph) -> MinorEmbedding | None:
    """Return branch sets witnessing ``model`` as a minor of ``host``, or None.

    A connected model lives inside a single component of the host, and a
    2-connected one inside a single block.  Within a connected piece the
    branch sets may be grown to cover every vertex, so the search runs over
    partitions into exactly ``k`` connected parts.  Disconnected models use
    the general search that may leave vertices unused.
    """
    k = model.n
    if k > MODEL_LIMIT:
        raise GraphError(f"models are limited to {MODEL_LIMIT} vertices")
    if k == 0:
        return MinorEmbedding(model, (), {})
    if k > host.n or model.m > host.m:
        return None
    if not model.is_connected():
        branch = _search(host, model, allow_unused=True)
        return None if branch is None else _finish(host, model, branch)
    if is_two_connected(model):
        pieces = [b.vertices for b in blocks(host)[0]]
    else:
        pieces = [tuple(c) for c in components(host)]
    for verts in pieces:
        if len(verts) < k:
            continue
        sub, back = host.induced(verts)
        if sub.m < model.m:
            continue
        branch = _search(sub, model, allow_unused=False)
        if branch is not None:
            branch = [tuple(sorted(back[v] for v in b)) for b in branch]
            return _finish(host, model, branch)
    return None


def has_minor(host: Graph, model: Graph) -> bool:
    return minor_embedding(host, model) is not None
