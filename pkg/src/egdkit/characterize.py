"""Forbidden-minor decisions for egd, la_box, la_square and Gram dimension."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import isqrt

import networkx as nx
from networkx.algorithms.isomorphism import GraphMatcher

from .families import FamilySpec, gen_Fr, gen_Gr, gen_Hr, h_options
from .graph import Graph, GraphError, blocks, complete, complete_multipartite, wheel_w5
from .minors import MinorEmbedding, minor_embedding


def f3() -> Graph:
    return gen_Fr(3).graph


def h3() -> Graph:
    return gen_Hr(3).graph


FORBIDDEN = {
    "egd2": (("F3", f3), ("H3", h3)),
    "labox2": (("F3", f3), ("H3", h3), ("W5", wheel_w5)),
    "lasq2": (("F3", f3), ("K4", lambda: complete(4))),
    "gd2": (("K3", lambda: complete(3)),),
    "gd3": (("K4", lambda: complete(4)),),
    "gd4": (("K5", lambda: complete(5)), ("K222", lambda: complete_multipartite(2, 2, 2))),
}


@dataclass(frozen=True)
class Verdict:
    parameter: str
    answer: bool
    witness: MinorEmbedding | None = None
    minor_name: str | None = None

    def to_json(self) -> dict:
        return {
            "parameter": self.parameter,
            "answer": self.answer,
            "minor": self.minor_name,
            "witness": None if self.witness is None else [list(b) for b in self.witness.branch_sets],
        }


def decide(parameter: str, g: Graph) -> Verdict:
    """Generic test of ``g`` against the forbidden-minor list of ``parameter``."""
    if parameter not in FORBIDDEN:
        raise GraphError(f"unknown parameter {parameter!r}")
    for name, build in FORBIDDEN[parameter]:
        emb = minor_embedding(g, build())
        if emb is not None:
            return Verdict(parameter, False, emb, name)
    return Verdict(parameter, True)


def decide_egd_le2(g: Graph) -> Verdict:
    return decide("egd2", g)


def decide_la_box_le2(g: Graph) -> Verdict:
    return decide("labox2", g)


def decide_la_square_le2(g: Graph) -> Verdict:
    return decide("lasq2", g)


def gram_dim_le(g: Graph, r: int) -> Verdict:
    if r not in (2, 3, 4):
        raise GraphError("gram_dim_le supports r in {2, 3, 4}")
    return decide(f"gd{r}", g)


def egd_complete(n: int) -> int:
    """egd(K_n): the largest r with r(r+1)/2 <= n."""
    if n < 1:
        raise GraphError("n must be positive")
    return (isqrt(8 * n + 1) - 1) // 2


@dataclass(frozen=True)
class EgdBounds:
    lower: int
    upper: int
    certificates: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "certificates": self.certificates}


def _family_graphs(r: int):
    yield f"F{r}", gen_Fr(r).graph
    yield f"G{r}", gen_Gr(r).graph
    if r >= 4:
        pairs = [(i, j) for i in range(3, r + 1) for j in range(i + 1, r + 1)]
        for combo in itertools.product(range(4), repeat=len(pairs)):
            choice = {p: h_options(*p)[c] for p, c in zip(pairs, combo)}
            yield f"H{r}", gen_Hr(FamilySpec("H", r, choice)).graph


def _contains_subgraph(host: Graph, pattern: Graph) -> bool:
    if pattern.n > host.n or pattern.m > host.m:
        return False
    gm = GraphMatcher(host.to_networkx(), pattern.to_networkx())
    return gm.subgraph_is_monomorphic()


def _block_bounds(b: Graph, label: str, notes: list[str]) -> tuple[int, int]:
    n = b.n
    if b.m == 0 or not minor_embedding(b, complete(3)):
        notes.append(f"{label}: no K3 minor")
        return 1, 1
    v = decide_egd_le2(b)
    if v.answer:
        notes.append(f"{label}: K3 minor, no F3/H3 minor")
        return 2, min(2, egd_complete(n))
    notes.append(f"{label}: {v.minor_name} minor")
    lower = 3
    omega = max(len(c) for c in nx.find_cliques(b.to_networkx()))
    if egd_complete(omega) > lower:
        lower = egd_complete(omega)
        notes.append(f"{label}: K{omega} subgraph")
    r = lower + 1
    while r * (r + 1) // 2 <= n and r <= 5:
        hit = next((nm for nm, fam in _family_graphs(r) if _contains_subgraph(b, fam)), None)
        if hit is None:
            break
        notes.append(f"{label}: {hit} subgraph")
        lower = r
        r += 1
    return lower, max(lower, egd_complete(n))


def egd_bounds(g: Graph) -> EgdBounds:
    """Blockwise lower and upper bounds on egd, combined by maximum."""
    notes: list[str] = []
    lo, hi = 1, 1
    for k, blk in enumerate(blocks(g)[0]):
        a, b = _block_bounds(blk.graph, f"block {k} {list(blk.vertices)}", notes)
        lo, hi = max(lo, a), max(hi, b)
    return EgdBounds(lo, hi, notes)
