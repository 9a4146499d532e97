"""The certificate families F_r, G_r, H_r with their canonical Gram labels."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, sqrt

import numpy as np

from .elliptope import GramFactor
from .graph import Graph, GraphError, make_graph, parse_graph_lines, to_text


@dataclass(frozen=True)
class FamilySpec:
    family: str
    r: int
    h_choices: dict[tuple[int, int], tuple[str, str]] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class LabeledInstance:
    graph: Graph
    labels: GramFactor
    vertex_names: tuple[str, ...]

    def to_text(self) -> str:
        head = "".join(f"# {i} {name}\n" for i, name in enumerate(self.vertex_names))
        return head + to_text(self.graph) + self.labels.to_text()

    @classmethod
    def from_text(cls, text: str) -> "LabeledInstance":
        lines = text.splitlines()
        names = []
        for ln in lines:
            parts = ln.split()
            if ln.startswith("#") and len(parts) == 3 and parts[1].isdigit():
                names.append(parts[2])
        g, rest = parse_graph_lines(lines)
        return cls(g, GramFactor.from_text_lines(rest), tuple(names))


def _basis(r: int, i: int) -> np.ndarray:
    e = np.zeros(r)
    e[i] = 1.0
    return e


def _pair_names(r: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(1, r + 1), 2))


def _canonical_vectors(r: int) -> tuple[list[np.ndarray], list[str]]:
    """e_1..e_r then (e_i + e_j)/sqrt 2 in lexicographic (i, j) order."""
    vecs = [_basis(r, i) for i in range(r)]
    names = [f"v{i}" for i in range(1, r + 1)]
    for i, j in _pair_names(r):
        vecs.append((_basis(r, i - 1) + _basis(r, j - 1)) / sqrt(2.0))
        names.append(f"v{i}{j}" if r < 10 else f"v{i},{j}")
    return vecs, names


def _index(r: int) -> dict[str, int]:
    _, names = _canonical_vectors(r)
    return {nm: k for k, nm in enumerate(names)}


def gen_Fr(r: int) -> LabeledInstance:
    """K_r on v_1..v_r plus a triangle {v_i, v_j, v_ij} for every pair."""
    if r < 2:
        raise GraphError("F_r needs r >= 2")
    vecs, names = _canonical_vectors(r)
    es = list(itertools.combinations(range(r), 2))
    for k, (i, j) in enumerate(_pair_names(r)):
        es += [(i - 1, r + k), (j - 1, r + k)]
    return LabeledInstance(make_graph(len(names), es), GramFactor(np.array(vecs).T), tuple(names))


def _grid_index(r: int) -> dict[tuple[int, int], int]:
    idx = {}
    for l in range(1, r + 1):
        for i in range(1, r - l + 2):
            idx[(i, l)] = len(idx)
    return idx


def gen_Gr(r: int) -> LabeledInstance:
    """Edge graph of the triangulated triangle with r vertices per side."""
    if r < 2:
        raise GraphError("G_r needs r >= 2")
    idx = _grid_index(r)
    w = {}
    for i in range(1, r + 1):
        w[(i, 1)] = _basis(r, i - 1)
    for l in range(1, r):
        for i in range(1, r - l + 1):
            s = w[(i, l)] + w[(i + 1, l)]
            w[(i, l + 1)] = s / np.linalg.norm(s)
    es = []
    for l in range(1, r):
        for i in range(1, r - l + 1):
            a, b, c = idx[(i, l)], idx[(i + 1, l)], idx[(i, l + 1)]
            es += [(a, b), (a, c), (b, c)]
    order = sorted(idx, key=idx.get)
    U = np.array([w[key] for key in order]).T
    names = tuple(f"v{i},{l}" for i, l in order)
    return LabeledInstance(make_graph(len(idx), es), GramFactor(U), names)


def shaded_triangles(r: int) -> list[tuple[int, int, int]]:
    idx = _grid_index(r)
    return [
        (idx[(i, l)], idx[(i + 1, l)], idx[(i, l + 1)])
        for l in range(1, r)
        for i in range(1, r - l + 1)
    ]


def h_options(i: int, j: int) -> list[tuple[str, str]]:
    """The option set F_ij for the extra edge e_ij."""
    return [(f"v{i}", f"v{j}"), (f"v{i}", f"v1{j}"), (f"v{j}", f"v1{i}"), (f"v1{i}", f"v1{j}")]


def _same_edge(a: tuple[str, str], b: tuple[str, str]) -> bool:
    return set(a) == set(b)


def gen_Hr(spec: FamilySpec | int) -> LabeledInstance:
    """H_3 copies on V_i = {v1, v2, v12, v_i, v1i, v2i} glued along v1 v12 v2,
    plus the edges v_i v_ij, v_j v_ij and one chosen e_ij per pair 3 <= i < j."""
    if isinstance(spec, int):
        spec = FamilySpec("H", spec)
    r = spec.r
    if spec.family != "H" or r < 3:
        raise GraphError("H_r needs family H and r >= 3")
    if r > 9:
        raise GraphError("H_r supports r <= 9")
    vecs, names = _canonical_vectors(r)
    ix = {nm: k for k, nm in enumerate(names)}

    def e(a: str, b: str) -> tuple[int, int]:
        return ix[a], ix[b]

    es = [e("v1", "v12"), e("v12", "v2")]
    for i in range(3, r + 1):
        es += [
            e("v1", f"v{i}"), e("v1", f"v1{i}"), e("v2", f"v1{i}"),
            e(f"v{i}", f"v1{i}"), e("v2", f"v2{i}"), e(f"v2{i}", f"v{i}"),
        ]
    for key in spec.h_choices:
        i, j = key
        if not (3 <= i < j <= r):
            raise GraphError(f"h_choice key {key} out of range")
    for i, j in itertools.combinations(range(3, r + 1), 2):
        es += [e(f"v{i}", f"v{i}{j}"), e(f"v{j}", f"v{i}{j}")]
        choice = spec.h_choices.get((i, j), (f"v{i}", f"v{j}"))
        if not any(_same_edge(choice, opt) for opt in h_options(i, j)):
            raise GraphError(f"e_{i}{j} = {choice} is not in F_{i}{j}")
        es.append(e(*choice))
    return LabeledInstance(make_graph(len(names), es), GramFactor(np.array(vecs).T), tuple(names))


def extreme_corr_matrix(n: int, r: int) -> GramFactor:
    """Canonical rank-r extreme point of E_n, padded with copies of e_1."""
    if r < 1 or comb(r + 1, 2) > n:
        raise GraphError(f"need C(r+1, 2) <= n, got r={r}, n={n}")
    vecs, _ = _canonical_vectors(r)
    vecs += [_basis(r, 0)] * (n - len(vecs))
    return GramFactor(np.array(vecs).T)


def generate(family: str, r: int, choices: dict | None = None) -> LabeledInstance:
    family = family.upper()
    if family == "F":
        return gen_Fr(r)
    if family == "G":
        return gen_Gr(r)
    if family == "H":
        return gen_Hr(FamilySpec("H", r, choices or {}))
    raise GraphError(f"unknown family {family!r}")
