import itertools

import networkx as nx
import numpy as np
import pytest

from egdkit.characterize import decide_egd_le2, f3, h3
from egdkit.decompose import (
    TheoryViolation,
    build_txk2_embedding,
    chordal_extend_noF3H3,
    chordal_extend_noF3K4,
    chordless_cycles,
    classify_free,
    find_k4_homeomorph,
    low_rank_structure,
    verify_txk2,
)
from egdkit.graph import (
    GraphError,
    clique_number,
    complete,
    complete_bipartite,
    cycle,
    is_chordal,
    make_graph,
    path,
    strong_product,
)
from egdkit.minors import has_minor

from helpers import brute_has_minor, random_noF3H3_block, random_noF3K4, random_tree


def recovered_edges(emb):
    """Expand T x K2 through the pair map, then merge each split vertex back."""
    parent = {}
    for _a, new_v, orig in emb.contraction_pairs:
        parent[new_v] = orig

    def root(v):
        while v in parent:
            v = parent[v]
        return v

    bags = {t: set(p) for t, p in emb.pair_map.items()}
    es = set()
    for t, bag in bags.items():
        es |= {tuple(sorted(e)) for e in itertools.combinations(bag, 2)}
    for s, t in emb.tree.edges:
        es |= {tuple(sorted((a, b))) for a in bags[s] for b in bags[t]}
    out = set()
    for a, b in es:
        ra, rb = root(a), root(b)
        if ra != rb:
            out.add((min(ra, rb), max(ra, rb)))
    return out


def assert_txk2_witness(q, emb):
    assert nx.is_tree(emb.tree.to_networkx())
    used = [v for p in emb.pair_map.values() for v in p]
    assert len(used) == len(set(used)) == 2 * emb.tree.n
    assert recovered_edges(emb) == set(q.edges)
    assert verify_txk2(q, emb)


def two_k4_on_edge():
    return make_graph(6, [e for c in ((0, 1, 2, 3), (2, 3, 4, 5)) for e in itertools.combinations(c, 2)])


class TestFree:
    def test_k4(self):
        cls = classify_free(complete(4))
        assert cls.is_free
        assert list(cls.sides.values()) == [((0, 1), (2, 3))]

    def test_f3(self):
        assert not classify_free(f3()).is_free

    def test_path_product(self):
        assert classify_free(strong_product(path(3), complete(2))).is_free

    def test_preconditions(self):
        with pytest.raises(GraphError):
            classify_free(cycle(4))
        with pytest.raises(GraphError):
            classify_free(complete(5))


class TestEmbedding:
    def test_k4(self):
        emb = build_txk2_embedding(complete(4))
        assert emb.tree.n == 2 and emb.tree.m == 1
        assert sorted(emb.pair_map.values()) == [(0, 1), (2, 3)]
        assert emb.contraction_pairs == ()

    def test_two_k4(self):
        g = two_k4_on_edge()
        emb = build_txk2_embedding(g)
        assert nx.is_isomorphic(emb.tree.to_networkx(), path(3).to_networkx())
        assert_txk2_witness(g, emb)

    def test_f3_rejected(self):
        with pytest.raises(GraphError):
            build_txk2_embedding(f3())

    @pytest.mark.parametrize("k", [2, 3, 5])
    def test_products(self, k):
        rng = np.random.default_rng(k)
        g = strong_product(random_tree(k, rng), complete(2))
        assert_txk2_witness(g, build_txk2_embedding(g))

    def test_triangle_splits(self):
        # two triangles glued on an edge: free, and needs splits
        g = make_graph(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])
        emb = build_txk2_embedding(g)
        assert_txk2_witness(g, emb)

    def test_tampered_witness(self):
        g = two_k4_on_edge()
        emb = build_txk2_embedding(g)
        bad = type(emb)(emb.tree, {**emb.pair_map, 0: emb.pair_map[1]}, emb.contraction_pairs)
        assert not verify_txk2(g, bad)


class TestCycles:
    def test_c5(self):
        assert [sorted(c) for c in chordless_cycles(cycle(5))] == [[0, 1, 2, 3, 4]]

    def test_k4_none(self):
        assert chordless_cycles(complete(4)) == []


class TestNoF3K4:
    def test_c4(self):
        out = chordal_extend_noF3K4(cycle(4))
        assert out.m == 5 and is_chordal(out) is not None
        assert not has_minor(out, complete(4))

    def test_theta(self):
        g = complete_bipartite(2, 3)
        out = chordal_extend_noF3K4(g)
        assert out.has_edge(0, 1)
        assert is_chordal(out) is not None
        assert not has_minor(out, complete(4)) and not has_minor(out, f3())

    def test_c6_with_chord(self):
        g = cycle(6).with_edges([(0, 3)])
        out = chordal_extend_noF3K4(g)
        assert g.edges <= out.edges
        assert is_chordal(out) is not None
        assert not has_minor(out, complete(4)) and not has_minor(out, f3())

    def test_k4_rejected(self):
        with pytest.raises(GraphError):
            chordal_extend_noF3K4(complete(4))

    def test_random(self):
        rng = np.random.default_rng(11)
        for _ in range(15):
            g = random_noF3K4(rng, n_max=9)
            out = chordal_extend_noF3K4(g)
            assert g.edges <= out.edges and is_chordal(out) is not None
            assert not has_minor(out, complete(4)) and not has_minor(out, f3())
            if out.n <= 7:
                assert not brute_has_minor(out, complete(4))


class TestHomeomorph:
    def test_subdivided_k4(self):
        g = make_graph(5, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 4), (4, 3)])
        h = find_k4_homeomorph(g)
        assert h is not None
        assert h.sides == ((0, 1), (2, 3))
        assert h.paths[(2, 3)] == (2, 4, 3)

    def test_c5(self):
        assert find_k4_homeomorph(cycle(5)) is None

    def test_k4(self):
        h = find_k4_homeomorph(complete(4))
        assert sorted(h.corners) == [0, 1, 2, 3]
        assert h.sides == ((0, 1), (2, 3))
        for (a, b), p in h.paths.items():
            assert {p[0], p[-1]} == {a, b}


class TestNoF3H3:
    def test_k4_with_ear(self):
        g = complete(4)
        g = make_graph(6, list(g.edges) + [(0, 4), (4, 5), (5, 1)])
        out = chordal_extend_noF3H3(g)
        assert g.edges <= out.edges
        assert is_chordal(out) is not None
        assert classify_free(out).is_free and clique_number(out) <= 4
        assert decide_egd_le2(out).answer
        assert_txk2_witness(out, build_txk2_embedding(out))

    def test_excluded(self):
        with pytest.raises(GraphError):
            chordal_extend_noF3H3(complete_bipartite(3, 3))
        with pytest.raises(GraphError):
            chordal_extend_noF3H3(h3())
        with pytest.raises(GraphError):
            chordal_extend_noF3H3(f3())

    def test_random(self):
        rng = np.random.default_rng(4)
        done = 0
        while done < 10:
            g = random_noF3H3_block(rng, n_max=10)
            if g is None:
                continue
            out = chordal_extend_noF3H3(g)
            assert g.edges <= out.edges and is_chordal(out) is not None
            assert classify_free(out).is_free
            assert decide_egd_le2(out).answer
            assert_txk2_witness(out, build_txk2_embedding(out))
            done += 1


class TestStructure:
    def test_tree(self):
        reps = low_rank_structure(random_tree(7, np.random.default_rng(0)))
        assert all(r.kind == "small" and r.graph.m == 1 for r in reps)

    def test_k33_with_triangle(self):
        g = make_graph(8, list(complete_bipartite(3, 3).edges) + [(0, 6), (6, 7), (0, 7)])
        kinds = sorted(r.kind for r in low_rank_structure(g))
        assert kinds == ["K33", "small"]

    def test_f3(self):
        (rep,) = low_rank_structure(f3())
        assert rep.kind == "OBSTRUCTED" and rep.minor_name == "F3"

    def test_theory_violation_is_graph_error(self):
        assert issubclass(TheoryViolation, GraphError)
