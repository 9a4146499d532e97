import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egdkit import _purepy, graph
from egdkit.graph import (
    GraphError,
    blocks,
    cartesian_product,
    complete,
    complete_bipartite,
    contract_edge,
    cycle,
    delete_edge,
    from_text,
    is_chordal,
    make_graph,
    maximal_cliques,
    path,
    star,
    strong_product,
    to_text,
    treewidth_exact,
    vertex_disjoint_paths,
    wheel_w5,
)
from egdkit.characterize import f3
from egdkit.minors import has_minor, minor_embedding, verify_embedding

from helpers import brute_has_minor, chordless_cycle_exists, min_vertex_cut, random_graph

try:
    from egdkit import _speedups
except ImportError:  # pragma: no cover
    _speedups = None

BACKENDS = [pytest.param(_purepy, id="python")]
if _speedups is not None:
    BACKENDS.append(pytest.param(_speedups, id="compiled"))


def iso(a, b):
    return nx.is_isomorphic(a.to_networkx(), b.to_networkx())


@st.composite
def graphs(draw, n_max=7):
    n = draw(st.integers(1, n_max))
    pairs = list(itertools.combinations(range(n), 2))
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return make_graph(n, [p for p, k in zip(pairs, keep) if k])


class TestConstruction:
    def test_triangle(self):
        g = make_graph(3, [(0, 1), (1, 2), (0, 2)])
        assert g.m == 3 and iso(g, complete(3))

    def test_duplicate_edges_collapse(self):
        assert make_graph(4, [(0, 1), (0, 1)]).m == 1

    def test_out_of_range(self):
        with pytest.raises(GraphError):
            make_graph(2, [(0, 2)])

    def test_named_graphs(self):
        assert complete(5).m == 10
        assert complete_bipartite(3, 3).m == 9
        w = wheel_w5()
        assert (w.n, w.m) == (5, 8)
        hub = [v for v in range(5) if w.degree(v) == 4]
        assert len(hub) == 1
        rim, _ = w.induced([v for v in range(5) if v != hub[0]])
        assert iso(rim, cycle(4))

    def test_text_round_trip(self):
        g = strong_product(path(3), complete(2))
        assert from_text(to_text(g)) == g


class TestProducts:
    def test_strong_k2_k2_is_k4(self):
        assert iso(strong_product(complete(2), complete(2)), complete(4))

    def test_cartesian_k2_k2_is_c4(self):
        assert iso(cartesian_product(complete(2), complete(2)), cycle(4))

    def test_strong_path3_k2(self):
        g = strong_product(path(3), complete(2))
        assert (g.n, g.m) == (6, 11)

    @given(graphs(5), graphs(3))
    @settings(max_examples=40, deadline=None)
    def test_strong_matches_networkx(self, a, b):
        ours = strong_product(a, b).to_networkx()
        ref = nx.strong_product(a.to_networkx(), b.to_networkx())
        assert nx.is_isomorphic(ours, ref)

    @given(graphs(5), graphs(3))
    @settings(max_examples=40, deadline=None)
    def test_cartesian_matches_networkx(self, a, b):
        ours = cartesian_product(a, b).to_networkx()
        ref = nx.cartesian_product(a.to_networkx(), b.to_networkx())
        assert nx.is_isomorphic(ours, ref)


class TestMinors:
    def test_w5_in_k33(self):
        emb = minor_embedding(complete_bipartite(3, 3), wheel_w5())
        assert emb is not None and verify_embedding(complete_bipartite(3, 3), emb)

    def test_identity(self):
        emb = minor_embedding(complete(3), complete(3))
        assert sorted(emb.branch_sets) == [(0,), (1,), (2,)]

    def test_f3_has_no_k4(self):
        assert minor_embedding(f3(), complete(4)) is None

    def test_model_too_large(self):
        with pytest.raises(GraphError):
            minor_embedding(complete(10), complete(9))

    @given(graphs(6), graphs(4))
    @settings(max_examples=60, deadline=None)
    def test_agrees_with_brute_force(self, host, model):
        emb = minor_embedding(host, model)
        assert (emb is not None) == brute_has_minor(host, model)
        if emb is not None:
            assert verify_embedding(host, emb)

    def test_disconnected_model(self):
        two_edges = make_graph(4, [(0, 1), (2, 3)])
        assert has_minor(path(4), two_edges)
        assert not has_minor(path(3), two_edges)


class TestDisjointPaths:
    @pytest.mark.parametrize(
        "g,x,y,k",
        [(cycle(4), 0, 2, 2), (complete_bipartite(3, 3), 0, 1, 3), (path(4), 0, 3, 1)],
    )
    def test_examples(self, g, x, y, k):
        got, paths = vertex_disjoint_paths(g, x, y)
        assert got == k == len(paths)
        inner = [v for p in paths for v in p[1:-1]]
        assert len(inner) == len(set(inner))
        for p in paths:
            assert p[0] == x and p[-1] == y
            assert all(g.has_edge(a, b) for a, b in zip(p, p[1:]))

    @given(graphs(7), st.data())
    @settings(max_examples=40, deadline=None)
    def test_menger(self, g, data):
        if g.n < 2:
            return
        x, y = data.draw(st.lists(st.integers(0, g.n - 1), min_size=2, max_size=2, unique=True))
        if g.has_edge(x, y):
            return
        assert vertex_disjoint_paths(g, x, y)[0] == min_vertex_cut(g, x, y)


class TestChordality:
    def test_c4(self):
        assert is_chordal(cycle(4)) is None

    def test_k4(self):
        ct = is_chordal(complete(4))
        assert [tuple(c) for c in ct.cliques] == [(0, 1, 2, 3)]

    def test_f3(self):
        ct = is_chordal(f3())
        sizes = sorted(len(c) for c in ct.cliques)
        assert sizes == [3, 3, 3, 3]

    @given(graphs(7))
    @settings(max_examples=60, deadline=None)
    def test_against_brute_force(self, g):
        ct = is_chordal(g)
        assert (ct is None) == chordless_cycle_exists(g)
        if ct is not None:
            got = sorted(tuple(sorted(c)) for c in ct.cliques)
            assert got == sorted(maximal_cliques(g))


class TestTreewidth:
    def test_examples(self):
        assert treewidth_exact(complete(6)) == 5
        assert treewidth_exact(star(4)) == 1
        assert treewidth_exact(path(5)) == 1
        assert treewidth_exact(strong_product(complete(2), complete(3))) == 5
        assert treewidth_exact(cycle(7)) == 2

    def test_cap(self):
        limit = graph.TREEWIDTH_LIMIT[graph._backend.BACKEND]
        with pytest.raises(GraphError):
            treewidth_exact(make_graph(limit + 1, []))

    @given(graphs(8))
    @settings(max_examples=40, deadline=None)
    def test_against_networkx_bounds(self, g):
        tw = treewidth_exact(g)
        ub, _ = nx.algorithms.approximation.treewidth_min_fill_in(g.to_networkx())
        assert tw <= ub
        # a K_{tw+2} minor would contradict the value
        if tw + 2 <= g.n:
            assert not has_minor(g, complete(tw + 2))


class TestBlocksAndOps:
    def test_bowtie(self):
        g = make_graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)])
        bs, cuts = blocks(g)
        assert len(bs) == 2 and cuts == [2]

    def test_k4(self):
        bs, cuts = blocks(complete(4))
        assert len(bs) == 1 and cuts == []

    def test_path3(self):
        bs, _ = blocks(path(3))
        assert [b.graph.m for b in bs] == [1, 1]

    def test_contractions(self):
        assert iso(contract_edge(complete(3), (0, 1)), complete(2))
        assert iso(contract_edge(cycle(4), (0, 1)), complete(3))
        assert delete_edge(complete(4), (0, 1)).m == 5


@pytest.mark.parametrize("impl", BACKENDS)
class TestKernels:
    def test_treewidth_dp(self, impl):
        rng = np.random.default_rng(7)
        for _ in range(30):
            g = random_graph(int(rng.integers(2, 10)), rng.random(), rng)
            assert impl.treewidth_dp(list(g.masks), g.n) == _purepy.treewidth_dp(list(g.masks), g.n)

    def test_partition_search_agrees(self, impl):
        from egdkit.minors import _images

        rng = np.random.default_rng(8)
        for _ in range(40):
            host = random_graph(int(rng.integers(3, 8)), 0.5, rng)
            model = random_graph(int(rng.integers(2, 5)), 0.6, rng)
            masks, _ = _images(model)
            got = impl.partition_search(list(host.masks), host.n, model.n, list(masks), True)
            assert (got is not None) == brute_has_minor(host, model)


def test_backend_env_switch():
    import os
    import subprocess
    import sys

    env = dict(os.environ, EGDKIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from egdkit import _backend; print(_backend.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
