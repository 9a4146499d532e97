from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egdkit.elliptope import (
    GramFactor,
    NumericalError,
    PartialCorrelation,
    check_ue_in_uv,
    complete_clique_tree,
    factor_from_matrix,
    is_extreme_en,
    k33_reduce,
    line_search_psd,
    perturbation_space,
    projection_error,
    rank_reduce_fiber,
    smat,
    svec,
    within_group_span_dim,
)
from egdkit.families import extreme_corr_matrix, gen_Fr, gen_Gr, gen_Hr
from egdkit.forcing import certify_unique_completion, force_propagate, replay_certificate
from egdkit.graph import GraphError, complete, complete_bipartite, cycle, make_graph, path

from helpers import random_graph


def partial(g, X):
    return PartialCorrelation.from_matrix(g, X)


def path_point(a, b):
    return PartialCorrelation(path(3), {(0, 1): a, (1, 2): b})


def random_factor(r, n, rng):
    U = rng.standard_normal((r, n))
    return GramFactor(U / np.linalg.norm(U, axis=0))


class TestCompletion:
    def test_ones(self):
        U = complete_clique_tree(path_point(1.0, 1.0))
        assert U.rank == 1
        assert U.matrix[0, 2] == pytest.approx(1.0)

    def test_orthogonal(self):
        U = complete_clique_tree(path_point(0.0, 0.0))
        X = U.matrix
        assert U.rank == 2
        assert X[0, 2] == pytest.approx(1.0)
        assert np.linalg.eigvalsh(X)[0] > -1e-12

    def test_not_chordal(self):
        x = PartialCorrelation(cycle(4), {e: 0.0 for e in cycle(4).edges})
        with pytest.raises(GraphError):
            complete_clique_tree(x)

    def test_bad_range(self):
        with pytest.raises(GraphError):
            PartialCorrelation(path(2), {(0, 1): 1.5})

    def test_rank_is_max_block_rank(self):
        rng = np.random.default_rng(3)
        # chordal: two K4 sharing an edge, data from a rank-3 factor
        g = make_graph(6, [(a, b) for a in range(4) for b in range(a + 1, 4)]
                       + [(a, b) for a in (2, 3, 4, 5) for b in (2, 3, 4, 5) if a < b])
        for _ in range(10):
            U0 = random_factor(3, 6, rng)
            x = partial(g, U0.matrix)
            U = complete_clique_tree(x)
            assert projection_error(x, U.matrix) < 1e-9
            assert U.rank == 3


class TestFaces:
    def test_identity(self):
        for n in (2, 3, 5):
            f = perturbation_space(GramFactor(np.eye(n)))
            assert f.face_dim == comb(n, 2)

    def test_all_ones(self):
        assert perturbation_space(GramFactor(np.ones((1, 4)))).face_dim == 0
        assert is_extreme_en(GramFactor(np.ones((1, 4))))

    def test_canonical_f3(self):
        assert perturbation_space(gen_Fr(3).labels).face_dim == 0

    def test_identity_two_not_extreme(self):
        assert not is_extreme_en(GramFactor(np.eye(2)))

    def test_padded_extreme(self):
        assert is_extreme_en(extreme_corr_matrix(6, 3))

    def test_perturbations_stay_feasible(self):
        rng = np.random.default_rng(5)
        U = random_factor(2, 4, rng)
        f = perturbation_space(U)
        X = U.matrix
        for Z in f.perturbation_basis:
            assert np.allclose(np.diag(Z), 0.0, atol=1e-10)
            for s in (1, -1):
                t = line_search_psd(X, s * Z)
                assert t > 0


class TestInclusion:
    def test_f3(self):
        inst = gen_Fr(3)
        x = partial(inst.graph, inst.labels.matrix)
        assert check_ue_in_uv(x, inst.labels)

    def test_path_interior(self):
        assert not check_ue_in_uv(path_point(0.0, 0.0), GramFactor(np.eye(3)))

    def test_single_edge(self):
        x = PartialCorrelation(path(2), {(0, 1): 0.0})
        assert not check_ue_in_uv(x, GramFactor(np.eye(2)))


class TestSpans:
    def test_two_vectors(self):
        assert within_group_span_dim(GramFactor(np.eye(2)), [0], [1]) == (2, 2)

    def test_full_group(self):
        assert within_group_span_dim(GramFactor(np.eye(4)), range(4), []) == (4, 10)

    def test_f3_groups(self):
        rho, dim = within_group_span_dim(gen_Fr(3).labels, [0, 1, 2], [3, 4, 5])
        assert rho == 3 and dim <= comb(rho + 1, 2)


class TestLineSearch:
    def test_identity(self):
        Z = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert line_search_psd(np.eye(2), Z) == pytest.approx(1.0, abs=1e-9)

    def test_all_ones(self):
        Z = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert line_search_psd(np.ones((2, 2)), Z) == pytest.approx(0.0, abs=1e-9)

    def test_identity3_perturbation(self):
        f = perturbation_space(GramFactor(np.eye(3)))
        for Z in f.perturbation_basis:
            t = line_search_psd(np.eye(3), Z)
            assert 0 < t < np.inf
            ev = np.linalg.eigvalsh(np.eye(3) + t * Z)
            assert abs(ev[0]) < 1e-8

    def test_psd_direction_unbounded(self):
        assert line_search_psd(np.eye(2), np.eye(2)) == np.inf


class TestRankReduction:
    def test_path_interior(self):
        out = rank_reduce_fiber(path_point(0.0, 0.0), GramFactor(np.eye(3)))
        assert out.rank <= 2
        assert projection_error(path_point(0.0, 0.0), out.matrix) < 1e-8

    def test_complete_graph_fixed(self):
        rng = np.random.default_rng(1)
        U = random_factor(3, 4, rng)
        x = partial(complete(4), U.matrix)
        out = rank_reduce_fiber(x, U)
        assert np.allclose(out.matrix, U.matrix, atol=1e-8)

    def test_c5_labelling(self):
        s = np.array([1, -1, 1, 1, -1], dtype=float)
        x = partial(cycle(5), np.outer(s, s))
        out = rank_reduce_fiber(x, factor_from_matrix(np.outer(s, s)))
        assert out.rank == 1

    def test_wrong_input(self):
        with pytest.raises(NumericalError):
            rank_reduce_fiber(path_point(0.0, 0.0), GramFactor(np.ones((1, 3))))

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_random_fibers(self, seed):
        rng = np.random.default_rng(seed)
        g = random_graph(6, 0.5, rng)
        U = random_factor(4, 6, rng)
        x = partial(g, U.matrix)
        out = rank_reduce_fiber(x, U, seed=seed)
        assert out.rank <= U.rank
        assert projection_error(x, out.matrix) < 1e-7


class TestK33:
    def test_low_rank_unchanged(self):
        g = complete_bipartite(3, 3)
        rng = np.random.default_rng(0)
        U = random_factor(2, 6, rng)
        out = k33_reduce(partial(g, U.matrix), U)
        assert np.allclose(out.matrix, U.matrix, atol=1e-9)

    def test_generic_rank3_is_not_extreme(self):
        # six generic vectors in R^3 pass the span test but their fiber holds
        # higher-rank completions, so the one-sided step must refuse
        rng = np.random.default_rng(0)
        U = random_factor(3, 6, rng)
        x = partial(complete_bipartite(3, 3), U.matrix)
        assert check_ue_in_uv(x, U)
        with pytest.raises(NumericalError):
            k33_reduce(x, U)

    def test_wrong_graph(self):
        U = GramFactor(np.eye(4))
        with pytest.raises(GraphError):
            k33_reduce(partial(complete(4), U.matrix), U)


class TestForcing:
    def test_f3_complete(self):
        inst = gen_Fr(3)
        x = partial(inst.graph, inst.labels.matrix)
        cert = force_propagate(x)
        assert cert.complete and len(cert.steps) == 6
        assert np.allclose(cert.matrix, inst.labels.matrix, atol=1e-9)
        assert replay_certificate(x, cert)

    def test_path_ones(self):
        cert = force_propagate(path_point(1.0, 1.0))
        assert cert.complete
        assert cert.matrix[0, 2] == pytest.approx(1.0)

    def test_path_interior(self):
        cert = force_propagate(path_point(0.0, 0.0))
        assert not cert.complete and cert.steps == []

    def test_tampered_certificate_fails(self):
        inst = gen_Fr(3)
        x = partial(inst.graph, inst.labels.matrix)
        cert = force_propagate(x)
        step = cert.steps[0]
        bad = type(step)(step.clique, step.forced_pair, step.outside, step.kernel_vector,
                         step.derived_value + 0.1)
        cert.steps[0] = bad
        assert not replay_certificate(x, cert)

    @pytest.mark.parametrize("inst,r", [(gen_Gr(4), 4), (gen_Hr(3), 3)])
    def test_certificates(self, inst, r):
        got = certify_unique_completion(partial(inst.graph, inst.labels.matrix))
        assert got is not None and got.lower_bound == r

    def test_absent(self):
        assert certify_unique_completion(path_point(0.0, 0.0)) is None


def test_svec_isometry():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 4))
    A = A + A.T
    B = rng.standard_normal((4, 4))
    B = B + B.T
    assert svec(A) @ svec(B) == pytest.approx(np.trace(A @ B))
    assert np.allclose(smat(svec(A), 4), A)
