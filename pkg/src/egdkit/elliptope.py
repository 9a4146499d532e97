"""Correlation matrices, Gram factors and the facial geometry of the elliptope.

Tolerances are module constants so that every certificate states the
numbers it was checked against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb, isfinite

import networkx as nx
import numpy as np
from scipy.linalg import null_space
from scipy.optimize import least_squares

from .graph import CliqueTree, Edge, Graph, GraphError, complete_bipartite, is_chordal

EPS_PSD = 1e-9
EPS_RANK = 1e-8
EPS_SING = 1e-8
PIVOT_MIN = 1e-6


class NumericalError(ArithmeticError):
    """A numerical check failed or was too close to call."""


@dataclass(frozen=True, eq=False)
class GramFactor:
    """An ``r x n`` matrix whose unit columns are Gram vectors of ``X = U^T U``."""

    U: np.ndarray

    def __post_init__(self):
        U = np.atleast_2d(np.asarray(self.U, dtype=float))
        object.__setattr__(self, "U", U)
        norms = np.linalg.norm(U, axis=0)
        if U.shape[1] and np.max(np.abs(norms - 1.0)) > 1e-9:
            raise NumericalError("Gram factor columns must have unit norm")

    @property
    def r(self) -> int:
        return self.U.shape[0]

    @property
    def n(self) -> int:
        return self.U.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        return self.U.T @ self.U

    @property
    def rank(self) -> int:
        return numerical_rank(self.matrix)

    def to_text(self) -> str:
        rows = [f"{self.r} {self.n}"]
        rows += [" ".join(f"{v:.17g}" for v in row) for row in self.U]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_text_lines(cls, lines: list[str]) -> "GramFactor":
        body = [ln for ln in (s.strip() for s in lines) if ln and not ln.startswith("#")]
        r, n = (int(t) for t in body[0].split())
        U = np.array([[float(t) for t in ln.split()] for ln in body[1 : 1 + r]], dtype=float)
        return cls(U.reshape(r, n))


@dataclass(frozen=True)
class PartialCorrelation:
    """Edge values of a partial correlation matrix (unit diagonal implied)."""

    graph: Graph
    values: dict[Edge, float]

    def __post_init__(self):
        for e in self.graph.edges:
            if e not in self.values:
                raise GraphError(f"missing value for edge {e}")
            v = self.values[e]
            if not isfinite(v) or abs(v) > 1 + 1e-12:
                raise GraphError(f"value {v} on edge {e} outside [-1, 1]")

    def __hash__(self):
        return id(self)

    def value(self, u: int, v: int) -> float:
        return self.values[(u, v) if u < v else (v, u)]

    def to_json(self) -> dict:
        return {
            "n": self.graph.n,
            "entries": [[u, v, float(self.values[(u, v)])] for u, v in self.graph.edge_list],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PartialCorrelation":
        from .graph import make_graph

        n = int(obj["n"])
        ents = [(int(a), int(b), float(c)) for a, b, c in obj["entries"]]
        g = make_graph(n, [(a, b) for a, b, _ in ents])
        vals = {(min(a, b), max(a, b)): c for a, b, c in ents}
        return cls(g, vals)

    @classmethod
    def from_matrix(cls, graph: Graph, X: np.ndarray) -> "PartialCorrelation":
        vals = {(u, v): float(np.clip(X[u, v], -1.0, 1.0)) for u, v in graph.edges}
        return cls(graph, vals)


def projection_error(x: PartialCorrelation, X: np.ndarray) -> float:
    if not x.graph.edges:
        return 0.0
    return max(abs(X[u, v] - x.values[(u, v)]) for u, v in x.graph.edges)


# ------------------------------------------------------------ small helpers


def numerical_rank(X: np.ndarray, eps: float = EPS_RANK) -> int:
    """Number of eigenvalues of a PSD matrix above ``eps`` times the largest."""
    if X.size == 0:
        return 0
    w = np.linalg.eigvalsh((X + X.T) / 2)
    top = max(w[-1], 0.0)
    if top == 0.0:
        return 0
    return int(np.sum(w > eps * top))


def factor_from_matrix(X: np.ndarray, eps: float = EPS_RANK) -> GramFactor:
    """Gram factor of a PSD matrix, truncated at its numerical rank.

    Columns are renormalised, so tiny diagonal drift is absorbed.
    """
    X = (np.asarray(X, dtype=float) + np.asarray(X, dtype=float).T) / 2
    w, V = np.linalg.eigh(X)
    w, V = w[::-1], V[:, ::-1]
    top = max(w[0], 0.0) if len(w) else 0.0
    keep = w > eps * top if top > 0 else np.zeros(len(w), bool)
    r = max(int(np.sum(keep)), 1)
    U = np.sqrt(np.clip(w[:r], 0.0, None))[:, None] * V[:, :r].T
    norms = np.linalg.norm(U, axis=0)
    if np.any(norms < 1e-12):
        raise NumericalError("zero column in Gram factor")
    return GramFactor(U / norms)


def reduced(U: GramFactor) -> GramFactor:
    """Re-express ``U`` with exactly ``rank`` rows."""
    return factor_from_matrix(U.matrix)


def svec(S: np.ndarray) -> np.ndarray:
    """Isometric vectorisation of a symmetric matrix (off-diagonals times sqrt 2)."""
    r = S.shape[0]
    iu = np.triu_indices(r)
    scale = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    return S[iu] * scale


def smat(v: np.ndarray, r: int) -> np.ndarray:
    iu = np.triu_indices(r)
    scale = np.where(iu[0] == iu[1], 1.0, 1.0 / np.sqrt(2.0))
    S = np.zeros((r, r))
    S[iu] = v * scale
    return S + np.triu(S, 1).T


def _sym(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (np.outer(a, b) + np.outer(b, a)) / 2


def _rank(M: np.ndarray, rel: float = 1e-9) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rel * max(s[0], 1.0)))


def _null(M: np.ndarray, rel: float = 1e-9) -> np.ndarray:
    if M.shape[0] == 0:
        return np.eye(M.shape[1])
    return null_space(M, rcond=rel)


def _complement(P: np.ndarray, r: int) -> np.ndarray:
    """Orthonormal complement of the columns of ``P`` via Gram-Schmidt on e_1..e_r."""
    basis = [P[:, i] for i in range(P.shape[1])]
    out = []
    for i in range(r):
        v = np.zeros(r)
        v[i] = 1.0
        for _ in range(2):
            for b in basis + out:
                v = v - (b @ v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            out.append(v / nv)
        if len(basis) + len(out) == r:
            break
    return np.array(out).T.reshape(r, len(out))


# -------------------------------------------------------- clique-tree completion


def complete_clique_tree(
    x: PartialCorrelation, ct: CliqueTree | None = None, psd_tol: float = EPS_PSD
) -> GramFactor:
    """PSD completion of a chordal partial matrix with rank = max block rank.

    Blocks are factored independently and glued along the clique tree: each
    child is rotated onto its parent over the separator.  Directions not fixed
    by the separator are matched in order of the standard basis.
    """
    g = x.graph
    if ct is None:
        ct = is_chordal(g)
        if ct is None:
            raise GraphError("graph is not chordal")
    facs = []
    for C in ct.cliques:
        B = np.eye(len(C))
        for a, b in itertools.combinations(range(len(C)), 2):
            B[a, b] = B[b, a] = x.value(C[a], C[b])
        w = np.linalg.eigvalsh(B)
        if w[0] < -psd_tol:
            raise NumericalError(f"block on clique {list(C)} is not PSD (min eig {w[0]:.3g})")
        facs.append(factor_from_matrix(np.clip(B, -1, 1)).U)
    r = max(f.shape[0] for f in facs) if facs else 1
    facs = [np.vstack([f, np.zeros((r - f.shape[0], f.shape[1]))]) for f in facs]

    out = np.zeros((r, g.n))
    placed = np.zeros(g.n, bool)
    nbrs: dict[int, list[int]] = {i: [] for i in range(len(ct.cliques))}
    for a, b in ct.tree_edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    order, seen = [], set()
    for root in range(len(ct.cliques)):
        if root in seen:
            continue
        seen.add(root)
        queue = [root]
        while queue:
            c = queue.pop(0)
            order.append(c)
            for d in sorted(nbrs[c]):
                if d not in seen:
                    seen.add(d)
                    queue.append(d)
    for c in order:
        C = ct.cliques[c]
        F = facs[c]
        sep = [i for i, v in enumerate(C) if placed[v]]
        if sep:
            A = out[:, [C[i] for i in sep]]
            B = F[:, sep]
            P, s, Wt = np.linalg.svd(B, full_matrices=False)
            k = int(np.sum(s > 1e-10 * max(1.0, s[0])))
            Pb = P[:, :k]
            Pa = A @ Wt[:k].T / s[:k]
            # re-orthonormalise (Pa is orthonormal up to rounding)
            u, _, vt = np.linalg.svd(Pa, full_matrices=False)
            Pa = u @ vt
            Q = np.hstack([Pa, _complement(Pa, r)]) @ np.hstack([Pb, _complement(Pb, r)]).T
        else:
            Q = np.eye(r)
        for i, v in enumerate(C):
            if not placed[v]:
                out[:, v] = Q @ F[:, i]
                placed[v] = True
    out[:, ~placed] = 0.0
    if not np.all(placed):
        out[0, ~placed] = 1.0
    return GramFactor(out / np.linalg.norm(out, axis=0))


# ------------------------------------------------------------- face geometry


@dataclass(frozen=True, eq=False)
class FaceDescriptor:
    rank: int
    dim_UV: int
    face_dim: int
    perturbation_basis: list[np.ndarray]


def _diag_rows(V: np.ndarray) -> np.ndarray:
    return np.array([svec(np.outer(V[:, i], V[:, i])) for i in range(V.shape[1])])


def perturbation_space(U: GramFactor) -> FaceDescriptor:
    """Dimension of the smallest face of E_n containing X and a basis of P(X)."""
    V = reduced(U).U
    r = V.shape[0]
    M = _diag_rows(V)
    dim_uv = _rank(M)
    R = _null(M)
    basis = [V.T @ smat(R[:, j], r) @ V for j in range(R.shape[1])]
    return FaceDescriptor(r, dim_uv, comb(r + 1, 2) - dim_uv, basis)


def is_extreme_en(U: GramFactor) -> bool:
    f = perturbation_space(U)
    return f.face_dim == 0


def check_ue_in_uv(x: PartialCorrelation, U: GramFactor) -> bool:
    """Whether span{U_ij : ij in E} lies in span{U_ii}.  False certifies x is not extreme."""
    if projection_error(x, U.matrix) > 1e-9:
        raise NumericalError("factor does not complete x")
    V = reduced(U).U
    MV = _diag_rows(V)
    if not x.graph.edges:
        return True
    ME = np.array([svec(_sym(V[:, i], V[:, j])) for i, j in x.graph.edge_list])
    return _rank(np.vstack([MV, ME])) == _rank(MV)


def within_group_span_dim(U: GramFactor, group1, group2) -> tuple[int, int]:
    V = reduced(U).U
    rows = []
    for grp in (list(group1), list(group2)):
        for i, j in itertools.combinations_with_replacement(grp, 2):
            rows.append(svec(_sym(V[:, i], V[:, j])))
    return V.shape[0], _rank(np.array(rows))


# ----------------------------------------------------------- boundary steps


def line_search_psd(U, Z: np.ndarray, tol: float = 1e-10) -> float:
    """Largest ``t >= 0`` with ``X + tZ`` PSD (``inf`` if none up to 1e9)."""
    X = U.matrix if isinstance(U, GramFactor) else np.asarray(U, dtype=float)
    Z = (np.asarray(Z, dtype=float) + np.asarray(Z, dtype=float).T) / 2
    floor = -1e-12 * max(1.0, np.abs(X).max())

    def lam(t):
        return np.linalg.eigvalsh(X + t * Z)[0]

    hi = 1.0
    while lam(hi) >= floor:
        hi *= 2.0
        if hi > 1e9:
            return float("inf")
    lo = 0.0
    while hi - lo > min(tol, 1e-13 * max(1.0, hi)):
        mid = (lo + hi) / 2
        if lam(mid) >= floor:
            lo = mid
        else:
            hi = mid
        if mid in (lo, hi) and hi - lo < 1e-15 * max(1.0, hi):
            break
    return lo


def _polish(x: PartialCorrelation, V: np.ndarray) -> np.ndarray:
    """Gauss-Newton clean-up so the factor reproduces x to machine precision."""
    if not x.graph.edges:
        return V / np.linalg.norm(V, axis=0)
    r, n = V.shape
    E = np.array(x.graph.edge_list)
    target = np.array([x.values[tuple(e)] for e in x.graph.edge_list])

    def resid(flat):
        W = flat.reshape(r, n)
        return np.concatenate(
            [np.sum(W[:, E[:, 0]] * W[:, E[:, 1]], axis=0) - target, np.sum(W * W, axis=0) - 1.0]
        )

    before = np.abs(resid(V.ravel())).max()
    if before < 1e-13:
        return V / np.linalg.norm(V, axis=0)
    sol = least_squares(resid, V.ravel(), xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
    W = sol.x.reshape(r, n)
    W = W / np.linalg.norm(W, axis=0)
    if np.abs(resid(W.ravel())).max() <= before:
        return W
    return V / np.linalg.norm(V, axis=0)


def _constraint_rows(V: np.ndarray, pairs) -> np.ndarray:
    rows = [svec(np.outer(V[:, i], V[:, i])) for i in range(V.shape[1])]
    rows += [svec(_sym(V[:, i], V[:, j])) for i, j in pairs]
    return np.array(rows)


def two_sided_step(V: np.ndarray, pairs) -> np.ndarray | None:
    """One facial-reduction step keeping the diagonal and the entries on ``pairs``.

    Returns the new (lower-rank) factor, or None when no direction exists.
    """
    r = V.shape[0]
    N = _null(_constraint_rows(V, pairs))
    if N.shape[1] == 0:
        return None
    D = smat(N[:, 0], r)
    w, Q = np.linalg.eigh(D)
    # eigenvalue of largest magnitude; ties go to the positive one
    lam = w[-1] if w[-1] >= -w[0] - 1e-12 else w[0]
    t = -1.0 / lam
    mu = 1.0 + t * w
    keep = mu > EPS_RANK * mu.max()
    Vn = (np.sqrt(mu[keep])[:, None] * Q[:, keep].T) @ V
    return Vn / np.linalg.norm(Vn, axis=0)


def rank_reduce_fiber(
    x: PartialCorrelation, U0: GramFactor, seed: int = 0, trace: list | None = None
) -> GramFactor:
    """Lower the rank of a completion of ``x`` while staying in its fiber.

    Repeats the two-sided step X -> U^T (I + tD) U with ``tD`` pushed to the PSD
    boundary.  On K_{3,3} a stuck rank-3 extreme point is handed to
    :func:`k33_reduce`.
    """
    if projection_error(x, U0.matrix) > 1e-8:
        raise NumericalError("U0 does not complete x")
    V = reduced(U0).U
    if trace is not None:
        trace.append(V.T @ V)
    while True:
        Vn = two_sided_step(V, x.graph.edge_list)
        if Vn is None or Vn.shape[0] >= V.shape[0]:
            break
        V = factor_from_matrix(Vn.T @ Vn).U
        if trace is not None:
            trace.append(V.T @ V)
    out = GramFactor(V)
    if out.rank == 3 and k33_sides(x.graph) is not None and is_extreme_en(out) and check_ue_in_uv(x, out):
        out = k33_reduce(x, out, seed=seed, trace=trace)
    return out


def k33_sides(g: Graph) -> tuple[list[int], list[int]] | None:
    if g.n != 6 or g.m != 9:
        return None
    ng = g.to_networkx()
    if not nx.is_isomorphic(ng, complete_bipartite(3, 3).to_networkx()):
        return None
    colour = nx.bipartite.color(ng)
    a = sorted(v for v in range(6) if colour[v] == colour[0])
    b = sorted(v for v in range(6) if colour[v] != colour[0])
    return a, b


def k33_reduce(
    x: PartialCorrelation, U: GramFactor, seed: int = 0, trace: list | None = None
) -> GramFactor:
    """One-sided move that takes a rank-3 extreme completion on K_{3,3} to rank <= 2."""
    sides = k33_sides(x.graph)
    if sides is None:
        raise GraphError("k33_reduce needs a K_{3,3}")
    V = reduced(U).U
    if V.shape[0] <= 2:
        return GramFactor(V)
    if V.shape[0] != 3:
        raise NumericalError(f"k33_reduce needs rank 3, got {V.shape[0]}")
    if not is_extreme_en(GramFactor(V)):
        return rank_reduce_fiber(x, GramFactor(V), seed=seed, trace=trace)
    if not check_ue_in_uv(x, GramFactor(V)):
        raise NumericalError("x is not an extreme point of E(K_{3,3}): U_E is not inside U_V")
    rng = np.random.default_rng(seed)
    Uperp, Wperp = [], []
    for side in sides:
        Uperp.append(_null(np.array([svec(np.outer(V[:, i], V[:, i])) for i in side])))
        rows = [svec(_sym(V[:, i], V[:, j])) for i, j in itertools.combinations_with_replacement(side, 2)]
        Wperp.append(_null(np.array(rows)))
    T = np.hstack(Wperp)
    Y = np.eye(3)
    for _ in range(100):
        y = svec(Y)
        if T.shape[1]:
            coef, *_ = np.linalg.lstsq(T, y, rcond=None)
            res = np.linalg.norm(y - T @ coef)
        else:
            res = np.linalg.norm(y)
        if res > 1e-8:
            break
        B = rng.standard_normal((3, 3))
        Y = Y + 0.5 * (B @ B.T) / np.linalg.norm(B) ** 2
    else:
        raise NumericalError("could not select Y outside W1^perp + W2^perp")
    basis = np.hstack(Uperp)
    c = np.linalg.solve(basis, svec(Y))
    Ys = [smat(Uperp[0] @ c[:3], 3), smat(Uperp[1] @ c[3:], 3)]
    Z = np.zeros((6, 6))
    for Yk, side in zip(Ys, sides):
        for i, j in itertools.combinations(side, 2):
            Z[i, j] = Z[j, i] = V[:, i] @ Yk @ V[:, j]
    X = V.T @ V
    t = line_search_psd(X, Z)
    if not isfinite(t) or t <= 0:
        raise NumericalError("one-sided step found no feasible segment")
    if trace is not None:
        trace.append(X + 0.5 * t * Z)
    Xn = X + t * Z
    if trace is not None:
        trace.append(Xn)
    W = factor_from_matrix(Xn).U
    if W.shape[0] > 3:
        raise NumericalError(f"one-sided step reached rank {W.shape[0]}; x is not extreme")
    return GramFactor(_polish(x, W))
