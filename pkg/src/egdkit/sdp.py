"""The elliptope SDP max sum w_ij X_ij over unit-diagonal PSD X, and friends.

The solver works on the dual ``min sum y  s.t.  Diag(y) - W/2 > 0`` with a
log barrier; the primal point is read off as ``mu * S^{-1}`` and rescaled to
unit diagonal.  Rank-r values are local-search lower bounds except for r = 1
on small graphs, where every sign vector is tried.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import isfinite

import numpy as np
from scipy.optimize import minimize

from .elliptope import (
    EPS_PSD,
    GramFactor,
    NumericalError,
    PartialCorrelation,
    _null,
    _polish,
    _sym,
    complete_clique_tree,
    factor_from_matrix,
    line_search_psd,
    numerical_rank,
    reduced,
    rank_reduce_fiber,
    svec,
    smat,
)
from .graph import Edge, Graph, GraphError, complete, make_graph

EXACT_R1_LIMIT = 20
NULL_TOL = 1e-7


@dataclass(frozen=True)
class WeightVector:
    graph: Graph
    w: dict[Edge, float]

    def __post_init__(self):
        for e in self.graph.edges:
            if e not in self.w or not isfinite(self.w[e]):
                raise GraphError(f"edge {e} needs a finite weight")

    def __hash__(self):
        return id(self)

    def matrix(self) -> np.ndarray:
        """Symmetric matrix with ``w_ij / 2`` in both off-diagonal slots."""
        M = np.zeros((self.graph.n, self.graph.n))
        for (u, v), c in self.w.items():
            M[u, v] = M[v, u] = c / 2
        return M

    def objective(self, X: np.ndarray) -> float:
        return float(sum(c * X[u, v] for (u, v), c in self.w.items()))

    def scaled(self, c: float) -> "WeightVector":
        return WeightVector(self.graph, {e: c * v for e, v in self.w.items()})

    def to_json(self) -> dict:
        return {"n": self.graph.n, "entries": [[u, v, float(self.w[(u, v)])] for u, v in self.graph.edge_list]}

    @classmethod
    def from_json(cls, obj: dict) -> "WeightVector":
        ents = [(int(a), int(b), float(c)) for a, b, c in obj["entries"]]
        g = make_graph(int(obj["n"]), [(a, b) for a, b, _ in ents])
        return cls(g, {(min(a, b), max(a, b)): c for a, b, c in ents})

    @classmethod
    def uniform(cls, g: Graph, c: float = 1.0) -> "WeightVector":
        return cls(g, {e: float(c) for e in g.edges})

    @classmethod
    def random(cls, g: Graph, rng: np.random.Generator) -> "WeightVector":
        return cls(g, {e: float(rng.standard_normal()) for e in g.edge_list})


@dataclass(frozen=True, eq=False)
class SdpSolution:
    value: float
    factor: GramFactor
    dual_y: np.ndarray
    gap: float

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "gap": self.gap,
            "rank": self.factor.rank,
            "factor": self.factor.U.tolist(),
            "dual": self.dual_y.tolist(),
        }


# ------------------------------------------------------------------ solver


def _chol_ok(S: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(S)
        return True
    except np.linalg.LinAlgError:
        return False


def _barrier(y, Wm, mu):
    S = np.diag(y) - Wm
    L = np.linalg.cholesky(S)
    return y.sum() - 2 * mu * np.log(np.diag(L)).sum()


def solve_elliptope_sdp(W: WeightVector, tol: float = 1e-8, max_newton: int = 60) -> SdpSolution:
    """Optimal value and a Gram factor of the elliptope SDP, with dual certificate."""
    n = W.graph.n
    if n > 200:
        raise GraphError("dense solver supports n <= 200")
    if n == 0:
        return SdpSolution(0.0, GramFactor(np.zeros((1, 0))), np.zeros(0), 0.0)
    Wm = W.matrix()
    scale = max(1.0, float(np.abs(Wm).sum(axis=1).max()))
    y = np.abs(Wm).sum(axis=1) + scale
    mu = scale
    mu_min = tol / (10 * n)
    while True:
        for _ in range(max_newton):
            S = np.diag(y) - Wm
            Si = np.linalg.inv(S)
            g = 1.0 - mu * np.diag(Si)
            H = mu * Si * Si
            dy = -np.linalg.solve(H, g)
            dec = -g @ dy
            if dec < 1e-14 * max(1.0, abs(y.sum())):
                break
            f0 = _barrier(y, Wm, mu)
            t = 1.0
            while True:
                yn = y + t * dy
                if _chol_ok(np.diag(yn) - Wm) and _barrier(yn, Wm, mu) <= f0 - 0.25 * t * dec:
                    break
                t /= 2
                if t < 1e-14:
                    break
            if t < 1e-14:
                break
            y = yn
        if mu <= mu_min:
            break
        mu = max(mu / 10, mu_min)
    X = mu * np.linalg.inv(np.diag(y) - Wm)
    X = (X + X.T) / 2
    d = np.sqrt(np.clip(np.diag(X), 1e-300, None))
    X = X / np.outer(d, d)
    U = factor_from_matrix(X)
    value = W.objective(U.matrix)
    gap = float(y.sum() - value)
    if gap > max(tol, 1e-6) * max(1.0, abs(value)) * 10:
        raise NumericalError(f"solver did not converge (gap {gap:.3g})")
    return SdpSolution(value, U, y, gap)


def dual_feasible(W: WeightVector, sol: SdpSolution, eps: float = EPS_PSD) -> bool:
    S = np.diag(sol.dual_y) - W.matrix()
    return bool(np.linalg.eigvalsh(S)[0] >= -eps * max(1.0, np.abs(S).max()))


def supporting_weights(g: Graph, U: GramFactor, tries: int = 2000, seed: int = 0) -> WeightVector | None:
    """Weights w for which ``U^T U`` is optimal, with a strictly complementary dual.

    Searches the linear space of (y, w) with ``(Diag(y) - W/2) U^T = 0`` for a
    PSD slack of rank ``n - rank U``; None if the point is not exposed this way.
    """
    n, E = g.n, g.edge_list
    V = reduced(U).U
    cols = []
    for i in range(n):
        S = np.zeros((n, n))
        S[i, i] = 1.0
        cols.append((S @ V.T).ravel())
    for a, b in E:
        S = np.zeros((n, n))
        S[a, b] = S[b, a] = -0.5
        cols.append((S @ V.T).ravel())
    N = _null(np.array(cols).T)
    if N.shape[1] == 0:
        return None
    rng = np.random.default_rng(seed)
    k = V.shape[0]
    best = None
    for _ in range(tries):
        v = N @ rng.standard_normal(N.shape[1])
        S = np.diag(v[:n])
        for t, (a, b) in enumerate(E):
            S[a, b] = S[b, a] = -v[n + t] / 2
        ev = np.linalg.eigvalsh(S)
        if ev[0] < 0:
            v, ev = -v, np.linalg.eigvalsh(-S)
        if ev[0] > -1e-10 * ev[-1] and (best is None or ev[k] / ev[-1] > best[0]):
            best = (ev[k] / ev[-1], v)
    if best is None or best[0] < 1e-6:
        return None
    w = best[1][n:] / np.abs(best[1][n:]).max()
    return WeightVector(g, {e: float(c) for e, c in zip(E, w)})


# ------------------------------------------------------------- rank r local


@dataclass(frozen=True, eq=False)
class LocalValue:
    value: float
    factor: GramFactor
    exact: bool


def _enumerate_signs(W: WeightVector) -> LocalValue:
    n = W.graph.n
    E = np.array(W.graph.edge_list, dtype=int).reshape(-1, 2)
    c = np.array([W.w[tuple(e)] for e in E])
    best, best_s = -np.inf, None
    total = 1 << max(n - 1, 0)
    chunk = 1 << 15
    shifts = np.arange(n - 1)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk))
        s = np.ones((len(codes), n))
        if n > 1:
            s[:, 1:] = 1 - 2 * ((codes[:, None] >> shifts) & 1)
        vals = (s[:, E[:, 0]] * s[:, E[:, 1]]) @ c if len(E) else np.zeros(len(codes))
        k = int(np.argmax(vals))
        if vals[k] > best + 1e-12:
            best, best_s = float(vals[k]), s[k]
    return LocalValue(best, GramFactor(best_s[None, :]), True)


def _ascent(M: np.ndarray, V: np.ndarray, iters: int = 3000) -> np.ndarray:
    f = np.sum(V * (V @ M))
    step = 1.0
    for _ in range(iters):
        G = V @ M
        while True:
            Vn = V + step * G
            Vn /= np.maximum(np.linalg.norm(Vn, axis=0), 1e-300)
            fn = np.sum(Vn * (Vn @ M))
            if fn >= f or step < 1e-12:
                break
            step /= 2
        if fn - f < 1e-14 * max(1.0, abs(f)):
            return Vn if fn >= f else V
        V, f, step = Vn, fn, step * 2
    return V


def _refine(M: np.ndarray, V: np.ndarray) -> np.ndarray:
    """L-BFGS on the column-normalised objective, started from ``V``."""
    r, n = V.shape

    def fg(flat):
        P = flat.reshape(r, n)
        nrm = np.linalg.norm(P, axis=0)
        U = P / nrm
        G = 2 * U @ M
        grad = (G - U * np.sum(U * G, axis=0)) / nrm
        return -np.sum(U * (U @ M)), -grad.ravel()

    res = minimize(fg, V.ravel(), jac=True, method="L-BFGS-B", options={"gtol": 1e-12, "ftol": 1e-15, "maxiter": 2000})
    P = res.x.reshape(r, n)
    P = P / np.linalg.norm(P, axis=0)
    return P if np.sum(P * (P @ M)) >= np.sum(V * (V @ M)) else V


def solve_rank_r_local(W: WeightVector, r: int, restarts: int = 16, seed: int = 0) -> LocalValue:
    """A rank-<= r feasible point and its value (a lower bound on sdp_r)."""
    if r < 1:
        raise GraphError("rank must be at least 1")
    n = W.graph.n
    if r == 1 and n <= EXACT_R1_LIMIT:
        return _enumerate_signs(W)
    M = W.matrix()
    best = None
    for child in np.random.SeedSequence(seed).spawn(max(restarts, 1)):
        rng = np.random.default_rng(child)
        V = rng.standard_normal((r, n))
        V /= np.linalg.norm(V, axis=0)
        V = _refine(M, _ascent(M, V, iters=300))
        val = W.objective(V.T @ V)
        if best is None or val > best[0] + 1e-12:
            best = (val, V)
    return LocalValue(best[0], GramFactor(best[1]), False)


# ----------------------------------------------------------- purification


def _purify(W: WeightVector, sol: SdpSolution, rounds: int, seed: int, eps: float, tol: float):
    X = sol.factor.matrix
    rng = np.random.default_rng(seed)
    cur = dict(W.w)
    for k in range(rounds):
        step = eps * 0.5**k
        cur = {e: c + step * rng.standard_normal() for e, c in sorted(cur.items())}
        s = solve_elliptope_sdp(WeightVector(W.graph, cur), tol=min(tol, 1e-8))
        drift = sol.value - W.objective(s.factor.matrix)
        if drift > 10 * tol:
            raise NumericalError(f"purification drifted {drift:.3g} from the optimum")
        X = s.factor.matrix
    if rounds > 0:
        X = _face_walk(W, X)
    return PartialCorrelation.from_matrix(W.graph, X), X


def _face_walk(W: WeightVector, X: np.ndarray, act_tol: float = 1e-7) -> np.ndarray:
    """Walk to the PSD boundary along perturbations that move edge entries.

    Perturbations of X inside E_n are V^T R V with R orthogonal to every
    v_i v_i^T.  While one of them changes some edge entry, x is not extreme,
    so move along it (objective non-decreasing) until the rank drops.
    """
    edges = W.graph.edge_list
    if not edges:
        return X
    eu, ev = np.array(edges).T
    c = np.array([W.w[e] for e in edges])
    for _ in range(X.shape[0]):
        V = factor_from_matrix(X).U
        r = V.shape[0]
        R = _null(np.array([svec(np.outer(V[:, i], V[:, i])) for i in range(V.shape[1])]))
        if R.shape[1] == 0:
            break
        Zs = [V.T @ smat(R[:, j], r) @ V for j in range(R.shape[1])]
        A = np.array([Z[eu, ev] for Z in Zs])
        left, sv, _ = np.linalg.svd(A, full_matrices=False)
        if sv[0] <= act_tol:
            break
        Z = sum(a * Zk for a, Zk in zip(left[:, 0], Zs))
        slope = float(c @ Z[eu, ev])
        Z = Z if slope >= 0 else -Z
        t = line_search_psd(X, Z)
        if not isfinite(t) or t <= 0:
            break
        X = X + t * Z
        d = np.sqrt(np.clip(np.diag(X), 1e-300, None))
        X = X / np.outer(d, d)
    return X


def purify_extreme(
    W: WeightVector, sol: SdpSolution, rounds: int = 5, seed: int = 0, eps: float = 1e-7, tol: float = 1e-6
) -> PartialCorrelation:
    """Push an optimal point toward an extreme point of the optimal face."""
    return _purify(W, sol, rounds, seed, eps, tol)[0]


def purify_with_completion(
    W: WeightVector, sol: SdpSolution, rounds: int = 5, seed: int = 0, eps: float = 1e-7, tol: float = 1e-6
) -> tuple[PartialCorrelation, GramFactor]:
    """Like :func:`purify_extreme`, also returning the completion it came from."""
    x, X = _purify(W, sol, rounds, seed, eps, tol)
    return x, factor_from_matrix(X)


# ------------------------------------------------------- low-rank pipeline


RANK_LE_2 = "RANK_LE_2"
RANK_3_RETURNED = "RANK_3_RETURNED"


@dataclass(frozen=True, eq=False)
class LowRankResult:
    factor: GramFactor
    status: str
    value: float
    sdp_value: float
    kinds: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "value": self.value,
            "sdp_value": self.sdp_value,
            "rank": self.factor.rank,
            "blocks": list(self.kinds),
            "factor": self.factor.U.tolist(),
        }


def _step_rows(V, rows_pairs, obj):
    rows = [svec(np.outer(V[:, i], V[:, i])) for i in range(V.shape[1])]
    rows += [svec(_sym(V[:, i], V[:, j])) for i, j in rows_pairs]
    if obj:
        rows.append(sum(c * svec(_sym(V[:, i], V[:, j])) for (i, j), c in obj))
    return np.array(rows)


def _face_step(V: np.ndarray, rows: np.ndarray) -> np.ndarray | None:
    r = V.shape[0]
    N = _null(rows, rel=NULL_TOL)
    if N.shape[1] == 0:
        return None
    w, Q = np.linalg.eigh(smat(N[:, 0], r))
    lam = w[-1] if w[-1] >= -w[0] - 1e-12 else w[0]
    mu = 1.0 - w / lam
    keep = mu > 1e-8 * mu.max()
    Vn = (np.sqrt(mu[keep])[:, None] * Q[:, keep].T) @ V
    return Vn / np.linalg.norm(Vn, axis=0)


def _reduce_clique(V: np.ndarray, fixed: list, movable: list) -> np.ndarray:
    """Lower the rank of a clique block keeping ``fixed`` entries and the objective.

    ``movable`` lists ((i, j), w) for graph edges that belong to no other clique;
    first they are held fixed too, then only their weighted sum is.
    """
    V = factor_from_matrix(V.T @ V).U
    while V.shape[0] > 2:
        Vn = _face_step(V, _step_rows(V, fixed + [p for p, _ in movable], None))
        if Vn is None and movable:
            Vn = _face_step(V, _step_rows(V, fixed, movable))
        if Vn is None or Vn.shape[0] >= V.shape[0]:
            break
        V = factor_from_matrix(Vn.T @ Vn).U
    return V


def _reduce_txk2(X: np.ndarray, W: WeightVector, q: Graph) -> np.ndarray:
    from .decompose import classify_free

    cls = classify_free(q)
    X = X.copy()
    for C in cls.maximal_cliques:
        pos = {v: k for k, v in enumerate(C)}
        fixed, movable = [], []
        for a, b in itertools.combinations(C, 2):
            p = (pos[a], pos[b])
            if (a, b) not in cls.free_edges:
                fixed.append(p)
            elif (a, b) in W.w:
                movable.append((p, W.w[(a, b)]))
        Vc = factor_from_matrix(X[np.ix_(C, C)]).U
        B = _reduce_clique(Vc, fixed, movable)
        M = B.T @ B
        for i, j in fixed:
            M[i, j] = M[j, i] = X[C[i], C[j]]
        kc = complete(len(C))
        B = _polish(PartialCorrelation.from_matrix(kc, M), B)
        M = B.T @ B
        for a, b in itertools.combinations(C, 2):
            X[a, b] = X[b, a] = M[pos[a], pos[b]]
    xq = PartialCorrelation.from_matrix(q, X)
    return complete_clique_tree(xq, psd_tol=1e-7).matrix


def low_rank_optimal(W: WeightVector, tol: float = 1e-7, seed: int = 0, rounds: int = 3) -> LowRankResult:
    """An optimal point of rank <= 2 whenever the block structure allows one."""
    from .decompose import low_rank_structure

    g = W.graph
    sol = solve_elliptope_sdp(W, tol=min(tol, 1e-8))
    if g.m == 0:
        return LowRankResult(GramFactor(np.ones((1, g.n))), RANK_LE_2, 0.0, sol.value)
    x, X = _purify(W, sol, rounds, seed, 1e-5, max(tol, 1e-6))
    reports = low_rank_structure(g)
    glue_edges, glue_vals = [], {}
    for rep in reports:
        vs = list(rep.vertices)
        if len(vs) == 1:
            continue
        Xb = X[np.ix_(vs, vs)]
        wb = WeightVector(rep.graph, {(a, b): W.w[(vs[a], vs[b])] for a, b in rep.graph.edges})
        if rep.kind == "TxK2":
            Mb = _reduce_txk2(Xb, wb, rep.extension)
        else:
            Ub = factor_from_matrix(Xb)
            if rep.kind != "OBSTRUCTED" and Ub.r > 2:
                Vb = _reduce_clique(Ub.U, [], [(e, c) for e, c in wb.w.items()])
                Ub = GramFactor(Vb)
            Mb = rank_reduce_fiber(PartialCorrelation.from_matrix(rep.graph, Ub.matrix), Ub, seed=seed).matrix
        for a, b in itertools.combinations(range(len(vs)), 2):
            e = (vs[a], vs[b])
            glue_edges.append(e)
            glue_vals[e] = float(np.clip(Mb[a, b], -1, 1))
    h = make_graph(g.n, glue_edges)
    U = complete_clique_tree(PartialCorrelation(h, glue_vals), psd_tol=1e-7)
    U = factor_from_matrix(U.matrix)
    xg = PartialCorrelation.from_matrix(g, U.matrix)
    U = GramFactor(_polish(xg, U.U))
    value = W.objective(U.matrix)
    rank = numerical_rank(U.matrix, 1e-7)
    ok = rank <= 2 and sol.value - value <= max(10 * tol, 1e-6) * max(1.0, abs(sol.value))
    if ok and U.r > 2:
        U = factor_from_matrix(U.matrix, 1e-7)
    return LowRankResult(U, RANK_LE_2 if ok else RANK_3_RETURNED, value, sol.value, tuple(r.kind for r in reports))


# ------------------------------------------------------------ ratio sampling


@dataclass(frozen=True, eq=False)
class RatioEstimate:
    r: int
    best_w: WeightVector
    sdp_value: float
    rank_r_value: float
    ratio_lower_bound: float
    exact: bool

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "sdp_value": self.sdp_value,
            "rank_r_value": self.rank_r_value,
            "ratio": self.ratio_lower_bound,
            "kind": "lower bound" if self.exact else "heuristic",
            "weights": self.best_w.to_json(),
        }


def grothendieck_ratio_estimate(
    g: Graph, r: int, samples: int = 20, seed: int = 0, candidates: list[WeightVector] | None = None, restarts: int = 8
) -> RatioEstimate:
    """Largest sdp / rank-r ratio over the all -1 weights, given candidates and Gaussian samples."""
    if samples < 1:
        raise GraphError("need at least one sample")
    rng = np.random.default_rng(seed)
    pool = [WeightVector.uniform(g, -1.0)] + list(candidates or [])
    pool += [WeightVector.random(g, rng) for _ in range(samples)]
    best = None
    for k, W in enumerate(pool):
        s = solve_elliptope_sdp(W).value
        loc = solve_rank_r_local(W, r, restarts=restarts, seed=seed + k)
        if loc.value <= 1e-9:
            continue
        ratio = s / loc.value
        if best is None or ratio > best.ratio_lower_bound + 1e-12:
            best = RatioEstimate(r, W, s, loc.value, ratio, loc.exact)
    if best is None:
        W = pool[0]
        best = RatioEstimate(r, W, 0.0, 0.0, 1.0, True)
    return best
