"""Forcing: deriving unspecified entries that every completion must share.

A singular clique block ``x[C]`` with kernel vector ``u`` gives
``sum_c X_ic u_c = 0`` for every other vertex ``i``; if ``i`` sees all of ``C``
except ``j`` this determines ``X_ij``.

When plain forcing stalls, a pinning step collects all such kernel
equations (with several unknowns) together with the interval each unknown
entry is confined to by single fully specified blocks, and asks a linear
program whether some unknown is squeezed to a point.  Both the equations
and the intervals are necessary conditions, so a pinned value is shared by
every completion.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from .elliptope import (
    EPS_PSD,
    EPS_SING,
    PIVOT_MIN,
    GramFactor,
    NumericalError,
    PartialCorrelation,
    factor_from_matrix,
    is_extreme_en,
)

PIN_WIDTH = 1e-7
LP_SLACK = 1e-9
MAX_CLIQUE = 6


class ForcingAmbiguityError(NumericalError):
    """A block eigenvalue fell in the dead zone between singular and regular."""


@dataclass(frozen=True)
class ForceStep:
    clique: tuple[int, ...]
    forced_pair: tuple[int, int]
    outside: int
    kernel_vector: tuple[float, ...]
    derived_value: float

    kind = "force"

    def to_json(self) -> dict:
        return {
            "kind": "force",
            "clique": list(self.clique),
            "pair": list(self.forced_pair),
            "outside": self.outside,
            "kernel": list(self.kernel_vector),
            "value": self.derived_value,
        }


@dataclass(frozen=True)
class PinStep:
    forced_pair: tuple[int, int]
    derived_value: float
    equations: tuple[tuple[tuple[int, ...], int, tuple[float, ...]], ...]
    bounds: tuple[tuple[tuple[int, int], float, float], ...]

    kind = "pin"

    def to_json(self) -> dict:
        return {
            "kind": "pin",
            "pair": list(self.forced_pair),
            "value": self.derived_value,
            "equations": [[list(c), i, list(u)] for c, i, u in self.equations],
            "bounds": [[list(p), lo, hi] for p, lo, hi in self.bounds],
        }


@dataclass
class ForcingCertificate:
    steps: list = field(default_factory=list)
    complete: bool = False
    matrix: np.ndarray | None = None

    def to_json(self) -> dict:
        return {"complete": self.complete, "steps": [s.to_json() for s in self.steps]}


class _State:
    def __init__(self, x: PartialCorrelation):
        n = x.graph.n
        self.n = n
        self.K = np.eye(n)
        self.known = np.eye(n, dtype=bool)
        for (u, v), val in x.values.items():
            self.set(u, v, val)
        self._cache: dict[tuple[int, ...], float] = {}

    def set(self, u, v, val):
        self.K[u, v] = self.K[v, u] = val
        self.known[u, v] = self.known[v, u] = True

    def nbrs(self, v):
        return [u for u in range(self.n) if u != v and self.known[v, u]]

    def is_clique(self, vs):
        return all(self.known[a, b] for a, b in itertools.combinations(vs, 2))

    def min_eig(self, vs: tuple[int, ...]) -> float:
        got = self._cache.get(vs)
        if got is None:
            got = float(np.linalg.eigvalsh(self.K[np.ix_(vs, vs)])[0])
            self._cache[vs] = got
        return got


def _classify(lam: float, where) -> str:
    if lam < EPS_SING / 10:
        return "singular"
    if lam > EPS_SING:
        return "regular"
    raise ForcingAmbiguityError(f"eigenvalue {lam:.3g} of block {list(where)} is in the dead zone")


def _try_force(st: _State, out: int, j: int) -> ForceStep | None:
    common = sorted(set(st.nbrs(out)) & set(st.nbrs(j)))
    for size in range(1, min(len(common), MAX_CLIQUE - 1) + 1):
        for D in itertools.combinations(common, size):
            if not st.is_clique(D):
                continue
            if _classify(st.min_eig(D), D) != "regular":
                continue
            C = tuple(sorted(D + (j,)))
            if _classify(st.min_eig(C), C) != "singular":
                continue
            w, V = np.linalg.eigh(st.K[np.ix_(C, C)])
            u = V[:, 0]
            pj = C.index(j)
            if abs(u[pj]) <= PIVOT_MIN:
                continue
            s = sum(st.K[out, c] * u[k] for k, c in enumerate(C) if c != j)
            val = float(np.clip(-s / u[pj], -1.0, 1.0))
            pair = (min(out, j), max(out, j))
            return ForceStep(C, pair, out, tuple(float(t) for t in u), val)
    return None


def _interval(K, i, j, D) -> tuple[float, float]:
    D = list(D)
    A = K[np.ix_(D, D)]
    Ap = np.linalg.pinv(A, rcond=1e-10)
    bi, bj = K[i, D], K[j, D]
    centre = bi @ Ap @ bj
    si = max(0.0, 1.0 - bi @ Ap @ bi)
    sj = max(0.0, 1.0 - bj @ Ap @ bj)
    rad = np.sqrt(si * sj)
    return max(-1.0, centre - rad), min(1.0, centre + rad)


def _pin(st: _State) -> list[PinStep]:
    n = st.n
    unknown = [(a, b) for a, b in itertools.combinations(range(n), 2) if not st.known[a, b]]
    if not unknown:
        return []
    var = {p: k for k, p in enumerate(unknown)}
    kg = nx.Graph()
    kg.add_nodes_from(range(n))
    kg.add_edges_from((a, b) for a, b in itertools.combinations(range(n), 2) if st.known[a, b])

    rows, rhs, eq_info = [], [], []
    for K in sorted(tuple(sorted(c)) for c in nx.find_cliques(kg)):
        if len(K) < 2:
            continue
        w, V = np.linalg.eigh(st.K[np.ix_(K, K)])
        for lam in w:
            if EPS_SING / 10 <= lam <= EPS_SING:
                raise ForcingAmbiguityError(f"eigenvalue {lam:.3g} of block {list(K)} is in the dead zone")
        for col in range(len(K)):
            if w[col] >= EPS_SING / 10:
                continue
            u = V[:, col]
            for i in range(n):
                if i in K:
                    continue
                row = np.zeros(len(unknown))
                const = 0.0
                for k, c in enumerate(K):
                    if st.known[i, c]:
                        const += st.K[i, c] * u[k]
                    else:
                        row[var[(min(i, c), max(i, c))]] += u[k]
                if np.count_nonzero(np.abs(row) > 1e-12) == 0:
                    continue
                rows.append(row)
                rhs.append(-const)
                eq_info.append((K, i, tuple(float(t) for t in u)))
    if not rows:
        return []
    involved = sorted({k for row in rows for k in np.flatnonzero(np.abs(row) > 1e-12)})

    bounds, bound_info = [], []
    for p in unknown:
        lo, hi = -1.0, 1.0
        if var[p] in involved:
            i, j = p
            common = [c for c in range(n) if c not in p and st.known[i, c] and st.known[j, c]]
            for D in nx.find_cliques(kg.subgraph(common)) if common else []:
                a, b = _interval(st.K, i, j, sorted(D))
                if a > lo or b < hi:
                    bound_info.append((p, a, b))
                lo, hi = max(lo, a), min(hi, b)
        bounds.append((lo - LP_SLACK, hi + LP_SLACK))

    A = np.array(rows)
    bvec = np.array(rhs)
    A_ub = np.vstack([A, -A])
    b_ub = np.concatenate([bvec + LP_SLACK, -bvec + LP_SLACK])
    steps = []
    for k in involved:
        c = np.zeros(len(unknown))
        c[k] = 1.0
        lo = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        hi = linprog(-c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if lo.status != 0 or hi.status != 0:
            continue
        a, b = lo.fun, -hi.fun
        if b - a <= PIN_WIDTH:
            p = unknown[k]
            steps.append(PinStep(p, float((a + b) / 2), tuple(eq_info), tuple(bound_info)))
    return steps


def force_propagate(x: PartialCorrelation, pin: bool = True) -> ForcingCertificate:
    """Run forcing to a fixpoint; optionally fall back to pinning when it stalls."""
    st = _State(x)
    n = st.n
    for C in x.graph.edges:
        if st.min_eig(tuple(C)) < -EPS_PSD:
            raise NumericalError(f"edge block {C} is not PSD")
    cert = ForcingCertificate()
    while True:
        progress = False
        for a, b in itertools.combinations(range(n), 2):
            if st.known[a, b]:
                continue
            step = _try_force(st, a, b) or _try_force(st, b, a)
            if step is not None:
                st.set(*step.forced_pair, step.derived_value)
                cert.steps.append(step)
                progress = True
        if progress:
            continue
        if not pin:
            break
        pins = _pin(st)
        if not pins:
            break
        for step in pins:
            st.set(*step.forced_pair, step.derived_value)
            cert.steps.append(step)
    cert.complete = bool(st.known.all())
    if cert.complete:
        cert.matrix = st.K.copy()
    return cert


def replay_certificate(x: PartialCorrelation, cert: ForcingCertificate, tol: float = 1e-9) -> bool:
    """Re-derive every step from the original data; True when all agree."""
    st = _State(x)
    for step in cert.steps:
        a, b = step.forced_pair
        if st.known[a, b]:
            return False
        if step.kind == "force":
            C = step.clique
            j = b if step.outside == a else a
            if not st.is_clique(C) or step.outside in C or j not in C:
                return False
            if not all(st.known[step.outside, c] for c in C if c != j):
                return False
            w, V = np.linalg.eigh(st.K[np.ix_(C, C)])
            rest = tuple(c for c in C if c != j)
            if w[0] >= EPS_SING / 10 or st.min_eig(rest) <= EPS_SING:
                return False
            u = np.array(step.kernel_vector)
            if np.linalg.norm(st.K[np.ix_(C, C)] @ u) > 1e-8:
                return False
            s = sum(st.K[step.outside, c] * u[k] for k, c in enumerate(C) if c != j)
            val = -s / u[C.index(j)]
            if abs(val - step.derived_value) > tol:
                return False
        else:
            again = {p.forced_pair: p.derived_value for p in _pin(st)}
            if (a, b) not in again or abs(again[(a, b)] - step.derived_value) > PIN_WIDTH:
                return False
        st.set(a, b, step.derived_value)
    return True


class Certified(NamedTuple):
    factor: GramFactor
    lower_bound: int


def certify_unique_completion(x: PartialCorrelation) -> Certified | None:
    """If forcing pins down the whole matrix and it is extreme, egd(G) >= its rank."""
    cert = force_propagate(x)
    if not cert.complete:
        return None
    X = cert.matrix
    if np.linalg.eigvalsh(X)[0] < -1e-7:
        return None
    U = factor_from_matrix(X)
    if not is_extreme_en(U):
        return None
    return Certified(U, U.r)
