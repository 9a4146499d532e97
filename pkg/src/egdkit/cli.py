"""Command-line front end: ``egdkit <command> ...``.

Every command prints one JSON document whose ``config`` header echoes the
resolved options.  Exit codes: 0 success, 1 decided negative, 2 input
error, 3 numerical trouble.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import characterize, decompose, forcing, sdp
from ._backend import BACKEND
from .elliptope import (
    GramFactor,
    NumericalError,
    PartialCorrelation,
    complete_clique_tree,
    factor_from_matrix,
    perturbation_space,
    rank_reduce_fiber,
)
from .families import LabeledInstance, generate, h_options
from .graph import (
    Graph,
    GraphError,
    complete,
    complete_bipartite,
    complete_multipartite,
    is_chordal,
    k5_minus_edge,
    make_graph,
    parse_graph_lines,
    to_text,
    treewidth_exact,
    wheel_w5,
)
from .minors import minor_embedding

OK, NEGATIVE, BAD_INPUT, ANOMALY = 0, 1, 2, 3

MODELS = {
    "K3": lambda: complete(3),
    "K4": lambda: complete(4),
    "K5": lambda: complete(5),
    "K33": lambda: complete_bipartite(3, 3),
    "K222": lambda: complete_multipartite(2, 2, 2),
    "W5": wheel_w5,
    "K5-e": k5_minus_edge,
    "F3": characterize.f3,
    "H3": characterize.h3,
}


@dataclass
class Outcome:
    payload: dict
    text: str
    code: int = OK


# ------------------------------------------------------------------ input


def _read(path: str | None) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _json_or_none(text: str):
    s = text.lstrip()
    if not s.startswith("{"):
        return None
    try:
        return json.loads(s)
    except json.JSONDecodeError as exc:
        raise GraphError(f"malformed JSON: {exc}") from None


def _unwrap(obj: dict) -> dict:
    return obj["result"] if "result" in obj and "config" in obj else obj


def _graph_from_obj(obj: dict) -> Graph:
    obj = _unwrap(obj)
    if "edges" in obj:
        return make_graph(int(obj["n"]), [tuple(e) for e in obj["edges"]])
    if "entries" in obj:
        return make_graph(int(obj["n"]), [(a, b) for a, b, _ in obj["entries"]])
    if "graph" in obj:
        return _graph_from_obj(obj["graph"])
    raise GraphError("JSON input has no graph")


def load_graph(text: str) -> Graph:
    obj = _json_or_none(text)
    if obj is not None:
        return _graph_from_obj(obj)
    return parse_graph_lines(text.splitlines())[0]


def load_partial(text: str) -> tuple[PartialCorrelation, GramFactor | None]:
    """A partial matrix from JSON entries or from a graph plus factor block."""
    obj = _json_or_none(text)
    if obj is not None:
        obj = _unwrap(obj)
        if "entries" in obj:
            return PartialCorrelation.from_json(obj), None
        if "graph" in obj and "factor" in obj:
            g, U = _graph_from_obj(obj), GramFactor(np.array(obj["factor"], dtype=float))
            return PartialCorrelation.from_matrix(g, U.matrix), U
        raise GraphError("JSON input has neither entries nor graph plus factor")
    g, rest = parse_graph_lines(text.splitlines())
    if not [ln for ln in rest if ln and not ln.startswith("#")]:
        raise GraphError("expected a factor block after the graph")
    U = GramFactor.from_text_lines(rest)
    if U.n != g.n:
        raise GraphError("factor size does not match the graph")
    return PartialCorrelation.from_matrix(g, U.matrix), U


def load_factor(text: str) -> GramFactor:
    obj = _json_or_none(text)
    if obj is not None:
        obj = _unwrap(obj)
        if "factor" not in obj:
            raise GraphError("JSON input has no factor")
        return GramFactor(np.array(obj["factor"], dtype=float))
    lines = text.splitlines()
    try:
        _, rest = parse_graph_lines(lines)
        if [ln for ln in rest if ln and not ln.startswith("#")]:
            return GramFactor.from_text_lines(rest)
    except GraphError:
        pass
    return GramFactor.from_text_lines(lines)


def load_weights(g: Graph, path: str | None, uniform: float | None) -> sdp.WeightVector:
    if path is None:
        return sdp.WeightVector.uniform(g, -1.0 if uniform is None else uniform)
    W = sdp.WeightVector.from_json(json.loads(_read(path)))
    if W.graph.n != g.n or W.graph.edges != g.edges:
        raise GraphError("weights do not match the graph's edges")
    return W


def _factor_text(U: GramFactor) -> str:
    return U.to_text()


# -------------------------------------------------------------- commands


def cmd_gen(a) -> Outcome:
    choices = {}
    for spec in a.choice or []:
        try:
            key, val = spec.split("=")
            i, j = (int(t) for t in key.split(","))
            k = int(val)
        except ValueError:
            raise GraphError(f"choice {spec!r} must look like 'i,j=k'") from None
        if not 0 <= k < 4:
            raise GraphError("choice index must be in 0..3")
        choices[(i, j)] = h_options(i, j)[k]
    inst = generate(a.family, a.r, choices)
    payload = {
        "graph": {"n": inst.graph.n, "edges": [list(e) for e in inst.graph.edge_list]},
        "names": list(inst.vertex_names),
        "factor": inst.labels.U.tolist(),
    }
    return Outcome(payload, inst.to_text())


def cmd_minor(a) -> Outcome:
    host = load_graph(_read(a.host))
    model = MODELS[a.model]() if a.model in MODELS else load_graph(_read(a.model))
    emb = minor_embedding(host, model)
    if emb is None:
        return Outcome({"found": False}, "no minor\n", NEGATIVE)
    return Outcome({"found": True, **emb.to_json()}, f"minor: {[list(b) for b in emb.branch_sets]}\n")


def _one_check(param: str, g: Graph) -> Outcome:
    if param in ("gd2", "gd3", "gd4"):
        v = characterize.gram_dim_le(g, int(param[2]))
    else:
        v = characterize.decide(param, g)
    txt = f"{param}: {str(v.answer).lower()}" + (f" ({v.minor_name} minor)" if v.minor_name else "")
    return Outcome(v.to_json(), txt + "\n", OK if v.answer else NEGATIVE)


def cmd_check(a, g: Graph) -> Outcome:
    return _one_check(a.parameter, g)


def cmd_bounds(a, g: Graph) -> Outcome:
    b = characterize.egd_bounds(g)
    return Outcome(b.to_json(), f"egd in [{b.lower}, {b.upper}]\n")


def cmd_free(a, g: Graph) -> Outcome:
    c = decompose.classify_free(g)
    payload = {
        "free": c.is_free,
        "free_edges": sorted(list(e) for e in c.free_edges),
        "cliques": [list(q) for q in c.maximal_cliques],
        "clique_free": list(c.free_flags),
        "sides": {str(k): [list(p) for p in v] for k, v in sorted(c.sides.items())},
    }
    return Outcome(payload, f"free: {str(c.is_free).lower()}\n", OK if c.is_free else NEGATIVE)


def cmd_embed(a, g: Graph) -> Outcome:
    emb = decompose.build_txk2_embedding(g)
    return Outcome(emb.to_json(), json.dumps(emb.to_json()) + "\n")


def cmd_extend(a, g: Graph) -> Outcome:
    fn = decompose.chordal_extend_noF3K4 if a.kind == "f3k4" else decompose.chordal_extend_noF3H3
    q = fn(g)
    added = sorted(set(q.edges) - set(g.edges))
    payload = {"n": q.n, "edges": [list(e) for e in q.edge_list], "added": [list(e) for e in added]}
    return Outcome(payload, to_text(q))


def cmd_tw(a, g: Graph) -> Outcome:
    tw = treewidth_exact(g)
    return Outcome({"treewidth": tw, "backend": BACKEND}, f"{tw}\n")


def cmd_complete(a) -> Outcome:
    x, _ = load_partial(_read(a.input))
    if is_chordal(x.graph) is None:
        raise GraphError("completion needs a chordal graph")
    U = factor_from_matrix(complete_clique_tree(x).matrix)
    return Outcome({"rank": U.rank, "factor": U.U.tolist()}, _factor_text(U))


def cmd_force(a) -> Outcome:
    x, _ = load_partial(_read(a.input))
    cert = forcing.force_propagate(x, pin=not a.no_pin)
    payload = cert.to_json()
    if cert.complete:
        payload["matrix"] = cert.matrix.tolist()
    return Outcome(payload, f"complete: {str(cert.complete).lower()} ({len(cert.steps)} steps)\n",
                   OK if cert.complete else NEGATIVE)


def cmd_certify(a) -> Outcome:
    x, _ = load_partial(_read(a.input))
    got = forcing.certify_unique_completion(x)
    if got is None:
        return Outcome({"certified": False}, "not certified\n", NEGATIVE)
    payload = {"certified": True, "lower_bound": got.lower_bound, "factor": got.factor.U.tolist()}
    return Outcome(payload, f"egd >= {got.lower_bound}\n")


def cmd_extreme(a) -> Outcome:
    U = load_factor(_read(a.input))
    fd = perturbation_space(U)
    ext = fd.face_dim == 0
    payload = {"extreme": ext, "rank": fd.rank, "dim_UV": fd.dim_UV, "face_dim": fd.face_dim}
    return Outcome(payload, f"extreme: {str(ext).lower()} (rank {fd.rank}, face dim {fd.face_dim})\n",
                   OK if ext else NEGATIVE)


def cmd_reduce(a) -> Outcome:
    x, U0 = load_partial(_read(a.input))
    if U0 is None:
        if is_chordal(x.graph) is None:
            raise GraphError("give a graph plus factor, or a chordal partial matrix")
        U0 = complete_clique_tree(x)
    trace: list = []
    U = rank_reduce_fiber(x, U0, seed=a.seed, trace=trace)
    ranks = [int(np.linalg.matrix_rank(T, tol=1e-8)) for T in trace]
    payload = {"rank": U.rank, "trace_ranks": ranks, "factor": U.U.tolist()}
    return Outcome(payload, _factor_text(U))


def cmd_solve(a) -> Outcome:
    g = load_graph(_read(a.graph))
    W = load_weights(g, a.weights, a.uniform)
    sol = sdp.solve_elliptope_sdp(W, tol=a.tol)
    return Outcome(sol.to_json(), f"{sol.value!r}\n")


def cmd_lowrank(a) -> Outcome:
    g = load_graph(_read(a.graph))
    W = load_weights(g, a.weights, a.uniform)
    res = sdp.low_rank_optimal(W, tol=a.tol, seed=a.seed)
    code = OK if res.status == sdp.RANK_LE_2 else NEGATIVE
    return Outcome(res.to_json(), _factor_text(res.factor), code)


def cmd_ratio(a) -> Outcome:
    g = load_graph(_read(a.graph))
    est = sdp.grothendieck_ratio_estimate(g, a.rank, samples=a.samples, seed=a.seed)
    return Outcome(est.to_json(), f"{est.ratio_lower_bound!r}\n")


GRAPH_COMMANDS = {
    "check": cmd_check,
    "bounds": cmd_bounds,
    "free": cmd_free,
    "embed-txk2": cmd_embed,
    "extend": cmd_extend,
    "tw": cmd_tw,
}

OTHER_COMMANDS = {
    "gen": cmd_gen,
    "minor": cmd_minor,
    "complete": cmd_complete,
    "force": cmd_force,
    "certify": cmd_certify,
    "extreme": cmd_extreme,
    "reduce": cmd_reduce,
    "solve": cmd_solve,
    "lowrank": cmd_lowrank,
    "ratio": cmd_ratio,
}


# ----------------------------------------------------------------- parser


def _default_seed() -> int:
    env = os.environ.get("ELLIPTOPE_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise SystemExit(f"ELLIPTOPE_SEED must be an integer, got {env!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "text"], default="json")
    common.add_argument("--seed", type=int, default=None, help="default: $ELLIPTOPE_SEED or 0")
    common.add_argument("--tol", type=float, default=1e-8)
    common.add_argument("--output", "-o", default=None, help="write here instead of stdout")

    p = argparse.ArgumentParser(prog="egdkit", description="Extreme Gram dimension toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen", parents=[common], help="generate F_r, G_r or H_r with canonical labels")
    s.add_argument("family", choices=["F", "G", "H", "f", "g", "h"])
    s.add_argument("r", type=int)
    s.add_argument("--choice", action="append", metavar="I,J=K", help="H_r: option K (0..3) for e_IJ")

    s = sub.add_parser("minor", parents=[common], help="search for a minor")
    s.add_argument("host")
    s.add_argument("model", help=f"graph file or one of {', '.join(MODELS)}")

    def graphs(s):
        s.add_argument("graphs", nargs="*", help="graph files (default: stdin)")
        s.add_argument("--jobs", type=int, default=1, help="parallel workers over several files")

    s = sub.add_parser("check", parents=[common], help="forbidden-minor decision")
    s.add_argument("parameter", choices=["egd2", "labox2", "lasq2", "gd2", "gd3", "gd4"])
    graphs(s)
    for name, hlp in [("bounds", "bounds on egd"), ("free", "free-clique classification"),
                      ("embed-txk2", "T x K2 contraction witness"), ("tw", "exact treewidth")]:
        graphs(sub.add_parser(name, parents=[common], help=hlp))
    s = sub.add_parser("extend", parents=[common], help="chordal extension")
    s.add_argument("kind", choices=["f3k4", "f3h3"])
    graphs(s)

    for name, hlp in [("complete", "clique-tree completion of a chordal partial matrix"),
                      ("force", "forcing certificate"), ("certify", "unique-completion lower bound"),
                      ("extreme", "extremality of a Gram factor"), ("reduce", "rank reduction in the fiber")]:
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("input", nargs="?", default=None)
        if name == "force":
            s.add_argument("--no-pin", action="store_true", help="plain forcing only")

    for name, hlp in [("solve", "elliptope SDP"), ("lowrank", "rank <= 2 optimum pipeline")]:
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("graph")
        s.add_argument("weights", nargs="?", default=None, help="weight JSON (default: uniform)")
        s.add_argument("--uniform", type=float, default=None, help="uniform weight (default -1)")

    s = sub.add_parser("ratio", parents=[common], help="sampled sdp / sdp_r ratio")
    s.add_argument("graph")
    s.add_argument("--rank", "-r", type=int, default=2)
    s.add_argument("--samples", type=int, default=20)
    return p


def _config(a) -> dict:
    cfg = {k: v for k, v in sorted(vars(a).items()) if k not in ("func",)}
    cfg["backend"] = BACKEND
    return cfg


def _guard(fn, *args) -> Outcome:
    try:
        return fn(*args)
    except (GraphError, OSError, KeyError, IndexError, json.JSONDecodeError) as exc:
        return Outcome({"error": type(exc).__name__, "message": str(exc)}, f"error: {exc}\n", BAD_INPUT)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        return Outcome({"error": type(exc).__name__, "message": str(exc)}, f"numerical: {exc}\n", ANOMALY)


def _run_graph_file(args) -> Outcome:
    a, path = args
    return _guard(lambda: GRAPH_COMMANDS[a.command](a, load_graph(_read(path))))


def _execute(argv: list[str] | None) -> tuple[int, str, str | None]:
    a = build_parser().parse_args(argv)
    if a.seed is None:
        a.seed = _default_seed()
    cfg = _config(a)
    if a.command in GRAPH_COMMANDS:
        files = a.graphs or ["-"]
        if len(files) > 1 and a.jobs > 1:
            with ProcessPoolExecutor(max_workers=a.jobs) as ex:
                outs = list(ex.map(_run_graph_file, [(a, f) for f in files]))
        else:
            outs = [_run_graph_file((a, f)) for f in files]
        if len(files) == 1:
            out = outs[0]
        else:
            out = Outcome(
                {"results": [{"file": f, "exit": o.code, **o.payload} for f, o in zip(files, outs)]},
                "".join(f"{f}: {o.text}" for f, o in zip(files, outs)),
                max(o.code for o in outs),
            )
    else:
        out = _guard(OTHER_COMMANDS[a.command], a)
    if a.format == "text":
        body = out.text
    else:
        body = json.dumps({"config": cfg, "exit": out.code, "result": out.payload}, sort_keys=True) + "\n"
    return out.code, body, a.output


def run(argv: list[str] | None = None) -> tuple[int, str]:
    """Exit code and the document that would be printed."""
    code, body, _ = _execute(argv)
    return code, body


def main(argv: list[str] | None = None) -> int:
    code, body, target = _execute(argv)
    if target:
        with open(target, "w") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)
    return code


if __name__ == "__main__":
    sys.exit(main())
