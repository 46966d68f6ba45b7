"""``budgetim`` command line: gen, select, spread, dag, eval-rmse, sweep."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .dag import build_dag, write_dag
from .diffusion import DEFAULT_ROUNDS, exact_spread, mc_activation_probs, mc_spread
from .experiments import WORKERS_ENV, load_spec, run_sweep, write_sweep_csv
from .graph import GraphFormatError, InfluenceGraph, ProbModel, assign_costs, assign_probabilities, load_graph, save_costs, save_edge_list
from .metrics import rmse
from .region import DEFAULT_THETA, MioaForest
from .selection import SelectionConfig, select, write_selection_csv
from .spread import LbpConfig, estimate_dag
from .synth import SynthConfig, generate

log = logging.getLogger("budgetim")


class CliError(Exception):
    pass


def _kv(text: str) -> dict[str, str]:
    out = {}
    for part in text.replace(",", " ").split():
        if "=" not in part:
            raise CliError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _cost_mode(text: str):
    if text in ("unit", "keep"):
        return text
    if text.startswith("uniform"):
        body = text[len("uniform") :].strip(":()")
        try:
            lo, hi = (float(x) for x in body.split(","))
        except ValueError:
            raise CliError(f"cost mode must be unit, keep or uniform:LO,HI; got {text!r}") from None
        return (lo, hi)
    raise CliError(f"cost mode must be unit, keep or uniform:LO,HI; got {text!r}")


def _load(args) -> InfluenceGraph:
    return load_graph(args.graph, args.costs, args.default_prob)


def _seeds(g: InfluenceGraph, text: str) -> list[int]:
    loc = {int(lab): i for i, lab in enumerate(g.labels)}
    out = []
    for tok in text.replace(",", " ").split():
        lab = int(tok)
        if lab not in loc:
            raise CliError(f"seed {lab} is not a node of the graph")
        out.append(loc[lab])
    if not out:
        raise CliError("no seeds given")
    return out


def _estimate(g: InfluenceGraph, seeds: list[int], method: str, args):
    """Per-node estimate on the full node set for ``mc``, ``exact`` or ``dagN-spbp|lbp|exact``."""
    if method == "mc":
        return mc_activation_probs(g, seeds, args.rounds, args.seed)
    if method == "exact":
        return exact_spread(g, seeds)
    try:
        model, est = method.split("-")
    except ValueError:
        raise CliError(f"unknown method {method!r}") from None
    trees = MioaForest(g, args.theta) if model == "dag2" else None
    dag = build_dag(g, seeds, model, args.theta, trees)
    return estimate_dag(dag, est, LbpConfig())


# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.synth and args.input:
        raise CliError("use either --synth or --input")
    if args.synth:
        kv = _kv(args.synth)
        try:
            cfg = SynthConfig(int(kv["n"]), int(float(kv["m"])), float(kv.get("beta", 1.0)), args.seed)
        except KeyError as exc:
            raise CliError(f"--synth needs {exc.args[0]}=...") from None
        g = generate(cfg)
        prob = args.prob or "ra"
    elif args.input:
        g = load_graph(args.input, args.input_costs, args.default_prob)
        prob = args.prob or "keep"
    else:
        raise CliError("give --synth n=.. m=.. [beta=..] or --input EDGES")
    if prob != "keep":
        g = assign_probabilities(g, ProbModel(prob), args.seed)
    cost_mode = _cost_mode(args.cost_mode)
    if cost_mode != "keep":
        g = assign_costs(g, cost_mode, args.seed)
    out = Path(args.out)
    cost_out = Path(args.cost_out) if args.cost_out else out.with_suffix(out.suffix + ".costs")
    save_edge_list(g, out, header=f"budgetim graph n={g.n} m={g.m} prob={prob} seed={args.seed}")
    save_costs(g, cost_out)
    s = g.summary()
    print(
        f"nodes={s['nodes']} edges={s['edges']} density={s['density']:.6g} "
        f"max_degree={s['max_degree']} mean_degree={s['mean_degree']:.4g} max_out_degree={s['max_out_degree']}"
    )
    print(f"wrote {out} and {cost_out}")
    return 0


def cmd_select(args) -> int:
    g = _load(args)
    if (args.budget is None) == (args.k is None):
        raise CliError("give exactly one of --budget and --k")
    try:
        cfg = SelectionConfig(
            budget=args.budget,
            k=args.k,
            theta=args.theta,
            estimator=args.estimator,
            dag_model=args.dag,
            lazy=not args.no_lazy,
            mc_rounds=args.mc_rounds,
            final_mc_rounds=args.final_rounds,
            rng_seed=args.seed,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None
    if cfg.budget is not None and not (g.cost <= cfg.budget).any():
        raise CliError(f"budget {cfg.budget} is below every node cost (min {g.cost.min():.4g})")
    t0 = time.perf_counter()
    res = select(g, args.algo, cfg)
    wall = time.perf_counter() - t0
    if args.out:
        write_selection_csv(res, args.out, g.labels)
    limit = f"k={cfg.k}" if cfg.unit_cost else f"b={cfg.budget:g}"
    seeds = " ".join(str(int(g.labels[s])) for s in res.seeds)
    print(
        f"algorithm={res.algorithm} {limit} seeds={len(res.seeds)} cost={res.total_cost:.6g} "
        f"sigma={res.sigma_est:.6g} branch={res.chosen_branch} time={res.runtime:.3f}s wall={wall:.3f}s"
    )
    print(f"seed_nodes: {seeds}")
    return 0


def cmd_spread(args) -> int:
    g = _load(args)
    seeds = _seeds(g, args.seeds)
    if args.method == "mc":
        s = mc_spread(g, seeds, args.rounds, args.seed)
        print(f"method=mc sigma={s.sigma_hat:.6g} stderr={s.stderr:.3g} rounds={s.rounds}")
        est = mc_activation_probs(g, seeds, args.rounds, args.seed)
    else:
        est = _estimate(g, seeds, args.method, args)
        extra = f" converged={est.converged} iterations={est.iterations}" if est.method == "lbp" else ""
        print(f"method={args.method} sigma={est.sigma:.6g}{extra}")
    if args.out:
        _write_probs(g, est, args.out)
    return 0


def _write_probs(g: InfluenceGraph, est, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# budgetim-probs v1 method={est.method} sigma={est.sigma!r}\n")
        for v, p in zip(est.nodes.tolist(), est.probs.tolist()):
            fh.write(f"{int(g.labels[v])} {p!r}\n")


def _read_probs(path) -> dict[int, float]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].split()
            if not line:
                continue
            if len(line) != 2:
                raise CliError(f"{path}:{lineno}: expected 'node prob'")
            out[int(line[0])] = float(line[1])
    return out


def cmd_dag(args) -> int:
    g = _load(args)
    seeds = _seeds(g, args.seeds)
    trees = MioaForest(g, args.theta) if args.model == "dag2" else None
    dag = build_dag(g, seeds, args.model, args.theta, trees)
    write_dag(dag, args.out, g.labels)
    print(f"model={args.model} nodes={dag.n_nodes} edges={dag.n_edges} wrote {args.out}")
    return 0


def cmd_eval_rmse(args) -> int:
    if args.truth or args.inferred:
        if not (args.truth and args.inferred):
            raise CliError("--truth and --inferred go together")
        t, i = _read_probs(args.truth), _read_probs(args.inferred)
        if set(t) != set(i):
            raise CliError("truth and inferred files cover different node sets")
        keys = sorted(t)
        value = rmse([t[k] for k in keys], [i[k] for k in keys])
    else:
        if not (args.graph and args.seeds):
            raise CliError("give --graph and --seeds, or --truth and --inferred")
        g = _load(args)
        seeds = _seeds(g, args.seeds)
        truth = mc_activation_probs(g, seeds, args.rounds, args.seed).as_dense(g.n)
        inferred = _estimate(g, seeds, args.method, args).as_dense(g.n)
        value = rmse(truth, inferred)
    print(f"rmse={value:.6g}")
    return 0


def cmd_sweep(args) -> int:
    spec = load_spec(args.spec)
    out = args.out or spec.output
    if not out:
        raise CliError("no output path: pass --out or set 'output' in the experiment file")
    rows = run_sweep(spec, args.workers)
    write_sweep_csv(rows, out)
    failed = sum(1 for r in rows if r["error"])
    print(f"cells={len(rows)} failed={failed} wrote {out}")
    return 0


# ---------------------------------------------------------------------------


def _graph_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--graph", required=required, help="edge list 'u v [p]'")
    p.add_argument("--costs", help="cost file 'u c' (default: every cost 1)")
    p.add_argument("--default-prob", type=float, help="probability for edges listed without one")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="budgetim", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate or re-weight a graph and write edge + cost files")
    p.add_argument("--synth", help="synthetic graph, e.g. 'n=5000 m=50000 beta=1.0'")
    p.add_argument("--input", help="existing edge list to re-weight")
    p.add_argument("--input-costs", help="cost file for --input")
    p.add_argument("--default-prob", type=float)
    p.add_argument("--prob", choices=["wc", "tv", "ra", "pl", "keep"])
    p.add_argument("--cost-mode", default="unit", help="unit, keep or uniform:LO,HI (default unit)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="edge list to write")
    p.add_argument("--cost-out", help="cost file to write (default OUT.costs)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("select", help="run one seed-selection algorithm")
    _graph_args(p)
    p.add_argument("--algo", required=True, choices=["naive", "improved", "optimized", "wdeg"])
    p.add_argument("--budget", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--estimator", default="spbp", choices=["spbp", "lbp", "mc", "exact"])
    p.add_argument("--dag", default="dag2", choices=["dag1", "dag2"])
    p.add_argument("--theta", type=float, default=DEFAULT_THETA)
    p.add_argument("--no-lazy", action="store_true")
    p.add_argument("--mc-rounds", type=int, default=1000, help="rounds per MC evaluation during selection")
    p.add_argument("--final-rounds", type=int, default=DEFAULT_ROUNDS, help="rounds for the reported spread")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="per-round CSV")
    p.set_defaults(func=cmd_select)

    methods = ["mc", "exact", "dag1-spbp", "dag2-spbp", "dag1-lbp", "dag2-lbp", "dag1-exact", "dag2-exact"]
    p = sub.add_parser("spread", help="estimate the spread of a seed set")
    _graph_args(p)
    p.add_argument("--seeds", required=True, help="comma or space separated node labels")
    p.add_argument("--method", default="mc", choices=methods)
    p.add_argument("--rounds", type=int, default=DEFAULT_ROUNDS)
    p.add_argument("--theta", type=float, default=DEFAULT_THETA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write per-node probabilities")
    p.set_defaults(func=cmd_spread)

    p = sub.add_parser("dag", help="write the DAG built for a seed set")
    _graph_args(p)
    p.add_argument("--seeds", required=True)
    p.add_argument("--model", default="dag2", choices=["dag1", "dag2"])
    p.add_argument("--theta", type=float, default=DEFAULT_THETA)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dag)

    p = sub.add_parser("eval-rmse", help="normalized RMSE of inferred activation probabilities")
    _graph_args(p, required=False)
    p.add_argument("--seeds")
    p.add_argument("--method", default="dag2-spbp", choices=methods[1:])
    p.add_argument("--rounds", type=int, default=DEFAULT_ROUNDS, help="MC rounds for the ground truth")
    p.add_argument("--theta", type=float, default=DEFAULT_THETA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth", help="probability file (node prob) for the ground truth")
    p.add_argument("--inferred", help="probability file for the inferred values")
    p.set_defaults(func=cmd_eval_rmse)

    p = sub.add_parser("sweep", help="run an experiment spec (JSON or YAML) into a CSV")
    p.add_argument("spec")
    p.add_argument("--out")
    p.add_argument("--workers", type=int, help=f"parallel cells (default ${WORKERS_ENV} or 1)")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, GraphFormatError, ValueError, FileNotFoundError) as exc:
        print(f"budgetim {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
