"""Parameter sweeps over algorithms, budgets and graph variants, written as CSV."""

from __future__ import annotations

import csv
import json
import logging
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .graph import InfluenceGraph, ProbModel, assign_costs, assign_probabilities, load_graph
from .region import DEFAULT_THETA
from .selection import SelectionConfig, SelectionResult, improved_greedy, naive_greedy, optimized_select, weighted_degree
from .synth import SynthConfig, generate

log = logging.getLogger(__name__)

WORKERS_ENV = "BUDGETIM_WORKERS"
SWEEP_HEADER = "# budgetim-sweep v1"
SWEEP_COLUMNS = (
    "variant",
    "n",
    "m",
    "algorithm",
    "mode",
    "param",
    "n_seeds",
    "total_cost",
    "sigma",
    "runtime",
    "evaluations",
    "reevals",
    "branch",
    "spread_ratio",
    "error",
)
ALGORITHMS = (
    "dag1-spbp",
    "dag2-spbp",
    "dag1-lbp",
    "dag2-lbp",
    "greedy-mc",
    "improved-mc",
    "wdeg",
)


@dataclass(frozen=True)
class ExperimentSpec:
    graph: dict[str, Any]
    algorithms: tuple[str, ...]
    k: tuple[int, ...] = ()
    budget: tuple[float, ...] = ()
    variants: tuple[dict[str, Any], ...] = ({},)
    prob: dict[str, Any] = field(default_factory=lambda: {"kind": "ra"})
    costs: str | tuple[float, float] = "unit"
    reference: str | None = None
    theta: float = DEFAULT_THETA
    mc_rounds: int = 1000
    final_mc_rounds: int = 10_000
    rng_seed: int = 0
    output: str | None = None

    def __post_init__(self) -> None:
        if bool(self.k) == bool(self.budget):
            raise ValueError("give exactly one nonempty sweep: k or budget")
        if not self.algorithms:
            raise ValueError("algorithms must be nonempty")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}; choose from {ALGORITHMS}")
        if self.reference is not None and self.reference not in self.algorithms:
            raise ValueError(f"reference {self.reference!r} is not among the algorithms")
        if not self.variants:
            raise ValueError("variants must be nonempty")
        if ("file" in self.graph) == ("synth" in self.graph):
            raise ValueError("graph needs exactly one of 'file' or 'synth'")
        if "file" in self.graph:
            for key in ("file", "costs"):
                if key in self.graph and not Path(self.graph[key]).is_file():
                    raise ValueError(f"graph {key} {self.graph[key]!r} does not exist")
        if self.prob.get("kind") != "keep":
            ProbModel(**_prob_kwargs(self.prob))
        if isinstance(self.costs, str) and self.costs not in ("unit", "keep"):
            raise ValueError(f"costs must be 'unit', 'keep' or [lo, hi], got {self.costs!r}")

    @property
    def mode(self) -> str:
        return "k" if self.k else "budget"

    @property
    def params(self) -> tuple[float, ...]:
        return self.k if self.k else self.budget

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ExperimentSpec":
        raw = dict(raw)
        prob = raw.pop("prob", {"kind": "ra"})
        if isinstance(prob, str):
            prob = {"kind": prob}
        costs = raw.pop("costs", "unit")
        if not isinstance(costs, str):
            costs = tuple(float(x) for x in costs)
        unknown = set(raw) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown spec keys: {sorted(unknown)}")
        for key in ("algorithms", "k", "budget", "variants"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(prob=prob, costs=costs, **raw)


def load_spec(path: str | Path) -> ExperimentSpec:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    raw = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a mapping at top level")
    return ExperimentSpec.from_dict(raw)


def _prob_kwargs(prob: dict[str, Any]) -> dict[str, Any]:
    out = dict(prob)
    for key in ("ra_range", "tv_values", "pl_range"):
        if key in out:
            out[key] = tuple(out[key])
    return out


def _cell_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint32)[0])


@lru_cache(maxsize=4)
def _build_graph(graph_json: str, variant_json: str, prob_json: str, costs_json: str, seed: int) -> InfluenceGraph:
    graph = json.loads(graph_json)
    variant = json.loads(variant_json)
    prob = json.loads(prob_json)
    costs = json.loads(costs_json)
    if "synth" in graph:
        sc = {**graph["synth"], **{k: v for k, v in variant.items() if k in ("n", "m", "beta")}}
        g = generate(SynthConfig(int(sc["n"]), int(sc["m"]), float(sc.get("beta", 1.0)), _cell_seed(seed, 1)))
    else:
        g = load_graph(graph["file"], graph.get("costs"), graph.get("default_prob"))
    prob = {**prob, **variant.get("prob", {})}
    if prob.get("kind", "keep") != "keep":
        g = assign_probabilities(g, ProbModel(**_prob_kwargs(prob)), _cell_seed(seed, 2))
    if costs != "keep":
        g = assign_costs(g, costs if isinstance(costs, str) else tuple(costs), _cell_seed(seed, 3))
    return g


def _variant_label(i: int, variant: dict[str, Any]) -> str:
    if not variant:
        return f"v{i}"
    return ";".join(f"{k}={variant[k]}" for k in sorted(variant) if k != "prob") or f"v{i}"


def _run_algorithm(g: InfluenceGraph, name: str, cfg: SelectionConfig) -> SelectionResult:
    if name == "wdeg":
        return weighted_degree(g, cfg)
    if name == "greedy-mc":
        return naive_greedy(g, replace(cfg, estimator="mc"))
    if name == "improved-mc":
        return improved_greedy(g, replace(cfg, estimator="mc"))
    dag_model, estimator = name.split("-")
    return optimized_select(g, replace(cfg, dag_model=dag_model, estimator=estimator))


def _run_cell(args: tuple) -> dict[str, Any]:
    spec_json, vi, ai, pi = args
    spec = ExperimentSpec.from_dict(json.loads(spec_json))
    variant = spec.variants[vi]
    algo = spec.algorithms[ai]
    param = spec.params[pi]
    row: dict[str, Any] = {c: "" for c in SWEEP_COLUMNS}
    row.update(variant=_variant_label(vi, variant), algorithm=algo, mode=spec.mode, param=param)
    try:
        vseed = _cell_seed(spec.rng_seed, vi)
        g = _build_graph(
            json.dumps(spec.graph, sort_keys=True),
            json.dumps(variant, sort_keys=True),
            json.dumps(spec.prob, sort_keys=True),
            json.dumps(spec.costs),
            vseed,
        )
        row.update(n=g.n, m=g.m)
        mode = {"k": int(param)} if spec.mode == "k" else {"budget": float(param)}
        cfg = SelectionConfig(
            **mode,
            theta=spec.theta,
            mc_rounds=spec.mc_rounds,
            final_mc_rounds=spec.final_mc_rounds,
            # shared by every algorithm in a (variant, param) cell so final spreads are scored on the same samples
            rng_seed=_cell_seed(spec.rng_seed, vi, pi),
        )
        t0 = time.perf_counter()
        res = _run_algorithm(g, algo, cfg)
        row.update(
            n_seeds=len(res.seeds),
            total_cost=res.total_cost,
            sigma=res.sigma_est,
            runtime=round(res.runtime if res.runtime else time.perf_counter() - t0, 6),
            evaluations=res.evaluations,
            reevals=res.reevals,
            branch=res.chosen_branch,
        )
    except Exception as exc:  # recorded in-row; the sweep carries on
        log.debug("cell failed: %s", traceback.format_exc())
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _spec_dict(spec: ExperimentSpec) -> dict[str, Any]:
    d = dict(spec.__dict__)
    for key in ("algorithms", "k", "budget", "variants"):
        d[key] = list(d[key])
    if not isinstance(d["costs"], str):
        d["costs"] = list(d["costs"])
    return d


def run_sweep(spec: ExperimentSpec, workers: int | None = None) -> list[dict[str, Any]]:
    """One row per (variant, algorithm, parameter); row order does not depend on ``workers``."""
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    spec_json = json.dumps(_spec_dict(spec), sort_keys=True)
    cells = [
        (spec_json, vi, ai, pi)
        for vi in range(len(spec.variants))
        for ai in range(len(spec.algorithms))
        for pi in range(len(spec.params))
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(c) for c in cells]
    if spec.reference is not None:
        ref = {
            (r["variant"], r["param"]): r["sigma"]
            for r in rows
            if r["algorithm"] == spec.reference and not r["error"]
        }
        for r in rows:
            base = ref.get((r["variant"], r["param"]))
            if base and not r["error"]:
                r["spread_ratio"] = r["sigma"] / base
    return rows


def write_sweep_csv(rows: list[dict[str, Any]], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(SWEEP_HEADER + "\n")
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
