"""End-to-end experiment runs behind the command line.

Every run writes deterministic result files (identical bytes for identical
config and seed, independent of the thread count) plus ``timing.json``,
which holds the wall-clock times and is the only file that varies between
runs.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oracle
from .circuit import ParametrizedCircuit, random_circuit
from .config import ExperimentConfig, OracleCheckConfig
from .errors import ConfigurationError
from .optimize import CompressionProblem, OptimizationHistory, minimize
from .pauli import PauliString, PauliSum, overlap_with_zero
from .propagation import Direction, propagate
from .risk import build_target_cache, local_risk, weighted_full_risk
from .trotter import TrotterPlan, trotter_circuit

log = logging.getLogger(__name__)

ORACLE_MAX_QUBITS = 12


def _finite(x):
    """JSON-safe float: non-finite values become ``None``."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def time_label(t: float) -> str:
    return f"{t:.6g}"


@dataclass
class CompressResult:
    t: float
    record: dict
    history: OptimizationHistory
    circuit: ParametrizedCircuit
    params: np.ndarray
    stats: dict
    problem: CompressionProblem = field(repr=False)
    timing: dict = field(default_factory=dict)


def build_circuits(cfg: ExperimentConfig, t: float):
    """Target and ansatz circuits at time ``t``."""
    spec = cfg.model.spec()
    topo = cfg.topology.build()
    U = trotter_circuit(spec, topo, cfg.trotter.target_plan(t), cfg.trotter.sharing, target=True)
    V = trotter_circuit(spec, topo, cfg.trotter.ansatz_plan(t), cfg.trotter.sharing, target=False)
    return U, V


def compress_one(cfg: ExperimentConfig, t: float, threads: int = 1, truncation=None) -> CompressResult:
    """Cache the target at time ``t``, minimize the risk from the Trotter angles and evaluate oracles."""
    trunc = truncation or cfg.truncation
    U, V = build_circuits(cfg, t)
    start = time.perf_counter()
    cache = build_target_cache(
        U, trunc.target.build(), cfg.cache.seeds, max_terms=cfg.cache.max_terms, threads=threads
    )
    cache_time = time.perf_counter() - start
    problem = CompressionProblem(cache, V, trunc.ansatz.build(), threads=threads)
    initial = problem.cost()
    params, history = minimize(problem, cfg.optimizer)
    final = problem.cost(params)
    record = {
        "t": t,
        "n_qubits": U.n_qubits,
        "n_params": V.n_params,
        "cost_trotter": initial.value,
        "cost_optimized": final.value,
        "improvement": _finite(initial.value / final.value) if final.value > 0 else None,
        "iterations": len(history) - 1,
        "converged": history.converged,
        "message": history.message,
    }
    if cfg.oracle.hst:
        record["hst_trotter"] = oracle.hst_cost(U, V, None, V.reference_params)
        record["hst_optimized"] = oracle.hst_cost(U, V, None, params)
    if cfg.oracle.exact_local_risk:
        record["exact_risk_trotter"] = oracle.exact_local_risk(U, V, None, V.reference_params)
        record["exact_risk_optimized"] = oracle.exact_local_risk(U, V, None, params)
    stats = {
        "t": t,
        "cache_seeds": len(cache),
        "cache_terms": int(sum(len(s) for s in cache.sums)),
        "cache_stats": cache.stats.to_dict(),
        "ansatz_stats_trotter": initial.stats.to_dict(),
        "ansatz_stats_optimized": final.stats.to_dict(),
        "tape_refreshes": history.refreshes,
    }
    timing = {"t": t, "cache_seconds": cache_time, "total_seconds": time.perf_counter() - start,
              "history_seconds": [e.wall_time for e in history.entries]}
    return CompressResult(t, record, history, V, params, stats, problem, timing)


# --- file output -----------------------------------------------------------------


class RunWriter:
    """Writes one run directory; every file echoes the config hash, JSON files the config too."""

    def __init__(self, out: Path, cfg: ExperimentConfig, command: str):
        self.out = Path(out)
        self.cfg = cfg
        self.command = command
        self.out.mkdir(parents=True, exist_ok=True)
        self.timing: dict = {"command": command}

    def header(self) -> dict:
        return {"command": self.command, "config_hash": self.cfg.hash(), "config": self.cfg.to_dict()}

    def json(self, name: str, payload: dict) -> None:
        data = {**self.header(), **payload}
        text = json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)

    def csv(self, name: str, rows: list[dict], columns: list[str]) -> None:
        buf = io.StringIO()
        buf.write(f"# config_hash: {self.cfg.hash()}\n")
        writer = csv.DictWriter(buf, fieldnames=columns + ["config_hash"], lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({**{c: _csv_value(row.get(c)) for c in columns}, "config_hash": self.cfg.hash()})
        (self.out / name).write_text(buf.getvalue())

    def columns(self, name: str, x_label: str, y_label: str, pairs) -> None:
        """Plot-ready two-column file ``plot/<name>.dat``; ``None`` values are skipped."""
        lines = [f"# config_hash: {self.cfg.hash()}", f"# {x_label} {y_label}"]
        lines += [f"{_csv_value(x)} {_csv_value(y)}" for x, y in pairs if y is not None]
        path = self.out / "plot" / f"{name}.dat"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")

    def finish(self) -> None:
        (self.out / "timing.json").write_text(json.dumps(self.timing, indent=2, sort_keys=True) + "\n")


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


RESULT_COLUMNS = [
    "t", "n_qubits", "n_params", "cost_trotter", "cost_optimized", "improvement", "iterations", "converged",
    "hst_trotter", "hst_optimized", "exact_risk_trotter", "exact_risk_optimized",
]


def _check_oracle_size(cfg: ExperimentConfig) -> None:
    n = cfg.topology.build().n_sites
    if (cfg.oracle.hst or cfg.oracle.exact_local_risk) and n > ORACLE_MAX_QUBITS:
        raise ConfigurationError(f"config.oracle: dense oracles need n <= {ORACLE_MAX_QUBITS}, lattice has {n}")


def run_compress(cfg: ExperimentConfig, out, threads: int = 1) -> list[dict]:
    """Compress at every time of the grid; write results, circuits, stats and histories."""
    cfg.require("model", "topology", "trotter")
    _check_oracle_size(cfg)
    writer = RunWriter(out, cfg, "compress")
    records, stats, history_rows, timing = [], [], [], []
    for t in cfg.trotter.t_grid:
        res = compress_one(cfg, t, threads)
        records.append({k: _finite(v) if isinstance(v, float) else v for k, v in res.record.items()})
        stats.append(res.stats)
        timing.append(res.timing)
        for e in res.history.entries:
            history_rows.append({"t": t, "iteration": e.iteration, "cost": e.cost, "grad_norm": e.grad_norm,
                                 "best_cost": e.best_cost})
        writer.json(f"circuits/t_{time_label(t)}.json", {"t": t, "circuit": res.circuit.to_json_dict(res.params)})
        log.info("t=%s: cost %.3e -> %.3e", time_label(t), res.record["cost_trotter"], res.record["cost_optimized"])
    writer.json("results.json", {"records": records})
    writer.csv("results.csv", records, RESULT_COLUMNS)
    writer.json("stats.json", {"stats": stats})
    writer.csv("history.csv", history_rows, ["t", "iteration", "cost", "grad_norm", "best_cost"])
    for key in ("cost_trotter", "cost_optimized", "improvement", "hst_trotter", "hst_optimized"):
        if key in records[0]:
            writer.columns(key, "t", key, [(r["t"], r[key]) for r in records])
    writer.timing["runs"] = timing
    writer.finish()
    return records


def _with_weight(trunc, w: int):
    return dataclasses.replace(
        trunc,
        target=dataclasses.replace(trunc.target, max_weight=w),
        ansatz=dataclasses.replace(trunc.ansatz, max_weight=w),
    )


def run_convergence_sweep(cfg: ExperimentConfig, out, threads: int = 1) -> list[dict]:
    """``e_W`` and ``e_theta`` of each weight against the largest one.

    Both risks in ``e_W`` are evaluated under the reference-weight truncation,
    so the table compares the quality of the optimized parameters.
    """
    cfg.require("model", "topology", "trotter", "sweep")
    weights = list(cfg.sweep.weights)
    writer = RunWriter(out, cfg, "sweep-weights")
    rows, timing = [], []
    for t in cfg.trotter.t_grid:
        runs = {w: compress_one(cfg, t, threads, _with_weight(cfg.truncation, w)) for w in weights}
        ref = runs[weights[-1]]
        r_ref = ref.problem.cost(ref.params).value
        for w in weights:
            r_w = ref.problem.cost(runs[w].params).value
            rows.append({
                "t": t,
                "weight": w,
                "cost_optimized": runs[w].record["cost_optimized"],
                "risk_at_reference_weight": r_w,
                "e_W": abs((r_w - r_ref) / r_ref) if r_ref != 0 else 0.0,
                "e_theta": float(np.linalg.norm(runs[w].params - ref.params)),
                "iterations": runs[w].record["iterations"],
            })
            timing.append(runs[w].timing | {"weight": w})
    writer.json("results.json", {"records": rows, "reference_weight": weights[-1]})
    for t in cfg.trotter.t_grid:
        for key in ("e_W", "e_theta"):
            writer.columns(f"{key}_t_{time_label(t)}", "weight", key, [(r["weight"], r[key]) for r in rows if r["t"] == t])
    writer.csv("results.csv", rows, ["t", "weight", "cost_optimized", "risk_at_reference_weight", "e_W", "e_theta",
                                     "iterations"])
    writer.timing["runs"] = timing
    writer.finish()
    return rows


def run_hcb_demo(cfg: ExperimentConfig, out, threads: int = 1) -> list[dict]:
    """Fidelities and occupations of repeated compressed and Trotter circuits against a fine Trotter reference."""
    cfg.require("model", "topology", "trotter", "hcb_demo")
    if cfg.model.name != "hcb":
        raise ConfigurationError("config.model.name: hcb-demo needs the hcb model")
    if len(cfg.trotter.t_grid) != 1:
        raise ConfigurationError("config.trotter.t_grid: hcb-demo compresses a single time")
    topo = cfg.topology.build()
    n = topo.n_sites
    if n > oracle.MAX_STATE_QUBITS:
        raise ConfigurationError(f"config.topology: hcb-demo simulates states, n={n} exceeds {oracle.MAX_STATE_QUBITS}")
    demo = cfg.hcb_demo
    if any(not 0 <= s < n for s in demo.initial_sites):
        raise ConfigurationError(f"config.hcb_demo.initial_sites: sites must lie in [0, {n})")
    _check_oracle_size(cfg)
    t = cfg.trotter.t_grid[0]
    writer = RunWriter(out, cfg, "hcb-demo")
    res = compress_one(cfg, t, threads)
    spec = cfg.model.spec()
    layers = max(1, math.ceil(t / demo.reference_step - 1e-9))
    psi0 = oracle.basis_state(n, demo.initial_sites)
    rows, occ_rows = [], []
    for k in demo.repetitions:
        if k == 0:
            ref = comp = trot = psi0
        else:
            ref_circ = trotter_circuit(spec, topo, TrotterPlan(t, layers, t_total=k * t), target=True)
            ref = oracle.apply_circuit(psi0, ref_circ)
            Vk = res.circuit.repeated(k)
            comp = oracle.apply_circuit(psi0, Vk, res.params)
            trot = oracle.apply_circuit(psi0, Vk)
        f_c, n_ref, n_c = oracle.fidelity_and_occupations(ref, comp)
        f_t, _, n_t = oracle.fidelity_and_occupations(ref, trot)
        rows.append({
            "k": k,
            "T": k * t,
            "infidelity_compressed": 1.0 - f_c,
            "infidelity_trotter": 1.0 - f_t,
            "gap": _finite((1.0 - f_t) / (1.0 - f_c)) if f_c < 1.0 else None,
            "occupation_reference": float(n_ref.sum()),
            "occupation_compressed": float(n_c.sum()),
            "occupation_trotter": float(n_t.sum()),
            "occupation_error_compressed": float(np.mean(np.abs(n_c - n_ref))),
            "occupation_error_trotter": float(np.mean(np.abs(n_t - n_ref))),
        })
        for s in range(n):
            x, y = topo.coords[s]
            occ_rows.append({"k": k, "site": s, "x": x, "y": y, "n_reference": float(n_ref[s]),
                             "n_compressed": float(n_c[s]), "n_trotter": float(n_t[s])})
    writer.json("results.json", {"compression": res.record, "records": rows, "reference_layers": layers})
    writer.csv("results.csv", rows, list(rows[0]))
    for key in ("infidelity_compressed", "infidelity_trotter", "occupation_error_compressed", "occupation_error_trotter"):
        writer.columns(key, "T", key, [(r["T"], r[key]) for r in rows])
    writer.csv("occupations.csv", occ_rows, ["k", "site", "x", "y", "n_reference", "n_compressed", "n_trotter"])
    writer.json(f"circuits/t_{time_label(t)}.json", {"t": t, "circuit": res.circuit.to_json_dict(res.params)})
    writer.json("stats.json", {"stats": [res.stats]})
    writer.csv("history.csv", [{"iteration": e.iteration, "cost": e.cost, "grad_norm": e.grad_norm,
                                "best_cost": e.best_cost} for e in res.history.entries],
               ["iteration", "cost", "grad_norm", "best_cost"])
    writer.timing["runs"] = [res.timing]
    writer.finish()
    return rows


def run_oracle_check(cfg: ExperimentConfig, out, threads: int = 1) -> dict:
    """Propagation exactness, unitarity, closed-form risk and sampling checks on random circuits."""
    chk = cfg.oracle_check or OracleCheckConfig()
    writer = RunWriter(out, cfg, "oracle-check")
    rng = oracle.make_rng(cfg.seed)
    start = time.perf_counter()

    n = chk.n_qubits
    exact_err, norm_err = 0.0, 0.0
    for _ in range(chk.n_circuits):
        circ = random_circuit(n, chk.n_gates, rng)
        for code in range(4**n):
            seed = PauliSum.single(PauliString(n, code))
            out_sum, _ = propagate(circ, None, seed, Direction.HEISENBERG)
            pp = overlap_with_zero(out_sum)
            sv = oracle.heisenberg_expectation(circ, None, seed)
            exact_err = max(exact_err, abs(pp - sv))
            norm_err = max(norm_err, abs(out_sum.norm_squared() - 1.0))

    seconds = {"exactness": time.perf_counter() - start}
    risk_err = 0.0
    for _ in range(chk.risk_pairs):
        U = random_circuit(chk.risk_qubits, chk.n_gates, rng)
        V = random_circuit(chk.risk_qubits, chk.n_gates, rng)
        value = local_risk(build_target_cache(U, threads=threads), V, threads=threads).value
        risk_err = max(risk_err, abs(value - oracle.exact_local_risk(U, V)))

    seconds["local_risk"] = time.perf_counter() - start - seconds["exactness"]
    haar = []
    n_haar = 2
    for i in range(chk.haar_instances):
        U, V = random_circuit(n_haar, chk.n_gates, rng), random_circuit(n_haar, chk.n_gates, rng)
        formula = weighted_full_risk(U, V)
        sample_seed = int(rng.integers(2**63))
        mean, err = oracle.sampled_product_risk(U, V, M=chk.haar_samples, seed=sample_seed)
        r_loc = local_risk(build_target_cache(U), V).value
        haar.append({
            "instance": i,
            "weighted_full_risk": formula,
            "sampled_mean": mean,
            "sampled_stderr": err,
            "z_score": abs(mean - formula) / err if err > 0 else 0.0,
            "local_risk": r_loc,
            "lower_bound_ok": 0.5 * r_loc <= mean + 4 * err,
            "upper_bound_ok": mean - 4 * err <= 2 * n_haar * r_loc,
            "sample_seed": sample_seed,
        })

    summary = {
        "method": "oracle",
        "exactness_max_error": exact_err,
        "unitarity_max_error": norm_err,
        "local_risk_max_error": risk_err,
        "haar": haar,
    }
    writer.json("results.json", summary)
    writer.csv("results.csv", haar, [k for k in haar[0]] if haar else [])
    seconds["haar"] = time.perf_counter() - start - seconds["exactness"] - seconds["local_risk"]
    writer.timing["seconds"] = seconds
    writer.finish()
    return summary


def export_circuits(cfg: ExperimentConfig, out, which: str = "both") -> list[Path]:
    """Write the target and/or Trotter-initialized ansatz circuit of every grid time."""
    cfg.require("model", "topology", "trotter")
    if which not in ("target", "ansatz", "both"):
        raise ConfigurationError(f"unknown circuit kind {which!r}")
    writer = RunWriter(out, cfg, "export-circuit")
    paths = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for t in cfg.trotter.t_grid:
            U, V = build_circuits(cfg, t)
            for kind, circ in (("target", U), ("ansatz", V)):
                if which in (kind, "both"):
                    name = f"circuits/{kind}_t_{time_label(t)}.json"
                    writer.json(name, {"t": t, "kind": kind, "circuit": circ.to_json_dict()})
                    paths.append(writer.out / name)
    writer.finish()
    return paths


__all__ = [
    "CompressResult",
    "compress_one",
    "export_circuits",
    "run_compress",
    "run_convergence_sweep",
    "run_hcb_demo",
    "run_oracle_check",
]
