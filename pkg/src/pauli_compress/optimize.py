"""Gradients of the local risk and a Trotter-initialized conjugate-gradient minimizer.

Gradients run in reverse mode over a recorded propagation tape. The tape is
recorded with coefficient truncation off and exact zeros kept, so its
branch structure depends only on the weight and sine-count limits; it is
still re-recorded after large parameter moves and before convergence is
declared.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import line_search

from .circuit import ParametrizedCircuit
from .pauli import PauliString, PauliSum
from .propagation import PERMISSIVE, Direction, PropagationTape, TruncationConfig, align, propagate
from .risk import TargetCache, _map_ordered, risk, RiskValue

log = logging.getLogger(__name__)


class StaleTopologyError(RuntimeError):
    """The parameters moved too far from where the tape was recorded; re-record it."""


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 200
    gradient_tolerance: float = 1e-10
    cost_tolerance: float = 1e-12
    c1: float = 1e-4
    # 0.9 stalls conjugate gradients on the ill-conditioned risk landscape
    c2: float = 0.1
    restart_every: Optional[int] = None
    refresh_displacement: float = 0.1
    refresh_tolerance: float = 1e-9

    def __post_init__(self):
        for name in ("gradient_tolerance", "cost_tolerance", "refresh_displacement", "refresh_tolerance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("line-search constants need 0 < c1 < c2 < 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")


class FrozenCostTopology:
    """Recorded ansatz-side propagation for every cached seed.

    The cost is ``1/2 + sum_j tape_j(theta) . w_j`` with ``w_j`` the cached
    target coefficients on the tape's final strings, scaled by
    ``-multiplicity/(6n)`` (``-1/6`` for a one-site cache).
    """

    def __init__(self, cache: TargetCache, V: ParametrizedCircuit, params, trunc_V: TruncationConfig,
                 threads: int = 1, refresh_displacement: float = 0.1):
        self.params = V.check_params(params).copy()
        self.refresh_displacement = refresh_displacement
        self.threads = threads
        n = cache.n_qubits
        if cache.mode == "one_site":
            scales = [-1.0 / 6] * len(cache)
        else:
            scales = [-m / (6 * n) for m in cache.multiplicity]

        def record(j):
            site, axis = cache.keys[j]
            seed = PauliSum.single(PauliString.from_sites(n, {site: axis}))
            _, _, tape = propagate(V, self.params, seed, Direction.ADJOINT, trunc_V, record=True)
            return tape, scales[j] * align(cache.sums[j], tape.final_codes)

        recorded = _map_ordered(record, list(range(len(cache))), threads)
        self.tapes: list[PropagationTape] = [t for t, _ in recorded]
        self.weights: list[np.ndarray] = [w for _, w in recorded]

    @property
    def n_terms(self) -> int:
        return sum(t.n_terms for t in self.tapes)

    def displacement(self, params) -> float:
        return float(np.max(np.abs(np.asarray(params) - self.params), initial=0.0))

    def check_fresh(self, params) -> None:
        d = self.displacement(params)
        if d > self.refresh_displacement:
            raise StaleTopologyError(f"parameters moved {d:.3g} (limit {self.refresh_displacement}) since recording")

    def value_and_grad(self, params) -> tuple[float, np.ndarray]:
        params = np.asarray(params, dtype=float)

        def run(j):
            return self.tapes[j].value_and_grad(params, self.weights[j])

        parts = _map_ordered(run, list(range(len(self.tapes))), self.threads)
        value = 0.5 + sum(v for v, _ in parts)
        grad = np.zeros(len(params))
        for _, g in parts:
            grad += g
        return float(value), grad

    def value(self, params) -> float:
        params = np.asarray(params, dtype=float)
        total = 0.5
        for tape, w in zip(self.tapes, self.weights):
            total += float(np.dot(w, tape.forward(params)))
        return total


def gradient(cache: TargetCache, V: ParametrizedCircuit, params, frozen: FrozenCostTopology) -> np.ndarray:
    """Exact gradient of the frozen-topology cost at ``params``.

    Raises :class:`StaleTopologyError` when ``params`` are farther than the
    refresh distance from the recording point.
    """
    if V.n_qubits != cache.n_qubits:
        raise ValueError("ansatz and cache have different qubit counts")
    params = V.check_params(params)
    frozen.check_fresh(params)
    return frozen.value_and_grad(params)[1]


@dataclass
class CompressionProblem:
    """Target cache, ansatz and its truncation; ``theta_init`` defaults to the Trotter angles."""

    cache: TargetCache
    V: ParametrizedCircuit
    trunc_V: TruncationConfig = PERMISSIVE
    theta_init: Optional[np.ndarray] = None
    threads: int = 1

    def __post_init__(self):
        if self.V.n_qubits != self.cache.n_qubits:
            raise ValueError("ansatz and cache have different qubit counts")
        self.theta_init = self.V.check_params(self.theta_init).copy()

    def cost(self, params=None) -> RiskValue:
        """Risk under the live ansatz truncation (coefficient cutoff included), at ``theta_init`` by default."""
        params = self.theta_init if params is None else params
        return risk(self.cache, self.V, params, self.trunc_V, threads=self.threads)

    def freeze(self, params, refresh_displacement: float = 0.1) -> FrozenCostTopology:
        return FrozenCostTopology(self.cache, self.V, params, self.trunc_V, self.threads, refresh_displacement)


@dataclass
class HistoryEntry:
    iteration: int
    cost: float
    grad_norm: float
    best_cost: float
    wall_time: float


@dataclass
class OptimizationHistory:
    entries: list = field(default_factory=list)
    converged: bool = False
    message: str = ""
    refreshes: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def costs(self) -> np.ndarray:
        return np.array([e.cost for e in self.entries])

    @property
    def best_costs(self) -> np.ndarray:
        return np.array([e.best_cost for e in self.entries])


class NonFiniteCostError(FloatingPointError):
    pass


def _backtrack(fun, x, f0, g0, d, c1, alpha=1.0, shrink=0.5, max_steps=60):
    slope = float(np.dot(g0, d))
    for _ in range(max_steps):
        f = fun(x + alpha * d)
        if np.isfinite(f) and f <= f0 + c1 * alpha * slope:
            return alpha
        alpha *= shrink
    return None


def minimize(problem: CompressionProblem, config: OptimizerConfig = OptimizerConfig()):
    """Polak-Ribiere conjugate gradient from ``problem.theta_init``.

    Returns ``(params, history)``. ``history.converged`` is False when the
    iteration cap was hit; the parameters are then the best seen so far.
    """
    start = time.perf_counter()
    x = problem.theta_init.copy()
    frozen = problem.freeze(x, config.refresh_displacement)
    f, g = frozen.value_and_grad(x)
    history = OptimizationHistory()

    def check(fv, gv):
        if not np.isfinite(fv) or not np.all(np.isfinite(gv)):
            raise NonFiniteCostError(f"non-finite cost {fv} or gradient at iteration {len(history)}")

    check(f, g)
    best_x, best_f = x.copy(), f
    history.entries.append(HistoryEntry(0, f, float(np.linalg.norm(g)), f, time.perf_counter() - start))
    d = -g
    since_restart = 0

    # scipy's line search asks for f and f' separately; share one evaluation
    memo: dict = {}

    def evaluate(z):
        key = z.tobytes()
        if key not in memo:
            memo.clear()
            memo[key] = frozen.value_and_grad(z)
        return memo[key]

    def fun(z):
        return evaluate(z)[0]

    def jac(z):
        return evaluate(z)[1]

    it = 0
    while True:
        done = ""
        if float(np.linalg.norm(g)) < config.gradient_tolerance:
            done = "gradient norm below tolerance"
        elif it >= config.max_iterations:
            history.message = "iteration cap reached"
            break
        else:
            it += 1
            if float(np.dot(g, d)) >= 0:
                d, since_restart = -g, 0
            memo.clear()
            with warnings.catch_warnings():
                warnings.filterwarnings("ignore", message="The line search algorithm")
                alpha = line_search(fun, jac, x, d, gfk=g, old_fval=f, c1=config.c1, c2=config.c2, maxiter=30)[0]
            if alpha is None:
                d = -g
                gnorm = float(np.linalg.norm(g))
                alpha = _backtrack(fun, x, f, g, d, config.c1, alpha=min(1.0, 1.0 / max(gnorm, 1e-300)))
            if alpha is None:
                done = "line search found no decrease"
            else:
                x_new = x + alpha * d
                f_new, g_new = evaluate(x_new)
                check(f_new, g_new)
                if frozen.displacement(x_new) > config.refresh_displacement:
                    frozen = problem.freeze(x_new, config.refresh_displacement)
                    history.refreshes += 1
                    memo.clear()
                    f_new, g_new = frozen.value_and_grad(x_new)

                # Polak-Ribiere+, with optional periodic restarts
                beta = max(0.0, float(np.dot(g_new, g_new - g)) / max(float(np.dot(g, g)), 1e-300))
                since_restart += 1
                if config.restart_every and since_restart >= config.restart_every:
                    beta, since_restart = 0.0, 0
                d = -g_new + beta * d
                decrease = f - f_new
                x, f, g = x_new, f_new, g_new
                if f < best_f:
                    best_x, best_f = x.copy(), f
                history.entries.append(
                    HistoryEntry(it, f, float(np.linalg.norm(g)), best_f, time.perf_counter() - start)
                )
                if abs(decrease) <= config.cost_tolerance * max(abs(f), 1e-300):
                    done = "relative cost change below tolerance"
        if not done:
            continue

        # confirm against a tape recorded at the best point before stopping
        fresh = problem.freeze(best_x, config.refresh_displacement)
        history.refreshes += 1
        f_fresh, g_fresh = fresh.value_and_grad(best_x)
        if abs(f_fresh - best_f) <= config.refresh_tolerance * max(abs(best_f), 1e-300):
            history.converged, history.message = True, done
            break
        log.info("refreshed cost %.6e differs from %.6e; continuing", f_fresh, best_f)
        frozen, x, f, g = fresh, best_x.copy(), f_fresh, g_fresh
        best_f = f_fresh
        d, since_restart = -g, 0
        memo.clear()
        if it >= config.max_iterations:
            history.message = "iteration cap reached"
            break
    return best_x, history
