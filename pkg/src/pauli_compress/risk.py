"""Local risk of a compressed circuit against a target, by meet-in-the-middle propagation.

For target ``U`` and ansatz ``V`` the Haar-averaged local risk is

    R = 1/2 - 1/(6n) * sum_{P weight 1} <<U P U^dag | V P V^dag>>

Each weight-1 seed is pushed forward through ``U`` once (the cached side)
and through ``V`` at every evaluation; the risk only needs their overlaps.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .circuit import ParametrizedCircuit
from .errors import ConfigurationError, ResourceError
from .pauli import PauliString, PauliSum
from .propagation import (
    PERMISSIVE,
    Direction,
    PropagationStats,
    TruncationConfig,
    inner_product,
    propagate,
)

DEFAULT_MAX_TERMS = 20_000_000
SEED_MODES = ("all_sites", "orbits", "one_site")


def site_orbits(n: int, generators) -> list[list[int]]:
    """Orbits of the sites under the group generated by the given permutations."""
    seen = [False] * n
    orbits = []
    for s in range(n):
        if seen[s]:
            continue
        orbit, stack = [], [s]
        seen[s] = True
        while stack:
            a = stack.pop()
            orbit.append(a)
            for perm in generators:
                b = perm[a]
                if not seen[b]:
                    seen[b] = True
                    stack.append(b)
        orbits.append(sorted(orbit))
    return orbits


def weight_one_seeds(n: int, sites=None) -> list[tuple[tuple[int, str], PauliString]]:
    """``((site, axis), P)`` for the weight-1 strings on ``sites``, site-major."""
    sites = range(n) if sites is None else sites
    return [((s, a), PauliString.from_sites(n, {s: a})) for s in sites for a in "XYZ"]


def _map_ordered(fn, items, threads: int):
    """``list(map(fn, items))``, optionally on a thread pool; order is preserved."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class TargetCache:
    """Forward-propagated weight-1 seeds of a fixed target circuit.

    ``multiplicity[j]`` is the number of sites the seed stands for: 1 for
    an all-site cache, the orbit size when symmetric sites share a seed.
    """

    n_qubits: int
    mode: str
    keys: tuple
    sums: tuple
    multiplicity: tuple
    stats: PropagationStats
    trunc: TruncationConfig
    symmetry: tuple = ()

    def __len__(self) -> int:
        return len(self.sums)

    @property
    def translation_invariant(self) -> bool:
        return self.mode == "one_site"

    def get(self, site: int, axis: str) -> PauliSum:
        return self.sums[self.keys.index((site, axis))]


def build_target_cache(
    U: ParametrizedCircuit,
    trunc_U: TruncationConfig = PERMISSIVE,
    seeds: str = "all_sites",
    params=None,
    *,
    max_terms: int = DEFAULT_MAX_TERMS,
    threads: int = 1,
) -> TargetCache:
    """Propagate weight-1 seeds forward through ``U``.

    ``seeds`` is ``"all_sites"`` (3n seeds), ``"orbits"`` (one site per
    orbit of ``U.translations``) or ``"one_site"`` (site 0 only, which
    requires the translations to reach every site).
    """
    if seeds not in SEED_MODES:
        raise ConfigurationError(f"unknown seed mode {seeds!r}; expected one of {SEED_MODES}")
    n = U.n_qubits
    symmetry = tuple(U.translations) if seeds != "all_sites" else ()
    orbits = site_orbits(n, symmetry)
    if seeds == "one_site" and len(orbits) != 1:
        raise ConfigurationError("a one-site cache needs a target invariant under a transitive translation group")
    reps = [o[0] for o in orbits]
    mult = [len(o) for o in orbits for _ in "XYZ"]
    entries = weight_one_seeds(n, reps)
    params = U.check_params(params)

    def run(entry):
        key, p = entry
        try:
            return propagate(U, params, PauliSum.single(p), Direction.ADJOINT, trunc_U, max_terms=max_terms)
        except ResourceError as exc:
            raise ResourceError(f"target cache seed {p.label} (site {key[0]}, {key[1]}): {exc}", exc.stats) from None

    results = _map_ordered(run, entries, threads)
    stats = PropagationStats()
    for _, st in results:
        stats.absorb(st)
    return TargetCache(
        n,
        seeds,
        tuple(k for k, _ in entries),
        tuple(s for s, _ in results),
        tuple(mult),
        stats,
        trunc_U,
        symmetry,
    )


@dataclass
class RiskValue:
    """Risk value with one overlap ``<<U P U^dag | V P V^dag>>`` per seed."""

    value: float
    contributions: np.ndarray
    stats: PropagationStats = field(default_factory=PropagationStats)
    method: str = "pauli_propagation"

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "value": float(self.value),
            "contributions": [float(c) for c in self.contributions],
            "stats": self.stats.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def _seed_overlaps(cache: TargetCache, V, params, trunc_V, threads, max_terms):
    if V.n_qubits != cache.n_qubits:
        raise ValueError(f"ansatz has {V.n_qubits} qubits, cache has {cache.n_qubits}")
    params = V.check_params(params)
    n = cache.n_qubits

    def run(j):
        site, axis = cache.keys[j]
        seed = PauliSum.single(PauliString.from_sites(n, {site: axis}))
        out, st = propagate(V, params, seed, Direction.ADJOINT, trunc_V, max_terms=max_terms)
        return inner_product(out, cache.sums[j]), st

    results = _map_ordered(run, list(range(len(cache))), threads)
    stats = PropagationStats()
    for _, st in results:
        stats.absorb(st)
    return np.array([c for c, _ in results]), stats


def _check_symmetric(cache: TargetCache, V: ParametrizedCircuit) -> None:
    missing = set(cache.symmetry) - set(V.translations)
    if missing:
        raise ConfigurationError("the ansatz lacks translation symmetries the target cache relies on")


def local_risk(
    cache: TargetCache,
    V: ParametrizedCircuit,
    params=None,
    trunc_V: TruncationConfig = PERMISSIVE,
    *,
    threads: int = 1,
    max_terms: Optional[int] = None,
) -> RiskValue:
    """``1/2 - 1/(6n) sum_j <<U P_j U^dag | V P_j V^dag>>`` over the ``3n`` weight-1 strings.

    With an orbit cache each representative seed counts once per site of its orbit.
    """
    if cache.mode == "one_site":
        raise ConfigurationError("local_risk needs an all-site or orbit cache; use local_risk_ti")
    _check_symmetric(cache, V)
    contrib, stats = _seed_overlaps(cache, V, params, trunc_V, threads, max_terms)
    value = 0.5 - float(np.dot(cache.multiplicity, contrib)) / (6 * cache.n_qubits)
    return RiskValue(value, contrib, stats)


def local_risk_ti(
    cache: TargetCache,
    V: ParametrizedCircuit,
    params=None,
    trunc_V: TruncationConfig = PERMISSIVE,
    *,
    threads: int = 1,
    max_terms: Optional[int] = None,
) -> RiskValue:
    """Translation-invariant risk ``1/2 - 1/6 sum_{a in XYZ} <<U a_0 U^dag | V a_0 V^dag>>``."""
    if cache.mode != "one_site":
        raise ConfigurationError("local_risk_ti needs a one-site cache of a translation-invariant target")
    if not V.translations:
        raise ConfigurationError("local_risk_ti needs a translation-invariant ansatz")
    _check_symmetric(cache, V)
    contrib, stats = _seed_overlaps(cache, V, params, trunc_V, threads, max_terms)
    return RiskValue(0.5 - float(np.sum(contrib)) / 6, contrib, stats)


def risk(cache: TargetCache, V, params=None, trunc_V=PERMISSIVE, **kw) -> RiskValue:
    """Dispatch to :func:`local_risk_ti` or :func:`local_risk` by cache kind."""
    if cache.mode == "one_site":
        return local_risk_ti(cache, V, params, trunc_V, **kw)
    return local_risk(cache, V, params, trunc_V, **kw)


def weighted_full_risk(U: ParametrizedCircuit, V: ParametrizedCircuit, params_U=None, params_V=None) -> float:
    """Product-Haar risk ``1 - 2^-n sum_P 3^-|P| <<U P U^dag | V P V^dag>>`` over all ``4^n`` strings.

    Each diagonal element comes from exact propagation of one string through
    both circuits, so the cost is ``4^n`` pairs of propagations.
    """
    n = U.n_qubits
    if V.n_qubits != n:
        raise ValueError("circuits have different qubit counts")
    if n > 6:
        raise ResourceError(f"weighted_full_risk enumerates 4^n strings; n={n} exceeds the limit of 6")
    total = 0.0
    for code in range(4**n):
        p = PauliString(n, code)
        seed = PauliSum.single(p)
        a, _ = propagate(U, params_U, seed, Direction.ADJOINT)
        b, _ = propagate(V, params_V, seed, Direction.ADJOINT)
        total += inner_product(a, b) / 3**p.weight
    return 1.0 - total / 2**n
