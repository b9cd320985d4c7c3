"""Lattice Hamiltonians and second-order Trotter circuits.

The Hamiltonian is split into parts ``H_1, ..., H_m`` whose terms commute
within each part, and each Trotter step of length ``dt`` is the symmetric
product ``e^{-i dt/2 H_1} ... e^{-i dt/2 H_{m-1}} e^{-i dt H_m} e^{-i dt/2 H_{m-1}} ... e^{-i dt/2 H_1}``.
For the Ising models ``m = 2``: ``H_A`` holds the field terms and ``H_B``
the couplings. Hopping bonds are grouped by axis and bond parity so that
every part is a set of disjoint bonds; each bond is a paired XX and YY
rotation with one shared angle, which conserves the particle number
exactly. A term ``c P`` held for time ``tau`` becomes the rotation
``exp(-i (2 c tau)/2 P)``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .circuit import ParametrizedCircuit, PauliRotation
from .errors import ConfigurationError
from .lattice import Topology
from .pauli import PauliString

MODELS = ("tfim", "nntfim", "hcb")
MAX_TARGET_STEP = 0.03

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Couplings of one of the supported models.

    ``tfim``:   (J/2) sum_nn ZZ - h sum X
    ``nntfim``: J(-sum_nn ZZ + kappa sum_nnn ZZ) - h cos(omega t) sum X
    ``hcb``:    -(J_x/2) sum_x (a^dag a + h.c.) - (J_y/2) sum_y (...),
                with a_j^dag a_k + h.c. -> (X_j X_k + Y_j Y_k)/2
    """

    model: str
    J: float = 1.0
    h: float = 1.0
    kappa: float = 0.0
    omega: float = 0.0
    J_x: float = 1.0
    J_y: float = 1.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigurationError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.model == "nntfim" and self.omega <= 0:
            raise ConfigurationError("the Floquet model needs a positive drive frequency")

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega if self.omega > 0 else math.inf


@dataclass(frozen=True)
class Term:
    generator: PauliString
    coefficient: float
    group: str
    part: str


def hamiltonian_terms(spec: HamiltonianSpec, topo: Topology, time: float = 0.0) -> list[Term]:
    """Pauli terms of ``H(time)`` in a fixed order (A part first)."""
    n = topo.n_sites

    def two(a, b, sym):
        return PauliString.from_sites(n, {a: sym, b: sym})

    def one(a, sym):
        return PauliString.from_sites(n, {a: sym})

    if spec.model == "tfim":
        field_ = [Term(one(s, "X"), -spec.h, "X", "A") for s in range(n)]
        return field_ + [Term(two(a, b, "Z"), spec.J / 2, "ZZ", "B") for a, b in topo.nn_edges]
    if spec.model == "nntfim":
        field_ = [Term(one(s, "X"), -spec.h * math.cos(spec.omega * time), "X", "A") for s in range(n)]
        nn = [Term(two(a, b, "Z"), -spec.J, "ZZ", "B") for a, b in topo.nn_edges]
        nnn = [Term(two(a, b, "Z"), spec.J * spec.kappa, "ZZ_nnn", "B") for a, b in topo.nnn_edges]
        return field_ + nn + nnn
    if topo.kind != "square":
        raise ConfigurationError("the hard-core boson model needs a square lattice (x/y bonds)")
    coupling = {"x": spec.J_x, "y": spec.J_y}
    out = []
    for (a, b), axis in zip(topo.nn_edges, topo.nn_axes):
        c = -coupling[axis] / 4
        part = f"{axis}{_bond_parity(topo, a, b, axis)}"
        out.append(Term(two(a, b, "X"), c, f"hop_{axis}", part))
        out.append(Term(two(a, b, "Y"), c, f"hop_{axis}", part))
    return out


def _bond_parity(topo: Topology, a: int, b: int, axis: str) -> int:
    """Colour of a bond among the bonds of its axis; equal colours never share a site."""
    i = 0 if axis == "x" else 1
    size = topo.n_x if axis == "x" else topo.n_y
    lo, hi = sorted((topo.coords[a][i], topo.coords[b][i]))
    if hi - lo != 1:
        # wrap-around bond; an odd ring needs a third colour
        return 2 if size % 2 else (size - 1) % 2
    return lo % 2


def split_parts(terms: list[Term]) -> list[str]:
    """Part names in splitting order; the last one takes the full step."""
    return sorted({t.part for t in terms})


class SharingMode(str, Enum):
    PER_TERM_GROUP = "per_term_group"
    PER_GATE = "per_gate"
    TRANSLATION_INVARIANT = "translation_invariant"


@dataclass(frozen=True)
class TrotterPlan:
    """``layers`` Trotter steps per interval ``delta_t``, repeated up to ``t_total``."""

    delta_t: float
    layers: int
    t_total: float | None = None
    t_start: float = 0.0

    def __post_init__(self):
        if self.layers < 1:
            raise ConfigurationError("layers must be >= 1")
        if self.delta_t <= 0:
            raise ConfigurationError("delta_t must be positive")
        reps = self.total / self.delta_t
        if abs(reps - round(reps)) > 1e-9 or round(reps) < 1:
            raise ConfigurationError(f"t_total={self.total} is not a multiple of delta_t={self.delta_t}")

    @property
    def total(self) -> float:
        return self.delta_t if self.t_total is None else self.t_total

    @property
    def repetitions(self) -> int:
        return int(round(self.total / self.delta_t))

    @property
    def step(self) -> float:
        return self.delta_t / self.layers

    @property
    def n_steps(self) -> int:
        return self.repetitions * self.layers

    def check_step(self, target: bool) -> None:
        """Flag coarse steps: a ``UserWarning`` for targets, a log line for ansatz circuits."""
        if self.step < MAX_TARGET_STEP:
            return
        msg = f"Trotter step {self.step:.4g} is not below {MAX_TARGET_STEP}"
        if target:
            warnings.warn("target " + msg, stacklevel=3)
        else:
            log.warning("ansatz %s", msg)


def step_times(plan: TrotterPlan, drive: float | None = None) -> np.ndarray:
    """Midpoint time of every Trotter step in the plan.

    ``drive`` is accepted for symmetry with the Floquet model; the midpoints
    do not depend on it.
    """
    k = np.arange(plan.n_steps)
    return plan.t_start + (k + 0.5) * plan.step


def trotter_circuit(
    spec: HamiltonianSpec,
    topo: Topology,
    plan: TrotterPlan,
    sharing: SharingMode | str = SharingMode.PER_TERM_GROUP,
    *,
    target: bool = True,
) -> ParametrizedCircuit:
    """Second-order Trotter circuit whose reference parameters are the Trotter angles."""
    sharing = SharingMode(sharing)
    if sharing is SharingMode.TRANSLATION_INVARIANT and not topo.is_translation_invariant:
        raise ConfigurationError("translation-invariant sharing needs a lattice periodic in both directions")
    if spec.model == "hcb" and topo.kind != "square":
        raise ConfigurationError("the hard-core boson model needs a square lattice")
    plan.check_step(target)

    dt = plan.step
    gates: list = []
    ref: list[float] = []
    labels: list[str] = []
    keys: dict = {}

    for layer, t_mid in enumerate(step_times(plan, spec.omega)):
        terms = hamiltonian_terms(spec, topo, t_mid)
        names = split_parts(terms)
        parts = {name: [t for t in terms if t.part == name] for name in names}
        schedule = [(p, dt / 2) for p in names[:-1]] + [(names[-1], dt)] + [(p, dt / 2) for p in names[-2::-1]]
        for sub, (part, tau) in enumerate(schedule):
            for term in parts[part]:
                angle = 2.0 * term.coefficient * tau
                if sharing is SharingMode.PER_GATE:
                    key = len(ref)
                else:
                    key = (layer, sub, term.group)
                if key not in keys:
                    keys[key] = len(ref)
                    ref.append(angle)
                    labels.append(f"L{layer}.{sub}.{term.group}" if sharing is not SharingMode.PER_GATE
                                  else f"L{layer}.{sub}.{term.generator.label}")
                gates.append(PauliRotation(term.generator, keys[key]))

    circ = ParametrizedCircuit(topo.n_sites, gates, len(ref), np.array(ref), (), tuple(labels))
    if sharing is SharingMode.PER_GATE:
        return circ
    translations = _circuit_translations(circ, topo)
    if sharing is SharingMode.TRANSLATION_INVARIANT and list(translations) != topo.symmetry_permutations():
        raise ConfigurationError(f"the {spec.model} splitting is not invariant under unit translations")
    return ParametrizedCircuit(topo.n_sites, gates, len(ref), np.array(ref), translations, tuple(labels))


def _circuit_translations(circ: ParametrizedCircuit, topo: Topology) -> tuple:
    """Shortest shift (1 or 2 sites) along each periodic direction that leaves the gate list invariant."""
    found = []
    for dx, dy in topo.periodic_directions():
        for step in (1, 2):
            perm = tuple(topo.translate(s, dx * step, dy * step) for s in range(topo.n_sites))
            probe = ParametrizedCircuit(circ.n_qubits, circ.gates, circ.n_params, circ.reference_params, (perm,))
            if is_translation_invariant(probe):
                found.append(perm)
                break
    return tuple(found)


def relabel_gates(circ: ParametrizedCircuit, perm) -> list:
    """Gates with every site ``s`` moved to ``perm[s]`` (used to check translation invariance)."""
    out = []
    for g in circ.gates:
        ops = {perm[s]: g.generator.symbol(s) for s in g.generator.support()}
        out.append(PauliRotation(PauliString.from_sites(circ.n_qubits, ops), g.param, g.scale))
    return out


def is_translation_invariant(circ: ParametrizedCircuit) -> bool:
    """True when each listed translation maps the gate multiset onto itself."""
    if not circ.translations:
        return False
    base = sorted((g.param, g.generator.code, g.scale) for g in circ.gates)
    for perm in circ.translations:
        moved = sorted((g.param, g.generator.code, g.scale) for g in relabel_gates(circ, perm))
        if moved != base:
            return False
    return True
