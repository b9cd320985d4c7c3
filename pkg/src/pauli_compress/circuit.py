"""Parametrized circuits of Pauli rotations and Clifford gates.

A rotation ``PauliRotation(P, k, s)`` implements ``exp(-i * s * theta[k] / 2 * P)``.
Gates are listed in application order: ``gates[0]`` acts on the state first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .pauli import PauliString

CLIFFORD_ARITY = {"H": 1, "S": 1, "CNOT": 2}


@dataclass(frozen=True)
class CliffordGate:
    kind: str
    sites: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in CLIFFORD_ARITY:
            raise ValueError(f"unknown Clifford kind {self.kind!r}")
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        if len(self.sites) != CLIFFORD_ARITY[self.kind]:
            raise ValueError(f"{self.kind} acts on {CLIFFORD_ARITY[self.kind]} site(s)")
        if len(set(self.sites)) != len(self.sites):
            raise ValueError("Clifford sites must be distinct")


@dataclass(frozen=True)
class PauliRotation:
    generator: PauliString
    param: int
    scale: float = 1.0

    def __post_init__(self):
        if self.generator.weight not in (1, 2):
            raise ValueError("rotation generators must have weight 1 or 2")
        if self.param < 0:
            raise ValueError("parameter index must be non-negative")


Gate = Union[CliffordGate, PauliRotation]


@dataclass
class ParametrizedCircuit:
    """Ordered gate list with a parameter vector and its reference (Trotter) values.

    ``translations`` lists site permutations (lattice translations along
    periodic directions) under which the circuit is invariant.
    """

    n_qubits: int
    gates: list
    n_params: int
    reference_params: np.ndarray
    translations: tuple = ()
    param_labels: tuple = ()

    def __post_init__(self):
        self.reference_params = np.asarray(self.reference_params, dtype=float)
        if len(self.reference_params) != self.n_params:
            raise ValueError("reference_params length must equal n_params")
        used = set()
        for g in self.gates:
            if isinstance(g, PauliRotation):
                if g.generator.n_qubits != self.n_qubits:
                    raise ValueError("generator size does not match circuit")
                if g.param >= self.n_params:
                    raise ValueError(f"parameter index {g.param} out of range")
                used.add(g.param)
            elif isinstance(g, CliffordGate):
                if any(not 0 <= s < self.n_qubits for s in g.sites):
                    raise ValueError(f"Clifford site out of range: {g.sites}")
            else:
                raise TypeError(f"not a gate: {g!r}")
        if used != set(range(self.n_params)):
            raise ValueError("every parameter must be referenced by at least one rotation")

    @property
    def n_rotations(self) -> int:
        return sum(isinstance(g, PauliRotation) for g in self.gates)

    def check_params(self, params) -> np.ndarray:
        if params is None:
            return self.reference_params
        params = np.asarray(params, dtype=float)
        if params.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {params.shape}")
        return params

    def angles(self, params=None) -> np.ndarray:
        """Rotation angle of every gate (0 for Cliffords)."""
        params = self.check_params(params)
        return np.array(
            [g.scale * params[g.param] if isinstance(g, PauliRotation) else 0.0 for g in self.gates]
        )

    def repeated(self, k: int) -> "ParametrizedCircuit":
        """The circuit applied ``k`` times in a row, sharing parameters."""
        if k <= 0:
            return identity_circuit(self.n_qubits)
        return ParametrizedCircuit(
            self.n_qubits, list(self.gates) * k, self.n_params, self.reference_params,
            self.translations, self.param_labels,
        )

    def to_json_dict(self, params=None) -> dict:
        params = self.check_params(params)
        gates = []
        for g in self.gates:
            if isinstance(g, PauliRotation):
                gates.append({"type": "rotation", "generator": g.generator.label, "param": g.param, "scale": g.scale})
            else:
                gates.append({"type": "clifford", "kind": g.kind, "sites": list(g.sites)})
        return {
            "n_qubits": self.n_qubits,
            "n_params": self.n_params,
            "reference_params": [float(p) for p in params],
            "gates": gates,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ParametrizedCircuit":
        n = int(data["n_qubits"])
        gates: list = []
        for g in data["gates"]:
            if g["type"] == "rotation":
                gen = PauliString.from_label(g["generator"])
                if gen.n_qubits != n:
                    raise ValueError("generator label length must equal n_qubits")
                gates.append(PauliRotation(gen, int(g["param"]), float(g.get("scale", 1.0))))
            elif g["type"] == "clifford":
                gates.append(CliffordGate(g["kind"], tuple(g["sites"])))
            else:
                raise ValueError(f"unknown gate type {g['type']!r}")
        return cls(n, gates, int(data["n_params"]), np.asarray(data["reference_params"], dtype=float))

    def save(self, path, params=None) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(params), indent=1))

    @classmethod
    def load(cls, path) -> "ParametrizedCircuit":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def identity_circuit(n_qubits: int) -> ParametrizedCircuit:
    return ParametrizedCircuit(n_qubits, [], 0, np.zeros(0))


def rotation_circuit(n_qubits: int, generators: Sequence, angles: Sequence[float]) -> ParametrizedCircuit:
    """One free parameter per rotation, in order; handy for tests."""
    gates = []
    for k, gen in enumerate(generators):
        if isinstance(gen, str):
            gen = PauliString.from_label(gen)
        gates.append(PauliRotation(gen, k))
    return ParametrizedCircuit(n_qubits, gates, len(gates), np.asarray(angles, dtype=float))


def random_circuit(n_qubits: int, n_gates: int, rng: np.random.Generator, clifford_fraction: float = 0.3):
    """Random mix of weight-1/2 rotations and H/S/CNOT gates with random angles."""
    gates: list = []
    angles: list[float] = []
    symbols = "XYZ"
    for _ in range(n_gates):
        if n_qubits > 1 and rng.random() < clifford_fraction:
            kind = ["H", "S", "CNOT"][rng.integers(3)]
            sites = rng.choice(n_qubits, size=CLIFFORD_ARITY[kind], replace=False)
            gates.append(CliffordGate(kind, tuple(int(s) for s in sites)))
            continue
        w = 1 if n_qubits == 1 else int(rng.integers(1, 3))
        sites = rng.choice(n_qubits, size=w, replace=False)
        ops = {int(s): symbols[rng.integers(3)] for s in sites}
        gates.append(PauliRotation(PauliString.from_sites(n_qubits, ops), len(angles)))
        angles.append(float(rng.uniform(-np.pi, np.pi)))
    return ParametrizedCircuit(n_qubits, gates, len(angles), np.asarray(angles))
