"""Dense statevector references for small systems.

States are complex arrays of length ``2**n`` (or ``(2**n, batch)``) with
qubit ``q`` stored in bit ``q`` of the basis index. Nothing here uses the
sparse propagation engine; these routines exist to check it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .circuit import CliffordGate, ParametrizedCircuit, PauliRotation
from .errors import ResourceError
from .pauli import PauliString, PauliSum, _even_mask
from .propagation import _CLIFFORD_MATRICES

MAX_STATE_QUBITS = 24

_PAULI_1Q = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator so sampled results are reproducible from the seed."""
    return np.random.Generator(np.random.Philox(seed))


def _check_size(n: int, limit: int, what: str) -> None:
    if n > limit:
        raise ResourceError(f"{what} supports at most {limit} qubits, got {n}")


def zero_state(n: int) -> np.ndarray:
    _check_size(n, MAX_STATE_QUBITS, "statevector")
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(n: int, ones) -> np.ndarray:
    """Computational basis state with the listed qubits set to |1>."""
    _check_size(n, MAX_STATE_QUBITS, "statevector")
    psi = np.zeros(2**n, dtype=complex)
    psi[sum(1 << int(q) for q in ones)] = 1.0
    return psi


def _pauli_masks(p: PauliString) -> tuple[int, int, int]:
    xm = zm = ny = 0
    for q in range(p.n_qubits):
        sym = p.symbol(q)
        if sym in "XY":
            xm |= 1 << q
        if sym in "ZY":
            zm |= 1 << q
        ny += sym == "Y"
    return xm, zm, ny


@lru_cache(maxsize=4096)
def _pauli_action(n: int, code: int) -> tuple[np.ndarray, np.ndarray]:
    """``(perm, phase)`` with ``(P psi)[i] = phase[i] * psi[perm[i]]``."""
    xm, zm, ny = _pauli_masks(PauliString(n, code))
    idx = np.arange(2**n)
    perm = idx ^ xm
    parity = (np.bitwise_count(perm & zm) & 1).astype(np.int64)
    phase = (1j**ny) * (1 - 2 * parity)
    for arr in (perm, phase):
        arr.setflags(write=False)
    return perm, phase


def apply_pauli(state: np.ndarray, p: PauliString) -> np.ndarray:
    """``P @ state`` for a state or a batch of column states."""
    perm, phase = _pauli_action(p.n_qubits, p.code)
    if state.ndim == 2:
        phase = phase[:, None]
    return phase * state[perm]


def apply_pauli_rotation(state: np.ndarray, p: PauliString, angle: float) -> np.ndarray:
    """``exp(-i angle/2 P) @ state``."""
    perm, phase = _pauli_action(p.n_qubits, p.code)
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if perm[0] == 0:
        # diagonal generator: a single elementwise phase
        diag = c - 1j * s * phase
        return state * (diag[:, None] if state.ndim == 2 else diag)
    factor = -1j * s * phase
    out = state[perm]
    out *= factor[:, None] if state.ndim == 2 else factor
    out += c * state
    return out


def apply_matrix(state: np.ndarray, mat: np.ndarray, sites, n: int) -> np.ndarray:
    """Apply a ``2**k`` matrix whose local index bit ``j`` is ``sites[j]``."""
    k = len(sites)
    batch = state.shape[1:]
    psi = state.reshape((2,) * n + batch)
    gate = mat.reshape((2,) * (2 * k))
    # gate axis 0 is the most significant local bit, i.e. sites[k-1]
    axes = [n - 1 - sites[j] for j in reversed(range(k))]
    out = np.tensordot(gate, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(state.shape)


def _single_site_rotation(state, p: PauliString, angle: float):
    """Fast path for ``exp(-i angle/2 X_q)`` and ``exp(-i angle/2 Y_q)`` using strided views."""
    (q,) = p.support()
    sym = p.symbol(q)
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if sym == "X":
        mat = np.array([[c, -1j * s], [-1j * s, c]])
    else:
        mat = np.array([[c, -s], [s, c]], dtype=complex)
    dim = state.shape[0]
    view = state.reshape(dim // (2 << q), 2, (1 << q) * (state.size // dim))
    return np.matmul(mat, view).reshape(state.shape)


def _diagonal_phases(gens_angles, n: int) -> np.ndarray:
    total = np.ones(2**n, dtype=complex)
    for p, angle in gens_angles:
        _, phase = _pauli_action(n, p.code)
        total *= np.cos(angle / 2) - 1j * np.sin(angle / 2) * phase
    return total


def _run_gates(state, gates, angles, n, inverse):
    """Apply gates in the given order; runs of diagonal rotations are fused into one phase."""
    pending: list = []

    def flush(st):
        if not pending:
            return st
        diag = _diagonal_phases(pending, n)
        pending.clear()
        return st * (diag[:, None] if st.ndim == 2 else diag)

    for gate, angle in zip(gates, angles):
        if isinstance(gate, PauliRotation):
            angle = -angle if inverse else angle
            p = gate.generator
            if p.code & _even_mask(n) == 0:
                pending.append((p, angle))
                continue
            state = flush(state)
            if p.weight == 1 and p.symbol(p.support()[0]) in "XY":
                state = _single_site_rotation(state, p, angle)
            else:
                state = apply_pauli_rotation(state, p, angle)
        else:
            state = flush(state)
            mat = _CLIFFORD_MATRICES[gate.kind]
            state = apply_matrix(state, mat.conj().T if inverse else mat, gate.sites, n)
    return flush(state)


def apply_circuit(state: np.ndarray, circ: ParametrizedCircuit, params=None) -> np.ndarray:
    """Exact action of the circuit (first gate first)."""
    _check_size(circ.n_qubits, MAX_STATE_QUBITS, "statevector")
    return _run_gates(state, circ.gates, circ.angles(params), circ.n_qubits, False)


def apply_circuit_adjoint(state: np.ndarray, circ: ParametrizedCircuit, params=None) -> np.ndarray:
    """``U^dag @ state``."""
    _check_size(circ.n_qubits, MAX_STATE_QUBITS, "statevector")
    return _run_gates(state, list(reversed(circ.gates)), circ.angles(params)[::-1], circ.n_qubits, True)


def circuit_unitary(circ: ParametrizedCircuit, params=None) -> np.ndarray:
    _check_size(circ.n_qubits, 12, "dense unitary")
    return apply_circuit(np.eye(2**circ.n_qubits, dtype=complex), circ, params)


def expectation(state: np.ndarray, obs: PauliSum) -> float:
    total = 0.0
    for term in obs:
        total += term.coefficient * np.vdot(state, apply_pauli(state, term.string)).real
    return float(total)


def heisenberg_expectation(circ: ParametrizedCircuit, params, obs: PauliSum) -> float:
    """``<0| U^dag O U |0>``."""
    return expectation(apply_circuit(zero_state(circ.n_qubits), circ, params), obs)


# --- costs -------------------------------------------------------------------


def hst_cost(U: ParametrizedCircuit, V: ParametrizedCircuit, params_U=None, params_V=None, chunk: int = 256) -> float:
    """``1 - |tr(U^dag V)|^2 / 4^n`` from basis-state runs."""
    n = U.n_qubits
    _check_size(n, 12, "hst_cost")
    dim = 2**n
    trace = 0j
    for start in range(0, dim, chunk):
        cols = np.arange(start, min(start + chunk, dim))
        block = np.zeros((dim, len(cols)), dtype=complex)
        block[cols, np.arange(len(cols))] = 1.0
        out = apply_circuit_adjoint(apply_circuit(block, V, params_V), U, params_U)
        trace += out[cols, np.arange(len(cols))].sum()
    return float(1.0 - abs(trace) ** 2 / 4**n)


def ptm_diagonal(A: np.ndarray, p: PauliString) -> float:
    """``tr(P A P A^dag) / 2^n``, the PTM diagonal element of conjugation by ``A``."""
    pa = apply_pauli(A, p)
    pad = apply_pauli(A.conj().T, p)
    return float(np.sum(pa * pad.T).real / A.shape[0])


def _overlap_operator(U, V, params_U, params_V) -> np.ndarray:
    """Dense ``U^dag V``."""
    dim = 2**U.n_qubits
    return apply_circuit_adjoint(apply_circuit(np.eye(dim, dtype=complex), V, params_V), U, params_U)


def exact_local_risk(U: ParametrizedCircuit, V: ParametrizedCircuit, params_U=None, params_V=None) -> float:
    """Haar-averaged local risk ``1/2 - 1/(6n) sum_P tr(P L P L^dag)/2^n``, ``L = U^dag V``, P of weight 1."""
    n = U.n_qubits
    _check_size(n, 10, "exact_local_risk")
    L = _overlap_operator(U, V, params_U, params_V)
    total = 0.0
    for site in range(n):
        for sym in "XYZ":
            total += ptm_diagonal(L, PauliString.from_sites(n, {site: sym}))
    return 0.5 - total / (6 * n)


def product_risk_exact(U: ParametrizedCircuit, V: ParametrizedCircuit, params_U=None, params_V=None) -> float:
    """Product-Haar expected risk from the full weight-resolved sum over all ``4^n`` strings."""
    n = U.n_qubits
    _check_size(n, 6, "product_risk_exact")
    L = _overlap_operator(U, V, params_U, params_V)
    total = 0.0
    for code in range(4**n):
        p = PauliString(n, code)
        total += ptm_diagonal(L, p) / 3**p.weight
    return float(1.0 - total / 2**n)


# --- sampling ------------------------------------------------------------------


@dataclass
class HaarSample:
    """Angles of ``U3 = Rz(phi) Ry(gamma) Rz(omega)`` per draw and site, shape ``(M, n)``."""

    phi: np.ndarray
    gamma: np.ndarray
    omega: np.ndarray

    @classmethod
    def draw(cls, n: int, M: int, rng: np.random.Generator) -> "HaarSample":
        phi = rng.uniform(0.0, 2 * np.pi, size=(M, n))
        omega = rng.uniform(0.0, 2 * np.pi, size=(M, n))
        # density sin(gamma)/2 on [0, pi]
        gamma = np.arccos(1.0 - 2.0 * rng.uniform(size=(M, n)))
        return cls(phi, gamma, omega)

    def bloch_vectors(self) -> np.ndarray:
        """Bloch vector of ``U3|0>`` per draw and site, shape ``(M, n, 3)``."""
        s = np.sin(self.gamma)
        return np.stack([s * np.cos(self.phi), s * np.sin(self.phi), np.cos(self.gamma)], axis=-1)

    def states(self) -> np.ndarray:
        """Product states ``S|0>`` as columns, shape ``(2^n, M)``."""
        M, n = self.phi.shape
        # Rz(phi) Ry(gamma) Rz(omega) |0>
        a0 = np.exp(-0.5j * (self.phi + self.omega)) * np.cos(self.gamma / 2)
        a1 = np.exp(0.5j * (self.phi - self.omega)) * np.sin(self.gamma / 2)
        out = np.ones((M, 1), dtype=complex)
        for q in range(n):
            site = np.stack([a0[:, q], a1[:, q]], axis=1)
            # qubit q is bit q: new factor becomes the more significant bit
            out = (site[:, :, None] * out[:, None, :]).reshape(M, -1)
        return out.T


def _mean_and_error(samples: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(samples))
    err = float(np.std(samples, ddof=1) / np.sqrt(len(samples))) if len(samples) > 1 else 0.0
    return mean, err


def sampled_product_risk(
    U: ParametrizedCircuit,
    V: ParametrizedCircuit,
    params_U=None,
    params_V=None,
    M: int = 10_000,
    seed: int = 0,
    chunk: int = 4096,
) -> tuple[float, float]:
    """Monte-Carlo ``E[1 - |<psi|U^dag V|psi>|^2]`` over product-Haar states; returns (mean, stderr)."""
    if M <= 0:
        raise ValueError("sample count must be positive")
    n = U.n_qubits
    _check_size(n, 12, "sampled_product_risk")
    rng = make_rng(seed)
    values = []
    for start in range(0, M, chunk):
        m = min(chunk, M - start)
        psi = HaarSample.draw(n, m, rng).states()
        ov = np.sum(apply_circuit(psi, U, params_U).conj() * apply_circuit(psi, V, params_V), axis=0)
        values.append(1.0 - np.abs(ov) ** 2)
    return _mean_and_error(np.concatenate(values))


def sampled_local_risk(
    U: ParametrizedCircuit,
    V: ParametrizedCircuit,
    params_U=None,
    params_V=None,
    M: int = 10_000,
    seed: int = 0,
    chunk: int = 4096,
) -> tuple[float, float]:
    """Monte-Carlo local risk ``1/2 - 1/(2n) sum_j <0|L_S^dag Z_j L_S|0>`` with ``L_S = S^dag U^dag V S``."""
    if M <= 0:
        raise ValueError("sample count must be positive")
    n = U.n_qubits
    _check_size(n, 12, "sampled_local_risk")
    rng = make_rng(seed)
    values = []
    for start in range(0, M, chunk):
        m = min(chunk, M - start)
        sample = HaarSample.draw(n, m, rng)
        phi = apply_circuit_adjoint(apply_circuit(sample.states(), V, params_V), U, params_U)
        bloch = sample.bloch_vectors()
        acc = np.zeros(m)
        for q in range(n):
            # S Z_q S^dag = bloch . sigma on site q
            for a, sym in enumerate("XYZ"):
                p = PauliString.from_sites(n, {q: sym})
                ev = np.sum(phi.conj() * apply_pauli(phi, p), axis=0).real
                acc += bloch[:, q, a] * ev
        values.append(0.5 - acc / (2 * n))
    return _mean_and_error(np.concatenate(values))


def sampled_haar_risk(
    U: ParametrizedCircuit,
    V: ParametrizedCircuit,
    params_U=None,
    params_V=None,
    M: int = 10_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte-Carlo risk over global Haar-random states."""
    if M <= 0:
        raise ValueError("sample count must be positive")
    n = U.n_qubits
    _check_size(n, 10, "sampled_haar_risk")
    rng = make_rng(seed)
    psi = rng.normal(size=(2**n, M)) + 1j * rng.normal(size=(2**n, M))
    psi /= np.linalg.norm(psi, axis=0)
    ov = np.sum(apply_circuit(psi, U, params_U).conj() * apply_circuit(psi, V, params_V), axis=0)
    return _mean_and_error(1.0 - np.abs(ov) ** 2)


# --- states for the hopping demo ---------------------------------------------------


def occupations(state: np.ndarray) -> np.ndarray:
    """``<n_j> = (1 - <Z_j>)/2`` with |1> as the occupied state."""
    n = int(np.log2(state.shape[0]))
    prob = np.abs(state) ** 2
    idx = np.arange(len(state))
    return np.array([prob[(idx >> q) & 1 == 1].sum() for q in range(n)])


def fidelity_and_occupations(state_a: np.ndarray, state_b: np.ndarray):
    """``(|<a|b>|^2, <n_j> of a, <n_j> of b)``."""
    if state_a.shape != state_b.shape:
        raise ValueError("states have different dimensions")
    fid = float(abs(np.vdot(state_a, state_b)) ** 2)
    return fid, occupations(state_a), occupations(state_b)


def dense_hamiltonian(terms, n: int) -> np.ndarray:
    """Dense matrix of ``sum c P`` for ``(PauliString, c)`` pairs."""
    _check_size(n, 12, "dense_hamiltonian")
    H = np.zeros((2**n, 2**n), dtype=complex)
    eye = np.eye(2**n, dtype=complex)
    for p, c in terms:
        H += c * apply_pauli(eye, p)
    return H


def evolve_exact(state: np.ndarray, H: np.ndarray, t: float) -> np.ndarray:
    from scipy.linalg import expm

    return expm(-1j * t * H) @ state
