"""Truncated sparse Pauli propagation.

Each gate maps the sorted term arrays of a :class:`PauliSum` to new arrays.
Under a rotation ``R = exp(-i a/2 G)`` the conjugation ``R^dag P R`` leaves
commuting strings alone and splits an anticommuting ``P`` into
``cos(a) P + sin(a) i G P``; the sine branch carries ``sine_count + 1`` and
equal strings are merged immediately, keeping the smaller sine count.

With ``record=True`` the branch/merge structure is written to a
:class:`PropagationTape`, which can re-evaluate the propagated coefficients
at other parameters and back-propagate gradients through them.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import ResourceError
from .circuit import CliffordGate, ParametrizedCircuit, PauliRotation
from .pauli import (
    PauliString,
    PauliSum,
    anticommutes_with,
    code_dtype,
    product_phase_exponent,
    scalar_code,
    weights,
)

__all__ = [
    "Direction",
    "TruncationConfig",
    "PropagationStats",
    "ResourceError",
    "PropagationTape",
    "apply_rotation_adjoint",
    "apply_clifford",
    "propagate",
    "inner_product",
]


class Direction(str, Enum):
    """``HEISENBERG`` maps ``O -> U^dag O U``; ``ADJOINT`` maps ``O -> U O U^dag``."""

    HEISENBERG = "heisenberg"
    ADJOINT = "adjoint"


@dataclass(frozen=True)
class TruncationConfig:
    max_weight: Optional[int] = None
    coeff_eps: float = 0.0
    max_sines: Optional[int] = None

    def __post_init__(self):
        if self.coeff_eps < 0:
            raise ValueError("coeff_eps must be non-negative")
        if self.max_weight is not None and self.max_weight < 1:
            raise ValueError("max_weight must be positive")
        if self.max_sines is not None and self.max_sines < 0:
            raise ValueError("max_sines must be non-negative")

    def without_coefficients(self) -> "TruncationConfig":
        return TruncationConfig(self.max_weight, 0.0, self.max_sines)


PERMISSIVE = TruncationConfig()


@dataclass
class PropagationStats:
    peak_terms: int = 0
    truncated_by_weight: int = 0
    truncated_by_coeff: int = 0
    truncated_by_sines: int = 0
    discarded_coefficient_mass: float = 0.0
    gates_applied: int = 0
    seeds_propagated: int = 0

    def absorb(self, other: "PropagationStats") -> None:
        self.peak_terms = max(self.peak_terms, other.peak_terms)
        self.truncated_by_weight += other.truncated_by_weight
        self.truncated_by_coeff += other.truncated_by_coeff
        self.truncated_by_sines += other.truncated_by_sines
        self.discarded_coefficient_mass += other.discarded_coefficient_mass
        self.gates_applied += other.gates_applied
        self.seeds_propagated += other.seeds_propagated

    def to_dict(self) -> dict:
        return asdict(self)


# --- Clifford lookup tables -------------------------------------------------

_CLIFFORD_MATRICES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    # control = first site (bit 0 of the local index), target = second site
    "CNOT": np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex),
}


@lru_cache(maxsize=None)
def _clifford_table(kind: str, inverse: bool) -> tuple[np.ndarray, np.ndarray]:
    """Local-code map of ``C^dag P C`` (or ``C P C^dag`` when ``inverse``)."""
    mat = _CLIFFORD_MATRICES[kind]
    k = int(round(np.log2(mat.shape[0])))
    if inverse:
        mat = mat.conj().T
    basis = [PauliString(k, code).to_matrix() for code in range(4**k)]
    new_code = np.zeros(4**k, dtype=np.int64)
    sign = np.zeros(4**k, dtype=np.float64)
    for code, p in enumerate(basis):
        image = mat.conj().T @ p @ mat
        for cand, q in enumerate(basis):
            overlap = np.trace(q @ image) / 2**k
            if abs(overlap) > 0.5:
                new_code[code], sign[code] = cand, overlap.real
                break
    return new_code, sign


def _site_codes(codes: np.ndarray, site: int, n: int) -> np.ndarray:
    shift = scalar_code(2 * site, n)
    return ((codes >> shift) & scalar_code(3, n)).astype(np.int64)


def _with_site_codes(codes: np.ndarray, site: int, local: np.ndarray, n: int) -> np.ndarray:
    shift = 2 * site
    clear = scalar_code(((1 << (2 * n)) - 1) ^ (3 << shift), n)
    if code_dtype(n) is object:
        vals = np.empty(len(local), dtype=object)
        vals[:] = [int(v) << shift for v in local]
    else:
        vals = local.astype(np.uint64) << np.uint64(shift)
    return (codes & clear) | vals


# --- single gate kernels ----------------------------------------------------


def _clifford_arrays(codes, coeffs, sines, n, gate: CliffordGate, inverse: bool):
    table, signs = _clifford_table(gate.kind, inverse)
    local = np.zeros(len(codes), dtype=np.int64)
    for j, site in enumerate(gate.sites):
        local |= _site_codes(codes, site, n) << (2 * j)
    mapped = table[local]
    new_codes = codes
    for j, site in enumerate(gate.sites):
        new_codes = _with_site_codes(new_codes, site, (mapped >> (2 * j)) & 3, n)
    factor = signs[local]
    order = np.argsort(new_codes, kind="stable")
    new_pos = np.empty(len(codes), dtype=np.int64)
    new_pos[order] = np.arange(len(codes))
    return new_codes[order], (coeffs * factor)[order], sines[order], (new_pos, factor)


def _rotation_arrays(codes, coeffs, sines, n, gen_code, angle, trunc, stats, record):
    """One rotation step; returns new arrays and (when recording) the tape entry."""
    g = scalar_code(gen_code, n)
    idx = np.flatnonzero(anticommutes_with(codes, gen_code, n))
    c, s = np.cos(angle), np.sin(angle)

    base = coeffs.copy()
    base[idx] *= c

    src = idx
    cand = codes[idx] ^ g
    cand_sines = sines[idx] + 1
    phase = product_phase_exponent(g, codes[idx], n) if len(idx) else np.zeros(0, dtype=np.int64)
    # i * (G P) = i * i**k * Q; k is odd for anticommuting strings
    sign = np.where(np.asarray(phase) == 1, -1.0, 1.0)
    cand_coeffs = coeffs[idx] * sign * s

    keep = np.ones(len(idx), dtype=bool)
    if trunc.max_weight is not None and len(idx):
        bad = weights(cand, n) > trunc.max_weight
        stats.truncated_by_weight += int(bad.sum())
        stats.discarded_coefficient_mass += float(np.abs(cand_coeffs[bad]).sum())
        keep &= ~bad
    if trunc.max_sines is not None and len(idx):
        bad = keep & (cand_sines > trunc.max_sines)
        stats.truncated_by_sines += int(bad.sum())
        stats.discarded_coefficient_mass += float(np.abs(cand_coeffs[bad]).sum())
        keep &= ~bad

    old_keep = None
    if not record:
        # exact zeros are never stored; they are not counted as truncations
        eps = trunc.coeff_eps
        small = np.abs(cand_coeffs) < eps if eps > 0 else cand_coeffs == 0.0
        bad = keep & small
        if eps > 0:
            stats.truncated_by_coeff += int(bad.sum())
            stats.discarded_coefficient_mass += float(np.abs(cand_coeffs[bad]).sum())
        keep &= ~bad
        cos_small = np.abs(base[idx]) < eps if eps > 0 else base[idx] == 0.0
        if cos_small.any():
            dropped = idx[cos_small]
            if eps > 0:
                stats.truncated_by_coeff += len(dropped)
                stats.discarded_coefficient_mass += float(np.abs(base[dropped]).sum())
            old_keep = np.ones(len(codes), dtype=bool)
            old_keep[dropped] = False

    src, cand, cand_sines, cand_coeffs, sign = src[keep], cand[keep], cand_sines[keep], cand_coeffs[keep], sign[keep]

    if old_keep is not None:
        codes, base, sines = codes[old_keep], base[old_keep], sines[old_keep]

    pos = np.searchsorted(codes, cand)
    found = np.zeros(len(cand), dtype=bool)
    inside = pos < len(codes)
    found[inside] = codes[pos[inside]] == cand[inside]

    new_codes_unsorted = cand[~found]
    order = np.argsort(new_codes_unsorted, kind="stable")
    ins_codes = new_codes_unsorted[order]
    ins_at = pos[~found][order]
    n_old, n_ins = len(codes), len(ins_codes)
    n_new = n_old + n_ins

    old_pos = np.arange(n_old) + np.searchsorted(ins_at, np.arange(n_old), side="right")
    ins_pos = ins_at + np.arange(n_ins)

    out_codes = np.empty(n_new, dtype=codes.dtype)
    out_codes[old_pos] = codes
    out_codes[ins_pos] = ins_codes
    out_coeffs = np.zeros(n_new)
    out_coeffs[old_pos] = base
    out_sines = np.empty(n_new, dtype=np.int64)
    out_sines[old_pos] = sines
    out_sines[ins_pos] = cand_sines[~found][order]

    cand_pos = np.empty(len(cand), dtype=np.int64)
    cand_pos[found] = old_pos[pos[found]]
    cand_pos[np.flatnonzero(~found)[order]] = ins_pos
    out_coeffs[cand_pos] += cand_coeffs
    out_sines[cand_pos[found]] = np.minimum(out_sines[cand_pos[found]], cand_sines[found])

    entry = None
    if record:
        entry = (idx, old_pos, src, sign, cand_pos, n_new)
    else:
        nz = out_coeffs != 0.0
        if not nz.all():
            out_codes, out_coeffs, out_sines = out_codes[nz], out_coeffs[nz], out_sines[nz]
    return out_codes, out_coeffs, out_sines, entry


# --- public single-gate API -------------------------------------------------


def apply_rotation_adjoint(
    s: PauliSum,
    generator: PauliString,
    angle: float,
    trunc: TruncationConfig = PERMISSIVE,
    stats: Optional[PropagationStats] = None,
) -> PauliSum:
    """Conjugate ``s`` as ``R^dag s R`` with ``R = exp(-i angle/2 generator)``."""
    if generator.n_qubits != s.n_qubits:
        raise ValueError("generator and sum have different qubit counts")
    stats = stats if stats is not None else PropagationStats()
    codes, coeffs, sines, _ = _rotation_arrays(
        s.codes, s.coeffs, s.sines, s.n_qubits, generator.code, angle, trunc, stats, False
    )
    stats.gates_applied += 1
    stats.peak_terms = max(stats.peak_terms, len(codes))
    return PauliSum(s.n_qubits, codes, coeffs, sines, _trusted=True)


def apply_clifford(s: PauliSum, gate: CliffordGate, inverse: bool = False) -> PauliSum:
    """``C^dag s C``, or ``C s C^dag`` with ``inverse=True``."""
    if any(not 0 <= site < s.n_qubits for site in gate.sites):
        raise ValueError(f"Clifford sites {gate.sites} out of range")
    codes, coeffs, sines, _ = _clifford_arrays(s.codes, s.coeffs, s.sines, s.n_qubits, gate, inverse)
    return PauliSum(s.n_qubits, codes, coeffs, sines, _trusted=True)


# --- whole circuits ---------------------------------------------------------


class PropagationTape:
    """Branch/merge structure of one recorded propagation.

    Replaying the tape at any parameter vector gives the coefficients of the
    same set of final strings, exactly as a live propagation with the recorded
    weight and sine-count truncations (and no coefficient truncation) would.
    """

    def __init__(self, n_params: int, seed_coeffs: np.ndarray):
        self.n_params = n_params
        self.seed_coeffs = np.asarray(seed_coeffs, dtype=float)
        self.steps: list = []
        self.final_codes: Optional[np.ndarray] = None
        self.record_params: Optional[np.ndarray] = None

    def _add_rotation(self, param: int, scale: float, entry) -> None:
        self.steps.append(("r", param, scale, *entry))

    def _add_clifford(self, entry) -> None:
        self.steps.append(("c", *entry))

    @property
    def n_terms(self) -> int:
        return 0 if self.final_codes is None else len(self.final_codes)

    def forward(self, params, keep: bool = False):
        """Final coefficients at ``params``; with ``keep`` also the per-step inputs."""
        params = np.asarray(params, dtype=float)
        a = self.seed_coeffs
        saved = []
        for step in self.steps:
            if keep:
                saved.append(a)
            if step[0] == "c":
                _, new_pos, factor = step
                out = np.empty(len(new_pos))
                out[new_pos] = a * factor
            else:
                _, param, scale, idx, old_pos, src, sign, cand_pos, n_new = step
                ang = scale * params[param]
                c, s = np.cos(ang), np.sin(ang)
                base = a.copy()
                base[idx] *= c
                out = np.zeros(n_new)
                out[old_pos] = base
                out[cand_pos] += a[src] * sign * s
            a = out
        return (a, saved) if keep else a

    def value_and_grad(self, params, weights_final: np.ndarray) -> tuple[float, np.ndarray]:
        """``sum(weights_final * a_final)`` and its gradient with respect to ``params``."""
        params = np.asarray(params, dtype=float)
        final, saved = self.forward(params, keep=True)
        value = float(np.dot(weights_final, final))
        grad = np.zeros(self.n_params)
        g = np.asarray(weights_final, dtype=float)
        for step, a in zip(reversed(self.steps), reversed(saved)):
            if step[0] == "c":
                _, new_pos, factor = step
                g = g[new_pos] * factor
                continue
            _, param, scale, idx, old_pos, src, sign, cand_pos, n_new = step
            ang = scale * params[param]
            c, s = np.cos(ang), np.sin(ang)
            g_old = g[old_pos]
            g_cand = g[cand_pos]
            dang = -s * float(np.dot(g_old[idx], a[idx])) + c * float(np.dot(g_cand, a[src] * sign))
            grad[param] += scale * dang
            g_new = g_old.copy()
            g_new[idx] *= c
            g_new[src] += g_cand * sign * s
            g = g_new
        return value, grad


def propagate(
    circ: ParametrizedCircuit,
    params,
    seed: PauliSum,
    direction: Direction = Direction.HEISENBERG,
    trunc: TruncationConfig = PERMISSIVE,
    *,
    record: bool = False,
    max_terms: Optional[int] = None,
):
    """Propagate ``seed`` through ``circ``.

    Returns ``(PauliSum, PropagationStats)``, plus a :class:`PropagationTape`
    as third element when ``record`` is set. Recording ignores
    ``trunc.coeff_eps`` and keeps exact zeros so the structure does not
    depend on the parameters.
    """
    if seed.n_qubits != circ.n_qubits:
        raise ValueError("seed and circuit have different qubit counts")
    params = circ.check_params(params)
    direction = Direction(direction)
    n = circ.n_qubits
    stats = PropagationStats(peak_terms=len(seed), seeds_propagated=1)
    if record:
        trunc = trunc.without_coefficients()
        tape = PropagationTape(circ.n_params, seed.coeffs)
        tape.record_params = params.copy()

    if direction is Direction.HEISENBERG:
        gates, sgn, inverse = reversed(circ.gates), 1.0, False
    else:
        gates, sgn, inverse = circ.gates, -1.0, True

    codes, coeffs, sines = seed.codes, seed.coeffs, seed.sines
    for gate in gates:
        if isinstance(gate, PauliRotation):
            angle = sgn * gate.scale * params[gate.param]
            codes, coeffs, sines, entry = _rotation_arrays(
                codes, coeffs, sines, n, gate.generator.code, angle, trunc, stats, record
            )
            if record:
                tape._add_rotation(gate.param, sgn * gate.scale, entry)
        else:
            codes, coeffs, sines, entry = _clifford_arrays(codes, coeffs, sines, n, gate, inverse)
            if record:
                tape._add_clifford(entry)
        stats.gates_applied += 1
        stats.peak_terms = max(stats.peak_terms, len(codes))
        if max_terms is not None and len(codes) > max_terms:
            raise ResourceError(f"propagation exceeded {max_terms} terms ({len(codes)})", stats.to_dict())

    out = PauliSum(n, codes, coeffs, sines, _trusted=True)
    if record:
        tape.final_codes = codes
        return out, stats, tape
    return out, stats


def inner_product(a: PauliSum, b: PauliSum) -> float:
    """``<<a|b>> = sum_P a_P b_P`` over strings present in both sums."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("sums have different qubit counts")
    if len(a) > len(b):
        a, b = b, a
    return float(np.dot(a.coeffs, align(b, a.codes)))


def align(s: PauliSum, codes: np.ndarray) -> np.ndarray:
    """Coefficients of ``s`` at the given (sorted) codes, zero where absent."""
    out = np.zeros(len(codes))
    if not len(s) or not len(codes):
        return out
    pos = np.searchsorted(s.codes, codes)
    inside = pos < len(s.codes)
    hit = np.zeros(len(codes), dtype=bool)
    hit[inside] = s.codes[pos[inside]] == codes[inside]
    out[hit] = s.coeffs[pos[hit]]
    return out
