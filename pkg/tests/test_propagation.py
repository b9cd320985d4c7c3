import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from pauli_compress import oracle
from pauli_compress.circuit import (
    CliffordGate,
    ParametrizedCircuit,
    PauliRotation,
    identity_circuit,
    random_circuit,
    rotation_circuit,
)
from pauli_compress.errors import ResourceError
from pauli_compress.pauli import PauliString, PauliSum, overlap_with_zero
from pauli_compress.propagation import (
    Direction,
    PropagationStats,
    TruncationConfig,
    apply_clifford,
    apply_rotation_adjoint,
    inner_product,
    propagate,
)


def P(label):
    return PauliString.from_label(label)


def S(mapping):
    return PauliSum.from_dict(mapping)


def dense(circ, params=None):
    return oracle.circuit_unitary(circ, params)


def assert_sum_equals_matrix(s: PauliSum, mat):
    assert np.allclose(s.to_matrix(), mat, atol=1e-11)


@pytest.mark.parametrize("theta", [0.3, -1.1, 2.0])
def test_rotation_branching_example(theta):
    out = apply_rotation_adjoint(S({"Z": 1.0}), P("X"), theta)
    assert out.coefficient("Z") == pytest.approx(np.cos(theta))
    assert out.coefficient("Y") == pytest.approx(np.sin(theta))
    assert out["Y"].sine_count == 1 and out["Z"].sine_count == 0
    # R^dag Z R with R = exp(-i theta/2 X)
    r = expm(-0.5j * theta * P("X").to_matrix())
    assert_sum_equals_matrix(out, r.conj().T @ P("Z").to_matrix() @ r)


def test_rotation_leaves_commuting_terms():
    out = apply_rotation_adjoint(S({"X": 1.0}), P("X"), 0.7)
    assert out.to_dict() == {"X": 1.0}


def test_zero_angle_stores_no_sine_branch():
    out = apply_rotation_adjoint(S({"Z": 1.0}), P("X"), 0.0)
    assert out.to_dict() == {"Z": 1.0}


def test_rotation_length_mismatch():
    with pytest.raises(ValueError):
        apply_rotation_adjoint(S({"Z": 1.0}), P("XX"), 0.1)


def test_merge_keeps_smaller_sine_count():
    s = PauliSum.from_terms(1, [("Z", 1.0, 0), ("Y", 0.5, 2)])
    out = apply_rotation_adjoint(s, P("X"), 0.4)
    # Y branch from Z (1 sine) merges into the stored Y (2 sines)
    assert out["Y"].sine_count == 1
    s = PauliSum.from_terms(1, [("Z", 1.0, 3), ("Y", 0.5, 0)])
    out = apply_rotation_adjoint(s, P("X"), 0.4)
    assert out["Y"].sine_count == 0
    assert out["Z"].sine_count == 1


@pytest.mark.parametrize(
    "kind,sites,label,expected",
    [("H", (0,), "Z", "X"), ("CNOT", (0, 1), "IZ", "ZZ"), ("S", (0,), "X", "Y")],
)
def test_clifford_examples_match_conjugation(kind, sites, label, expected):
    gate = CliffordGate(kind, sites)
    out = apply_clifford(S({label: 1.0}), gate)
    assert list(out.to_dict()) == [expected]
    n = len(label)
    circ = ParametrizedCircuit(n, [gate], 0, [])
    c = dense(circ)
    assert_sum_equals_matrix(out, c.conj().T @ P(label).to_matrix() @ c)


def test_clifford_keeps_sines_and_count():
    s = PauliSum.from_terms(2, [("XZ", 0.3, 2), ("YI", 0.2, 1), ("ZZ", 0.1, 0)])
    out = apply_clifford(s, CliffordGate("CNOT", (1, 0)))
    assert len(out) == len(s)
    assert sorted(t.sine_count for t in out) == [0, 1, 2]


def test_clifford_bad_site():
    with pytest.raises(ValueError):
        apply_clifford(S({"Z": 1.0}), CliffordGate("H", (3,)))


def test_empty_circuit_is_identity():
    seed = S({"XZ": 0.5, "YY": -0.25})
    out, _ = propagate(identity_circuit(2), [], seed)
    assert out.to_dict() == seed.to_dict()


def test_single_rotation_matches_kernel():
    circ = rotation_circuit(2, ["XY"], [0.8])
    seed = S({"ZI": 1.0, "IZ": 0.5})
    out, _ = propagate(circ, None, seed)
    assert out.to_dict() == apply_rotation_adjoint(seed, P("XY"), 0.8).to_dict()


def test_param_length_mismatch():
    circ = rotation_circuit(1, ["X"], [0.1])
    with pytest.raises(ValueError):
        propagate(circ, [0.1, 0.2], S({"Z": 1.0}))


@pytest.mark.parametrize("seed", range(3))
def test_exact_against_dense_for_all_seed_strings(seed):
    rng = np.random.default_rng(seed)
    n = 3
    circ = random_circuit(n, 15, rng)
    u = dense(circ)
    for code in range(4**n):
        p = PauliString(n, code)
        heis, _ = propagate(circ, None, PauliSum.single(p), Direction.HEISENBERG)
        adj, _ = propagate(circ, None, PauliSum.single(p), Direction.ADJOINT)
        pm = p.to_matrix()
        assert_sum_equals_matrix(heis, u.conj().T @ pm @ u)
        assert_sum_equals_matrix(adj, u @ pm @ u.conj().T)


def test_zero_state_expectation_matches_statevector():
    rng = np.random.default_rng(11)
    circ = random_circuit(4, 20, rng)
    for code in rng.choice(256, 40, replace=False):
        seed = PauliSum.single(PauliString(4, int(code)))
        out, _ = propagate(circ, None, seed)
        assert overlap_with_zero(out) == pytest.approx(oracle.heisenberg_expectation(circ, None, seed), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_unitarity(seed, n):
    rng = np.random.default_rng(seed)
    circ = random_circuit(n, 12, rng)
    obs = PauliSum.from_terms(n, [(PauliString(n, int(c)), float(rng.normal())) for c in rng.integers(4**n, size=4)])
    out, _ = propagate(circ, None, obs)
    assert out.norm_squared() == pytest.approx(obs.norm_squared(), rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_adjoint_consistency(seed):
    rng = np.random.default_rng(seed)
    n = 4
    circ = random_circuit(n, 14, rng)
    p, q = (PauliSum.single(PauliString(n, int(c))) for c in rng.integers(1, 4**n, size=2))
    a, _ = propagate(circ, None, p, Direction.ADJOINT)
    b, _ = propagate(circ, None, q, Direction.HEISENBERG)
    assert inner_product(a, q) == pytest.approx(inner_product(b, p), abs=1e-12)


def _tfim_like(n, layers, rng):
    gens, angles = [], []
    for _ in range(layers):
        for i in range(n):
            gens.append(PauliString.from_sites(n, {i: "X"}))
            angles.append(rng.uniform(-0.6, 0.6))
        for i in range(n - 1):
            gens.append(PauliString.from_sites(n, {i: "Z", i + 1: "Z"}))
            angles.append(rng.uniform(-0.6, 0.6))
    return rotation_circuit(n, gens, angles)


@settings(max_examples=25, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.sampled_from(["max_weight", "max_sines"]),
    st.integers(1, 5),
)
def test_loosening_a_bound_keeps_surviving_terms(seed, knob, tight):
    rng = np.random.default_rng(seed)
    circ = _tfim_like(6, 2, rng)
    strict = TruncationConfig(**{knob: tight})
    loose = TruncationConfig(**{knob: tight + 1})
    seed_sum = S({"IIZIII": 1.0})
    a, _ = propagate(circ, None, seed_sum, trunc=strict)
    b, _ = propagate(circ, None, seed_sum, trunc=loose)
    assert set(a.codes.tolist()) <= set(b.codes.tolist())


@pytest.mark.parametrize("seed", range(5))
def test_loosening_coefficient_cutoff_keeps_surviving_terms(seed):
    rng = np.random.default_rng(seed)
    circ = _tfim_like(6, 2, rng)
    seed_sum = S({"IIZIII": 1.0})
    a, _ = propagate(circ, None, seed_sum, trunc=TruncationConfig(coeff_eps=1e-2))
    b, _ = propagate(circ, None, seed_sum, trunc=TruncationConfig(coeff_eps=1e-4))
    assert set(a.codes.tolist()) <= set(b.codes.tolist())


def test_stats_record_truncations():
    rng = np.random.default_rng(2)
    circ = _tfim_like(6, 3, rng)
    seed_sum = S({"IIZIII": 1.0})
    exact, st_exact = propagate(circ, None, seed_sum)
    out, stats = propagate(circ, None, seed_sum, trunc=TruncationConfig(max_weight=2, coeff_eps=1e-3, max_sines=3))
    assert st_exact.truncated_by_weight == st_exact.truncated_by_coeff == st_exact.truncated_by_sines == 0
    assert stats.truncated_by_weight > 0 and stats.truncated_by_coeff > 0
    assert stats.discarded_coefficient_mass > 0
    assert stats.peak_terms >= len(out)
    assert stats.gates_applied == len(circ.gates)
    assert max(out.sines) <= 3
    assert max(PauliString(6, int(c)).weight for c in out.codes) <= 2


def test_term_cap_raises_resource_error():
    rng = np.random.default_rng(0)
    circ = _tfim_like(6, 3, rng)
    with pytest.raises(ResourceError):
        propagate(circ, None, S({"IIZIII": 1.0}), max_terms=5)


def test_inner_product_examples():
    assert inner_product(S({"Z": 1.0}), S({"Z": 1.0})) == 1.0
    assert inner_product(S({"XI": 1.0}), S({"IZ": 2.0})) == 0.0
    assert inner_product(S({"Z": 0.6, "X": 0.8}), S({"Z": 0.5, "Y": 1.0})) == pytest.approx(0.3)


def test_non_adjacent_two_site_generators_are_allowed():
    gen = PauliString.from_sites(5, {0: "Z", 4: "Z"})
    circ = ParametrizedCircuit(5, [PauliRotation(gen, 0)], 1, [0.4])
    out, _ = propagate(circ, None, S({"XIIII": 1.0}))
    assert len(out) == 2


def test_large_register_object_path():
    n = 34
    gens = [PauliString.from_sites(n, {0: "X"}), PauliString.from_sites(n, {0: "Z", 33: "Z"})]
    circ = rotation_circuit(n, gens, [0.3, 0.5])
    seed = PauliSum.single(PauliString.from_sites(n, {0: "Z"}))
    out, _ = propagate(circ, None, seed)
    small = rotation_circuit(2, ["XI", "ZZ"], [0.3, 0.5])
    ref, _ = propagate(small, None, S({"ZI": 1.0}))
    assert sorted(out.coeffs.tolist()) == pytest.approx(sorted(ref.coeffs.tolist()))


def test_stats_absorb():
    a = PropagationStats(peak_terms=3, truncated_by_weight=1, gates_applied=2, seeds_propagated=1)
    b = PropagationStats(peak_terms=5, truncated_by_coeff=2, gates_applied=4, seeds_propagated=1)
    a.absorb(b)
    assert a.peak_terms == 5 and a.truncated_by_coeff == 2 and a.gates_applied == 6 and a.seeds_propagated == 2
