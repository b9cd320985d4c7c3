from collections import Counter

import pytest

from pauli_compress.errors import ConfigurationError
from pauli_compress.lattice import build_topology, heavy_hex, square_lattice


def test_open_2x2():
    t = square_lattice(2, 2)
    assert t.n_sites == 4
    assert len(t.nn_edges) == 4
    assert len(t.nnn_edges) == 2
    assert not t.is_translation_invariant


def test_periodic_3x3_edge_count():
    t = square_lattice(3, 3, "periodic-both")
    assert t.n_sites == 9 and len(t.nn_edges) == 18
    assert t.is_translation_invariant


@pytest.mark.parametrize("nx,ny", [(3, 3), (4, 3), (5, 4)])
def test_periodic_edge_formula(nx, ny):
    assert len(square_lattice(nx, ny, "periodic-both").nn_edges) == 2 * nx * ny


def test_cylinder_edges_and_axes():
    t = square_lattice(5, 4, "periodic-y")
    assert len(t.nn_edges) == 4 * 4 + 5 * 4
    assert Counter(t.nn_axes) == {"x": 16, "y": 20}
    assert not t.is_translation_invariant
    assert len(t.symmetry_permutations()) == 1


def test_nnn_edges_are_diagonal():
    t = square_lattice(4, 3)
    for a, b in t.nnn_edges:
        (xa, ya), (xb, yb) = t.coords[a], t.coords[b]
        assert abs(xa - xb) == 1 and abs(ya - yb) == 1


def test_edges_valid_and_unique():
    for t in (square_lattice(4, 3, "periodic-both"), heavy_hex(127), heavy_hex(12)):
        for edges in (t.nn_edges, t.nnn_edges):
            keys = [tuple(sorted(e)) for e in edges]
            assert len(set(keys)) == len(keys)
            assert all(a != b and 0 <= a < t.n_sites and 0 <= b < t.n_sites for a, b in edges)


def test_heavy_hex_127_fixture():
    t = heavy_hex(127)
    assert t.n_sites == 127 and len(t.nn_edges) == 144
    deg = Counter()
    for a, b in t.nn_edges:
        deg[a] += 1
        deg[b] += 1
    assert Counter(deg[s] for s in range(127)) == {1: 2, 2: 89, 3: 36}


def test_heavy_hex_small_fixture_is_a_ring():
    t = heavy_hex(12)
    assert t.n_sites == 12 and len(t.nn_edges) == 12


def test_unsupported_inputs():
    with pytest.raises(ConfigurationError):
        heavy_hex(27)
    with pytest.raises(ConfigurationError):
        square_lattice(1, 3)
    with pytest.raises(ConfigurationError):
        square_lattice(3, 3, "twisted")
    with pytest.raises(ConfigurationError):
        build_topology("triangle", 3, 3)


def test_translations_are_permutations_preserving_edges():
    t = square_lattice(4, 3, "periodic-both")
    edges = {tuple(sorted(e)) for e in t.nn_edges}
    for perm in t.all_translations():
        assert sorted(perm) == list(range(12))
        assert {tuple(sorted((perm[a], perm[b]))) for a, b in t.nn_edges} == edges
    assert len(t.all_translations()) == 12
