"""Lattice connectivity: open/periodic square lattices and heavy-hex devices."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from itertools import combinations

import numpy as np

from .errors import ConfigurationError

BOUNDARIES = ("open", "periodic-x", "periodic-y", "periodic-both")
HEAVY_HEX_SIZES = (12, 127)


@dataclass(frozen=True)
class Topology:
    """Sites, coordinates and edges of a lattice.

    Square sites are numbered row-major, ``site = y * n_x + x``.
    ``nn_axes[i]`` is ``"x"`` or ``"y"`` for square lattices and ``""``
    for heavy-hex edges.
    """

    kind: str
    n_sites: int
    coords: tuple
    nn_edges: tuple
    nnn_edges: tuple
    boundary: str = "open"
    n_x: int = 0
    n_y: int = 0
    nn_axes: tuple = ()
    translation_vectors: tuple = field(default=())

    def __post_init__(self):
        for edges in (self.nn_edges, self.nnn_edges):
            seen = set()
            for a, b in edges:
                if a == b:
                    raise ValueError(f"self-loop at site {a}")
                if not (0 <= a < self.n_sites and 0 <= b < self.n_sites):
                    raise ValueError(f"edge ({a}, {b}) references a missing site")
                key = (min(a, b), max(a, b))
                if key in seen:
                    raise ValueError(f"duplicate edge {key}")
                seen.add(key)

    @property
    def is_translation_invariant(self) -> bool:
        return bool(self.translation_vectors)

    def translate(self, site: int, dx: int, dy: int) -> int:
        if self.kind != "square":
            raise ConfigurationError("translations are defined for square lattices only")
        x, y = self.coords[site]
        return ((y + dy) % self.n_y) * self.n_x + (x + dx) % self.n_x

    def translation_permutations(self) -> list[tuple[int, ...]]:
        """Site permutations for the generating translations."""
        return [tuple(self.translate(s, dx, dy) for s in range(self.n_sites)) for dx, dy in self.translation_vectors]

    def periodic_directions(self) -> list[tuple[int, int]]:
        """Unit vectors of the periodic directions (also for cylinders)."""
        if self.kind != "square":
            return []
        vectors = []
        if self.boundary in ("periodic-x", "periodic-both"):
            vectors.append((1, 0))
        if self.boundary in ("periodic-y", "periodic-both"):
            vectors.append((0, 1))
        return vectors

    def symmetry_permutations(self) -> list[tuple[int, ...]]:
        """Unit translations along every periodic direction."""
        return [tuple(self.translate(s, dx, dy) for s in range(self.n_sites)) for dx, dy in self.periodic_directions()]

    def all_translations(self) -> list[tuple[int, ...]]:
        """Every element of the translation group, identity first."""
        if not self.is_translation_invariant:
            return [tuple(range(self.n_sites))]
        return [
            tuple(self.translate(s, dx, dy) for s in range(self.n_sites))
            for dy in range(self.n_y)
            for dx in range(self.n_x)
        ]


def _add(edges: list, axes: list | None, a: int, b: int, axis: str = "") -> None:
    if a == b:
        return
    key = (min(a, b), max(a, b))
    if key not in {(min(e), max(e)) for e in edges}:
        edges.append(key)
        if axes is not None:
            axes.append(axis)


def square_lattice(n_x: int, n_y: int, boundary: str = "open") -> Topology:
    if boundary not in BOUNDARIES:
        raise ConfigurationError(f"unknown boundary {boundary!r}; expected one of {BOUNDARIES}")
    if n_x < 2 or n_y < 2:
        raise ConfigurationError("square lattices need n_x, n_y >= 2")
    px = boundary in ("periodic-x", "periodic-both")
    py = boundary in ("periodic-y", "periodic-both")

    def site(x, y):
        return (y % n_y) * n_x + (x % n_x)

    nn: list = []
    axes: list = []
    nnn: list = []
    for y in range(n_y):
        for x in range(n_x):
            s = site(x, y)
            if x + 1 < n_x or px:
                _add(nn, axes, s, site(x + 1, y), "x")
            if y + 1 < n_y or py:
                _add(nn, axes, s, site(x, y + 1), "y")
            for dy in (1, -1):
                xin = x + 1 < n_x or px
                yin = (0 <= y + dy < n_y) or py
                if xin and yin:
                    _add(nnn, None, s, site(x + 1, y + dy))
    coords = tuple((x, y) for y in range(n_y) for x in range(n_x))
    trans = ((1, 0), (0, 1)) if boundary == "periodic-both" else ()
    return Topology(
        "square", n_x * n_y, coords, tuple(nn), tuple(nnn), boundary, n_x, n_y, tuple(axes), trans
    )


def heavy_hex_127_edges() -> list[tuple[int, int]]:
    """Coupling map of the 127-qubit heavy-hex layout.

    Seven rows (14, 15, 15, 15, 15, 15, 14 qubits) joined by four bridge
    qubits per gap. Bridges sit at row columns 0, 4, 8, 12 for even gaps
    and 2, 6, 10, 14 for odd gaps; the first row spans columns 0-13 and the
    last row columns 1-14.
    """
    row_cols = [range(0, 14)] + [range(0, 15)] * 5 + [range(1, 15)]
    index: dict[tuple[int, int], int] = {}
    edges: list[tuple[int, int]] = []
    nxt = 0
    rows = []
    for r, cols in enumerate(row_cols):
        rows.append(nxt)
        for c in cols:
            index[(r, c)] = nxt
            nxt += 1
        for c in list(cols)[:-1]:
            edges.append((index[(r, c)], index[(r, c + 1)]))
        if r < len(row_cols) - 1:
            for c in ((0, 4, 8, 12) if r % 2 == 0 else (2, 6, 10, 14)):
                index[("b", r, c)] = nxt
                nxt += 1
    for r in range(len(row_cols) - 1):
        for c in ((0, 4, 8, 12) if r % 2 == 0 else (2, 6, 10, 14)):
            b = index[("b", r, c)]
            edges.append((index[(r, c)], b))
            edges.append((b, index[(r + 1, c)]))
    return sorted((min(a, b), max(a, b)) for a, b in edges)


def _load_fixture(n: int) -> dict:
    text = resources.files("pauli_compress.data").joinpath(f"heavy_hex_{n}.json").read_text()
    return json.loads(text)


def heavy_hex(n: int) -> Topology:
    """Heavy-hex topology from a checked-in coupling map (127 qubits, or the 12-qubit single cell)."""
    if n not in HEAVY_HEX_SIZES:
        raise ConfigurationError(f"heavy-hex size {n} not supported; available: {HEAVY_HEX_SIZES}")
    data = _load_fixture(n)
    nn = tuple(tuple(e) for e in data["edges"])
    adj: dict[int, set] = {s: set() for s in range(n)}
    for a, b in nn:
        adj[a].add(b)
        adj[b].add(a)
    nnn = []
    nn_set = set(nn)
    for s in range(n):
        for a, b in combinations(sorted(adj[s]), 2):
            key = (min(a, b), max(a, b))
            if key not in nn_set and key not in nnn:
                nnn.append(key)
    coords = tuple(tuple(c) for c in data["coords"])
    return Topology("heavy_hex", n, coords, nn, tuple(sorted(nnn)), "open", nn_axes=("",) * len(nn))


def build_topology(kind: str, n_x: int = 0, n_y: int = 0, boundary: str = "open", n_qubits: int = 0) -> Topology:
    if kind == "square":
        return square_lattice(n_x, n_y, boundary)
    if kind == "heavy_hex":
        return heavy_hex(n_qubits or n_x)
    raise ConfigurationError(f"unknown topology kind {kind!r}")


def _write_fixtures(directory) -> None:
    """Regenerate the heavy-hex fixture files (maintenance helper)."""
    from pathlib import Path

    directory = Path(directory)
    edges = heavy_hex_127_edges()
    coords: dict[int, tuple[int, int]] = {}
    row_cols = [range(0, 14)] + [range(0, 15)] * 5 + [range(1, 15)]
    nxt = 0
    for r, cols in enumerate(row_cols):
        for c in cols:
            coords[nxt] = (c, 2 * r)
            nxt += 1
        if r < len(row_cols) - 1:
            for c in ((0, 4, 8, 12) if r % 2 == 0 else (2, 6, 10, 14)):
                coords[nxt] = (c, 2 * r + 1)
                nxt += 1
    (directory / "heavy_hex_127.json").write_text(
        json.dumps({"n_qubits": 127, "edges": edges, "coords": [coords[i] for i in range(127)]})
    )
    # one heavy hexagon: 6 degree-2 corners plus 6 edge qubits, as a ring
    ring = [(i, (i + 1) % 12) for i in range(12)]
    angle = np.arange(12) * np.pi / 6
    ring_coords = [(int(round(4 * np.cos(a))), int(round(4 * np.sin(a)))) for a in angle]
    (directory / "heavy_hex_12.json").write_text(
        json.dumps({"n_qubits": 12, "edges": sorted((min(e), max(e)) for e in ring), "coords": ring_coords})
    )
