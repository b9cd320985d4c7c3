"""Pauli strings and sparse Pauli-basis observables.

Strings are packed two bits per site: bit ``2*i`` carries the X component of
site ``i`` and bit ``2*i + 1`` the Z component, so the per-site codes are
``I=0, X=1, Z=2, Y=3``. Site 0 is the least significant pair and the leftmost
character of a text label ("IXYZ" has X on site 1).

Observables are stored as ``O = sum_P a_P P`` with the orthonormal inner
product ``<<A|B>> = sum_P a_P b_P``, so ``<0|O|0>`` is the sum of the
coefficients on {I, Z}-only strings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

__all__ = [
    "PauliString",
    "PauliTerm",
    "PauliSum",
    "weight",
    "commutes",
    "multiply",
    "overlap_with_zero",
    "MAX_NATIVE_QUBITS",
]

# Above this size codes live in object arrays of Python ints.
MAX_NATIVE_QUBITS = 32

_SYMBOLS = "IXZY"
_CODE = {"I": 0, "X": 1, "Z": 2, "Y": 3}
_PHASES = (1, 1j, -1, -1j)


def _even_mask(n_qubits: int) -> int:
    return int("01" * n_qubits, 2) if n_qubits else 0


def code_dtype(n_qubits: int):
    return np.uint64 if n_qubits <= MAX_NATIVE_QUBITS else object


def popcount(arr: np.ndarray) -> np.ndarray:
    """Per-element population count for uint64 or object arrays."""
    if arr.dtype == object:
        return np.fromiter((int(v).bit_count() for v in arr), dtype=np.int64, count=len(arr))
    return np.bitwise_count(arr).astype(np.int64)


def as_codes(values, n_qubits: int) -> np.ndarray:
    dtype = code_dtype(n_qubits)
    if dtype is object:
        out = np.empty(len(values), dtype=object)
        out[:] = [int(v) for v in values]
        return out
    return np.asarray(values, dtype=np.uint64)


def scalar_code(code: int, n_qubits: int):
    """Packed code as a scalar compatible with arrays from :func:`as_codes`."""
    return np.uint64(code) if n_qubits <= MAX_NATIVE_QUBITS else int(code)


def split_xz(codes: np.ndarray, n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    even = scalar_code(_even_mask(n_qubits), n_qubits)
    one = scalar_code(1, n_qubits)
    return codes & even, (codes >> one) & even


def weights(codes: np.ndarray, n_qubits: int) -> np.ndarray:
    x, z = split_xz(codes, n_qubits)
    return popcount(x | z)


def anticommutes_with(codes: np.ndarray, gen_code: int, n_qubits: int) -> np.ndarray:
    """Boolean mask of codes anticommuting with a single packed string."""
    x, z = split_xz(codes, n_qubits)
    gx = scalar_code(gen_code & _even_mask(n_qubits), n_qubits)
    gz = scalar_code((gen_code >> 1) & _even_mask(n_qubits), n_qubits)
    return (popcount((x & gz) ^ (z & gx)) & 1).astype(bool)


def product_phase_exponent(left, right, n_qubits: int):
    """Exponent ``k`` (mod 4) with ``left * right = i**k * (left ^ right)``.

    Works elementwise on arrays or on plain ints. Per site XY, YZ and ZX
    contribute +1 and the reversed pairs contribute -1.
    """
    even = _even_mask(n_qubits)
    if isinstance(left, np.ndarray) or isinstance(right, np.ndarray):
        even = scalar_code(even, n_qubits)
        one = scalar_code(1, n_qubits)
        cnt = popcount
    else:
        one = 1

        def cnt(v):
            return int(v).bit_count()

    x1, z1 = left & even, (left >> one) & even
    x2, z2 = right & even, (right >> one) & even
    px, py, pz = x1 & ~z1 & even, x1 & z1, z1 & ~x1 & even
    qx, qy, qz = x2 & ~z2 & even, x2 & z2, z2 & ~x2 & even
    pos = (px & qy) | (py & qz) | (pz & qx)
    neg = (py & qx) | (pz & qy) | (px & qz)
    return (cnt(pos) - cnt(neg)) % 4


@dataclass(frozen=True, slots=True)
class PauliString:
    """An n-qubit Pauli word in the packed two-bit encoding."""

    n_qubits: int
    code: int

    def __post_init__(self):
        if self.n_qubits <= 0:
            raise ValueError("n_qubits must be positive")
        if self.code < 0 or self.code >> (2 * self.n_qubits):
            raise ValueError("code has bits beyond n_qubits")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        code = 0
        for site, ch in enumerate(label.upper()):
            try:
                code |= _CODE[ch] << (2 * site)
            except KeyError:
                raise ValueError(f"invalid Pauli symbol {ch!r} in {label!r}") from None
        return cls(len(label), code)

    @classmethod
    def from_sites(cls, n_qubits: int, ops: Mapping[int, str]) -> "PauliString":
        """Build from a sparse ``{site: symbol}`` mapping."""
        code = 0
        for site, ch in ops.items():
            if not 0 <= site < n_qubits:
                raise IndexError(f"site {site} out of range for {n_qubits} qubits")
            code |= _CODE[ch.upper()] << (2 * site)
        return cls(n_qubits, code)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0)

    def symbol(self, site: int) -> str:
        if not 0 <= site < self.n_qubits:
            raise IndexError(site)
        return _SYMBOLS[(self.code >> (2 * site)) & 3]

    @property
    def label(self) -> str:
        return "".join(_SYMBOLS[(self.code >> (2 * i)) & 3] for i in range(self.n_qubits))

    @property
    def weight(self) -> int:
        return weight(self)

    def support(self) -> list[int]:
        return [i for i in range(self.n_qubits) if (self.code >> (2 * i)) & 3]

    def to_matrix(self) -> np.ndarray:
        """Dense ``2**n`` matrix; qubit ``i`` is bit ``i`` of the basis index."""
        mats = {
            "I": np.eye(2, dtype=complex),
            "X": np.array([[0, 1], [1, 0]], dtype=complex),
            "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
            "Z": np.array([[1, 0], [0, -1]], dtype=complex),
        }
        out = np.ones((1, 1), dtype=complex)
        # kron puts its first factor on the most significant bit
        for ch in reversed(self.label):
            out = np.kron(out, mats[ch])
        return out

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"PauliString({self.label!r})"


def _check_pair(p: PauliString, q: PauliString) -> None:
    if p.n_qubits != q.n_qubits:
        raise ValueError(f"qubit count mismatch: {p.n_qubits} vs {q.n_qubits}")


def weight(p: PauliString) -> int:
    """Number of sites carrying X, Y or Z."""
    even = _even_mask(p.n_qubits)
    return ((p.code | (p.code >> 1)) & even).bit_count()


def commutes(p: PauliString, q: PauliString) -> bool:
    _check_pair(p, q)
    even = _even_mask(p.n_qubits)
    x1, z1 = p.code & even, (p.code >> 1) & even
    x2, z2 = q.code & even, (q.code >> 1) & even
    return ((x1 & z2) ^ (z1 & x2)).bit_count() % 2 == 0


def multiply(p: PauliString, q: PauliString) -> tuple[PauliString, complex]:
    """Return ``(r, phase)`` with ``p @ q == phase * r`` and phase in {1, i, -1, -i}."""
    _check_pair(p, q)
    k = product_phase_exponent(p.code, q.code, p.n_qubits)
    return PauliString(p.n_qubits, p.code ^ q.code), _PHASES[k]


@dataclass(frozen=True, slots=True)
class PauliTerm:
    string: PauliString
    coefficient: float
    sine_count: int = 0


class PauliSum:
    """Sparse observable ``sum_P a_P P`` with per-term sine counts.

    Terms are kept in three parallel arrays sorted by packed code, which is
    also the iteration order. Each string appears at most once.
    """

    __slots__ = ("n_qubits", "codes", "coeffs", "sines")

    def __init__(self, n_qubits: int, codes=None, coeffs=None, sines=None, *, _trusted=False):
        if n_qubits <= 0:
            raise ValueError("n_qubits must be positive")
        self.n_qubits = n_qubits
        if codes is None:
            codes, coeffs, sines = [], [], []
        codes = as_codes(codes, n_qubits) if not _trusted else codes
        coeffs = np.asarray(coeffs, dtype=np.float64)
        sines = np.zeros(len(codes), dtype=np.int64) if sines is None else np.asarray(sines, dtype=np.int64)
        if not (len(codes) == len(coeffs) == len(sines)):
            raise ValueError("codes, coeffs and sines must have equal length")
        if not _trusted:
            if len(codes) and max(int(c) for c in codes) >> (2 * n_qubits):
                raise ValueError("code has bits beyond n_qubits")
            order = np.argsort(codes, kind="stable")
            codes, coeffs, sines = codes[order], coeffs[order], sines[order]
            if len(codes) > 1 and np.any(codes[1:] == codes[:-1]):
                raise ValueError("duplicate Pauli strings; merge before constructing")
            keep = coeffs != 0.0
            codes, coeffs, sines = codes[keep], coeffs[keep], sines[keep]
        self.codes = codes
        self.coeffs = coeffs
        self.sines = sines

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable) -> "PauliSum":
        """Build from ``(label_or_string, coeff)`` or ``(.., coeff, sines)`` tuples, merging repeats."""
        acc: dict[int, list] = {}
        for item in terms:
            if isinstance(item, PauliTerm):
                key, c, s = item.string, item.coefficient, item.sine_count
            else:
                key, c, *rest = item
                s = rest[0] if rest else 0
            if isinstance(key, str):
                key = PauliString.from_label(key)
            if key.n_qubits != n_qubits:
                raise ValueError("string length does not match n_qubits")
            if key.code in acc:
                acc[key.code][0] += c
                acc[key.code][1] = min(acc[key.code][1], s)
            else:
                acc[key.code] = [float(c), int(s)]
        codes = list(acc)
        return cls(n_qubits, codes, [acc[k][0] for k in codes], [acc[k][1] for k in codes])

    @classmethod
    def from_dict(cls, mapping: Mapping[str, float]) -> "PauliSum":
        labels = list(mapping)
        if not labels:
            raise ValueError("cannot infer n_qubits from an empty mapping")
        return cls.from_terms(len(labels[0]), mapping.items())

    @classmethod
    def single(cls, string: PauliString, coefficient: float = 1.0) -> "PauliSum":
        return cls(string.n_qubits, [string.code], [coefficient], [0])

    def __len__(self) -> int:
        return len(self.codes)

    def __iter__(self) -> Iterator[PauliTerm]:
        for code, c, s in zip(self.codes, self.coeffs, self.sines):
            yield PauliTerm(PauliString(self.n_qubits, int(code)), float(c), int(s))

    def _index(self, key) -> int:
        if isinstance(key, str):
            key = PauliString.from_label(key)
        code = scalar_code(key.code, self.n_qubits)
        i = int(np.searchsorted(self.codes, code))
        if i < len(self.codes) and self.codes[i] == code:
            return i
        return -1

    def __contains__(self, key) -> bool:
        return self._index(key) >= 0

    def __getitem__(self, key) -> PauliTerm:
        i = self._index(key)
        if i < 0:
            raise KeyError(key)
        return PauliTerm(PauliString(self.n_qubits, int(self.codes[i])), float(self.coeffs[i]), int(self.sines[i]))

    def coefficient(self, key) -> float:
        i = self._index(key)
        return float(self.coeffs[i]) if i >= 0 else 0.0

    def to_dict(self) -> dict[str, float]:
        return {t.string.label: t.coefficient for t in self}

    def norm_squared(self) -> float:
        return float(np.dot(self.coeffs, self.coeffs))

    def copy(self) -> "PauliSum":
        return PauliSum(self.n_qubits, self.codes.copy(), self.coeffs.copy(), self.sines.copy(), _trusted=True)

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for term in self:
            out += term.coefficient * term.string.to_matrix()
        return out

    def __repr__(self) -> str:
        body = ", ".join(f"{t.string.label}: {t.coefficient:.6g}" for t in list(self)[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"PauliSum({{{body}{more}}})"


def overlap_with_zero(s: PauliSum) -> float:
    """``<0|O|0>``: sum of coefficients on strings without X or Y."""
    x, _ = split_xz(s.codes, s.n_qubits)
    mask = x == scalar_code(0, s.n_qubits)
    return float(np.sum(s.coeffs[mask]))
