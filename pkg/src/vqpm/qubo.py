"""QUBO instances, energies, influence scores and the exhaustive oracle.

Bit convention used throughout the package: variable ``i`` is bit ``i`` of a
basis-state index (least-significant first).  The textual bitstring form puts
variable 0 leftmost, so index 6 for ``n = 3`` is ``"011"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

ORACLE_CAP = 20


class ResourceLimitError(RuntimeError):
    """Raised when a request would need an infeasible 2^n allocation."""


def _as_bits(x, n: int) -> np.ndarray:
    if isinstance(x, str):
        x = [int(c) for c in x.strip()]
    bits = np.asarray(x, dtype=np.int64).ravel()
    if bits.size != n:
        raise ValueError(f"bitstring has length {bits.size}, expected {n}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bitstring entries must be 0 or 1")
    return bits


def bits_to_index(x) -> int:
    """Basis index of a bitstring (variable 0 is the least-significant bit)."""
    if isinstance(x, str):
        x = [int(c) for c in x.strip()]
    return int(sum(int(b) << i for i, b in enumerate(x)))


def index_to_bits(index: int, n: int) -> tuple[int, ...]:
    return tuple((int(index) >> i) & 1 for i in range(n))


def format_bits(x) -> str:
    return "".join(str(int(b)) for b in x)


def parse_bits(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"not a bitstring: {text!r}")
    return tuple(int(c) for c in text)


@dataclass(frozen=True)
class QuboInstance:
    """Upper-triangular QUBO coefficient table for ``n`` binary variables.

    ``coeffs[i, j]`` holds ``q_ij`` for ``i <= j``; entries below the diagonal
    are always zero.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        q = np.array(self.coeffs, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("coefficients must form a square matrix")
        if q.shape[0] < 1:
            raise ValueError("a QUBO instance needs at least one variable")
        if not np.all(np.isfinite(q)):
            raise ValueError("coefficients must be finite")
        if np.any(np.tril(q, -1) != 0):
            raise ValueError("only the upper triangle (i <= j) may be populated")
        q.setflags(write=False)
        object.__setattr__(self, "coeffs", q)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def from_terms(cls, n: int, terms: dict[tuple[int, int], float]) -> "QuboInstance":
        """Build from ``{(i, j): q_ij}``; a pair with ``i > j`` is folded onto ``(j, i)``."""
        if n < 1:
            raise ValueError("n must be >= 1")
        q = np.zeros((n, n))
        for (i, j), value in terms.items():
            i, j = min(i, j), max(i, j)
            q[i, j] += value
        return cls(q)

    def symmetrized(self) -> np.ndarray:
        """Full matrix with ``Q_ij = Q_ji = q_ij`` off the diagonal."""
        q = self.coeffs
        return q + np.triu(q, 1).T

    def terms(self) -> Iterable[tuple[int, int, float]]:
        for i, j in zip(*np.triu_indices(self.n)):
            yield int(i), int(j), float(self.coeffs[i, j])


@dataclass(frozen=True)
class EnergyBounds:
    lower: float
    upper: float


@dataclass(frozen=True)
class OracleResult:
    min_energy: float
    argmin: tuple[tuple[int, ...], ...]
    sorted_spectrum: np.ndarray = field(repr=False)
    eigengap: float

    @property
    def target(self) -> tuple[int, ...]:
        return self.argmin[0]

    @property
    def degenerate(self) -> bool:
        return len(self.argmin) > 1


def generate_random(n: int, seed: int, coeff_range: tuple[float, float] = (-1.0, 1.0)) -> QuboInstance:
    """Random instance with every ``q_ij`` (i <= j) i.i.d. uniform on ``coeff_range``.

    Coefficients are drawn in row-major order over the upper triangle from
    ``numpy.random.default_rng(seed)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = map(float, coeff_range)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ValueError(f"invalid coefficient range {coeff_range}")
    rng = np.random.default_rng(seed)
    rows, cols = np.triu_indices(n)
    q = np.zeros((n, n))
    q[rows, cols] = rng.uniform(lo, hi, size=rows.size) if hi > lo else lo
    return QuboInstance(q)


def energy(instance: QuboInstance, x) -> float:
    """QUBO energy ``sum_i q_ii x_i + sum_{i<j} q_ij x_i x_j``."""
    bits = _as_bits(x, instance.n).astype(np.float64)
    return float(bits @ instance.coeffs @ bits)


def energy_bounds(instance: QuboInstance) -> EnergyBounds:
    q = instance.coeffs
    return EnergyBounds(lower=float(np.minimum(q, 0).sum()), upper=float(np.maximum(q, 0).sum()))


def influence_scores(instance: QuboInstance) -> np.ndarray:
    """Absolute row sums of the symmetrized matrix over their maximum.

    An all-zero instance gets a score of 1 for every variable.
    """
    rows = np.abs(instance.symmetrized()).sum(axis=1)
    top = rows.max()
    if top == 0:
        return np.ones(instance.n)
    return rows / top


def _energies_by_enumeration(instance: QuboInstance, chunk: int = 1 << 16) -> np.ndarray:
    # Direct quadratic form over an explicit bit matrix, chunked to bound memory.
    n = instance.n
    q = instance.coeffs
    out = np.empty(1 << n)
    shifts = np.arange(n)
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, min(start + chunk, 1 << n))
        bits = ((idx[:, None] >> shifts) & 1).astype(np.float64)
        out[start : start + idx.size] = np.einsum("ki,ij,kj->k", bits, q, bits)
    return out


def brute_force_solve(instance: QuboInstance, cap: int = ORACLE_CAP, rtol: float = 1e-12) -> OracleResult:
    """Exhaustively enumerate all ``2^n`` bitstrings.

    Energies within ``rtol`` (relative to the coefficient scale) of the
    minimum are treated as ties when building the argmin set and the gap.
    """
    n = instance.n
    if n > cap:
        raise ResourceLimitError(f"n={n} exceeds the oracle cap of {cap}")
    energies = _energies_by_enumeration(instance)
    scale = max(1.0, float(np.abs(instance.coeffs).sum()))
    e_min = float(energies.min())
    tie = np.flatnonzero(energies <= e_min + rtol * scale)
    spectrum = np.sort(energies)
    above = spectrum[spectrum > e_min + rtol * scale]
    gap = float(above[0] - e_min) if above.size else 0.0
    return OracleResult(
        min_energy=e_min,
        argmin=tuple(index_to_bits(i, n) for i in tie),
        sorted_spectrum=spectrum,
        eigengap=gap,
    )


def read_instance(path) -> QuboInstance:
    """Read the textual format: ``n`` on the first line, then ``i j q_ij`` lines."""
    n = None
    terms: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 1:
                raise ValueError(f"{path}:{lineno}: expected the variable count")
            n = int(parts[0])
            continue
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'i j q_ij'")
        i, j, value = int(parts[0]), int(parts[1]), float(parts[2])
        if not (0 <= i <= j < n):
            raise ValueError(f"{path}:{lineno}: need 0 <= i <= j < n, got ({i}, {j})")
        terms[(i, j)] = terms.get((i, j), 0.0) + value
    if n is None:
        raise ValueError(f"{path}: empty instance file")
    return QuboInstance.from_terms(n, terms)


def write_instance(instance: QuboInstance, path, comment: str | None = None) -> None:
    lines = [f"# {comment}"] if comment else []
    lines.append(str(instance.n))
    lines += [f"{i} {j} {value!r}" for i, j, value in instance.terms() if value != 0]
    Path(path).write_text("\n".join(lines) + "\n")


def hamming_distance(a: Sequence[int] | str, b: Sequence[int] | str) -> int:
    a = parse_bits(a) if isinstance(a, str) else tuple(a)
    b = parse_bits(b) if isinstance(b, str) else tuple(b)
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return sum(int(x) != int(y) for x, y in zip(a, b))
