"""Phase encoding and dense state-vector simulation of the (I + U) power step.

States are plain complex ``numpy`` arrays of length ``2^n`` indexed
least-significant-bit first (qubit ``q`` is bit ``q`` of the index).
``U`` is never built; it is the diagonal ``exp(1j * phases)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .qubo import QuboInstance, ResourceLimitError, bits_to_index, energy_bounds

MAX_QUBITS = 26
DEGENERATE_NORM_SQ = 1e-20


class DegenerateStateError(ArithmeticError):
    """A state could not be renormalized because its norm vanished."""


class InvalidCollapseError(ValueError):
    """Collapse requested onto an outcome with zero probability."""


@dataclass(frozen=True)
class PhaseTable:
    """Eigenphases ``lambda_x`` in ``[0, pi/2]`` for every basis state."""

    phases: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.phases, dtype=np.float64)
        n = int(round(math.log2(p.size))) if p.size else -1
        if p.ndim != 1 or n < 0 or (1 << n) != p.size:
            raise ValueError("phase table length must be a power of two")
        p.setflags(write=False)
        object.__setattr__(self, "phases", p)

    @property
    def n(self) -> int:
        return int(self.phases.size).bit_length() - 1

    @cached_property
    def unitary_diagonal(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    @cached_property
    def step_factor(self) -> np.ndarray:
        """Diagonal of ``I + U``."""
        return 1 + self.unitary_diagonal


def num_qubits(state: np.ndarray) -> int:
    n = int(state.size).bit_length() - 1
    if (1 << n) != state.size:
        raise ValueError("state length must be a power of two")
    return n


def _normalized(vec: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vec)
    if norm == 0 or not np.isfinite(norm):
        raise DegenerateStateError("state norm vanished")
    return vec / norm


def _check_pair(state: np.ndarray, table: PhaseTable) -> None:
    if state.size != table.phases.size:
        raise ValueError(f"state has {state.size} amplitudes, phase table has {table.phases.size}")


def energy_table(instance: QuboInstance) -> np.ndarray:
    """Energies of all ``2^n`` bitstrings by incremental bit additions.

    For ``x < 2^b``, ``E(x + 2^b) = E(x) + q_bb + sum_{j<b} x_j q_jb``.  The
    coupling field ``sum_j x_j q_jb`` is itself grown one bit at a time, so each
    new block costs O(2^b) additions instead of re-evaluating the quadratic form.
    """
    n = instance.n
    if n > MAX_QUBITS:
        raise ResourceLimitError(f"n={n} exceeds the simulator cap of {MAX_QUBITS}")
    q = instance.coeffs
    energies = np.zeros(1 << n)
    for b in range(n):
        size = 1 << b
        field = np.zeros(size)
        for c in range(b):
            field[1 << c : 2 << c] = field[: 1 << c] + q[c, b]
        energies[size : 2 * size] = energies[:size] + q[b, b] + field
    return energies


def build_phase_table(instance: QuboInstance) -> PhaseTable:
    """Map energies linearly onto ``[0, pi/2]`` using the coefficient sign-sum bounds."""
    bounds = energy_bounds(instance)
    energies = energy_table(instance)
    span = bounds.upper - bounds.lower
    if span == 0:
        return PhaseTable(np.zeros_like(energies))
    phases = (energies - bounds.lower) / span * (np.pi / 2)
    return PhaseTable(np.clip(phases, 0.0, np.pi / 2))


def uniform_state(n: int) -> np.ndarray:
    if n > MAX_QUBITS:
        raise ResourceLimitError(f"n={n} exceeds the simulator cap of {MAX_QUBITS}")
    return np.full(1 << n, 1 / math.sqrt(1 << n), dtype=np.complex128)


def basis_state(n: int, x) -> np.ndarray:
    state = np.zeros(1 << n, dtype=np.complex128)
    state[x if isinstance(x, (int, np.integer)) else bits_to_index(x)] = 1.0
    return state


def apply_power_step(state: np.ndarray, table: PhaseTable) -> tuple[np.ndarray, float]:
    """One post-selected step ``(I + U)psi / ||(I + U)psi||``.

    Returns the new state and ``||(I + U)psi||^2 / 4``, the probability of
    reading the ancilla as 0 on this step.
    """
    _check_pair(state, table)
    out = state * table.step_factor
    norm_sq = float(np.vdot(out, out).real)
    # For unit-norm input with phases in [0, pi/2] norm_sq >= 2; only phases near pi get here.
    if norm_sq < DEGENERATE_NORM_SQ:
        raise DegenerateStateError("(I + U) annihilated the state")
    return out / math.sqrt(norm_sq), norm_sq / 4


def exact_power_reference(table: PhaseTable, k: int) -> np.ndarray:
    """Closed form ``(I + U)^k`` applied to the uniform state, normalized.

    Computed in log-magnitude/phase form so large ``k`` does not overflow:
    ``(1 + e^{i l})^k = (2 cos(l/2))^k e^{i k l / 2}``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    lam = table.phases
    if k == 0:
        return uniform_state(table.n)
    with np.errstate(divide="ignore"):
        log_mag = k * np.log(2 * np.cos(lam / 2))
    log_mag -= log_mag.max()
    amps = np.exp(log_mag) * np.exp(0.5j * k * lam)
    return _normalized(amps)


def eigenvalue_magnitude(lam: float) -> float:
    """``|1 + e^{i lam}| = 2 cos(lam / 2)`` on ``[0, pi]``."""
    if not 0 <= lam <= math.pi:
        raise ValueError(f"phase {lam} outside [0, pi]")
    return 2 * math.cos(lam / 2)


def convergence_ratio(lambda_d: float, lambda_s: float) -> float:
    """Per-step amplitude ratio ``cos(lambda_s/2) / cos(lambda_d/2)``."""
    if not 0 <= lambda_d <= lambda_s <= math.pi / 2:
        raise ValueError("need 0 <= lambda_d <= lambda_s <= pi/2")
    return math.cos(lambda_s / 2) / math.cos(lambda_d / 2)


def iteration_bound(ratio: float, eps: float) -> int:
    """Smallest ``k`` with ``ratio^(2k) <= eps``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if ratio >= 1:
        raise ValueError("ratio >= 1: power iteration does not separate the states")
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    return max(0, math.ceil(math.log(1 / eps) / math.log(1 / ratio**2)))


def marginal_probabilities(state: np.ndarray) -> np.ndarray:
    """Unrounded ``(P0, P1)`` per qubit, shape ``(n, 2)``."""
    n = num_qubits(state)
    probs = state.real**2 + state.imag**2
    low = n // 2
    grid = probs.reshape(1 << (n - low), 1 << low)
    # Column sums carry the low qubits, row sums the high ones.
    p_low = grid.sum(axis=0) @ _bit_weights(low)
    p_high = grid.sum(axis=1) @ _bit_weights(n - low)
    return np.concatenate([p_low, p_high]).reshape(n, 2)


@lru_cache(maxsize=32)
def _bit_weights(m: int) -> np.ndarray:
    """``(2^m, 2m)`` matrix: column ``2q`` selects bit q == 0, ``2q + 1`` bit q == 1."""
    bits = (np.arange(1 << m)[:, None] >> np.arange(m)) & 1
    out = np.empty((1 << m, 2 * m))
    out[:, 0::2] = 1 - bits
    out[:, 1::2] = bits
    out.setflags(write=False)
    return out


def qubit_marginals(state: np.ndarray, precision: int = 3) -> np.ndarray:
    """Per-qubit ``(P0, P1)`` rounded to ``precision`` decimals (numpy half-to-even)."""
    if precision < 1:
        raise ValueError("precision must be >= 1")
    return np.round(marginal_probabilities(state), precision)


def collapse_qubit(state: np.ndarray, q: int, value: int) -> np.ndarray:
    n = num_qubits(state)
    if not 0 <= q < n:
        raise ValueError(f"qubit {q} out of range for n={n}")
    keep = ((np.arange(state.size) >> q) & 1) == value
    out = np.where(keep, state, 0)
    if not np.any(out):
        raise InvalidCollapseError(f"qubit {q} has zero probability of reading {value}")
    return _normalized(out)


def product_state_from_marginals(marginals: np.ndarray, locks=None) -> np.ndarray:
    """Rebuild ``kron_q (sqrt(P0')|0> + sqrt(P1')|1>)`` from per-qubit marginals.

    Locked qubits (``locks.status[q]`` is 0 or 1) become exact basis states;
    free qubits use their marginals renormalized to sum to one.  All phase
    information is dropped.
    """
    marginals = np.asarray(marginals, dtype=np.float64)
    n = marginals.shape[0]
    status = locks.status if locks is not None else (None,) * n
    state = np.ones(1, dtype=np.float64)
    for q in range(n):
        if status[q] is not None:
            factor = np.array([1.0, 0.0]) if status[q] == 0 else np.array([0.0, 1.0])
        else:
            total = marginals[q].sum()
            if total <= 0:
                raise DegenerateStateError(f"qubit {q} has both rounded marginals equal to zero")
            factor = np.sqrt(np.clip(marginals[q], 0, None) / total)
        # Higher qubits are more significant: they vary slowest.
        state = np.multiply.outer(factor, state).ravel()
    return state.astype(np.complex128)


def ancilla_zero_probability(state: np.ndarray, table: PhaseTable) -> float:
    """``||(I + U)psi||^2 / 4``; tends to ``cos^2(lambda_d / 2)`` as psi settles on ``|d>``."""
    _check_pair(state, table)
    probs = np.abs(state) ** 2
    return float(np.sum(probs * np.cos(table.phases / 2) ** 2))


def success_probability(state: np.ndarray, target) -> float:
    n = num_qubits(state)
    if len(target) != n:
        raise ValueError(f"target has length {len(target)}, expected {n}")
    return float(abs(state[bits_to_index(target)]) ** 2)


def dump_state(state: np.ndarray) -> str:
    """Debug dump, one ``index real imag`` line per amplitude."""
    return "".join(f"{i} {float(a.real)!r} {float(a.imag)!r}\n" for i, a in enumerate(state))
