"""QAOA baseline on the same phase encoding as VQPM.

The cost layer is ``exp(-i gamma * diag(phases))`` and the mixer is
``exp(-i beta X)`` on every qubit.  Angles are tuned with Nelder-Mead to
minimize the expected phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .phase import PhaseTable, num_qubits, uniform_state
from .qubo import bits_to_index


@dataclass(frozen=True)
class QaoaParams:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        if len(self.gammas) != len(self.betas):
            raise ValueError("gammas and betas must have the same length")
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))

    @property
    def p(self) -> int:
        return len(self.gammas)

    @classmethod
    def from_vector(cls, x) -> "QaoaParams":
        x = np.asarray(x, dtype=np.float64)
        p = x.size // 2
        return cls(tuple(x[:p]), tuple(x[p:]))

    def as_vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas)


@dataclass(frozen=True)
class OptimizerConfig:
    """Nelder-Mead with random restarts.

    ``max_evals`` is the total objective budget, split evenly over restarts.
    """

    max_evals: int = 2000
    restarts: int = 5
    seed: int = 0
    method: str = "Nelder-Mead"

    def __post_init__(self):
        if self.max_evals < 1 or self.restarts < 1:
            raise ValueError("max_evals and restarts must be >= 1")


@dataclass(frozen=True)
class QaoaResult:
    params: QaoaParams
    target_probability: float
    evals_used: int
    best_expected_phase: float
    best_so_far: tuple[float, ...] = field(repr=False, default=())


def apply_mixer(state: np.ndarray, beta: float) -> np.ndarray:
    """``exp(-i beta X)`` on every qubit."""
    n = num_qubits(state)
    c, s = math.cos(beta), -1j * math.sin(beta)
    out = state.copy()
    for q in range(n):
        view = out.reshape(-1, 2, 1 << q)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = c * a0 + s * a1
        view[:, 1, :] = s * a0 + c * a1
    return out


def qaoa_state(table: PhaseTable, params: QaoaParams) -> np.ndarray:
    state = uniform_state(table.n)
    for gamma, beta in zip(params.gammas, params.betas):
        state = state * np.exp(-1j * gamma * table.phases)
        state = apply_mixer(state, beta)
    return state / np.linalg.norm(state)


def expected_energy(state: np.ndarray, table: PhaseTable) -> float:
    """Expected phase ``sum_x |a_x|^2 lambda_x`` (a monotone stand-in for energy)."""
    if state.size != table.phases.size:
        raise ValueError("state and phase table sizes differ")
    return float(np.dot(np.abs(state) ** 2, table.phases))


def _target_probability(state: np.ndarray, targets) -> float:
    return float(abs(state[bits_to_index(targets[0])]) ** 2)


def optimize(table: PhaseTable, p: int, opt: OptimizerConfig, targets) -> QaoaResult:
    """Tune ``p``-layer angles and report the circuit's probability on ``targets``.

    ``targets`` is a sequence of optimal bitstrings; the first one is reported.
    Restart ``r`` starts from ``gamma ~ U[0, pi]``, ``beta ~ U[0, pi/2]`` drawn
    from ``default_rng(opt.seed)``.  The returned point is the best one ever
    evaluated, so an exhausted budget still yields a usable result.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    rng = np.random.default_rng(opt.seed)
    starts = [
        np.concatenate([rng.uniform(0, np.pi, p), rng.uniform(0, np.pi / 2, p)]) for _ in range(opt.restarts)
    ]
    per_restart = max(1, opt.max_evals // opt.restarts)
    best_x, best_f = None, math.inf
    history: list[float] = []

    def objective(x):
        nonlocal best_x, best_f
        f = expected_energy(qaoa_state(table, QaoaParams.from_vector(x)), table)
        if f < best_f:
            best_x, best_f = np.array(x, copy=True), f
        history.append(best_f)
        return f

    for x0 in starts:
        if len(history) >= opt.max_evals:
            break
        budget = min(per_restart, opt.max_evals - len(history))
        minimize(
            objective,
            x0,
            method=opt.method,
            options={"maxfev": budget, "maxiter": budget, "xatol": 1e-8, "fatol": 1e-12},
        )

    params = QaoaParams.from_vector(best_x)
    state = qaoa_state(table, params)
    return QaoaResult(
        params=params,
        target_probability=_target_probability(state, targets),
        evals_used=len(history),
        best_expected_phase=best_f,
        best_so_far=tuple(history),
    )
