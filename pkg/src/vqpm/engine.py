"""The VQPM iteration loop.

Each iteration applies one post-selected ``(I + U)`` step, reads rounded
per-qubit marginals, checks for termination, locks confident qubits and
(in variational mode) re-prepares a product state from the marginals.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .locking import Fixed, LockEvent, LockRegister, decide_locks
from .phase import PhaseTable, apply_power_step, product_state_from_marginals, qubit_marginals, uniform_state
from .qubo import bits_to_index, hamming_distance, index_to_bits

log = logging.getLogger(__name__)

__all__ = [
    "Mode",
    "Termination",
    "VqpmConfig",
    "IterationRecord",
    "RunResult",
    "run",
    "check_termination",
    "hamming_distance",
    "trace_to_csv",
]

NEAR_ZERO = 1e-12


class Mode(str, enum.Enum):
    EXACT = "exact"
    VARIATIONAL = "variational"


class Termination(str, enum.Enum):
    SUCCESS_BY_PROBABILITY = "success_by_probability"
    SUCCESS_BY_TARGET = "success_by_target"
    TARGET_ELIMINATED = "target_eliminated"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class VqpmConfig:
    """Run settings.

    ``targets`` holds the optimal bitstring(s) when known (from the oracle);
    any of them counts as reaching the optimum, the optimum is eliminated
    only when all of them are, and reported target probabilities refer to
    the first one.
    """

    n: int
    max_iter: int = 30
    policy: object = field(default_factory=lambda: Fixed(0.01))
    precision: int = 3
    mode: Mode = Mode.VARIATIONAL
    success_threshold: float = 0.5
    targets: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.precision < 1:
            raise ValueError("precision must be >= 1")
        if not 0 < self.success_threshold <= 1:
            raise ValueError("success_threshold must lie in (0, 1]")
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.targets is not None:
            targets = tuple(tuple(int(b) for b in t) for t in self.targets)
            if not targets or any(len(t) != self.n for t in targets):
                raise ValueError(f"targets must be non-empty bitstrings of length {self.n}")
            object.__setattr__(self, "targets", targets)

    @property
    def target_indices(self) -> np.ndarray | None:
        if self.targets is None:
            return None
        return np.array([bits_to_index(t) for t in self.targets])


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    p_min: float
    target_prob: float | None
    ancilla_p0: float
    marginals: np.ndarray = field(repr=False)
    lock_events: tuple[LockEvent, ...] = ()
    locks_so_far: int = 0


@dataclass(frozen=True)
class RunResult:
    found: tuple[int, ...]
    found_probability: float
    target_probability: float | None
    hamming_to_target: int | None
    iterations_used: int
    termination: Termination
    trace: tuple[IterationRecord, ...] = field(repr=False)
    register: LockRegister = field(repr=False, default=None)
    final_state: np.ndarray = field(repr=False, default=None)

    @property
    def lock_events(self) -> list[LockEvent]:
        return [e for rec in self.trace for e in rec.lock_events]

    def wrong_locks(self, target: Sequence[int]) -> list[LockEvent]:
        return [e for e in self.lock_events if e.bit != target[e.qubit]]


def _probabilities(state: np.ndarray) -> np.ndarray:
    # Clip the last-ulp excess of renormalized basis states.
    return np.minimum(np.abs(state) ** 2, 1.0)


def check_termination(state: np.ndarray, config: VqpmConfig) -> Termination | None:
    """Termination reason for ``state`` or ``None`` to keep iterating.

    Checked in order: the optimum has been eliminated (its probability is
    exactly zero), then success once the largest basis probability reaches
    ``success_threshold``.  Success counts as by-target when that argmax is
    an optimal bitstring.
    """
    probs = _probabilities(state)
    targets = config.target_indices
    if targets is not None:
        t_prob = float(probs[targets].sum())
        if t_prob == 0.0:
            return Termination.TARGET_ELIMINATED
        if t_prob < NEAR_ZERO:
            log.warning("target probability %.3g is numerically zero but not exactly zero", t_prob)
    top = int(np.argmax(probs))
    if probs[top] >= config.success_threshold:
        if targets is not None and top in targets:
            return Termination.SUCCESS_BY_TARGET
        return Termination.SUCCESS_BY_PROBABILITY
    return None


def run(table: PhaseTable, config: VqpmConfig) -> RunResult:
    """Run VQPM from the uniform state on the diagonal unitary ``exp(i * phases)``.

    Exact mode is plain quantum power iteration: the evolved vector is kept
    and no locking happens.  Variational mode rebuilds a product state from
    the rounded marginals every iteration, with locked qubits pinned.  Lock
    decisions are skipped on the final iteration since no later state
    would see them.
    """
    if table.n != config.n:
        raise ValueError(f"phase table has n={table.n}, config has n={config.n}")
    n = config.n
    targets = config.target_indices
    register = LockRegister.free(n)
    state = uniform_state(n)
    trace: list[IterationRecord] = []
    reason = Termination.MAX_ITERATIONS
    evolved = state

    for k in range(1, config.max_iter + 1):
        evolved, anc_p0 = apply_power_step(state, table)
        probs = _probabilities(evolved)
        marginals = qubit_marginals(evolved, config.precision)
        stop = check_termination(evolved, config)
        events: list[LockEvent] = []
        if stop is None and k < config.max_iter:
            if config.mode is Mode.VARIATIONAL:
                register, events = decide_locks(marginals, config.policy, register, k)
                state = product_state_from_marginals(marginals, register)
            else:
                state = evolved
        trace.append(
            IterationRecord(
                iteration=k,
                p_min=float(probs.max()),
                target_prob=None if targets is None else float(probs[targets[0]]),
                ancilla_p0=anc_p0,
                marginals=marginals,
                lock_events=tuple(events),
                locks_so_far=len(register.locked),
            )
        )
        if stop is not None:
            reason = stop
            break

    probs = _probabilities(evolved)
    top = int(np.argmax(probs))
    found = index_to_bits(top, n)
    if targets is None:
        t_prob = hamming = None
    else:
        t_prob = float(probs[targets[0]])
        hamming = min(hamming_distance(found, t) for t in config.targets)
    return RunResult(
        found=found,
        found_probability=float(probs[top]),
        target_probability=t_prob,
        hamming_to_target=hamming,
        iterations_used=len(trace),
        termination=reason,
        trace=tuple(trace),
        register=register,
        final_state=evolved,
    )


TRACE_COLUMNS = ("iteration", "p_min", "target_prob", "ancilla_p0", "locks_so_far", "lock_events")


def trace_to_csv(result: RunResult, path=None) -> str:
    """Per-iteration trace as CSV text; also written to ``path`` when given."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for rec in result.trace:
        writer.writerow(
            [
                rec.iteration,
                repr(rec.p_min),
                "" if rec.target_prob is None else repr(rec.target_prob),
                repr(rec.ancilla_p0),
                rec.locks_so_far,
                ";".join(f"{e.qubit}:{e.bit}" for e in rec.lock_events),
            ]
        )
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
