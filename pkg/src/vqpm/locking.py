"""Lock thresholds (``p_diff``) and lock decisions.

A policy maps ``(iteration k, qubit q, n)`` to the minimum rounded marginal
gap ``|P0 - P1|`` needed to lock qubit ``q``.  Policies are immutable and can
be nested: influence and bit-significance scaling wrap a base policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

DECAY_LAWS: dict[str, Callable[[int], float]] = {
    "exp2": lambda k: 2.0**k,
    "linear": lambda k: float(k),
    "sqrt": lambda k: math.sqrt(k),
}


def hoeffding_epsilon(delta_i: float, n: int, shots: int) -> float:
    """``sqrt(ln(2/delta_i) / (2 * 10 n M))``: Hoeffding deviation with ``10 n M`` samples."""
    if not 0 < delta_i < 2:
        raise ValueError("delta_i must lie in (0, 2)")
    if n < 1 or shots < 1:
        raise ValueError("n and shots must be >= 1")
    return math.sqrt(math.log(2 / delta_i) / (2 * 10 * n * shots))


def delta_schedule(delta_total: float, remaining: int) -> float:
    """Union-bound share of the failure budget for the current iteration."""
    if remaining < 1:
        raise ValueError("remaining iterations must be >= 1")
    return delta_total / remaining


@dataclass(frozen=True)
class Fixed:
    """Constant threshold.  ``p > 1`` (or ``inf``) disables locking entirely."""

    p: float = 0.01

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError("threshold must be positive")

    clamp = None

    def threshold(self, k: int, q: int, n: int) -> float:
        return self.p


@dataclass(frozen=True)
class GeometricDecay:
    """``p0 / f(k)`` floored at ``floor``; ``f`` is a named law from ``DECAY_LAWS``."""

    p0: float = 0.16
    law: str = "exp2"
    floor: float = 0.01

    def __post_init__(self):
        if self.law not in DECAY_LAWS:
            raise ValueError(f"unknown decay law {self.law!r}; choose from {sorted(DECAY_LAWS)}")
        if not (0 < self.floor <= self.p0):
            raise ValueError("need 0 < floor <= p0")

    @property
    def clamp(self) -> tuple[float, float]:
        return (self.floor, self.p0)

    def threshold(self, k: int, q: int, n: int) -> float:
        return max(self.p0 / DECAY_LAWS[self.law](k), self.floor)


@dataclass(frozen=True)
class Hoeffding:
    """Hoeffding deviation at ``delta_k = delta_total / (max_iter - k + 1)``, clamped."""

    delta_total: float = 0.5
    shots: int = 100
    max_iter: int = 30
    clamp: tuple[float, float] = (0.005, 0.015)

    def __post_init__(self):
        if not 0 < self.delta_total < 1:
            raise ValueError("delta_total must lie in (0, 1)")
        if self.shots < 1 or self.max_iter < 1:
            raise ValueError("shots and max_iter must be >= 1")
        if self.clamp[0] > self.clamp[1]:
            raise ValueError("clamp lower end exceeds upper end")

    def raw(self, k: int, n: int) -> float:
        if k > self.max_iter:
            raise ValueError(f"iteration {k} beyond max_iter={self.max_iter}")
        return hoeffding_epsilon(delta_schedule(self.delta_total, self.max_iter - k + 1), n, self.shots)

    def threshold(self, k: int, q: int, n: int) -> float:
        lo, hi = self.clamp
        return min(max(self.raw(k, n), lo), hi)


@dataclass(frozen=True)
class InfluenceWeighted:
    """Base threshold divided by each qubit's influence score.

    Low-influence qubits need a larger gap to lock.  The result is clamped to
    the base policy's clamp when it has one.
    """

    base: object
    scores: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if np.any((s < 0) | (s > 1)):
            raise ValueError("influence scores must lie in [0, 1]")
        object.__setattr__(self, "scores", s)

    @property
    def clamp(self):
        return self.base.clamp

    def threshold(self, k: int, q: int, n: int) -> float:
        score = self.scores[q]
        value = self.base.threshold(k, q, n) / score if score > 0 else math.inf
        if self.clamp is not None:
            lo, hi = self.clamp
            value = min(max(value, lo), hi)
        return value


@dataclass(frozen=True)
class BitSignificance:
    """Base threshold times a per-position multiplier.

    The default profile ``2^q`` makes high-order bits progressively harder to
    lock.  Kept for experiments only; it did not help on random instances.
    """

    base: object
    profile: tuple[float, ...] | None = None

    clamp = None

    def threshold(self, k: int, q: int, n: int) -> float:
        factor = self.profile[q] if self.profile is not None else 2.0**q
        return self.base.threshold(k, q, n) * factor


def threshold_for(policy, k: int, q: int, n: int) -> float:
    if k < 1:
        raise ValueError("iterations are counted from 1")
    if not 0 <= q < n:
        raise ValueError(f"qubit {q} out of range for n={n}")
    return policy.threshold(k, q, n)


class LockEvent(NamedTuple):
    qubit: int
    bit: int
    iteration: int
    threshold: float


@dataclass(frozen=True)
class LockRegister:
    """Per-qubit lock state: ``status[q]`` is ``None`` (free), 0 or 1."""

    status: tuple[int | None, ...]
    locked_at: tuple[int | None, ...]

    @classmethod
    def free(cls, n: int) -> "LockRegister":
        return cls((None,) * n, (None,) * n)

    @property
    def n(self) -> int:
        return len(self.status)

    @property
    def locked(self) -> dict[int, int]:
        return {q: b for q, b in enumerate(self.status) if b is not None}

    def lock(self, q: int, bit: int, k: int) -> "LockRegister":
        if self.status[q] is not None:
            raise ValueError(f"qubit {q} is already locked")
        status = list(self.status)
        at = list(self.locked_at)
        status[q], at[q] = int(bit), k
        return replace(self, status=tuple(status), locked_at=tuple(at))


def decide_locks(marginals: np.ndarray, policy, register: LockRegister, k: int) -> tuple[LockRegister, list[LockEvent]]:
    """Lock every free qubit whose rounded gap reaches its threshold.

    Exact ties never lock.  The gap is itself rounded to 12 decimals so that
    differences of rounded marginals compare cleanly against thresholds.
    """
    n = register.n
    events = []
    for q in range(n):
        if register.status[q] is not None:
            continue
        p0, p1 = float(marginals[q][0]), float(marginals[q][1])
        if p0 == p1:
            continue
        limit = threshold_for(policy, k, q, n)
        if round(abs(p0 - p1), 12) >= limit:
            bit = 0 if p0 > p1 else 1
            register = register.lock(q, bit, k)
            events.append(LockEvent(q, bit, k, limit))
    return register, events


def parse_policy(text: str, *, max_iter: int = 30, scores=None):
    """Build a policy from its config string.

    Accepted forms::

        fixed:0.01            none (alias of fixed:inf)
        decay:p0=0.16,floor=0.01,law=exp2
        hoeffding:delta=0.5,M=100[,lo=0.005,hi=0.015]
        <base>+influence      wrap any of the above with influence scaling
        bitsig:<base>         e.g. bitsig:fixed:0.01

    ``scores`` (influence scores of the instance) is required for
    ``+influence``.  ``max_iter`` feeds the Hoeffding schedule.
    """
    text = text.strip()
    if text.startswith("bitsig:"):
        return BitSignificance(parse_policy(text[len("bitsig:"):], max_iter=max_iter, scores=scores))
    if text.endswith("+influence"):
        if scores is None:
            raise ValueError("influence weighting needs the instance's influence scores")
        return InfluenceWeighted(parse_policy(text[: -len("+influence")], max_iter=max_iter), scores)
    name, _, args = text.partition(":")
    if name == "none":
        return Fixed(math.inf)
    if name == "fixed":
        return Fixed(float(args) if args else 0.01)
    kv = {}
    for item in filter(None, args.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"malformed policy argument {item!r} in {text!r}")
        kv[key.strip()] = value.strip()
    if name == "decay":
        policy = GeometricDecay(
            p0=float(kv.pop("p0", 0.16)), floor=float(kv.pop("floor", 0.01)), law=kv.pop("law", "exp2")
        )
        _leftover(kv, text)
        return policy
    if name == "hoeffding":
        policy = Hoeffding(
            delta_total=float(kv.pop("delta", 0.5)),
            shots=int(kv.pop("M", 100)),
            max_iter=int(kv.pop("max_iter", max_iter)),
            clamp=(float(kv.pop("lo", 0.005)), float(kv.pop("hi", 0.015))),
        )
        _leftover(kv, text)
        return policy
    raise ValueError(f"unknown policy {text!r}")


def _leftover(kv: dict, text: str) -> None:
    if kv:
        raise ValueError(f"unknown policy arguments {sorted(kv)} in {text!r}")
