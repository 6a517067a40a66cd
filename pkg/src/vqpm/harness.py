"""Seeded batch experiments: trial generation, VQPM runs, QAOA pairing, CSV I/O.

Every trial's instance seed is derived from ``(base_seed, n, trial)`` alone,
so a trial's record does not depend on which other trials are in the batch
or on how work is spread over processes.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .engine import Mode, VqpmConfig, run
from .locking import parse_policy
from .phase import build_phase_table
from .qaoa import OptimizerConfig, optimize
from .qubo import brute_force_solve, format_bits, generate_random, influence_scores


def trial_seed(base_seed: int, n: int, trial: int) -> int:
    """Instance seed: first 64-bit word of ``numpy.random.SeedSequence([base_seed, n, trial])``."""
    return int(np.random.SeedSequence([base_seed, n, trial]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentSpec:
    n_values: tuple[int, ...]
    trials_per_n: int = 100
    base_seed: int = 42
    max_iter: int = 30
    policy: str = "fixed:0.01"
    precision: int = 3
    mode: str = "variational"
    success_threshold: float = 0.5
    coeff_range: tuple[float, float] = (-1.0, 1.0)
    use_oracle: bool = True
    qaoa_p: int | None = None
    qaoa_max_evals: int = 2000
    qaoa_restarts: int = 5
    timing: bool = False
    workers: int | None = None

    def __post_init__(self):
        if self.trials_per_n < 1:
            raise ValueError("trials_per_n must be >= 1")
        if not self.n_values or min(self.n_values) < 1:
            raise ValueError("n values must be >= 1")
        if self.use_oracle and max(self.n_values) > 20:
            raise ValueError("the oracle is capped at n = 20; use use_oracle=False beyond that")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        Mode(self.mode)
        # Validate the policy string early, with dummy scores for influence weighting.
        parse_policy(self.policy, max_iter=self.max_iter, scores=np.ones(max(self.n_values)))

    def jobs(self) -> list[tuple[int, int]]:
        return [(n, t) for n in sorted(set(self.n_values)) for t in range(self.trials_per_n)]


@dataclass(frozen=True)
class TrialRecord:
    n: int
    trial: int
    seed: int
    eigengap: float | None
    termination: str
    found: str
    found_probability: float
    target_probability: float | None
    hamming_to_target: int | None
    iterations_used: int
    lock_events: int
    wrong_locks: int | None


@dataclass(frozen=True)
class PairedRecord:
    n: int
    trial: int
    seed: int
    eigengap: float
    vqpm_target_probability: float
    vqpm_iterations: int
    qaoa_p: int
    qaoa_evals: int
    qaoa_best_expected_phase: float
    qaoa_target_probability: float
    qaoa_wall_time: float | None = None


@dataclass(frozen=True)
class SummaryStats:
    n: int
    trials: int
    mean_target_probability: float | None
    mean_hamming: float | None
    fraction_optimal: float | None
    mean_iterations: float


def _instance(spec: ExperimentSpec, n: int, trial: int):
    seed = trial_seed(spec.base_seed, n, trial)
    instance = generate_random(n, seed, spec.coeff_range)
    oracle = brute_force_solve(instance) if spec.use_oracle else None
    return seed, instance, oracle


def _vqpm(spec: ExperimentSpec, instance, oracle):
    table = build_phase_table(instance)
    scores = influence_scores(instance) if "influence" in spec.policy else None
    config = VqpmConfig(
        n=instance.n,
        max_iter=spec.max_iter,
        policy=parse_policy(spec.policy, max_iter=spec.max_iter, scores=scores),
        precision=spec.precision,
        mode=Mode(spec.mode),
        success_threshold=spec.success_threshold,
        targets=oracle.argmin if oracle is not None else None,
    )
    return table, run(table, config)


def run_trial(spec: ExperimentSpec, n: int, trial: int) -> TrialRecord:
    seed, instance, oracle = _instance(spec, n, trial)
    _, result = _vqpm(spec, instance, oracle)
    return TrialRecord(
        n=n,
        trial=trial,
        seed=seed,
        eigengap=oracle.eigengap if oracle else None,
        termination=result.termination.value,
        found=format_bits(result.found),
        found_probability=result.found_probability,
        target_probability=result.target_probability,
        hamming_to_target=result.hamming_to_target,
        iterations_used=result.iterations_used,
        lock_events=len(result.lock_events),
        wrong_locks=len(result.wrong_locks(oracle.target)) if oracle else None,
    )


def run_pair(spec: ExperimentSpec, n: int, trial: int) -> PairedRecord:
    if spec.qaoa_p is None:
        raise ValueError("the experiment has no QAOA settings")
    seed, instance, oracle = _instance(spec, n, trial)
    if oracle is None:
        raise ValueError("VQPM/QAOA pairing needs the oracle target")
    table, result = _vqpm(spec, instance, oracle)
    started = time.perf_counter()
    qaoa = optimize(
        table,
        spec.qaoa_p,
        OptimizerConfig(max_evals=spec.qaoa_max_evals, restarts=spec.qaoa_restarts, seed=seed),
        oracle.argmin,
    )
    elapsed = time.perf_counter() - started
    return PairedRecord(
        n=n,
        trial=trial,
        seed=seed,
        eigengap=oracle.eigengap,
        vqpm_target_probability=result.target_probability,
        vqpm_iterations=result.iterations_used,
        qaoa_p=spec.qaoa_p,
        qaoa_evals=qaoa.evals_used,
        qaoa_best_expected_phase=qaoa.best_expected_phase,
        qaoa_target_probability=qaoa.target_probability,
        qaoa_wall_time=elapsed if spec.timing else None,
    )


def worker_count(spec: ExperimentSpec) -> int:
    cap = os.environ.get("VQPM_THREADS")
    workers = spec.workers or os.cpu_count() or 1
    if cap:
        workers = min(workers, max(1, int(cap)))
    return workers


def _call(args):
    fn, spec, n, trial = args
    return fn(spec, n, trial)


def _execute(fn, spec: ExperimentSpec, out) -> list:
    jobs = [(fn, spec, n, t) for n, t in spec.jobs()]
    workers = worker_count(spec)
    record_type = TrialRecord if fn is run_trial else PairedRecord
    writer = _CsvSink(out, record_type, drop=() if spec.timing else ("qaoa_wall_time",))
    records = []
    try:
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                # map() yields in submission order, which is the canonical (n, trial) order.
                for rec in pool.map(_call, jobs, chunksize=max(1, len(jobs) // (4 * workers))):
                    records.append(rec)
                    writer.write(rec)
        else:
            for job in jobs:
                rec = _call(job)
                records.append(rec)
                writer.write(rec)
    finally:
        writer.close()
    return records


def run_batch(spec: ExperimentSpec, out=None) -> list[TrialRecord]:
    """Run every ``(n, trial)`` of ``spec``; rows go to ``out`` (CSV) as they finish."""
    return _execute(run_trial, spec, out)


def compare_vqpm_qaoa(spec: ExperimentSpec, out=None) -> list[PairedRecord]:
    """Feed each seeded instance to both VQPM and QAOA and pair the target probabilities."""
    return _execute(run_pair, spec, out)


def paired_means(records: Sequence[PairedRecord]) -> dict[int, tuple[float, float]]:
    """Per ``n``: (mean VQPM target probability, mean QAOA target probability)."""
    out = {}
    for n in sorted({r.n for r in records}):
        rows = [r for r in records if r.n == n]
        out[n] = (
            math.fsum(r.vqpm_target_probability for r in rows) / len(rows),
            math.fsum(r.qaoa_target_probability for r in rows) / len(rows),
        )
    return out


def _mean(values: Iterable) -> float | None:
    values = list(values)
    if not values or any(v is None for v in values):
        return None
    return math.fsum(values) / len(values)


def summarize(records: Sequence[TrialRecord]) -> dict[int, SummaryStats]:
    if not records:
        raise ValueError("no records to summarize")
    out = {}
    for n in sorted({r.n for r in records}):
        rows = [r for r in records if r.n == n]
        hams = [r.hamming_to_target for r in rows]
        out[n] = SummaryStats(
            n=n,
            trials=len(rows),
            mean_target_probability=_mean(r.target_probability for r in rows),
            mean_hamming=_mean(hams),
            fraction_optimal=None if None in hams else sum(h == 0 for h in hams) / len(rows),
            mean_iterations=math.fsum(r.iterations_used for r in rows) / len(rows),
        )
    return out


def format_summary(stats: dict[int, SummaryStats]) -> str:
    def cell(v, fmt):
        return "-" if v is None else format(v, fmt)

    lines = [f"{'n':>3} {'trials':>6} {'mean P(target)':>15} {'mean hamming':>13} {'optimal':>8} {'mean iters':>10}"]
    for s in stats.values():
        lines.append(
            f"{s.n:>3} {s.trials:>6} {cell(s.mean_target_probability, '.6f'):>15} "
            f"{cell(s.mean_hamming, '.3f'):>13} {cell(s.fraction_optimal, '.2f'):>8} {s.mean_iterations:>10.2f}"
        )
    return "\n".join(lines)


# --- CSV ------------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class _CsvSink:
    """Row-at-a-time CSV writer that flushes each row (partial output survives aborts)."""

    def __init__(self, path, record_type, drop=()):
        self.columns = [f.name for f in fields(record_type) if f.name not in drop]
        self.fh = None
        if path is not None:
            self.fh = open(path, "w", encoding="utf-8", newline="")
            self.writer = csv.writer(self.fh, lineterminator="\n")
            self.writer.writerow(self.columns)

    def write(self, record) -> None:
        if self.fh is None:
            return
        row = asdict(record)
        self.writer.writerow([_cell(row[c]) for c in self.columns])
        self.fh.flush()

    def close(self) -> None:
        if self.fh is not None:
            self.fh.close()


def write_records(records: Sequence, path) -> None:
    if not records:
        raise ValueError("no records to write")
    sink = _CsvSink(path, type(records[0]))
    for rec in records:
        sink.write(rec)
    sink.close()


_CONVERTERS = {"int": int, "float": float, "str": str}


def _convert(value: str, annotation: str):
    if value == "":
        return None
    base = annotation.split("|")[0].strip()
    return _CONVERTERS[base](value)


def read_records(path, record_type=TrialRecord) -> list:
    """Load records written by :func:`run_batch` / :func:`compare_vqpm_qaoa`."""
    types = {f.name: f.type for f in fields(record_type)}
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            kwargs = {k: _convert(v, types[k]) for k, v in row.items() if k in types}
            out.append(record_type(**kwargs))
    return out


def detect_record_type(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    return PairedRecord if "qaoa_target_probability" in header else TrialRecord
