"""Classical simulation of the variational quantum power method on QUBO problems."""

from .engine import Mode, RunResult, Termination, VqpmConfig, check_termination, run
from .locking import (
    BitSignificance,
    Fixed,
    GeometricDecay,
    Hoeffding,
    InfluenceWeighted,
    LockRegister,
    decide_locks,
    parse_policy,
)
from .phase import PhaseTable, build_phase_table
from .qubo import (
    QuboInstance,
    brute_force_solve,
    energy,
    energy_bounds,
    generate_random,
    hamming_distance,
    influence_scores,
)

__version__ = "0.1.0"
