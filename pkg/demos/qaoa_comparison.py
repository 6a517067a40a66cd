"""
VQPM against a QAOA baseline
============================

Both solvers see the same phase table.  QAOA alternates the diagonal cost
layer with an X mixer and tunes its angles by Nelder-Mead on the expected
phase.  The comparison reports each method's probability on the optimum.
"""

from vqpm.engine import VqpmConfig, run
from vqpm.harness import trial_seed
from vqpm.phase import build_phase_table
from vqpm.qaoa import OptimizerConfig, optimize
from vqpm.qubo import brute_force_solve, generate_random

for trial in range(5):
    seed = trial_seed(42, 4, trial)
    instance = generate_random(4, seed)
    oracle = brute_force_solve(instance)
    table = build_phase_table(instance)
    vqpm = run(table, VqpmConfig(n=4, targets=oracle.argmin))
    qaoa = optimize(table, p=8, opt=OptimizerConfig(max_evals=500, seed=seed), targets=oracle.argmin)
    print(
        f"trial {trial}: VQPM P(target)={vqpm.target_probability:.3f} ({vqpm.iterations_used} iters)   "
        f"QAOA P(target)={qaoa.target_probability:.3f} ({qaoa.evals_used} evals)"
    )
