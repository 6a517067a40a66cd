"""
Qubit locking strategies
========================

In variational mode every iteration reads rounded single-qubit marginals
and rebuilds a product state.  A qubit whose |P0 - P1| reaches the policy
threshold is locked to its likelier value for the rest of the run.  This
script runs one n = 12 instance under several policies and prints the lock
history.
"""

from vqpm.engine import VqpmConfig, run
from vqpm.locking import hoeffding_epsilon, parse_policy
from vqpm.phase import build_phase_table
from vqpm.qubo import brute_force_solve, format_bits, generate_random, influence_scores

instance = generate_random(12, seed=2024)
oracle = brute_force_solve(instance)
table = build_phase_table(instance)
scores = influence_scores(instance)
print("optimum", format_bits(oracle.target))

# %%
# The Hoeffding threshold on the first iteration for a few problem sizes.
for n in (10, 15, 20):
    print(f"n={n}: epsilon={hoeffding_epsilon(0.5 / 30, n, 100):.6f}")

# %%
for text in ("none", "fixed:0.01", "decay:p0=0.16", "hoeffding", "hoeffding+influence"):
    config = VqpmConfig(
        n=instance.n,
        policy=parse_policy(text, scores=scores),
        targets=oracle.argmin,
    )
    result = run(table, config)
    locks = " ".join(f"q{e.qubit}={e.bit}@{e.iteration}" for e in result.lock_events)
    print(
        f"{text:22s} {result.termination.value:22s} found {format_bits(result.found)} "
        f"hamming {result.hamming_to_target} iters {result.iterations_used}"
    )
    if locks:
        print(" " * 23 + locks)
