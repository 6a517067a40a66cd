"""
Power iteration on a QUBO phase table
=====================================

A random QUBO is mapped to phases in [0, pi/2], and the post-selected
(I + U) step is applied repeatedly from the uniform state.  The lowest
phase (the QUBO optimum) has the largest eigenvalue magnitude, so its
amplitude grows at a rate set by the gap to the next phase.
"""

import numpy as np

from vqpm.phase import (
    apply_power_step,
    build_phase_table,
    convergence_ratio,
    exact_power_reference,
    iteration_bound,
    uniform_state,
)
from vqpm.qubo import bits_to_index, brute_force_solve, format_bits, generate_random

# %%
# A six-variable instance and its brute-force optimum.
instance = generate_random(6, seed=7)
oracle = brute_force_solve(instance)
table = build_phase_table(instance)
target = bits_to_index(oracle.target)
print("optimum", format_bits(oracle.target), "energy", round(oracle.min_energy, 4))

# %%
# The two lowest phases give the per-step ratio and an iteration estimate.
lowest = np.sort(table.phases)[:2]
ratio = convergence_ratio(lowest[0], lowest[1])
print(f"lowest phases {lowest}, ratio {ratio:.6f}")
print("steps for 1e-3 suppression of the runner-up:", iteration_bound(ratio, 1e-3))

# %%
# Iterate and compare against the closed form at every step.
state = uniform_state(instance.n)
for k in range(1, 41):
    state, p_anc = apply_power_step(state, table)
    if k % 8 == 0:
        drift = np.abs(state - exact_power_reference(table, k)).max()
        print(f"k={k:2d}  P(target)={abs(state[target])**2:.4f}  P(ancilla=0)={p_anc:.4f}  drift={drift:.1e}")
