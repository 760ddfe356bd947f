"""Memory-bounded dynamic programming on the reference scenario.

Compares the best MBDP joint policy with exhaustive enumeration at short
horizons, then shows how the candidate pool grows with the horizon.

    python demos/02_mbdp_solve.py
"""

import time

from osa_mbdp import SolverConfig, build_scenario, genie_rmax, mbdp_solve, reference_scenario
from osa_mbdp.oracle import brute_force_optimum

sc = reference_scenario()
model = build_scenario(sc)
b0 = sc.initial_belief

for T in (1, 2, 3):
    exact = brute_force_optimum(model, b0, T)
    pool = mbdp_solve(model, b0, SolverConfig(T, trials=30))
    print(f"T={T}: optimum {exact.optimum:.4f} over {exact.n_enumerated} candidates, "
          f"MBDP {pool.best_entry.value_at(b0):.4f}")

print()
for T in (4, 6, 8, 10):
    start = time.perf_counter()
    pool = mbdp_solve(model, b0, SolverConfig(T, trials=30))
    best = pool.best_entry
    print(f"T={T}: {len(pool)} candidates, best joint {best.value_at(b0):.4f} "
          f"(genie {genie_rmax(sc, T):.4f}), per-SU {best.agent_values_at(b0).round(3)}, "
          f"{time.perf_counter() - start:.2f}s")
