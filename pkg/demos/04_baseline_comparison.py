"""Monte Carlo comparison of the selected policy with the two belief-based baselines.

The cooperative baseline lets SUs share beliefs, so they never collide;
the multiuser heuristic samples channels independently and often collides.

    python demos/04_baseline_comparison.py [trials]
"""

import sys

from osa_mbdp import (
    CoopStrategy,
    MHStrategy,
    QosSpec,
    SimConfig,
    SolverConfig,
    TreeStrategy,
    build_scenario,
    genie_rmax,
    mbdp_solve,
    reference_scenario,
    select_policy,
    simulate,
)

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
sc = reference_scenario()
model = build_scenario(sc)
b0 = sc.initial_belief

print(f"{'T':>3} {'strategy':>8}  {'SU1':>7} {'SU2':>7}  {'normalized':>10}  {'collisions':>10}")
for T in (4, 7, 10):
    pool = mbdp_solve(model, b0, SolverConfig(T, trials=30))
    sel = select_policy(pool, QosSpec((1.0, 1.0), 0.25, genie_rmax(sc, T)), b0)
    for name, strat in (("mbdp", TreeStrategy(sel.policy)), ("coop", CoopStrategy()), ("mh", MHStrategy())):
        st = simulate(sc, SimConfig(T, trials, 0, strat))
        su1, su2 = st.per_su_mean
        print(f"{T:>3} {name:>8}  {su1:7.3f} {su2:7.3f}  {st.normalized_network:10.4f}  {st.collision_count_mean:10.3f}")
