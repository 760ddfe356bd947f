"""QoS-constrained selection from the MBDP candidate pool.

The same pool serves every weight ratio; only the selection step changes.

    python demos/03_qos_selection.py
"""

from osa_mbdp import QosSpec, SolverConfig, build_scenario, genie_rmax, mbdp_solve, reference_scenario, select_policy

sc = reference_scenario()
model = build_scenario(sc)
b0 = sc.initial_belief
zeta = 0.25

print(f"{'T':>3} {'a1/a2':>6}  {'R1':>7} {'R2':>7}  {'t':>6}  feasible")
for T in (4, 6, 8, 10):
    pool = mbdp_solve(model, b0, SolverConfig(T, trials=30))
    for ratio in (1.0, 1.5, 2.0):
        sel = select_policy(pool, QosSpec((ratio, 1.0), zeta, genie_rmax(sc, T)), b0)
        if sel.ok:
            r1, r2 = sel.agent_values
            print(f"{T:>3} {ratio:>6}  {r1:7.3f} {r2:7.3f}  {sel.check.witness:6.3f}  {sel.n_feasible}/{len(pool)}")
        else:
            print(f"{T:>3} {ratio:>6}  infeasible, closest identity {sel.closest.identity}")
