"""Channel occupancy model and the joint Dec-POMDP it induces.

Each primary-user channel is a two-state Markov chain.  Secondary users sense
one channel per slot and observe U (busy), FN (idle, transmission failed) or
FC (idle, transmission succeeded).

    python demos/01_channel_model.py
"""

import numpy as np

from osa_mbdp import build_scenario, genie_rmax, reference_scenario
from osa_mbdp.radio import OBS_NAMES, joint_states, steady_state

sc = reference_scenario()
for c, ch in enumerate(sc.channels):
    busy, idle = steady_state(ch)
    print(f"channel {c + 1}: P(busy->idle)={ch.p_busy_to_idle}, P(idle->busy)={ch.p_idle_to_busy}, "
          f"long-run idle fraction {idle:.3f}")

model = build_scenario(sc)
print(f"\njoint states (1 = idle): {joint_states(sc.n_channels).tolist()}")
print(f"states={model.n_states}, joint actions={model.n_joint_actions}, joint observations={model.n_joint_obs}")

# observation distribution when both SUs sense channel 1 in state (idle, busy)
s, a = 1, model.joint_action((0, 0))
probs = model.kernel[s, a].sum(axis=0)
for o, p in enumerate(probs):
    if p > 0:
        names = [OBS_NAMES[x] for x in model.obs_components[o]]
        print(f"both sense channel 1 in (idle, busy): observations {names} w.p. {p:.2f}")

print("\ngenie bound by horizon:", {T: round(genie_rmax(sc, T), 4) for T in range(1, 6)})
print("idle marginals at t=1:", np.round(sc.idle_marginals(), 3))
