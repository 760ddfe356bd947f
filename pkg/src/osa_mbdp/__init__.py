"""QoS-aware joint sensing policies for opportunistic spectrum access via MBDP."""

from .baselines import belief_filter_update, coop_joint_action, mh_channel_distribution
from .model import (
    Belief,
    DecPomdpModel,
    JointPolicy,
    PolicyTree,
    ValueVector,
    evaluate_at_belief,
    joint_value_vector,
    per_agent_value_vectors,
    propagate_belief,
)
from .qos import QosSpec, qos_satisfied, select_policy
from .radio import ChannelChain, RadioScenario, build_scenario, genie_rmax, reference_scenario, steady_state
from .simulator import (
    CoopStrategy,
    MHStrategy,
    PartitionStrategy,
    SimConfig,
    ThroughputStats,
    TreeStrategy,
    run_comparison,
    simulate,
)
from .solver import CandidatePool, SolverConfig, exhaustive_backup, mbdp_solve, precompute_beliefs, select_best

__version__ = "0.1.0"
