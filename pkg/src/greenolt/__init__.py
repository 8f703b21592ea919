"""Energy-adaptive TDM-PON OLT toolkit.

Models an OLT chassis that powers line cards on and off with observed load:
closed-form saving formulas, the sleep-control Markov chain and its
stationary solution, Poisson and self-similar traffic generation, a
cycle-driven simulator, and switch-fabric topology/compliance checks.
"""

from ._kernels import backend as kernel_backend
from .chassis import (
    GBPS,
    ChassisConfig,
    SleepPolicy,
    TrafficSnapshot,
    average_saving,
    chassis_load,
    electrical_saving,
    max_viable_mean_active,
    relative_saving,
    required_line_cards,
    saving_with_switch_power,
    switch_power_viable,
)
from .fabric import (
    SegmentMapping,
    SwitchFabric,
    cascaded_mapping,
    cascaded_saving,
    nxn_mapping,
    nxn_saving,
    reconfig_compliant,
)
from .markov import (
    ChainState,
    NonConvergenceError,
    StationaryDistribution,
    TransitionMatrix,
    analytic_saving,
    average_power,
    build_state_space,
    build_transition_matrix,
    classify_arrival,
    next_state,
    poisson_arrival_prob,
    solve_stationary,
    total_variation,
    walk_occupancy,
)
from .simulator import BacklogOverflowError, SimReport, SimState, policy_step, simulate
from .traffic import (
    TrafficTrace,
    constant_trace,
    estimate_hurst,
    hurst_exponent,
    poisson_trace,
    self_similar_trace,
    trace_from_csv,
    trace_to_csv,
)

__version__ = "0.1.0"
