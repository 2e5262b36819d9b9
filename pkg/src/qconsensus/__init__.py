"""Finite-time privacy-preserving quantized average consensus over digraphs."""

from .event_offset import (
    EventOffsetNode,
    EventOffsetSchedule,
    fire_event_offset,
    init_event_offset,
    sample_event_schedule,
)
from .graph import (
    Digraph,
    GraphError,
    Role,
    RoleMap,
    assign_out_orders,
    generate_random_digraph,
    is_strongly_connected,
    load_digraph,
    save_digraph,
)
from .privacy import (
    AdversaryView,
    BudgetError,
    HypothesisSpace,
    InferenceResult,
    PrivacyCondition,
    PrivacyVerdict,
    adversary_enumerate,
    check_event_offset_privacy,
    check_zero_sum_privacy,
)
from .protocol import (
    MassPair,
    Message,
    NodeCore,
    ProtocolError,
    StateVars,
    absorb,
    check_event,
    consensus_reached,
    fire_and_transmit,
    init_plain,
)
from .simulator import (
    AuditError,
    ConfigError,
    ConvergenceVerdict,
    NodePlan,
    SimConfig,
    SimTrace,
    Simulator,
    detect_convergence,
    run,
    theoretical_bound,
)
from .zero_sum_offset import (
    OffsetMessage,
    ZeroSumSchedule,
    init_zero_sum,
    make_zero_sum_schedule,
    sample_zero_sum_schedule,
)
from .experiments import (
    ExperimentSpec,
    SmartGridResult,
    SweepReport,
    neighborhood_digraph,
    run_experiment,
    run_smartgrid,
    validate_distorted_demands,
)

__version__ = "0.1.0"
