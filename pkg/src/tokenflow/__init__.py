"""Configurable dataflow graphs: model, design rules, analysis and execution.

The package splits into layers that mirror how a graph moves from
description to running program:

* model: actors, ports, channels, control table; build_graph validates.
* rules: the five wiring rules that make consistency decidable.
* analysis: dynamic region identification, per-region schedules, buffer bounds.
* fifos: the bounded channel engine with chunked zero-copy spans.
* runtime: one thread per actor over bounded channels.
* interp: single-threaded reference interpreter (the oracle).
* cli: check / analyze / run / capacity commands.
* apps: bundled demonstration applications.
"""
from .analysis import (
    BufferBounds,
    ConsistencyReport,
    DeadlockError,
    Diagnostic,
    DynamicComponent,
    Dpg,
    OrphanDynamicActor,
    Region,
    Schedule,
    SharedMembership,
    analyze,
    compute_bounds,
    compute_schedule,
    dc_region,
    decompose_dcs,
    identify_dpgs,
    static_region,
    validate_dpg,
)
# the @behavior decorator stays in tokenflow.behavior: re-exporting it here
# would shadow the submodule attribute of the same name
from .behavior import (
    ActorBehavior,
    FireContext,
    actor_seed,
    decode_control,
    encode_control,
    resolve,
)
from .fifos import (
    CapacityPlan,
    EndOfStream,
    FifoChannel,
    InvalidParams,
    Poisoned,
    ProtocolError,
    capacity,
    layout_plan,
)
from .interp import InterpReport, OracleDeadlock, interpret
from .model import (
    Actor,
    ActorKind,
    BadActorShape,
    ControlTableError,
    DanglingPort,
    DuplicateId,
    Fifo,
    Graph,
    GraphError,
    InvalidDescription,
    Port,
    PortKind,
    PortRef,
    RateMismatch,
    Uncontrolled,
    adjacency,
    build_graph,
    control_lookup,
    describe_graph,
)
from .rules import (
    RULE_NAMES,
    LinkedDrpPair,
    Violation,
    check_all,
    check_rule1,
    check_rule2,
    check_rule3,
    check_rule4,
    check_rule5,
    find_linked_drps,
)
from .runtime import (
    ActorPanic,
    InconsistentGraph,
    RunReport,
    RuntimeConfig,
    Timeout,
    instantiate,
    run,
)

from . import apps  # noqa: E402  (registers corpus behaviors)

__version__ = "0.1.0"
