"""Project enactment: instantiation, task state machine, tailoring, simulation."""

from procflow.enactment.engine import (
    LIVE_STATES,
    annotate,
    assign,
    attach_document,
    detect_stall,
    evaluate,
    export_template,
    grant,
    instantiate,
    set_phase,
    tailor,
    transition,
    unmet_preconditions,
)
from procflow.enactment.simulate import (
    ScriptStep,
    Trace,
    TraceEvent,
    parse_script,
    simulate,
)
from procflow.enactment.state import (
    PROGRESS_STATES,
    TERMINAL_STATES,
    TRANSITIONS,
    Action,
    Annotation,
    ArtifactRuntime,
    BlockedTask,
    DocumentRef,
    MissingPrecondition,
    Phase,
    ProjectInstance,
    StallReport,
    StaleInputWarning,
    TaskRuntime,
    TaskState,
    instance_from_dict,
    instance_to_dict,
)

__all__ = [
    "Action",
    "Annotation",
    "ArtifactRuntime",
    "BlockedTask",
    "DocumentRef",
    "LIVE_STATES",
    "MissingPrecondition",
    "PROGRESS_STATES",
    "Phase",
    "ProjectInstance",
    "ScriptStep",
    "StallReport",
    "StaleInputWarning",
    "TERMINAL_STATES",
    "TRANSITIONS",
    "TaskRuntime",
    "TaskState",
    "Trace",
    "TraceEvent",
    "annotate",
    "assign",
    "attach_document",
    "detect_stall",
    "evaluate",
    "export_template",
    "grant",
    "instance_from_dict",
    "instance_to_dict",
    "instantiate",
    "parse_script",
    "set_phase",
    "simulate",
    "tailor",
    "transition",
    "unmet_preconditions",
]
