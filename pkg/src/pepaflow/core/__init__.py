from .model import (Active, Cooperation, Group, ModelSpec, Named, Passive,
                    Prefix, SequentialComponentDef, apparent_rate, iter_groups,
                    local_states, resolve_rate)
from .validate import Diagnostic, is_valid, validate
from .compile import (PopulationModel, TransitionClass, compile_model,
                      compile_transition_classes, evaluate)

__all__ = [
    "Active", "Passive", "Named", "Prefix", "SequentialComponentDef", "Group",
    "Cooperation", "ModelSpec", "Diagnostic", "TransitionClass",
    "PopulationModel", "validate", "is_valid", "local_states", "apparent_rate",
    "compile_transition_classes", "compile_model", "evaluate", "iter_groups",
    "resolve_rate",
]
