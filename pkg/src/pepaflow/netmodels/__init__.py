from .config import (NF_TYPES, ArchitectureConfig, PresetId, data_path,
                     default_rates, preset)
from .builders import (BUILDERS, COMPLETION_ACTION, GOLDEN_N, PROCESSORS, build,
                       build_baseline_5g_model, build_ssba_model, golden_path,
                       golden_text, processor_groups, total_processor_population)

__all__ = [
    "NF_TYPES", "ArchitectureConfig", "PresetId", "preset", "default_rates",
    "data_path", "build_ssba_model", "build_baseline_5g_model", "build",
    "BUILDERS", "PROCESSORS", "COMPLETION_ACTION", "processor_groups",
    "total_processor_population", "GOLDEN_N", "golden_text", "golden_path",
]
