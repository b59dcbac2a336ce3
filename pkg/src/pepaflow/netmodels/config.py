"""Architecture configurations and presets."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from importlib import resources

from ..errors import ConfigError
from ..parser import parse_rates

NF_TYPES = ("randp", "sf", "ran", "cn", "mbupf", "bcc", "bsf", "bdp", "af")


def data_path(*parts):
    path = resources.files("pepaflow").joinpath("data")
    for part in parts:
        path = path.joinpath(part)
    return path


def default_rates():
    return parse_rates(data_path("rates", "default.rates").read_text())


class PresetId(enum.Enum):
    B1 = "b1"
    B2 = "b2"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ArchitectureConfig:
    """User count, NF replication and processor/thread layout, rate table."""

    n: int
    nf_counts: tuple = (1,) * 9
    processors_per_nf: int = 1
    threads_per_processor: int = 10
    rates: dict = field(default_factory=default_rates)

    def __post_init__(self):
        if len(self.nf_counts) != len(NF_TYPES):
            raise ConfigError(f"nf_counts needs {len(NF_TYPES)} entries")
        values = (self.n, self.processors_per_nf, self.threads_per_processor,
                  *self.nf_counts)
        if any(not isinstance(v, int) or v < 1 for v in values):
            raise ConfigError("all counts must be integers >= 1")

    def threads(self, nf):
        """N = N_nf * N_nfp * N_t for one NF type."""
        return self.processors(nf) * self.threads_per_processor

    def processors(self, nf):
        """N_p = N_nf * N_nfp for one NF type."""
        return self.nf_counts[NF_TYPES.index(nf)] * self.processors_per_nf

    def total_processors(self):
        return sum(self.processors(nf) for nf in NF_TYPES)

    def with_n(self, n):
        return ArchitectureConfig(int(n), self.nf_counts, self.processors_per_nf,
                                  self.threads_per_processor, dict(self.rates))


def preset(pid, n, rates=None, processors_per_nf=1, threads_per_processor=10):
    pid = PresetId(pid) if not isinstance(pid, PresetId) else pid
    if pid is PresetId.B1:
        counts = (1,) * 9
    elif pid is PresetId.B2:
        counts = (3,) * 9
    else:
        raise ConfigError("CUSTOM configurations are built directly")
    return ArchitectureConfig(int(n), counts, processors_per_nf,
                              threads_per_processor,
                              dict(rates) if rates else default_rates())
