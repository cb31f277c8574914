"""Shared parameter records, binary entropy and fiber transmittance."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

#: Largest QBER (equal in both bases) with a positive asymptotic key.
E_MAX = 0.11

#: Attenuation of standard telecom fiber used throughout (dB/km).
ALPHA_DB_PER_KM = 0.17


class DegenerateError(ValueError):
    """A quantity is undefined or infinite at the requested parameter point."""


class NoSolutionError(ValueError):
    """An equation has no solution in the admissible range."""


class InfeasibleError(RuntimeError):
    """No positive secret key rate can be reached."""


def _check_prob(name: str, value: float, *, open_top: bool = False) -> None:
    if not (0.0 <= value <= 1.0) or (open_top and value >= 1.0) or math.isnan(value):
        bound = "[0, 1)" if open_top else "[0, 1]"
        raise ValueError(f"{name} must lie in {bound}, got {value!r}")


@dataclass(frozen=True)
class DeviceParams:
    """Detector, memory and source figures of merit.

    Attributes:
        eta_d: Detector efficiency.
        p_d: Dark count probability per detector and gate.
        eta_m: Retrieval efficiency of the quantum memory.
        nu_s: Source repetition frequency in Hz.
    """

    eta_d: float = 0.2
    p_d: float = 1e-6
    eta_m: float = 0.6
    nu_s: float = 1e8

    def __post_init__(self) -> None:
        _check_prob("eta_d", self.eta_d)
        _check_prob("p_d", self.p_d, open_top=True)
        _check_prob("eta_m", self.eta_m)
        if not (self.nu_s > 0.0) or math.isinf(self.nu_s):
            raise ValueError(f"nu_s must be a positive finite frequency, got {self.nu_s!r}")

    @property
    def eta_md(self) -> float:
        """Combined retrieval and detection efficiency."""
        return self.eta_m * self.eta_d

    @property
    def dt(self) -> float:
        """Time between two source attempts in seconds."""
        return 1.0 / self.nu_s


@dataclass(frozen=True)
class LinkConfig:
    """Symmetric fiber link; the memory station sits halfway."""

    distance_km: float
    alpha_db_per_km: float = ALPHA_DB_PER_KM

    def __post_init__(self) -> None:
        if not (self.distance_km >= 0.0) or math.isinf(self.distance_km):
            raise ValueError(f"distance_km must be finite and >= 0, got {self.distance_km!r}")
        if not (self.alpha_db_per_km > 0.0) or math.isinf(self.alpha_db_per_km):
            raise ValueError(f"alpha_db_per_km must be > 0, got {self.alpha_db_per_km!r}")

    @property
    def eta_t(self) -> float:
        return transmittance(self)


class DecoherenceModel(enum.Enum):
    CUTOFF = "cutoff"
    DEPOLARIZING = "depolarizing"


@dataclass(frozen=True)
class MemoryModel:
    """Memory coherence time ``tau`` in units of the source period.

    ``tau = math.inf`` is a perfect memory.  For the cutoff model the
    memory is ideal while the storage gap is at most ``tau`` bins and fully
    mixed afterwards; the depolarizing model shrinks the Bloch vector by
    ``exp(-t/tau)``.
    """

    tau: float = math.inf
    kind: DecoherenceModel = DecoherenceModel.CUTOFF

    def __post_init__(self) -> None:
        if math.isnan(self.tau) or self.tau < 0.0:
            raise ValueError(f"tau must be >= 0 (inf allowed), got {self.tau!r}")
        if not isinstance(self.kind, DecoherenceModel):
            object.__setattr__(self, "kind", DecoherenceModel(self.kind))

    @property
    def is_perfect(self) -> bool:
        return math.isinf(self.tau)


def binary_entropy(p: float) -> float:
    """Binary Shannon entropy in bits, with h(0) = h(1) = 0."""
    if math.isnan(p) or not (0.0 <= p <= 1.0):
        raise ValueError(f"binary_entropy is defined on [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def transmittance(link: LinkConfig) -> float:
    """Survival probability of a photon over half the link, 10^(-alpha L / 20)."""
    return 10.0 ** (-link.alpha_db_per_km * link.distance_km / 20.0)


def parse_tau(text: str | float) -> float:
    """Read a coherence time, accepting ``inf`` as a literal."""
    tau = float(text)
    if math.isnan(tau) or tau < 0.0:
        raise ValueError(f"tau must be >= 0 or 'inf', got {text!r}")
    return tau
