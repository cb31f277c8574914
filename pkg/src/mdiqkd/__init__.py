"""Secret key rates for measurement-device-independent QKD with heralded quantum memories."""

from .bsm import BsmPoint, p_bsm_fock, p_bsm_single, qber_infty
from .params import (
    E_MAX,
    DecoherenceModel,
    DegenerateError,
    DeviceParams,
    InfeasibleError,
    LinkConfig,
    MemoryModel,
    NoSolutionError,
    binary_entropy,
    transmittance,
)
from .sps import (
    RateReport,
    SpsScenario,
    avg_attempts_closed,
    qber_avg_closed,
    relay_rate_sps,
    repeater_rate_sps,
    tau_min_sps,
)
from .wcp import (
    IntensitySearchSpec,
    WcpRateReport,
    WcpScenario,
    optimize_mu,
    tau_min_wcp,
    wcp_rate_at_mu,
)

__all__ = [
    "E_MAX",
    "BsmPoint",
    "DecoherenceModel",
    "DegenerateError",
    "DeviceParams",
    "InfeasibleError",
    "IntensitySearchSpec",
    "LinkConfig",
    "MemoryModel",
    "NoSolutionError",
    "RateReport",
    "SpsScenario",
    "WcpRateReport",
    "WcpScenario",
    "avg_attempts_closed",
    "binary_entropy",
    "optimize_mu",
    "p_bsm_fock",
    "p_bsm_single",
    "qber_avg_closed",
    "qber_infty",
    "relay_rate_sps",
    "repeater_rate_sps",
    "tau_min_sps",
    "tau_min_wcp",
    "transmittance",
    "wcp_rate_at_mu",
]
