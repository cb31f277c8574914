"""Parameter sweeps producing the data behind the rate and tau_min curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bsm import BsmPoint, qber_infty
from .params import (
    E_MAX,
    DeviceParams,
    InfeasibleError,
    LinkConfig,
    MemoryModel,
    NoSolutionError,
    transmittance,
)
from .sps import SpsScenario, relay_rate_sps, repeater_rate_sps, tau_min_sps
from .wcp import IntensitySearchSpec, WcpScenario, optimize_mu, tau_min_wcp, wcp_rate_at_mu

COLUMNS = (
    "x",
    "skr_sps_repeater",
    "skr_sps_relay",
    "skr_wcp_repeater",
    "tau_min_sps",
    "tau_min_wcp",
    "qber_x",
    "qber_z",
    "mu_opt",
)
VARIABLES = ("distance_km", "tau", "mu")


@dataclass(frozen=True)
class SweepSpec:
    """Grid over one variable, everything else fixed.

    With ``tau_relative`` a ``tau`` sweep is read in units of the SPS
    minimal coherence time at the fixed distance.  ``mu`` is only used by a
    ``mu`` sweep; elsewhere the intensity is optimized.
    """

    variable: str
    lo: float
    hi: float
    steps: int
    scale: str = "linear"
    device: DeviceParams = field(default_factory=DeviceParams)
    distance_km: float = 100.0
    alpha_db_per_km: float = 0.17
    tau: float = math.inf
    tau_relative: bool = False
    search: IntensitySearchSpec = field(default_factory=IntensitySearchSpec)
    wcp: bool = True

    def __post_init__(self) -> None:
        if self.variable not in VARIABLES:
            raise ValueError(f"sweep variable must be one of {VARIABLES}, got {self.variable!r}")
        if not self.lo < self.hi:
            raise ValueError("sweep range needs lo < hi")
        if self.steps < 2:
            raise ValueError("sweep needs at least 2 steps")
        if self.scale not in ("linear", "log"):
            raise ValueError("scale must be 'linear' or 'log'")
        if self.scale == "log" and self.lo <= 0.0:
            raise ValueError("log scale requires lo > 0")

    def grid(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.lo, self.hi, self.steps)
        return np.linspace(self.lo, self.hi, self.steps)


def _tau_min_sps_or_none(device: DeviceParams, link: LinkConfig) -> float | None:
    p0 = transmittance(link)
    try:
        return tau_min_sps(qber_infty(BsmPoint(device.eta_md, device.p_d)), p0, E_MAX)
    except (NoSolutionError, ValueError):
        return None


def sweep_row(spec: SweepSpec, x: float) -> dict:
    distance = x if spec.variable == "distance_km" else spec.distance_km
    link = LinkConfig(distance, spec.alpha_db_per_km)
    device = spec.device
    t_min = _tau_min_sps_or_none(device, link)
    tau = spec.tau
    if spec.variable == "tau":
        if spec.tau_relative:
            if t_min is None:
                raise ValueError("tau_min_sps undefined at this point; cannot sweep relative tau")
            tau = x * t_min
        else:
            tau = x
    memory = MemoryModel(tau)
    rep = repeater_rate_sps(SpsScenario(device, link, memory))
    row = {
        "x": x,
        "skr_sps_repeater": rep.skr_per_pulse,
        "skr_sps_relay": relay_rate_sps(device, link).skr_per_pulse,
        "skr_wcp_repeater": None,
        "tau_min_sps": t_min,
        "tau_min_wcp": None,
        "qber_x": rep.qber_x,
        "qber_z": rep.qber_z,
        "mu_opt": None,
    }
    if spec.wcp and device.p_d == 0.0:
        best = optimize_mu(device, link, memory, spec.search)
        row["mu_opt"] = best.mu_opt
        if spec.variable == "mu":
            row["skr_wcp_repeater"] = wcp_rate_at_mu(WcpScenario(device, link, memory, x)).skr_per_pulse
        else:
            row["skr_wcp_repeater"] = best.skr_per_pulse
        try:
            row["tau_min_wcp"] = tau_min_wcp(device, link, spec.search)
        except InfeasibleError:
            pass
    return row


def run_sweep(spec: SweepSpec) -> list[dict]:
    """Rows in grid order."""
    return [sweep_row(spec, float(x)) for x in spec.grid()]

