"""Decoy-state key rate with phase-randomized weak coherent pulses.

Assumes noiseless detectors (``p_d = 0``) and asymptotically many decoy
intensities, so the single-photon yield and error are known exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .bsm import p_bsm_fock, single_pattern_prob
from .params import (
    DecoherenceModel,
    DegenerateError,
    DeviceParams,
    InfeasibleError,
    LinkConfig,
    MemoryModel,
    binary_entropy,
    transmittance,
)
from .sps import avg_attempts_closed, qber_avg_closed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WcpScenario:
    device: DeviceParams
    link: LinkConfig
    memory: MemoryModel = field(default_factory=MemoryModel)
    mu: float = 0.5

    def __post_init__(self) -> None:
        if self.device.p_d != 0.0:
            raise ValueError("WCP path requires p_d = 0")
        if not (self.mu > 0.0) or math.isinf(self.mu):
            raise ValueError(f"mu must be a positive intensity, got {self.mu!r}")

    @property
    def eta_t(self) -> float:
        return transmittance(self.link)

    @property
    def p0(self) -> float:
        return storage_prob_wcp(self.mu, self.eta_t)

    @property
    def p0_single(self) -> float:
        """Probability that a single-photon emission gets stored."""
        return self.mu * math.exp(-self.mu) * self.eta_t


@dataclass(frozen=True)
class IntensitySearchSpec:
    """Coarse log-grid over ``[mu_lo, mu_hi]`` refined by golden-section search.

    ``xtol`` is the relative refinement tolerance of the golden-section step.
    """

    mu_lo: float = 1e-3
    mu_hi: float = 10.0
    grid_points: int = 64
    xtol: float = 1e-10

    def __post_init__(self) -> None:
        if not (0.0 < self.mu_lo < self.mu_hi):
            raise ValueError("intensity bounds must satisfy 0 < mu_lo < mu_hi")
        if self.grid_points < 3:
            raise ValueError("grid_points must be >= 3")


@dataclass(frozen=True)
class WcpRateReport:
    mu_opt: float
    p0: float
    p0_single: float
    f11: float
    qber_x11: float
    qber_z: float
    p_bsm: float
    avg_attempts: float
    skr_signed: float
    skr_per_pulse: float
    skr_per_second: float
    at_boundary: bool = False

    @property
    def feasible(self) -> bool:
        return self.skr_per_pulse > 0.0


def storage_prob_wcp(mu: float, eta_t: float) -> float:
    """Probability that at least one photon of the pulse is stored."""
    return -math.expm1(-mu * eta_t)


def stored_photon_dist(n: int, mu: float, eta_t: float) -> float:
    """Probability that exactly ``n`` photons reach the memory (Poisson, mean mu*eta_t)."""
    if n < 0:
        raise ValueError("photon number must be >= 0")
    x = mu * eta_t
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(x) - x - math.lgamma(n + 1))


def stored_photon_dist_series(n: int, mu: float, eta_t: float, extra: int = 60) -> float:
    """Same as :func:`stored_photon_dist`, summing over emitted photon numbers m >= n."""
    total = 0.0
    for m in range(n, n + extra + 1):
        emitted = math.exp(-mu + m * math.log(mu) - math.lgamma(m + 1)) if mu > 0 else float(m == 0)
        total += emitted * math.comb(m, n) * eta_t**n * (1.0 - eta_t) ** (m - n)
    return total


def p_bsm_wcp(mu: float, eta_t: float, eta_md: float) -> float:
    """BSM success probability given both memories hold at least one photon."""
    if mu <= 0.0:
        raise DegenerateError("p_bsm_wcp is undefined at mu = 0")
    x = mu * eta_t
    return (
        2.0
        * math.exp(-2.0 * x * (eta_md - 1.0))
        * math.expm1(0.5 * x * eta_md) ** 2
        / math.expm1(x) ** 2
    )


def p_bsm_wcp_series(mu: float, eta_t: float, eta_md: float, n_max: int | None = None) -> float:
    """Double sum of stored-photon weights times the Fock success probability, over P0^2."""
    x = mu * eta_t
    if n_max is None:
        n_max = _poisson_cutoff(x)
    n = np.arange(1, n_max + 1)
    pn = np.array([stored_photon_dist(int(k), mu, eta_t) for k in n])
    pb = np.array([[p_bsm_fock(int(a), int(b), eta_md) for b in n] for a in n])
    num = pn @ pb @ pn
    den = pn.sum() ** 2
    return float(num / den)


def f11(mu: float, eta_t: float, eta_md: float) -> float:
    """Fraction of raw key bits from single-photon emissions on both sides."""
    if mu <= 0.0:
        raise DegenerateError("f11 is undefined at mu = 0")
    x = mu * eta_t
    if eta_md == 0.0:
        # eta_md -> 0 limit of the expression below
        return math.exp(-2.0 * mu)
    return (
        mu**2
        * eta_md**2
        * eta_t**2
        * math.exp(x * eta_md - 2.0 * mu)
        / (4.0 * math.expm1(0.5 * x * eta_md) ** 2)
    )


def f11_series(mu: float, eta_t: float, eta_md: float, n_max: int | None = None) -> float:
    """Explicit sum reproducing :func:`f11`.

    Numerator: both sides emit one photon, it is stored, and the designated
    detector pair clicks (probability ``(eta_md/2)^2``).  Denominator: sum
    over stored photon numbers of P(designated detector clicks) on each
    side, ``1 - (1 - eta_md/2)^n``.  This is the normalization for which
    the sum equals the closed form; see :func:`f11_bsm_weighted`.
    """
    x = mu * eta_t
    if n_max is None:
        n_max = _poisson_cutoff(x)
    n = np.arange(1, n_max + 1)
    pn = np.array([stored_photon_dist(int(k), mu, eta_t) for k in n])
    click = 1.0 - (1.0 - 0.5 * eta_md) ** n
    p11 = mu * math.exp(-mu) * eta_t
    return float(p11**2 * (0.5 * eta_md) ** 2 / (pn @ click) ** 2)


def f11_bsm_weighted(mu: float, eta_t: float, eta_md: float, n_max: int | None = None) -> float:
    """Single-photon share of successful BSM events, normalized by all successes.

    Equals ``f11(...) * exp(mu * eta_t * eta_md)``; the two coincide to first
    order in ``mu * eta_t``.
    """
    x = mu * eta_t
    if n_max is None:
        n_max = _poisson_cutoff(x)
    n = np.arange(1, n_max + 1)
    pn = np.array([stored_photon_dist(int(k), mu, eta_t) for k in n])
    g = np.array([single_pattern_prob(int(k), eta_md) for k in n])
    p11 = mu * math.exp(-mu) * eta_t
    return float(p11**2 * single_pattern_prob(1, eta_md) ** 2 / (pn @ g) ** 2)


def _poisson_cutoff(x: float) -> int:
    # Poisson(x) mass beyond x + 12 sqrt(x) + 20 is far below 1e-20 for x <= 100
    return int(math.ceil(x + 12.0 * math.sqrt(x) + 20))


def qber_wcp(scenario: WcpScenario) -> tuple[float, float]:
    """(e_X of single-photon events, e_Z over all events).

    Without dark counts the only error source is memory decoherence.
    """
    tau = scenario.memory.tau
    e_x11 = qber_avg_closed(0.0, scenario.p0_single, tau)
    e_z = qber_avg_closed(0.0, scenario.p0, tau)
    return e_x11, e_z


def wcp_rate_at_mu(scenario: WcpScenario) -> WcpRateReport:
    """Key rate at the scenario's fixed intensity."""
    if scenario.memory.kind is not DecoherenceModel.CUTOFF:
        raise ValueError("analytic rates exist only for the cutoff decoherence model")
    device = scenario.device
    eta_t = scenario.eta_t
    p0 = scenario.p0
    pb = p_bsm_wcp(scenario.mu, eta_t, device.eta_md)
    frac = f11(scenario.mu, eta_t, device.eta_md)
    e_x11, e_z = qber_wcp(scenario)
    if pb == 0.0 or p0 == 0.0:
        avg_k = math.inf
        signed = 0.0
    else:
        avg_k = avg_attempts_closed(p0, pb)
        signed = (frac * (1.0 - binary_entropy(e_x11)) - binary_entropy(e_z)) / avg_k
    skr = max(0.0, signed)
    return WcpRateReport(
        mu_opt=scenario.mu,
        p0=p0,
        p0_single=scenario.p0_single,
        f11=frac,
        qber_x11=e_x11,
        qber_z=e_z,
        p_bsm=pb,
        avg_attempts=avg_k,
        skr_signed=signed,
        skr_per_pulse=skr,
        skr_per_second=skr * device.nu_s,
    )


def optimize_mu(
    device: DeviceParams,
    link: LinkConfig,
    memory: MemoryModel | None = None,
    search: IntensitySearchSpec | None = None,
) -> WcpRateReport:
    """Maximize the key rate over the intensity.

    The signed rate is maximized, so the optimum stays well defined when
    no intensity gives a positive key; ``feasible`` is then False.
    """
    memory = memory or MemoryModel()
    search = search or IntensitySearchSpec()

    # t = 1 + log(mu / mu_lo) >= 1 keeps the golden-section tolerance relative
    def to_mu(t: float) -> float:
        return search.mu_lo * math.exp(t - 1.0)

    def signed_rate(t: float) -> float:
        return wcp_rate_at_mu(WcpScenario(device, link, memory, to_mu(t))).skr_signed

    grid = np.linspace(1.0, 1.0 + math.log(search.mu_hi / search.mu_lo), search.grid_points)
    values = np.array([signed_rate(g) for g in grid])
    i = int(np.argmax(values))
    at_boundary = i == 0 or i == len(grid) - 1
    best_t = grid[i]
    if at_boundary:
        if values[i] > 0.0:
            log.warning("intensity optimum at the search boundary mu = %g", to_mu(grid[i]))
    elif values[i] > max(values[i - 1], values[i + 1]):
        res = minimize_scalar(
            lambda g: -signed_rate(g),
            bracket=(grid[i - 1], grid[i], grid[i + 1]),
            method="golden",
            tol=search.xtol,
        )
        if -res.fun >= values[i] and grid[i - 1] <= res.x <= grid[i + 1]:
            best_t = float(res.x)
    report = wcp_rate_at_mu(WcpScenario(device, link, memory, to_mu(best_t)))
    if at_boundary and report.skr_signed > 0.0:
        report = replace(report, at_boundary=True)
    return report


def tau_min_wcp(
    device: DeviceParams,
    link: LinkConfig,
    search: IntensitySearchSpec | None = None,
    rtol: float = 1e-7,
) -> float:
    """Smallest coherence time with a positive optimized key rate.

    Bisection on ``log(tau)``; each step optimizes the intensity.
    """
    search = search or IntensitySearchSpec()

    def best(tau: float) -> float:
        return optimize_mu(device, link, MemoryModel(tau), search).skr_signed

    if best(math.inf) <= 0.0:
        raise InfeasibleError("no positive WCP key rate even with perfect memories")
    if best(0.0) > 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while best(hi) <= 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise InfeasibleError("could not bracket tau_min")
    while hi - lo > rtol * hi:
        mid = math.sqrt(lo * hi) if lo > 0.0 else 0.5 * hi
        if best(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return hi
