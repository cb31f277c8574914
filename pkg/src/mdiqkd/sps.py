"""Secret key rates with single-photon sources.

The repeater stores each arriving photon in a heralded memory and runs the
Bell-state measurement once both memories are loaded.  Each loading round
costs ``max(k_A, k_B)`` source attempts, where ``k_A`` and ``k_B`` are
independent geometric storage times.  A failed measurement flushes both
memories and a new round starts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bsm import BsmPoint, p_bsm_single, qber_infty
from .params import (
    E_MAX,
    DecoherenceModel,
    DegenerateError,
    DeviceParams,
    LinkConfig,
    MemoryModel,
    NoSolutionError,
    binary_entropy,
    transmittance,
)

#: Relative size of the neglected tail accepted by the truncated series.
SERIES_TAIL = 1e-10


class TruncationWarning(RuntimeWarning):
    """A truncated series dropped more than the accepted tail."""


@dataclass(frozen=True)
class SpsScenario:
    device: DeviceParams
    link: LinkConfig
    memory: MemoryModel = field(default_factory=MemoryModel)

    @property
    def p0(self) -> float:
        """Storage probability per attempt; equal to the arm transmittance."""
        return transmittance(self.link)


@dataclass(frozen=True)
class RateReport:
    """Raw rate, QBERs and secret key rate at one parameter point.

    ``skr_signed`` keeps the unclamped value of the per-pulse secret key
    rate; ``skr_per_pulse`` is that value floored at zero.
    """

    p0: float
    p_bsm: float
    avg_attempts: float
    avg_time_s: float
    qber_x: float
    qber_z: float
    skr_signed: float
    skr_per_pulse: float
    skr_per_second: float

    @property
    def feasible(self) -> bool:
        return self.skr_per_pulse > 0.0


def joint_storage_prob(k_a: int, k_b: int, p0: float) -> float:
    """Probability that Alice's photon is first stored at bin ``k_a`` and Bob's at ``k_b``."""
    if k_a < 1 or k_b < 1:
        raise ValueError("time bins start at 1")
    q = 1.0 - p0
    return p0**2 * q ** (k_a - 1) * q ** (k_b - 1)


def avg_attempts_closed(p0: float, p_bsm: float) -> float:
    """Expected source attempts per raw bit, E[max(k_A, k_B)] / p_bsm."""
    if p0 <= 0.0 or p_bsm <= 0.0:
        raise DegenerateError("expected attempts diverge when p0 or p_bsm is 0")
    return (3.0 - 2.0 * p0) / ((2.0 - p0) * p0) / p_bsm


def _round_cost_pmf(p0: float, truncation: int) -> np.ndarray:
    """P(round cost = k) for k = 1..truncation, from the three storage orderings."""
    q = 1.0 - p0
    k = np.arange(1, truncation + 1)
    # sum_{i<k} P(k, i) = p0^2 q^(k-1) (1 - q^(k-1)) / p0
    same = p0**2 * q ** (2 * (k - 1))
    earlier = p0 * q ** (k - 1) * (1.0 - q ** (k - 1))
    return same + 2.0 * earlier


def _retries_for_tail(p_bsm: float, tail: float) -> int:
    r = 1.0 - p_bsm
    if r == 0.0:
        return 1
    s = 0
    # relative tail of sum_s (s+1) p r^s beyond s = S: p r^(S+1) (S+2) + r^(S+2)
    while p_bsm * r ** (s + 1) * (s + 2) + r ** (s + 2) > tail:
        s = max(2 * s, s + 16)
    lo, hi = s // 2, s
    while lo < hi:
        mid = (lo + hi) // 2
        if p_bsm * r ** (mid + 1) * (mid + 2) + r ** (mid + 2) > tail:
            lo = mid + 1
        else:
            hi = mid
    return lo


def avg_attempts_series(
    p0: float, p_bsm: float, truncation: int = 2000, retries: int | None = None
) -> float:
    """Expected attempts per raw bit as an explicit truncated double sum.

    Sums ``(s + 1) * k`` over ``s`` failed rounds followed by a success and
    a round cost of ``k`` bins.  ``truncation`` bounds the bin index; the
    number of retries defaults to whatever keeps the retry tail below
    1e-12 relative.  A :class:`TruncationWarning` is emitted when the bin
    tail exceeds :data:`SERIES_TAIL`.
    """
    if p0 <= 0.0 or p_bsm <= 0.0:
        raise DegenerateError("expected attempts diverge when p0 or p_bsm is 0")
    q = 1.0 - p0
    bin_tail = 2.0 * q**truncation * (truncation + 1.0 / p0)
    if bin_tail > SERIES_TAIL:
        warnings.warn(
            f"bin truncation {truncation} leaves a tail of {bin_tail:.2e}", TruncationWarning
        )
    if retries is None:
        retries = _retries_for_tail(p_bsm, 1e-12)
    s = np.arange(retries + 1)
    k = np.arange(1, truncation + 1)
    w_s = (s + 1) * p_bsm * (1.0 - p_bsm) ** s
    w_k = k * _round_cost_pmf(p0, truncation)
    return float(np.sum(np.outer(w_s, w_k)))


def qber_avg_closed(e_inf: float, p0: float, tau: float) -> float:
    """QBER averaged over storage times under the cutoff decoherence model.

    ``e_inf + (1 - 2 e_inf) (1 - p0)^(1 + tau) / (2 - p0)``: the second
    term is the probability ``2 (1 - p0)^(1 + tau) / (2 - p0)`` that the
    storage gap exceeds ``tau`` bins, times the excess error ``1/2 - e_inf``.
    """
    if math.isinf(tau):
        return e_inf
    return e_inf + (1.0 - 2.0 * e_inf) * (1.0 - p0) ** (1.0 + tau) / (2.0 - p0)


def qber_avg_series(e_inf: float, p0: float, tau: float, truncation: int = 2000) -> float:
    """Average QBER as the explicit sum over storage bins (k_A, k_B).

    The measurement happens at ``k = max(k_A, k_B)``; the pair is coherent
    when both ``k - k_A`` and ``k - k_B`` are at most ``tau``, otherwise the
    bit is random.  Agrees with :func:`qber_avg_closed` at integer ``tau``.
    """
    q = 1.0 - p0
    if 2.0 * q**truncation > SERIES_TAIL:
        warnings.warn(
            f"bin truncation {truncation} leaves a tail of {2.0 * q**truncation:.2e}",
            TruncationWarning,
        )
    k = np.arange(1, truncation + 1)
    pow_q = q ** (k - 1)
    # prefix[j] = sum_{i=1}^{j} q^(i-1)
    prefix = np.concatenate(([0.0], np.cumsum(pow_q)))
    total_earlier = prefix[k - 1]
    if math.isinf(tau):
        coherent_earlier = total_earlier
    else:
        lo = np.maximum(1, k - int(math.floor(tau)))
        coherent_earlier = prefix[k - 1] - prefix[lo - 1]
    incoherent_earlier = total_earlier - coherent_earlier
    p_same = p0**2 * pow_q * pow_q
    # both orderings (photon from A earlier, or from B earlier) contribute alike
    p_coh = p0**2 * pow_q * coherent_earlier
    p_incoh = p0**2 * pow_q * incoherent_earlier
    return float(np.sum(e_inf * p_same + 2.0 * (e_inf * p_coh + 0.5 * p_incoh)))


def tau_min_sps(e_inf: float, p0: float, e_max: float = E_MAX) -> float:
    """Coherence time at which the averaged QBER reaches ``e_max``.

    May be negative when the QBER stays below ``e_max`` even with instant
    decoherence of every stored photon.
    """
    if e_inf >= e_max:
        raise NoSolutionError(f"e_inf = {e_inf} >= e_max = {e_max}: no key at any tau")
    if not (0.0 < p0 < 1.0):
        raise ValueError(f"p0 must lie in (0, 1), got {p0!r}")
    arg = (p0 - 2.0) * (e_inf - e_max) / ((p0 - 1.0) * (2.0 * e_inf - 1.0))
    return math.log(arg) / math.log(1.0 - p0)


def secret_fraction(e_x: float, e_z: float) -> float:
    return 1.0 - binary_entropy(e_z) - binary_entropy(e_x)


def _report(device: DeviceParams, p0, p_bsm, avg_attempts, e_x, e_z) -> RateReport:
    signed = secret_fraction(e_x, e_z) / avg_attempts
    skr = max(0.0, signed)
    return RateReport(
        p0=p0,
        p_bsm=p_bsm,
        avg_attempts=avg_attempts,
        avg_time_s=avg_attempts * device.dt,
        qber_x=e_x,
        qber_z=e_z,
        skr_signed=signed,
        skr_per_pulse=skr,
        skr_per_second=skr * device.nu_s,
    )


def repeater_rate_sps(scenario: SpsScenario) -> RateReport:
    """Key rate of the memory-assisted scheme with single-photon sources."""
    if scenario.memory.kind is not DecoherenceModel.CUTOFF:
        raise ValueError("analytic rates exist only for the cutoff decoherence model")
    device = scenario.device
    point = BsmPoint(device.eta_md, device.p_d)
    p0 = scenario.p0
    p_bsm = p_bsm_single(point)
    avg_k = avg_attempts_closed(p0, p_bsm)
    e = qber_avg_closed(qber_infty(point), p0, scenario.memory.tau)
    return _report(device, p0, p_bsm, avg_k, e, e)


def relay_rate_sps(device: DeviceParams, link: LinkConfig) -> RateReport:
    """Key rate without memories: both photons must arrive in the same bin."""
    p0 = transmittance(link)
    point = BsmPoint(p0 * device.eta_d, device.p_d)
    p_bsm = p_bsm_single(point)
    if p_bsm == 0.0:
        raise DegenerateError("relay BSM never succeeds")
    e = qber_infty(point)
    return _report(device, p0, p_bsm, 1.0 / p_bsm, e, e)


def crossover_distance(
    device: DeviceParams,
    memory: MemoryModel | None = None,
    lo_km: float = 1.0,
    hi_km: float = 500.0,
    alpha_db_per_km: float = 0.17,
) -> float:
    """Distance beyond which the repeater outperforms the relay."""
    from scipy.optimize import brentq

    memory = memory or MemoryModel()

    def gap(distance):
        link = LinkConfig(distance, alpha_db_per_km)
        rep = repeater_rate_sps(SpsScenario(device, link, memory)).skr_per_pulse
        return rep - relay_rate_sps(device, link).skr_per_pulse

    if gap(lo_km) * gap(hi_km) > 0.0:
        raise NoSolutionError(f"no crossover between {lo_km} and {hi_km} km")
    return brentq(gap, lo_km, hi_km, xtol=1e-9)
