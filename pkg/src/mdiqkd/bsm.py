"""Closed forms for the linear-optics Bell-state measurement.

Two regimes are covered: single photons with noisy threshold detectors
(:func:`p_bsm_single`, :func:`qber_infty`) and Fock states with ``n_a`` and
``n_b`` photons and no dark counts (:func:`p_bsm_fock`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import DegenerateError, _check_prob


@dataclass(frozen=True)
class BsmPoint:
    """Efficiency seen by the detectors and their dark count probability.

    For the repeater ``eta_eff`` is ``eta_m * eta_d``; for the relay it is
    ``p0 * eta_d`` since photons are detected straight off the fiber.
    """

    eta_eff: float
    p_d: float = 0.0

    def __post_init__(self) -> None:
        _check_prob("eta_eff", self.eta_eff)
        _check_prob("p_d", self.p_d, open_top=True)


def p_bsm_single(point: BsmPoint) -> float:
    """Success probability for one photon per side, dark counts included."""
    eta, pd = point.eta_eff, point.p_d
    return 0.5 * (1.0 - pd) ** 2 * (
        eta**2 + 2.0 * (4.0 - 3.0 * eta) * eta * pd + 8.0 * (1.0 - eta) ** 2 * pd**2
    )


def qber_infty(point: BsmPoint) -> float:
    """QBER of a successful BSM with ideal memories; caused by dark counts only."""
    eta, pd = point.eta_eff, point.p_d
    den = eta**2 + 8.0 * (eta - 1.0) ** 2 * pd**2 + 2.0 * (4.0 - 3.0 * eta) * eta * pd
    if den == 0.0:
        raise DegenerateError("qber_infty is undefined when eta_eff = 0 and p_d = 0")
    return 2.0 * pd * (2.0 * (eta - 1.0) ** 2 * pd - (eta - 2.0) * eta) / den


def single_pattern_prob(n: int, eta_md: float) -> float:
    """P(one designated detector of a pair clicks, its partner stays dark).

    ``n`` photons split evenly over the two detectors of the pair.
    """
    if eta_md >= 1.0:
        return 0.5**n
    # (1 - eta/2)^n - (1 - eta)^n without cancellation at small eta
    lo = n * math.log1p(-eta_md)
    return math.exp(lo) * math.expm1(n * math.log1p(-0.5 * eta_md) - lo)


def p_bsm_fock(n_a: int, n_b: int, eta_md: float) -> float:
    """Success probability with ``n_a`` and ``n_b`` photons in the two memories.

    The bracketed product is the probability of one heralding click
    pattern; the four patterns of the success set and the two same-
    polarization inputs out of four weigh in as a factor ``4 * 2 / 4 = 2``,
    so that ``p_bsm_fock(1, 1, eta) == eta**2 / 2``.
    """
    if n_a < 1 or n_b < 1:
        raise ValueError(f"photon numbers must be >= 1, got ({n_a}, {n_b})")
    _check_prob("eta_md", eta_md)
    return 2.0 * single_pattern_prob(n_a, eta_md) * single_pattern_prob(n_b, eta_md)
