"""Brute-force linear-optics evaluation of the Bell-state measurement.

Photons leave the two memories in modes ``a_H, a_V`` (Alice) and
``b_H, b_V`` (Bob) and are routed onto four threshold detectors
``d1..d4`` by

    a_H -> (d1 + d2)/sqrt2    a_V -> (d3 - d4)/sqrt2
    b_H -> (d3 + d4)/sqrt2    b_V -> (d1 - d2)/sqrt2

A measurement heralds success when exactly one detector of ``{d1, d2}``
and exactly one of ``{d3, d4}`` fire.

Output amplitudes are obtained by expanding the product of creation
operators, so two-photon interference is exact.  Loss ``eta`` is applied
per photon before ideal threshold detection; it commutes with the
splitters, so the no-click probability of a detector holding ``m``
photons is ``(1 - p_d) (1 - eta)**m``.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict

import numpy as np

#: Rows: input modes (a_H, a_V, b_H, b_V); columns: detectors d1..d4.
MODE_MAP = np.array(
    [
        [1.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, -1.0],
        [0.0, 0.0, 1.0, 1.0],
        [1.0, -1.0, 0.0, 0.0],
    ]
) / math.sqrt(2.0)

A_H, A_V, B_H, B_V = (np.eye(4)[i] for i in range(4))

#: Heralding click patterns (d1, d2, d3, d4): 1234, 1243, 2134, 2143.
SUCCESS_PATTERNS = (
    (True, False, True, False),
    (True, False, False, True),
    (False, True, True, False),
    (False, True, False, True),
)

ALL_PATTERNS = tuple(itertools.product((False, True), repeat=4))

DEFAULT_PHOTON_CAP = 12


class PhotonCapError(ValueError):
    """The requested photon number exceeds the enumeration cap."""


def split_binomial(n: int) -> dict[tuple[int, int], float]:
    """Occupations of the two outputs of a balanced splitter fed ``n`` photons in one port."""
    if n < 0:
        raise ValueError("photon number must be >= 0")
    return {(k, n - k): math.comb(n, k) / 2.0**n for k in range(n, -1, -1)}


def threshold_click_prob(n: int, eta: float, p_d: float = 0.0) -> float:
    """Click probability of a threshold detector hit by ``n`` photons."""
    if n < 0:
        raise ValueError("photon number must be >= 0")
    return 1.0 - (1.0 - p_d) * (1.0 - eta) ** n


def output_amplitudes(inputs) -> dict[tuple[int, ...], float]:
    """Fock amplitudes at the detectors for a product of input Fock states.

    ``inputs`` is a sequence of ``(mode, n)`` pairs, where ``mode`` is a
    unit vector over ``(a_H, a_V, b_H, b_V)`` and the modes are mutually
    orthogonal.  Each pair contributes ``(mode . a_dag)^n / sqrt(n!)``.
    """
    poly: dict[tuple[int, ...], float] = {(0, 0, 0, 0): 1.0}
    norm = 1.0
    for mode, n in inputs:
        row = np.asarray(mode, dtype=float) @ MODE_MAP
        norm *= math.factorial(n)
        for _ in range(n):
            nxt: dict[tuple[int, ...], float] = defaultdict(float)
            for occ, c in poly.items():
                for j, u in enumerate(row):
                    if u != 0.0:
                        occ2 = occ[:j] + (occ[j] + 1,) + occ[j + 1 :]
                        nxt[occ2] += c * u
            poly = nxt
    out = {}
    for occ, c in poly.items():
        amp = c * math.sqrt(math.prod(math.factorial(m) for m in occ) / norm)
        if amp != 0.0:
            out[occ] = amp
    return out


def occupation_distribution(inputs) -> dict[tuple[int, ...], float]:
    return {occ: amp * amp for occ, amp in output_amplitudes(inputs).items()}


def _pattern_weight(occ, pattern, eta: float, p_d: float) -> float:
    w = 1.0
    for m, click in zip(occ, pattern):
        silent = (1.0 - p_d) * (1.0 - eta) ** m
        w *= (1.0 - silent) if click else silent
    return w


def click_distribution(inputs, eta: float, p_d: float = 0.0) -> dict[tuple[bool, ...], float]:
    """Probabilities of all 16 click patterns of d1..d4."""
    dist = occupation_distribution(inputs)
    return {
        pattern: sum(p * _pattern_weight(occ, pattern, eta, p_d) for occ, p in dist.items())
        for pattern in ALL_PATTERNS
    }


def success_prob(inputs, eta: float, p_d: float = 0.0) -> float:
    clicks = click_distribution(inputs, eta, p_d)
    return sum(clicks[p] for p in SUCCESS_PATTERNS)


def _check_cap(n_a: int, n_b: int, cap: int) -> None:
    if n_a < 1 or n_b < 1:
        raise ValueError(f"photon numbers must be >= 1, got ({n_a}, {n_b})")
    if n_a > cap or n_b > cap:
        raise PhotonCapError(f"photon numbers ({n_a}, {n_b}) exceed the cap {cap}")


def bsm_success_prob_oracle(
    n_a: int, n_b: int, eta_md: float, p_d: float = 0.0, cap: int = DEFAULT_PHOTON_CAP
) -> float:
    """Success probability averaged over the four computational-basis inputs.

    Alice's memory holds ``n_a`` photons of one polarization and Bob's
    ``n_b``; HH, HV, VH and VV each occur with probability 1/4.  Without
    dark counts only HH and VV can herald.
    """
    _check_cap(n_a, n_b, cap)
    total = 0.0
    for pa, pb in itertools.product((A_H, A_V), (B_H, B_V)):
        total += success_prob([(pa, n_a), (pb, n_b)], eta_md, p_d)
    return total / 4.0


def bsm_success_prob_diagonal(eta_md: float, p_d: float = 0.0) -> float:
    """One photon per side, prepared in the diagonal basis (|+>, |->)."""
    total = 0.0
    for sa, sb in itertools.product((1.0, -1.0), repeat=2):
        mode_a = (A_H + sa * A_V) / math.sqrt(2.0)
        mode_b = (B_H + sb * B_V) / math.sqrt(2.0)
        total += success_prob([(mode_a, 1), (mode_b, 1)], eta_md, p_d)
    return total / 4.0


def cross_term(
    n_a: int, n_b: int, eta: float = 1.0, p_d: float = 0.0, patterns=SUCCESS_PATTERNS
) -> float:
    """Click probability carried by the coherence between the HH and VV inputs.

    Evaluates ``tr(Pi sigma)`` summed over ``patterns`` for
    ``sigma = |H^{n_a} H^{n_b}><V^{n_a} V^{n_b}|``.  The threshold POVM is
    diagonal in the Fock basis, so only occupations present in both
    branches contribute.
    """
    hh = output_amplitudes([(A_H, n_a), (B_H, n_b)])
    vv = output_amplitudes([(A_V, n_a), (B_V, n_b)])
    total = 0.0
    for occ, amp in hh.items():
        other = vv.get(occ)
        if other is None:
            continue
        total += amp * other * sum(_pattern_weight(occ, p, eta, p_d) for p in patterns)
    return total


def cross_term_vanishes(n_a: int, n_b: int, eta: float = 1.0, tol: float = 1e-12) -> bool:
    """True when HH/VV coherences add nothing to the heralding probability.

    For ``n_a != n_b`` the two branches put different photon numbers on
    each detector pair and every term is zero.  For ``n_a == n_b`` single
    patterns carry a nonzero share with sign ``(-1)**n`` under d1<->d2 or
    d3<->d4, so the sum over the success set cancels for odd ``n`` only.
    """
    return abs(cross_term(n_a, n_b, eta)) <= tol
