"""Verification suites: Fock oracle, series versus closed forms, Monte Carlo.

Each suite returns a header and rows ready for CSV output; the last column
of every row is a pass flag.
"""

from __future__ import annotations

import itertools
import math

from .bsm import BsmPoint, p_bsm_fock, p_bsm_single
from .fock import bsm_success_prob_oracle
from .montecarlo import McConfig, qber_depolarizing_series, simulate
from .params import DecoherenceModel, MemoryModel
from .sps import avg_attempts_closed, avg_attempts_series, qber_avg_closed, qber_avg_series
from .wcp import (
    f11,
    f11_series,
    p_bsm_wcp,
    p_bsm_wcp_series,
    stored_photon_dist,
    stored_photon_dist_series,
)

ORACLE_ETAS = (0.1, 0.3, 0.6, 0.9, 1.0)
ORACLE_MAX_N = 5
ORACLE_TOL = 1e-12
DARK_GRID = tuple(itertools.product((0.05, 0.12, 0.5, 0.9, 1.0), (1e-6, 1e-4, 1e-2, 0.1)))

SERIES_RTOL = 1e-6
SERIES_P0 = (0.5, 0.1, 0.01)
SERIES_P_BSM = (1.0, 0.5, 0.0072)
SERIES_E_INF = (0.0, 0.01, 0.05)
SERIES_TAU = (0, 3, 20)
WCP_MU = (0.05, 0.5, 1.0, 2.0)
WCP_ETA_T = (1e-3, 1e-2, 0.1)
WCP_ETA_MD = (0.12, 0.5, 1.0)

MC_P0 = (0.3, 0.05)
MC_P_BSM = (0.5, 0.1)
MC_TAU = (2.0, 10.0)
MC_E_INF = (0.0, 0.05)
#: (p0, p_bsm, tau, e_inf) for the depolarizing memory.
MC_DEPOLARIZING = (
    (0.3, 0.5, 5.0, 0.0),
    (0.05, 0.5, 10.0, 0.05),
    (0.3, 0.5, math.inf, 0.02),
)

ORACLE_HEADER = ("n_a", "n_b", "eta", "p_d", "p_oracle", "p_formula", "abs_diff", "passed")
SERIES_HEADER = ("quantity", "params", "closed_form", "series", "rel_diff", "passed")
MC_HEADER = ("statistic", "cell", "analytic_value", "mc_mean", "mc_stderr", "n", "seed", "passed")


def oracle_suite(max_n: int = ORACLE_MAX_N, etas=ORACLE_ETAS, tol: float = ORACLE_TOL):
    rows = []
    for n_a, n_b, eta in itertools.product(range(1, max_n + 1), range(1, max_n + 1), etas):
        p_or = bsm_success_prob_oracle(n_a, n_b, eta)
        p_fo = p_bsm_fock(n_a, n_b, eta)
        diff = abs(p_or - p_fo)
        rows.append((n_a, n_b, eta, 0.0, p_or, p_fo, diff, diff <= tol))
    for eta, pd in DARK_GRID:
        p_or = bsm_success_prob_oracle(1, 1, eta, pd)
        p_fo = p_bsm_single(BsmPoint(eta, pd))
        diff = abs(p_or - p_fo)
        rows.append((1, 1, eta, pd, p_or, p_fo, diff, diff <= tol))
    return ORACLE_HEADER, rows


def bins_for_tail(p0: float, tail: float = 1e-13) -> int:
    """Bin truncation for which the attempts tail 2 q^T (T + 1/p0) is below ``tail``."""
    q = 1.0 - p0
    if q == 0.0:
        return 1
    t = int(math.ceil(math.log(tail) / math.log(q)))
    while 2.0 * q**t * (t + 1.0 / p0) > tail:
        t += max(1, t // 8)
    return t


def _rel(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def series_suite(rtol: float = SERIES_RTOL):
    rows = []

    def add(quantity, params, closed, series):
        d = _rel(closed, series)
        rows.append((quantity, params, closed, series, d, d <= rtol))

    for p0, pb in itertools.product(SERIES_P0, SERIES_P_BSM):
        add(
            "avg_attempts",
            f"p0={p0};p_bsm={pb}",
            avg_attempts_closed(p0, pb),
            avg_attempts_series(p0, pb, bins_for_tail(p0)),
        )
    for p0, e, tau in itertools.product(SERIES_P0, SERIES_E_INF, SERIES_TAU):
        add(
            "qber_cutoff",
            f"p0={p0};e_inf={e};tau={tau}",
            qber_avg_closed(e, p0, tau),
            qber_avg_series(e, p0, tau, bins_for_tail(p0)),
        )
    for mu, eta_t in itertools.product(WCP_MU, WCP_ETA_T):
        for n in range(6):
            add(
                "stored_photon_dist",
                f"n={n};mu={mu};eta_t={eta_t}",
                stored_photon_dist(n, mu, eta_t),
                stored_photon_dist_series(n, mu, eta_t),
            )
    for mu, eta_t, eta_md in itertools.product(WCP_MU, WCP_ETA_T, WCP_ETA_MD):
        params = f"mu={mu};eta_t={eta_t};eta_md={eta_md}"
        add("p_bsm_wcp", params, p_bsm_wcp(mu, eta_t, eta_md), p_bsm_wcp_series(mu, eta_t, eta_md))
        add("f11", params, f11(mu, eta_t, eta_md), f11_series(mu, eta_t, eta_md))
    return SERIES_HEADER, rows


def _cell(p0, pb, tau, e, model: DecoherenceModel) -> str:
    return f"p0={p0};p_bsm={pb};tau={tau:g};e_inf={e};model={model.value}"


def mc_suite(seed: int = 42, rounds: int = 1_000_000, shards: int = 1, workers: int = 1):
    """Monte Carlo estimates against closed forms, 3 standard errors."""
    rows = []
    cells = [
        (p0, pb, tau, e, DecoherenceModel.CUTOFF)
        for p0, pb, tau, e in itertools.product(MC_P0, MC_P_BSM, MC_TAU, MC_E_INF)
    ]
    cells += [(p0, pb, tau, e, DecoherenceModel.DEPOLARIZING) for p0, pb, tau, e in MC_DEPOLARIZING]
    for stream, (p0, pb, tau, e, model) in enumerate(cells):
        config = McConfig(p0, pb, e, MemoryModel(tau, model), rounds, seed, stream)
        totals = simulate(config, shards=shards, workers=workers)
        cell = _cell(p0, pb, tau, e, model)
        if model is DecoherenceModel.CUTOFF:
            expected_qber = qber_avg_closed(e, p0, tau)
        else:
            expected_qber = qber_depolarizing_series(e, p0, tau)
        for stat, expected, est in (
            ("avg_attempts", avg_attempts_closed(p0, pb), totals.avg_attempts()),
            ("qber", expected_qber, totals.qber()),
        ):
            rows.append(
                (stat, cell, expected, est.mean, est.std_error, est.n_samples, seed, est.within(expected))
            )
    return MC_HEADER, rows


SUITES = {"oracle": oracle_suite, "series": series_suite, "mc": mc_suite}
