import math

import numpy as np
import pytest

from mdiqkd.montecarlo import (
    BLOCK_SIZE,
    McConfig,
    McEstimate,
    McTotals,
    error_prob,
    estimate_avg_attempts,
    estimate_qber,
    qber_depolarizing_series,
    simulate,
    simulate_block,
    simulate_round,
)
from mdiqkd.params import DecoherenceModel, MemoryModel
from mdiqkd.sps import avg_attempts_closed, qber_avg_closed

CUT = DecoherenceModel.CUTOFF
DEP = DecoherenceModel.DEPOLARIZING


def brute_depolarizing(e_inf, p0, tau, bins=300):
    q = 1.0 - p0
    total = 0.0
    for a in range(1, bins + 1):
        for b in range(1, bins + 1):
            lam = math.exp(-abs(a - b) / tau)
            total += p0 * q ** (a - 1) * p0 * q ** (b - 1) * (lam * e_inf + (1 - lam) / 2)
    return total


def test_deterministic_round():
    config = McConfig(1.0, 1.0, 0.0, MemoryModel(0.0))
    rng = np.random.default_rng(1)
    assert all(simulate_round(config, rng) == (1, False) for _ in range(200))
    totals = simulate(McConfig(1.0, 1.0, 0.0, MemoryModel(0.0), rounds=1000))
    assert (totals.n, totals.attempts, totals.errors) == (1000, 1000, 0)


def test_round_and_block_agree_statistically():
    config = McConfig(0.3, 0.4, 0.05, MemoryModel(2.0), rounds=20000)
    rng = np.random.default_rng(7)
    draws = [simulate_round(config, rng) for _ in range(20000)]
    att = np.array([a for a, _ in draws], dtype=float)
    err = np.array([e for _, e in draws], dtype=float)
    block = simulate_block(config, np.random.default_rng(8), 20000)
    est = block.avg_attempts()
    se = math.hypot(att.std(ddof=1) / math.sqrt(att.size), est.std_error)
    assert abs(att.mean() - est.mean) <= 5 * se
    q = block.qber()
    se = math.hypot(err.std(ddof=1) / math.sqrt(err.size), q.std_error)
    assert abs(err.mean() - q.mean) <= 5 * se


def test_attempts_reference_cell():
    config = McConfig(0.5, 0.5, 0.0, MemoryModel(2.0), rounds=1_000_000, seed=42)
    totals = simulate(config)
    assert totals.avg_attempts().within(16 / 3)
    # gap > 2 has probability 1/6 for two Geom(1/2) draws
    assert totals.qber().within(0.5 / 6)


@pytest.mark.parametrize("kind", [CUT, DEP])
def test_perfect_memory_error_rate(kind):
    est = estimate_qber(McConfig(0.2, 0.5, 0.03, MemoryModel(math.inf, kind), rounds=300_000))
    assert est.within(0.03)


def test_depolarizing_reference_cell():
    est = estimate_qber(McConfig(0.3, 0.5, 0.0, MemoryModel(5.0, DEP), rounds=1_000_000))
    assert est.within(qber_depolarizing_series(0.0, 0.3, 5.0))


@pytest.mark.parametrize("e_inf, p0, tau", [(0.0, 0.3, 5.0), (0.05, 0.1, 10.0), (0.02, 0.5, 0.7)])
def test_depolarizing_series_matches_brute_force(e_inf, p0, tau):
    assert qber_depolarizing_series(e_inf, p0, tau) == pytest.approx(
        brute_depolarizing(e_inf, p0, tau), rel=1e-9
    )


def test_depolarizing_series_limits():
    assert qber_depolarizing_series(0.04, 0.3, math.inf) == 0.04
    # tau = 0: every mismatched pair is fully mixed, like the cutoff model
    assert qber_depolarizing_series(0.04, 0.3, 0.0) == pytest.approx(qber_avg_closed(0.04, 0.3, 0.0), rel=1e-9)


def test_error_prob():
    gaps = np.array([0, 1, 2, 3])
    assert list(error_prob(gaps, 0.1, MemoryModel(2.0))) == [0.1, 0.1, 0.1, 0.5]
    assert list(error_prob(gaps, 0.1, MemoryModel())) == [0.1] * 4
    dep = error_prob(gaps, 0.1, MemoryModel(1.0, DEP))
    assert dep[0] == pytest.approx(0.1)
    assert dep[2] == pytest.approx(math.exp(-2) * 0.1 + (1 - math.exp(-2)) / 2)
    assert list(error_prob(gaps, 0.1, MemoryModel(0.0, DEP))) == [0.1, 0.5, 0.5, 0.5]


def test_seed_determinism():
    config = McConfig(0.3, 0.5, 0.05, MemoryModel(3.0), rounds=100_000, seed=123)
    assert estimate_avg_attempts(config) == estimate_avg_attempts(config)
    assert estimate_qber(config) == estimate_qber(config)


def test_disjoint_seeds_consistent():
    base = dict(p0=0.3, p_bsm=0.5, e_inf=0.05, memory=MemoryModel(3.0), rounds=200_000)
    a = simulate(McConfig(seed=1, **base))
    b = simulate(McConfig(seed=2, **base))
    assert a != b
    for ea, eb in ((a.avg_attempts(), b.avg_attempts()), (a.qber(), b.qber())):
        assert abs(ea.mean - eb.mean) <= 6 * math.hypot(ea.std_error, eb.std_error)
    # second moment stable across seeds
    m2a, m2b = a.attempts_sq / a.n, b.attempts_sq / b.n
    assert abs(m2a - m2b) <= 0.1 * m2a


def test_shard_and_worker_independence():
    config = McConfig(0.05, 0.1, 0.05, MemoryModel(10.0), rounds=5 * BLOCK_SIZE + 17, seed=9)
    ref = simulate(config)
    assert ref.n == config.rounds
    for shards in (2, 3, 6, 50):
        assert simulate(config, shards=shards) == ref
    assert simulate(config, shards=3, workers=2) == ref


def test_streams_differ():
    a = simulate(McConfig(0.3, 0.5, rounds=10_000, stream=0))
    b = simulate(McConfig(0.3, 0.5, rounds=10_000, stream=1))
    assert a != b


def test_std_error_definition():
    t = McTotals(n=4, attempts=10, attempts_sq=30, errors=1)
    est = t.avg_attempts()
    sample = np.array([1.0, 2.0, 3.0, 4.0])  # any sample with these sums
    assert est.mean == 2.5
    assert est.std_error == pytest.approx(sample.std(ddof=1) / 2)
    q = t.qber()
    assert q.std_error == pytest.approx(np.array([1.0, 0, 0, 0]).std(ddof=1) / 2)


def test_estimate_within():
    est = McEstimate(1.0, 0.1, 100)
    assert est.within(1.29) and not est.within(1.31)


@pytest.mark.parametrize(
    "kwargs",
    [dict(p0=0.0, p_bsm=0.5), dict(p0=0.5, p_bsm=1.5), dict(p0=0.5, p_bsm=0.5, e_inf=0.6),
     dict(p0=0.5, p_bsm=0.5, rounds=0), dict(p0=0.5, p_bsm=0.5, seed=-1)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        McConfig(**kwargs)


def test_attempts_mean_matches_closed_form_small_cell():
    est = estimate_avg_attempts(McConfig(0.05, 0.1, rounds=200_000, seed=5))
    assert est.within(avg_attempts_closed(0.05, 0.1))
