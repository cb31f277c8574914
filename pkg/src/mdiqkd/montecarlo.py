"""Monte Carlo of protocol rounds with heralded memories.

One raw bit is produced per successful Bell-state measurement:

1. Alice's and Bob's photons are stored after geometric waiting times
   ``k_A, k_B ~ Geom(p0)``; the round costs ``max(k_A, k_B)`` attempts.
2. The measurement succeeds with probability ``p_bsm``; on failure both
   memories are flushed and step 1 repeats.
3. The earlier photon waited ``|k_A - k_B|`` bins.  Cutoff model: the bit
   is wrong with probability ``e_inf`` if that gap is at most ``tau`` and
   ``1/2`` otherwise.  Depolarizing model: with ``lam = exp(-gap / tau)``
   the error probability is ``lam * e_inf + (1 - lam) / 2``.

Rounds are simulated in fixed-size blocks.  Block ``i`` draws from a
generator seeded with ``SeedSequence(seed, spawn_key=(stream, i))`` and only
integer sums are kept per block, so aggregates are bit-identical for any
split of the blocks across shards or processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .params import DecoherenceModel, MemoryModel

BLOCK_SIZE = 1 << 16


@dataclass(frozen=True)
class McConfig:
    p0: float
    p_bsm: float
    e_inf: float = 0.0
    memory: MemoryModel = field(default_factory=MemoryModel)
    rounds: int = 1_000_000
    seed: int = 42
    stream: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.p0 <= 1.0) or not (0.0 < self.p_bsm <= 1.0):
            raise ValueError("p0 and p_bsm must lie in (0, 1]")
        if not (0.0 <= self.e_inf <= 0.5):
            raise ValueError("e_inf must lie in [0, 1/2]")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int

    def within(self, value: float, n_sigma: float = 3.0) -> bool:
        return abs(self.mean - value) <= n_sigma * self.std_error


@dataclass(frozen=True)
class McTotals:
    """Integer sufficient statistics of a batch of rounds."""

    n: int = 0
    attempts: int = 0
    attempts_sq: int = 0
    errors: int = 0

    def __add__(self, other: McTotals) -> McTotals:
        return McTotals(
            self.n + other.n,
            self.attempts + other.attempts,
            self.attempts_sq + other.attempts_sq,
            self.errors + other.errors,
        )

    def avg_attempts(self) -> McEstimate:
        mean = self.attempts / self.n
        var = (self.attempts_sq - self.n * mean * mean) / (self.n - 1) if self.n > 1 else 0.0
        return McEstimate(mean, math.sqrt(max(var, 0.0) / self.n), self.n)

    def qber(self) -> McEstimate:
        mean = self.errors / self.n
        var = self.n * mean * (1.0 - mean) / (self.n - 1) if self.n > 1 else 0.0
        return McEstimate(mean, math.sqrt(var / self.n), self.n)


def error_prob(gap, e_inf: float, memory: MemoryModel):
    """Bit-error probability after the earlier photon waited ``gap`` bins."""
    gap = np.asarray(gap, dtype=float)
    tau = memory.tau
    if math.isinf(tau):
        return np.full_like(gap, e_inf)
    if memory.kind is DecoherenceModel.CUTOFF:
        return np.where(gap <= tau, e_inf, 0.5)
    if tau == 0.0:
        lam = (gap == 0.0).astype(float)
    else:
        lam = np.exp(-gap / tau)
    return lam * e_inf + (1.0 - lam) / 2.0


def simulate_round(config: McConfig, rng: np.random.Generator) -> tuple[int, bool]:
    """One raw bit, drawn step by step; returns (attempts used, bit error)."""
    attempts = 0
    while True:
        k_a = int(rng.geometric(config.p0))
        k_b = int(rng.geometric(config.p0))
        attempts += max(k_a, k_b)
        if rng.random() < config.p_bsm:
            p_err = float(error_prob(abs(k_a - k_b), config.e_inf, config.memory))
            return attempts, bool(rng.random() < p_err)


def simulate_block(config: McConfig, rng: np.random.Generator, n: int) -> McTotals:
    """``n`` raw bits at once; statistically identical to :func:`simulate_round`."""
    tries = rng.geometric(config.p_bsm, size=n)
    total = int(tries.sum())
    k_a = rng.geometric(config.p0, size=total)
    k_b = rng.geometric(config.p0, size=total)
    cost = np.maximum(k_a, k_b)
    starts = np.concatenate(([0], np.cumsum(tries)[:-1]))
    attempts = np.add.reduceat(cost, starts)
    last = starts + tries - 1
    gap = np.abs(k_a[last] - k_b[last])
    errors = rng.random(n) < error_prob(gap, config.e_inf, config.memory)
    attempts = attempts.astype(np.int64)
    return McTotals(
        n=n,
        attempts=int(attempts.sum()),
        attempts_sq=int(np.dot(attempts, attempts)),
        errors=int(errors.sum()),
    )


def _block_sizes(rounds: int) -> list[int]:
    full, rest = divmod(rounds, BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def _run_blocks(config: McConfig, block_ids: list[int]) -> McTotals:
    sizes = _block_sizes(config.rounds)
    totals = McTotals()
    for b in block_ids:
        seq = np.random.SeedSequence(config.seed, spawn_key=(config.stream, b))
        rng = np.random.Generator(np.random.PCG64(seq))
        totals = totals + simulate_block(config, rng, sizes[b])
    return totals


def simulate(config: McConfig, shards: int = 1, workers: int = 1) -> McTotals:
    """Run ``config.rounds`` raw bits split over ``shards`` groups of blocks.

    With ``workers > 1`` the shards run in separate processes.  The result
    does not depend on ``shards`` or ``workers``.
    """
    n_blocks = len(_block_sizes(config.rounds))
    shards = max(1, min(shards, n_blocks))
    groups = [[int(b) for b in g] for g in np.array_split(np.arange(n_blocks), shards)]
    if workers > 1 and shards > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_blocks, [config] * len(groups), groups))
    else:
        parts = [_run_blocks(config, g) for g in groups]
    totals = McTotals()
    for part in parts:
        totals = totals + part
    return totals


def estimate_avg_attempts(config: McConfig, shards: int = 1) -> McEstimate:
    return simulate(config, shards).avg_attempts()


def estimate_qber(config: McConfig, shards: int = 1) -> McEstimate:
    return simulate(config, shards).qber()


def qber_depolarizing_series(e_inf: float, p0: float, tau: float, tail: float = 1e-10) -> float:
    """Average QBER under the depolarizing model by explicit summation over (k_A, k_B).

    ``e_inf + (1/2 - e_inf) E[1 - exp(-|k_A - k_B| / tau)]``, truncated once
    the neglected storage-time mass falls below ``tail``.
    """
    if math.isinf(tau):
        return e_inf
    q = 1.0 - p0
    # P(k_A > K or k_B > K) <= 2 q^K
    n_bins = 1 if q == 0.0 else max(1, int(math.ceil(math.log(tail / 2.0) / math.log(q))))
    k = np.arange(1, n_bins + 1)
    pk = p0 * q ** (k - 1)
    gap = np.abs(k[:, None] - k[None, :]).astype(float)
    if tau == 0.0:
        decay = (gap > 0).astype(float)
    else:
        decay = -np.expm1(-gap / tau)
    return float(e_inf + (0.5 - e_inf) * (pk @ decay @ pk))
