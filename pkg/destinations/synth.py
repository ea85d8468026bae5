"""
Synthetic search logs with planted interest clusters and Zipf popularity.

Destination codes D0000, D0001, ... are numbered by global popularity rank
(D0000 is the most searched). Clusters take destinations round-robin by rank,
so each cluster mixes popular and unpopular destinations.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .ingest import SearchRecord
from .matrix import InteractionMatrix
from .utils import ensure_utc, stable_hash

logger = logging.getLogger(__name__)

DEFAULT_START = datetime(2020, 1, 1, tzinfo=timezone.utc)
DEFAULT_END = DEFAULT_START + timedelta(weeks=9)


def destination_codes(n: int) -> List[str]:
    return [f'D{rank:04d}' for rank in range(n)]


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 50_000
    n_destinations: int = 200
    n_clusters: int = 10
    zipf_exponent: float = 1.0
    searches_per_user: Tuple[int, int] = (2, 6)
    noise: float = 0.2
    seed: int = 0
    market: str = 'FR'
    start: datetime = DEFAULT_START
    end: datetime = DEFAULT_END
    user_prefix: str = 'u'

    def __post_init__(self):
        object.__setattr__(self, 'start', ensure_utc(self.start))
        object.__setattr__(self, 'end', ensure_utc(self.end))
        lo, hi = self.searches_per_user
        if self.n_users < 1 or self.n_destinations < 1:
            raise ValueError('n_users and n_destinations must be positive')
        if not 1 <= self.n_clusters <= self.n_destinations:
            raise ValueError('n_clusters must lie in [1, n_destinations]')
        if self.zipf_exponent < 0:
            raise ValueError('zipf_exponent must be >= 0')
        if lo < 1 or lo > hi:
            raise ValueError(f'searches_per_user must satisfy 1 <= lo <= hi, got [{lo}, {hi}]')
        if hi > self.n_destinations:
            raise ValueError(f'searches_per_user upper bound {hi} exceeds n_destinations {self.n_destinations}')
        if not 0 <= self.noise <= 1:
            raise ValueError('noise must lie in [0, 1]')
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError('seed must be a 64-bit unsigned integer')
        if not self.market.strip():
            raise ValueError('market must not be empty')
        if self.start >= self.end:
            raise ValueError('time range start must precede end')

    def cluster_of(self) -> np.ndarray:
        return np.arange(self.n_destinations) % self.n_clusters

    def weights(self) -> np.ndarray:
        return np.arange(1, self.n_destinations + 1, dtype=np.float64) ** -self.zipf_exponent


def _draw(rng: np.random.Generator, candidates: np.ndarray, weights: np.ndarray) -> int:
    cumulative = np.cumsum(weights[candidates])
    position = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side='right'))
    return int(candidates[min(position, len(candidates) - 1)])


def generate(config: SynthConfig) -> List[SearchRecord]:
    """
    Draw a search log. Each user picks one cluster uniformly, then d ~ U[lo, hi]
    distinct destinations; each draw stays inside the cluster with probability
    1 - noise and otherwise uses the global popularity distribution. Within
    either pool destinations are weighted by rank^-zipf_exponent. A user's draws
    come from a generator seeded by (seed, user index) only.
    """
    codes = destination_codes(config.n_destinations)
    weights = config.weights()
    cluster_of = config.cluster_of()
    members = [np.flatnonzero(cluster_of == cluster) for cluster in range(config.n_clusters)]
    everyone = np.arange(config.n_destinations)
    span = int((config.end - config.start).total_seconds())
    lo, hi = config.searches_per_user
    market = config.market.strip().upper()

    records = []
    for user in range(config.n_users):
        rng = np.random.default_rng([config.seed, user])
        cluster = int(rng.integers(config.n_clusters))
        count = int(rng.integers(lo, hi + 1))
        taken = np.zeros(config.n_destinations, dtype=bool)
        picks = []
        for _ in range(count):
            pool = members[cluster] if rng.random() >= config.noise else everyone
            candidates = pool[~taken[pool]]
            if not len(candidates):
                candidates = everyone[~taken]
            pick = _draw(rng, candidates, weights)
            taken[pick] = True
            picks.append(pick)
        offsets = rng.integers(0, span, size=count)
        user_id = f'{config.user_prefix}{user:07d}'
        for pick, offset in zip(picks, offsets):
            records.append(SearchRecord(user_id, codes[pick], market, config.start + timedelta(seconds=int(offset))))

    logger.info('Generated %d searches for %d users in market %s', len(records), config.n_users, market)
    return records


def generate_markets(config: SynthConfig, markets: Sequence[str]) -> List[SearchRecord]:
    """One independent log per market, seeds derived from (seed, market)."""
    if len(markets) == 1:
        return generate(replace(config, market=markets[0]))
    records = []
    for market in markets:
        derived = stable_hash(f'{config.seed}:{market}')
        records.extend(generate(replace(
            config, market=market, seed=derived, user_prefix=f'{market.lower()}-u',
        )))
    return records


def random_interactions(m: int, n: int, mean_degree: float = 3.0, seed: int = 0,
                        zipf_exponent: float = 1.0, market: Optional[str] = None) -> InteractionMatrix:
    """
    Vectorized interaction matrix with about ``mean_degree`` destinations per
    user, for scale tests. Degrees are 1 + Poisson(mean_degree - 1); repeated
    draws of the same destination collapse, so realized degrees run slightly low.
    """
    if m < 1 or n < 1 or mean_degree < 1:
        raise ValueError('m, n and mean_degree must be >= 1')
    rng = np.random.default_rng(seed)
    degrees = np.minimum(1 + rng.poisson(mean_degree - 1, size=m), n)
    rows = np.repeat(np.arange(m), degrees)
    weights = np.arange(1, n + 1, dtype=np.float64) ** -zipf_exponent
    cols = rng.choice(n, size=len(rows), p=weights / weights.sum())
    user_ids = [f'u{user:07d}' for user in range(m)]
    return InteractionMatrix.from_indices(rows, cols, user_ids, destination_codes(n), market)
