"""
Binary user x destination interaction matrix and the statistics derived from it.

The matrix is stored as a ``scipy.sparse`` CSR matrix; co-occurrence counts are
computed with the sparse product X^T X, whose cost is the sum of squared user
degrees rather than m * n^2.
"""
from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from .exceptions import EmptyWindowError
from .ingest import SearchRecord, TimeRange

logger = logging.getLogger(__name__)

DENOMINATORS = ('n', 'm')


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    entries: sparse.csr_matrix
    user_ids: Tuple[str, ...]
    destinations: Tuple[str, ...]
    market: Optional[str] = None
    window: Optional[TimeRange] = None

    @classmethod
    def from_indices(cls, rows, cols, user_ids: Sequence[str], destinations: Sequence[str],
                     market: Optional[str] = None, window: Optional[TimeRange] = None) -> 'InteractionMatrix':
        """Assemble a matrix from unique (user index, destination index) pairs."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        entries = sparse.csr_matrix(
            (np.ones(len(rows), dtype=np.int32), (rows, cols)),
            shape=(len(user_ids), len(destinations)),
        )
        entries.sum_duplicates()
        entries.data[:] = 1
        entries.sort_indices()
        return cls(entries, tuple(user_ids), tuple(destinations), market, window)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def nnz(self) -> int:
        return self.entries.nnz

    @property
    def density(self) -> float:
        return self.nnz / (self.m * self.n) if self.m and self.n else 0.0

    @cached_property
    def user_index(self) -> Dict[str, int]:
        return {user: row for row, user in enumerate(self.user_ids)}

    @cached_property
    def dest_index(self) -> Dict[str, int]:
        return {code: col for col, code in enumerate(self.destinations)}

    def destination_indices(self, row: int) -> np.ndarray:
        start, end = self.entries.indptr[row], self.entries.indptr[row + 1]
        return self.entries.indices[start:end]

    def destinations_of(self, user_id: str) -> Tuple[str, ...]:
        return tuple(self.destinations[col] for col in self.destination_indices(self.user_index[user_id]))


@dataclass(frozen=True, eq=False)
class CooccurrenceStats:
    counts: np.ndarray
    support: np.ndarray
    m: int
    destinations: Tuple[str, ...]
    market: Optional[str] = None
    window: Optional[TimeRange] = None

    @property
    def n(self) -> int:
        return len(self.destinations)

    @cached_property
    def dest_index(self) -> Dict[str, int]:
        return {code: col for col, code in enumerate(self.destinations)}


@dataclass(frozen=True, eq=False)
class PopularityVector:
    rank: np.ndarray
    p: np.ndarray
    w: float
    destinations: Tuple[str, ...]
    denominator: str = 'n'

    @property
    def n(self) -> int:
        return len(self.destinations)


def build_matrix(records: Iterable[SearchRecord], window: Optional[TimeRange] = None,
                 max_degree: int = 1000, min_support: int = 1) -> InteractionMatrix:
    """
    Build the binary interaction matrix for one market.

    Users and destinations are indexed in sorted id order, so the result does
    not depend on record order. Users with more than ``max_degree`` distinct
    destinations are dropped as bots; destinations searched by fewer than
    ``min_support`` users are dropped, and so are users left with nothing.

    Raises:
        EmptyWindowError: no records, or nothing left after filtering
        ValueError: records from more than one market
    """
    pairs = set()
    markets = set()
    for record in records:
        pairs.add((record.user_id, record.destination))
        markets.add(record.market)
    if not pairs:
        raise EmptyWindowError(f'empty window{_describe(window)}')
    if len(markets) > 1:
        raise ValueError(f"Records span several markets: {', '.join(sorted(markets))}")

    degree = Counter(user for user, _ in pairs)
    bots = {user for user, count in degree.items() if count > max_degree}
    if bots:
        logger.warning('Dropping %d users with more than %d destinations', len(bots), max_degree)
        pairs = {(user, dest) for user, dest in pairs if user not in bots}

    if min_support > 1:
        support = Counter(dest for _, dest in pairs)
        rare = {dest for dest, count in support.items() if count < min_support}
        if rare:
            logger.info('Dropping %d destinations below support %d', len(rare), min_support)
            pairs = {(user, dest) for user, dest in pairs if dest not in rare}

    if not pairs:
        raise EmptyWindowError(f'empty window{_describe(window)} after filtering')

    user_ids = sorted({user for user, _ in pairs})
    destinations = sorted({dest for _, dest in pairs})
    user_pos = {user: row for row, user in enumerate(user_ids)}
    dest_pos = {dest: col for col, dest in enumerate(destinations)}
    rows = [user_pos[user] for user, _ in pairs]
    cols = [dest_pos[dest] for _, dest in pairs]
    return InteractionMatrix.from_indices(rows, cols, user_ids, destinations, markets.pop(), window)


def _describe(window: Optional[TimeRange]) -> str:
    return '' if window is None else f' {window}'


def _block_counts(block: sparse.csr_matrix) -> np.ndarray:
    return (block.T @ block).toarray().astype(np.int64)


def cooccurrence(mat: InteractionMatrix, shards: int = 1, workers: int = 1) -> CooccurrenceStats:
    """
    Co-search counts and per-destination support.

    counts[i][j] is the number of users who searched both i and j; the diagonal
    holds the support. Users are split into ``shards`` contiguous row blocks whose
    integer partial products are summed in block order, so the result is the
    same for any shard or worker count.
    """
    if shards < 1:
        raise ValueError('shards must be >= 1')
    bounds = np.linspace(0, mat.m, min(shards, max(mat.m, 1)) + 1).astype(np.int64)
    blocks = [mat.entries[lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        partials = list(pool.map(_block_counts, blocks))
    counts = np.zeros((mat.n, mat.n), dtype=np.int64)
    for partial in partials:
        counts += partial
    support = np.asarray(mat.entries.sum(axis=0), dtype=np.int64).ravel()
    return CooccurrenceStats(counts, support, mat.m, mat.destinations, mat.market, mat.window)


def popularity(stats: CooccurrenceStats, w: float, denominator: str = 'n') -> PopularityVector:
    """
    Popularity scores p_i = 1 - w * b_i / N.

    b_i ranks destinations ascending by support (least searched gets 1), ties
    broken by ascending destination code. N is the destination count n, or the
    user count m when ``denominator='m'``.

    With ``denominator='m'`` and fewer users than destinations, the most
    popular destinations can get p_i <= 0; this is logged as a warning and the
    scores are kept as computed.
    """
    if not 0 <= w < 1:
        raise ValueError(f'w must lie in [0, 1), got {w}')
    if denominator not in DENOMINATORS:
        raise ValueError(f"denominator must be one of {DENOMINATORS}, got '{denominator}'")

    order = sorted(range(stats.n), key=lambda col: (stats.support[col], stats.destinations[col]))
    rank = np.empty(stats.n, dtype=np.int64)
    rank[order] = np.arange(1, stats.n + 1)
    scale = stats.n if denominator == 'n' else stats.m
    p = 1.0 - w * rank / scale
    if (p <= 0).any():
        logger.warning('%d popularity scores are <= 0 (w=%g, denominator=%s, m=%d, n=%d)',
                       int((p <= 0).sum()), w, denominator, stats.m, stats.n)
    return PopularityVector(rank, p, float(w), stats.destinations, denominator)
