"""
Destination-destination similarity measures on a binary interaction matrix.

Every measure is computed from CooccurrenceStats alone: for destinations i, j
with supports s_i, s_j and co-search count c_ij over m users

    ccs        c_ij / m
    ccs_norm   ccs rescaled so each row peaks at 1
    pccs       sigmoid(ccs_norm[i][j] - p_i), p = popularity scores
    cosine     c_ij / sqrt(s_i s_j)
    pearson    (m c_ij - s_i s_j) / sqrt(s_i (m - s_i) s_j (m - s_j))
    jaccard    c_ij / (s_i + s_j - c_ij)
    kulsinski  c_ij / (s_i + s_j - 2 c_ij + m)

All matrices have a zero diagonal so a destination never recommends itself.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .exceptions import UnknownDestinationError, UnknownMeasureError
from .ingest import TimeRange
from .matrix import CooccurrenceStats, PopularityVector

logger = logging.getLogger(__name__)

MEASURES = ('pearson', 'cosine', 'jaccard', 'kulsinski', 'ccs', 'ccs_norm', 'pccs')
BASELINES = ('popularity', 'random')


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    values: np.ndarray
    measure: str
    destinations: Tuple[str, ...]
    params: Dict[str, float] = field(default_factory=dict)
    market: Optional[str] = None
    window: Optional[TimeRange] = None
    evidence: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return len(self.destinations)

    @property
    def label(self) -> str:
        return measure_label(self.measure, self.params.get('w'))

    @cached_property
    def dest_index(self) -> Dict[str, int]:
        return {code: col for col, code in enumerate(self.destinations)}

    def index_of(self, destination: str) -> int:
        try:
            return self.dest_index[destination]
        except KeyError:
            raise UnknownDestinationError(destination) from None

    def row(self, destination: str) -> np.ndarray:
        return self.values[self.index_of(destination)]

    def reachable(self, sources: Sequence[int], target: int) -> bool:
        """
        True when ``target`` was co-searched with at least one of ``sources``.

        Matrices without co-search evidence (baselines, matrices read back from
        file) treat every destination as reachable.
        """
        if self.evidence is None:
            return True
        return bool(self.evidence[sources, target].any())

    def to_sparse_triplets(self) -> List[Tuple[str, str, float]]:
        """Non-zero entries as (dest_i, dest_j, value), row-major."""
        rows, cols = np.nonzero(self.values)
        return [
            (self.destinations[row], self.destinations[col], float(self.values[row, col]))
            for row, col in zip(rows, cols)
        ]


def measure_label(measure: str, w: Optional[float] = None) -> str:
    """Report/file label, e.g. 'ccs' or 'pccs_w0.5'."""
    if measure == 'pccs' and w is not None:
        return f'pccs_w{w:g}'
    return measure


def _similarity(values: np.ndarray, measure: str, stats: CooccurrenceStats,
                co_searched: bool = True, **params) -> SimilarityMatrix:
    np.fill_diagonal(values, 0.0)
    evidence = stats.counts > 0 if co_searched else None
    return SimilarityMatrix(values, measure, stats.destinations, params, stats.market, stats.window, evidence)


def _safe_divide(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    result = np.zeros(numerator.shape, dtype=np.float64)
    np.divide(numerator, denominator, out=result, where=denominator > 0)
    return result


def ccs(stats: CooccurrenceStats) -> SimilarityMatrix:
    """Cluster consensus similarity: share of all users who searched both destinations."""
    return _similarity(stats.counts / float(stats.m), 'ccs', stats)


def ccs_norm(s_ccs: SimilarityMatrix) -> SimilarityMatrix:
    """Divide each CCS row by its off-diagonal maximum; all-zero rows stay zero."""
    if s_ccs.measure != 'ccs':
        raise ValueError(f"ccs_norm expects a ccs matrix, got '{s_ccs.measure}'")
    values = s_ccs.values.copy()
    np.fill_diagonal(values, 0.0)
    peaks = values.max(axis=1, initial=0.0)
    values = _safe_divide(values, np.broadcast_to(peaks[:, None], values.shape))
    return SimilarityMatrix(values, 'ccs_norm', s_ccs.destinations, {}, s_ccs.market, s_ccs.window, s_ccs.evidence)


def pccs(s_norm: SimilarityMatrix, pop: PopularityVector) -> SimilarityMatrix:
    """
    Popularity-weighted CCS: 1 / (1 + exp(p_i - ccs_norm[i][j])).

    A popular destination has a small p_i and so its whole row is shifted up.
    The diagonal is zeroed after the transform.
    """
    if s_norm.measure != 'ccs_norm':
        raise ValueError(f"pccs expects a ccs_norm matrix, got '{s_norm.measure}'")
    if pop.destinations != s_norm.destinations:
        raise ValueError('Popularity vector and similarity matrix index different destinations')
    values = expit(s_norm.values - pop.p[:, None])
    np.fill_diagonal(values, 0.0)
    params = {'w': pop.w, 'denominator': pop.denominator}
    return SimilarityMatrix(values, 'pccs', s_norm.destinations, params, s_norm.market, s_norm.window,
                            s_norm.evidence)


def cosine(stats: CooccurrenceStats) -> SimilarityMatrix:
    norms = np.sqrt(stats.support.astype(np.float64))
    return _similarity(_safe_divide(stats.counts.astype(np.float64), np.outer(norms, norms)), 'cosine', stats)


def pearson(stats: CooccurrenceStats) -> SimilarityMatrix:
    """
    Pearson correlation of binary destination columns over all m users.

    Constant columns (searched by nobody or by everyone) have zero variance and
    get similarity 0.
    """
    m = stats.m
    support = stats.support
    covariance = (m * stats.counts - np.outer(support, support)).astype(np.float64)
    spread = np.sqrt((support * (m - support)).astype(np.float64))
    return _similarity(_safe_divide(covariance, np.outer(spread, spread)), 'pearson', stats)


def jaccard(stats: CooccurrenceStats) -> SimilarityMatrix:
    union = stats.support[:, None] + stats.support[None, :] - stats.counts
    return _similarity(_safe_divide(stats.counts.astype(np.float64), union.astype(np.float64)), 'jaccard', stats)


def kulsinski(stats: CooccurrenceStats) -> SimilarityMatrix:
    """
    One minus the Kulsinski dissimilarity (c_TF + c_FT - c_TT + m) / (c_TF + c_FT + m),
    which reduces to c_TT / (c_TF + c_FT + m).
    """
    counts = stats.counts
    mismatches = (stats.support[:, None] - counts) + (stats.support[None, :] - counts)
    return _similarity(_safe_divide(counts.astype(np.float64), (mismatches + stats.m).astype(np.float64)), 'kulsinski', stats)


_DIRECT = {
    'pearson': pearson,
    'cosine': cosine,
    'jaccard': jaccard,
    'kulsinski': kulsinski,
    'ccs': ccs,
}


def compute(measure: str, stats: CooccurrenceStats, pop: Optional[PopularityVector] = None) -> SimilarityMatrix:
    """Compute one of MEASURES; ``pop`` is required for (and only used by) pccs."""
    if measure in _DIRECT:
        S = _DIRECT[measure](stats)
    elif measure == 'ccs_norm':
        S = ccs_norm(ccs(stats))
    elif measure == 'pccs':
        if pop is None:
            raise ValueError('pccs requires a popularity vector')
        S = pccs(ccs_norm(ccs(stats)), pop)
    else:
        raise UnknownMeasureError(measure)
    logger.debug('Computed %s over %d destinations (%s)', S.label, S.n, stats.market)
    return S


def popularity_baseline(stats: CooccurrenceStats) -> SimilarityMatrix:
    """Every row is the support vector: recommends the globally most searched destinations."""
    values = np.tile(stats.support.astype(np.float64), (stats.n, 1))
    return _similarity(values, 'popularity', stats, co_searched=False)


def random_baseline(stats: CooccurrenceStats, seed: int = 0) -> SimilarityMatrix:
    """I.i.d. uniform scores; expected top-k accuracy is about k / (n - 1)."""
    rng = np.random.default_rng(seed)
    return _similarity(rng.random((stats.n, stats.n)), 'random', stats, co_searched=False, seed=seed)
