"""
Mask-one-destination evaluation protocol.

For every test user with at least two searched destinations (all known to the
training matrix) one destination is hidden, the similarity rows of the rest are
averaged, and the user counts as a hit when the hidden destination ranks in the
top k and was co-searched with some context destination in training. Measures are compared across periods by average rank.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Collection, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from .exceptions import EmptyWindowError, EvaluationError, UnknownMeasureError
from .ingest import SearchRecord, WindowSpec, dedupe, filter_window
from .matrix import InteractionMatrix, build_matrix, cooccurrence, popularity
from .measures import (
    BASELINES, MEASURES, SimilarityMatrix, compute, measure_label,
    popularity_baseline, random_baseline,
)
from .recommend import code_order, fuse_rows, rank_of
from .utils import stable_hash

logger = logging.getLogger(__name__)

DEFAULT_W_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass(frozen=True)
class Split:
    user_id: str
    context: Tuple[str, ...]
    masked: str


@dataclass
class MaskedSplits:
    splits: List[Split] = field(default_factory=list)
    skipped: int = 0

    def __iter__(self):
        return iter(self.splits)

    def __len__(self) -> int:
        return len(self.splits)


@dataclass(frozen=True)
class EvalConfig:
    measures: Tuple[str, ...] = MEASURES
    w_grid: Tuple[float, ...] = DEFAULT_W_GRID
    k: int = 5
    seed: int = 0
    window: Optional[WindowSpec] = None
    baselines: Tuple[str, ...] = ()
    popularity_denominator: str = 'n'
    max_degree: int = 1000
    min_support: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f'k must be >= 1, got {self.k}')
        if not self.measures:
            raise ValueError('At least one measure is required')
        for measure in self.measures:
            if measure not in MEASURES:
                raise UnknownMeasureError(measure)
        for baseline in self.baselines:
            if baseline not in BASELINES:
                raise UnknownMeasureError(baseline)
        if 'pccs' in self.measures and not self.w_grid:
            raise ValueError('pccs needs at least one w value')
        for w in self.w_grid:
            if not 0 <= w < 1:
                raise ValueError(f'w must lie in [0, 1), got {w}')

    @property
    def labels(self) -> List[str]:
        labels = []
        for measure in self.measures:
            if measure == 'pccs':
                labels.extend(measure_label(measure, w) for w in self.w_grid)
            else:
                labels.append(measure)
        return labels + list(self.baselines)


@dataclass(frozen=True)
class MeasureResult:
    label: str
    measure: str
    params: Dict[str, object]
    hits: int
    eligible_users: int

    @property
    def accuracy(self) -> Optional[float]:
        if not self.eligible_users:
            return None
        return self.hits / self.eligible_users

    def to_dict(self) -> Dict[str, object]:
        return {
            'label': self.label,
            'measure': self.measure,
            'params': dict(sorted(self.params.items())),
            'hits': self.hits,
            'eligible_users': self.eligible_users,
            'accuracy': self.accuracy,
        }


@dataclass
class EvalReport:
    market: Optional[str]
    window: Optional[WindowSpec]
    seed: int
    k: int
    eligible_users: int = 0
    skipped_users: int = 0
    results: List[MeasureResult] = field(default_factory=list)

    def accuracies(self) -> Dict[str, Optional[float]]:
        return {result.label: result.accuracy for result in self.results}

    def to_dict(self) -> Dict[str, object]:
        return {
            'market': self.market,
            'window': self.window.to_dict() if self.window else None,
            'seed': self.seed,
            'k': self.k,
            'eligible_users': self.eligible_users,
            'skipped_users': self.skipped_users,
            'results': [result.to_dict() for result in self.results],
        }


@dataclass(frozen=True)
class RankSummary:
    label: str
    mean_rank: float
    mean_accuracy: float
    std_accuracy: float
    mean_delta: float
    relative_improvement: Optional[float]
    periods: int


def mask_one_split(test_matrix: InteractionMatrix, seed: int,
                   known: Optional[Collection[str]] = None) -> MaskedSplits:
    """
    Hide one destination per eligible test user.

    A user is eligible with at least two destinations, all of them in ``known``
    (the training destinations; every destination when None). The hidden one is
    drawn uniformly by a generator seeded from (seed, hash(user_id)), so a
    user's split does not depend on which other users are present or in what
    order they are visited.
    """
    result = MaskedSplits()
    for user_id in test_matrix.user_ids:
        searched = sorted(test_matrix.destinations_of(user_id))
        if len(searched) < 2 or (known is not None and any(code not in known for code in searched)):
            result.skipped += 1
            continue
        rng = np.random.default_rng([seed, stable_hash(user_id)])
        hidden = int(rng.integers(len(searched)))
        context = tuple(code for pos, code in enumerate(searched) if pos != hidden)
        result.splits.append(Split(user_id, context, searched[hidden]))
    return result


def _count_hits(S: SimilarityMatrix, splits: Sequence[Split], k: int, order: np.ndarray) -> int:
    hits = 0
    for split in splits:
        target = S.index_of(split.masked)
        if not S.reachable([S.index_of(code) for code in split.context], target):
            continue
        scores = fuse_rows(S, split.context)
        position = rank_of(scores, target, order)
        if position is not None and position <= k:
            hits += 1
    return hits


def evaluate_topk(S: SimilarityMatrix, splits: Iterable[Split], k: int, workers: int = 1) -> MeasureResult:
    """
    Share of splits whose hidden destination is in the top k of the fused
    context rows. A hidden destination never co-searched with any context
    destination is a miss even when the code-order tie-break lifts it into the
    top k. Hit counts are summed over worker chunks, so the result does not
    depend on ``workers``.
    """
    if k < 1:
        raise ValueError(f'k must be >= 1, got {k}')
    splits = list(splits)
    order = code_order(S.destinations)
    workers = max(1, min(workers, len(splits) or 1))
    chunks = [splits[start::workers] for start in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        hits = sum(pool.map(lambda chunk: _count_hits(S, chunk, k, order), chunks))
    return MeasureResult(S.label, S.measure, dict(S.params), hits, len(splits))


def similarity_matrices(train: InteractionMatrix, config: EvalConfig) -> List[SimilarityMatrix]:
    """Every matrix the config asks for, in label order."""
    stats = cooccurrence(train, shards=config.workers, workers=config.workers)
    matrices = []
    for measure in config.measures:
        if measure == 'pccs':
            for w in config.w_grid:
                pop = popularity(stats, w, config.popularity_denominator)
                matrices.append(compute(measure, stats, pop))
        else:
            matrices.append(compute(measure, stats))
    for baseline in config.baselines:
        if baseline == 'popularity':
            matrices.append(popularity_baseline(stats))
        else:
            matrices.append(random_baseline(stats, config.seed))
    return matrices


def evaluate_market(records: Sequence[SearchRecord], config: EvalConfig) -> EvalReport:
    """
    Run the protocol for one market and one window: build the training matrix
    from the train window, split the test window users and score every measure.

    An empty test window yields a report with zero eligible users.

    Raises:
        EmptyWindowError: no usable records in the training window
    """
    window = config.window
    if window is None:
        raise ValueError('Evaluation needs a train/test window')
    train_records = dedupe(filter_window(records, window.train_start, window.train_end))
    test_records = dedupe(filter_window(records, window.test_start, window.test_end))
    train = build_matrix(train_records, window.train, config.max_degree, config.min_support)

    try:
        test = build_matrix(test_records, window.test, config.max_degree)
        splits = mask_one_split(test, config.seed, known=train.dest_index)
    except EmptyWindowError:
        logger.warning('Test window %s has no records for market %s', window.label, train.market)
        splits = MaskedSplits()
    if not splits.splits:
        logger.warning('No eligible test users for market %s in window %s', train.market, window.label)

    report = EvalReport(train.market, window, config.seed, config.k,
                        eligible_users=len(splits), skipped_users=splits.skipped)
    for S in similarity_matrices(train, config):
        result = evaluate_topk(S, splits, config.k, config.workers)
        logger.info('%s %s: %d/%d hits', train.market, result.label, result.hits, result.eligible_users)
        report.results.append(result)
    return report


def rolling_windows(base: WindowSpec, periods: int = 1) -> List[WindowSpec]:
    """The base window and its predecessors, each shifted back by one test length."""
    if periods < 1:
        raise ValueError(f'periods must be >= 1, got {periods}')
    return [base.shifted(-period * base.test_length) for period in range(periods)]


def average_ranks(periods: Sequence[Mapping[str, Optional[float]]], baseline: str) -> Dict[str, RankSummary]:
    """
    Average rank (1 = best accuracy, ties share the mean of their ranks) and
    mean accuracy of every measure over periods, with deltas against ``baseline``.

    Raises:
        EvaluationError: no periods, a period missing a measure or an accuracy,
            or an unknown baseline
    """
    if not periods:
        raise EvaluationError('No evaluation periods to rank')
    labels = list(periods[0])
    if baseline not in labels:
        raise EvaluationError(f"Baseline measure '{baseline}' is not among {labels}")

    table = np.empty((len(periods), len(labels)), dtype=np.float64)
    for row, period in enumerate(periods):
        for col, label in enumerate(labels):
            accuracy = period.get(label)
            if accuracy is None:
                raise EvaluationError(f"Period {row} has no accuracy for '{label}'")
            table[row, col] = accuracy
        extra = set(period) - set(labels)
        if extra:
            raise EvaluationError(f"Period {row} has '{sorted(extra)[0]}', which period 0 lacks")

    ranks = np.vstack([rankdata(-row, method='average') for row in table])
    deltas = table - table[:, [labels.index(baseline)]]
    base_mean = table[:, labels.index(baseline)].mean()
    summaries = {}
    for col, label in enumerate(labels):
        mean_delta = float(deltas[:, col].mean())
        summaries[label] = RankSummary(
            label=label,
            mean_rank=float(ranks[:, col].mean()),
            mean_accuracy=float(table[:, col].mean()),
            std_accuracy=float(table[:, col].std()),
            mean_delta=mean_delta,
            relative_improvement=mean_delta / base_mean if base_mean > 0 else None,
            periods=len(periods),
        )
    return summaries
