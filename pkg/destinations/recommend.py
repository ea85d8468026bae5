from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .measures import SimilarityMatrix

EXCLUDED = -np.inf


@dataclass(frozen=True)
class Recommendation:
    destination: str
    score: float
    rank: int

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def code_order(destinations: Sequence[str]) -> np.ndarray:
    """Position of each destination in ascending code order (the tie-break key)."""
    order = np.argsort(np.asarray(destinations, dtype=object), kind='stable')
    positions = np.empty(len(destinations), dtype=np.int64)
    positions[order] = np.arange(len(destinations))
    return positions


def fuse_rows(S: SimilarityMatrix, searched: Iterable[str]) -> np.ndarray:
    """
    Average the similarity rows of the searched destinations.

    Searched destinations themselves get the EXCLUDED sentinel so they can
    never be recommended.

    Raises:
        ValueError: empty searched set
        UnknownDestinationError: a searched destination is not in S
    """
    codes = sorted(set(searched), key=S.index_of)
    if not codes:
        raise ValueError('At least one searched destination is required')
    scores = np.vstack([S.row(code) for code in codes]).sum(axis=0) / len(codes)
    scores[[S.index_of(code) for code in codes]] = EXCLUDED
    return scores


def top_k(scores: np.ndarray, k: int, destinations: Sequence[str]) -> List[Recommendation]:
    """
    The k best non-excluded destinations, highest score first, ties by ascending
    code. Returns fewer than k when the candidates run out.
    """
    if k < 1:
        raise ValueError(f'k must be >= 1, got {k}')
    candidates = np.flatnonzero(scores != EXCLUDED)
    ties = code_order(destinations)[candidates]
    ranked = candidates[np.lexsort((ties, -scores[candidates]))][:k]
    return [
        Recommendation(destinations[col], float(scores[col]), rank)
        for rank, col in enumerate(ranked, start=1)
    ]


def rank_of(scores: np.ndarray, index: int, order: np.ndarray) -> Optional[int]:
    """
    1-based position destination ``index`` takes in the top_k ordering, or None
    when it is excluded. ``order`` is code_order(destinations).

    rank_of(...) <= k exactly when the destination appears in top_k(scores, k).
    """
    score = scores[index]
    if score == EXCLUDED:
        return None
    ahead = np.count_nonzero(scores > score)
    ahead += np.count_nonzero((scores == score) & (order < order[index]))
    return int(ahead) + 1


def recommend(S: SimilarityMatrix, searched: Iterable[str], k: int = 5) -> List[Recommendation]:
    return top_k(fuse_rows(S, searched), k, S.destinations)
