"""
File formats for matrices and evaluation reports.

Matrices are CSV triplets plus a JSON sidecar of the same stem; reports are
JSON, summaries are CSV tables built with pandas.
"""
from __future__ import annotations

import csv
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from .evaluation import EvalReport, RankSummary
from .exceptions import InputError
from .ingest import TimeRange
from .matrix import InteractionMatrix
from .measures import SimilarityMatrix
from .utils import format_utc

logger = logging.getLogger(__name__)

SIMILARITY_HEADER = ['dest_i', 'dest_j', 'value']
INTERACTION_HEADER = ['user_idx', 'dest_idx', 'value']


def _created_at(deterministic: bool) -> Optional[str]:
    return None if deterministic else format_utc(datetime.now(timezone.utc))


def dump_json(payload, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    return path


def sidecar_path(path: Path) -> Path:
    return Path(path).with_suffix('.json')


def write_similarity(S: SimilarityMatrix, path: Path, deterministic: bool = False) -> Tuple[Path, Path]:
    """
    Write non-zero off-diagonal scores as ``dest_i,dest_j,value`` rows (full
    precision) and the sidecar with measure, params, index and window.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(SIMILARITY_HEADER)
        for dest_i, dest_j, value in S.to_sparse_triplets():
            writer.writerow([dest_i, dest_j, repr(value)])
    sidecar = dump_json({
        'measure': S.measure,
        'params': S.params,
        'n': S.n,
        'market': S.market,
        'window': S.window.to_dict() if S.window else None,
        'destinations': list(S.destinations),
        'created_at': _created_at(deterministic),
    }, sidecar_path(path))
    return path, sidecar


def _window_from(payload: Optional[Mapping[str, str]]) -> Optional[TimeRange]:
    return TimeRange.from_dict(payload) if payload else None


def read_similarity(path: Path) -> SimilarityMatrix:
    """
    Load a matrix written by write_similarity.

    Raises:
        InputError: missing files or entries that disagree with the sidecar
    """
    path = Path(path)
    try:
        meta = json.loads(sidecar_path(path).read_text(encoding='utf-8'))
        destinations = tuple(meta['destinations'])
        index = {code: col for col, code in enumerate(destinations)}
        values = np.zeros((len(destinations), len(destinations)), dtype=np.float64)
        with open(path, newline='', encoding='utf-8') as handle:
            reader = csv.reader(handle)
            if next(reader, None) != SIMILARITY_HEADER:
                raise InputError(f'{path} is not a similarity matrix file')
            for dest_i, dest_j, value in reader:
                values[index[dest_i], index[dest_j]] = float(value)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f'Cannot read similarity matrix {path}: {exc}') from exc
    return SimilarityMatrix(
        values, meta['measure'], destinations, meta.get('params') or {},
        meta.get('market'), _window_from(meta.get('window')),
    )


def write_interactions(mat: InteractionMatrix, path: Path, deterministic: bool = False) -> Tuple[Path, Path]:
    """Write ``user_idx,dest_idx,1`` triplets and the index maps sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    coo = mat.entries.tocoo()
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(INTERACTION_HEADER)
        for row, col in sorted(zip(coo.row.tolist(), coo.col.tolist())):
            writer.writerow([row, col, 1])
    sidecar = dump_json({
        'm': mat.m,
        'n': mat.n,
        'market': mat.market,
        'window': mat.window.to_dict() if mat.window else None,
        'user_ids': list(mat.user_ids),
        'destinations': list(mat.destinations),
        'created_at': _created_at(deterministic),
    }, sidecar_path(path))
    return path, sidecar


def write_report(report: EvalReport, path: Path, deterministic: bool = False) -> Path:
    payload = report.to_dict()
    payload['created_at'] = _created_at(deterministic)
    return dump_json(payload, path)


def summary_frame(reports: Iterable[EvalReport]) -> pd.DataFrame:
    """One row per (market, window), one accuracy column per measure label."""
    rows: List[Dict[str, object]] = []
    for report in reports:
        row: Dict[str, object] = {'market': report.market}
        row.update(report.window.to_dict() if report.window else {})
        row['eligible_users'] = report.eligible_users
        row.update(report.accuracies())
        rows.append(row)
    return pd.DataFrame(rows)


def ranks_frame(summaries: Mapping[str, RankSummary], baseline: str) -> pd.DataFrame:
    return pd.DataFrame([
        {
            'measure': summary.label,
            'avg_rank': summary.mean_rank,
            'mean_accuracy': summary.mean_accuracy,
            'std_accuracy': summary.std_accuracy,
            f'delta_vs_{baseline}': summary.mean_delta,
            f'relative_vs_{baseline}': summary.relative_improvement,
            'periods': summary.periods,
        }
        for summary in summaries.values()
    ])
