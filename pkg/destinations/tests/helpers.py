"""
Shared fixtures: the 4-user / 3-destination worked example and dense
brute-force oracles evaluated column pair by column pair.
"""
from datetime import datetime, timedelta, timezone

import numpy as np

from destinations.ingest import SearchRecord
from destinations.matrix import InteractionMatrix

T0 = datetime(2020, 6, 1, 10, 0, tzinfo=timezone.utc)

# u1:{A,B} u2:{A,B} u3:{A,C} u4:{C}
EXAMPLE_SEARCHES = [('u1', 'A'), ('u1', 'B'), ('u2', 'A'), ('u2', 'B'), ('u3', 'A'), ('u3', 'C'), ('u4', 'C')]


def example_records(market='FR'):
    return [
        SearchRecord(user, dest, market, T0 + timedelta(minutes=minute))
        for minute, (user, dest) in enumerate(EXAMPLE_SEARCHES)
    ]


def random_binary(rng, m, n, density):
    return (rng.random((m, n)) < density).astype(np.int64)


def matrix_from_dense(R, market='FR'):
    rows, cols = np.nonzero(R)
    user_ids = [f'u{row:03d}' for row in range(R.shape[0])]
    destinations = [f'D{col:02d}' for col in range(R.shape[1])]
    return InteractionMatrix.from_indices(rows, cols, user_ids, destinations, market)


def random_matrices(count=100, seed=7):
    """Seeded random binary matrices with m <= 30, n <= 20 at three densities."""
    rng = np.random.default_rng(seed)
    densities = (0.05, 0.2, 0.5)
    for index in range(count):
        m = int(rng.integers(2, 31))
        n = int(rng.integers(2, 21))
        yield random_binary(rng, m, n, densities[index % len(densities)])


def oracle_counts(R):
    m, n = R.shape
    counts = np.zeros((n, n), dtype=np.int64)
    for u in range(m):
        for i in range(n):
            for j in range(n):
                if R[u, i] and R[u, j]:
                    counts[i, j] += 1
    return counts


def _pair(measure, x, y, m):
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    if measure == 'ccs':
        return float(np.sum(x * y)) / m
    if measure == 'cosine':
        norm = np.sqrt(np.sum(x * x)) * np.sqrt(np.sum(y * y))
        return 0.0 if norm == 0 else float(np.sum(x * y) / norm)
    if measure == 'pearson':
        xc, yc = x - x.mean(), y - y.mean()
        norm = np.sqrt(np.sum(xc * xc)) * np.sqrt(np.sum(yc * yc))
        return 0.0 if norm == 0 else float(np.sum(xc * yc) / norm)
    if measure == 'jaccard':
        union = np.sum((x > 0) | (y > 0))
        return 0.0 if union == 0 else float(np.sum((x > 0) & (y > 0))) / union
    if measure == 'kulsinski':
        ctt = np.sum((x > 0) & (y > 0))
        ctf = np.sum((x > 0) & (y == 0))
        cft = np.sum((x == 0) & (y > 0))
        dissimilarity = (ctf + cft - ctt + m) / (ctf + cft + m)
        return 1.0 - dissimilarity
    raise ValueError(measure)


def oracle(R, measure, w=0.5):
    """Dense brute-force similarity matrix for one measure."""
    m, n = R.shape
    if measure in ('ccs_norm', 'pccs'):
        base = oracle(R, 'ccs')
        norm = np.zeros_like(base)
        for i in range(n):
            peak = max((base[i, j] for j in range(n) if j != i), default=0.0)
            for j in range(n):
                if j != i and peak > 0:
                    norm[i, j] = base[i, j] / peak
        if measure == 'ccs_norm':
            return norm
        support = R.sum(axis=0)
        codes = [f'D{col:02d}' for col in range(n)]
        order = sorted(range(n), key=lambda col: (support[col], codes[col]))
        p = np.zeros(n)
        for rank, col in enumerate(order, start=1):
            p[col] = 1 - w * rank / n
        result = np.zeros_like(norm)
        for i in range(n):
            for j in range(n):
                if i != j:
                    result[i, j] = 1.0 / (1.0 + np.exp(p[i] - norm[i, j]))
        return result

    result = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                result[i, j] = _pair(measure, R[:, i], R[:, j], m)
    return result
