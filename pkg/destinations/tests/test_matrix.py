import random
from datetime import timedelta

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from destinations.exceptions import EmptyWindowError
from destinations.ingest import SearchRecord, TimeRange
from destinations.matrix import build_matrix, cooccurrence, popularity

from .helpers import T0, example_records, matrix_from_dense, oracle_counts, random_matrices


class BuildMatrixTests(SimpleTestCase):
    """
    Tests for building the binary user x destination matrix.
    """

    def test_worked_example(self):
        mat = build_matrix(example_records())
        self.assertEqual((mat.m, mat.n, mat.nnz), (4, 3, 7))
        self.assertEqual(mat.destinations, ('A', 'B', 'C'))
        self.assertEqual(mat.user_ids, ('u1', 'u2', 'u3', 'u4'))
        self.assertEqual(mat.destinations_of('u3'), ('A', 'C'))
        self.assertEqual(mat.market, 'FR')
        self.assertAlmostEqual(mat.density, 7 / 12)

    def test_record_order_does_not_matter(self):
        records = example_records()
        shuffled = list(records)
        random.Random(11).shuffle(shuffled)
        a, b = build_matrix(records), build_matrix(shuffled)
        self.assertEqual(a.user_ids, b.user_ids)
        self.assertEqual(a.destinations, b.destinations)
        assert_array_equal(a.entries.toarray(), b.entries.toarray())

    def test_repeated_searches_collapse(self):
        records = example_records() + example_records()
        mat = build_matrix(records)
        self.assertEqual(mat.nnz, 7)
        self.assertEqual(set(mat.entries.data.tolist()), {1})

    def test_single_record(self):
        mat = build_matrix([SearchRecord('u1', 'A', 'FR', T0)])
        self.assertEqual((mat.m, mat.n, mat.nnz), (1, 1, 1))

    def test_empty_window(self):
        window = TimeRange(T0, T0 + timedelta(days=1))
        with self.assertRaises(EmptyWindowError) as context:
            build_matrix([], window)
        self.assertIn('empty window [2020-06-01T10:00:00Z, 2020-06-02T10:00:00Z)', str(context.exception))

    def test_mixed_markets(self):
        with self.assertRaises(ValueError):
            build_matrix(example_records('FR') + example_records('DE'))

    def test_bots_are_dropped(self):
        """Users above max_degree disappear, and so do destinations only they searched."""
        records = example_records() + [
            SearchRecord('bot', code, 'FR', T0) for code in ('A', 'B', 'C', 'X', 'Y')
        ]
        mat = build_matrix(records, max_degree=4)
        self.assertNotIn('bot', mat.user_ids)
        self.assertEqual(mat.destinations, ('A', 'B', 'C'))

    def test_min_support(self):
        mat = build_matrix(example_records(), min_support=3)
        self.assertEqual(mat.destinations, ('A',))
        self.assertEqual(mat.user_ids, ('u1', 'u2', 'u3'))

    def test_everything_filtered(self):
        with self.assertRaises(EmptyWindowError):
            build_matrix(example_records(), min_support=10)


class CooccurrenceTests(SimpleTestCase):
    """Tests for co-search counts and supports."""

    def test_worked_example(self):
        stats = cooccurrence(build_matrix(example_records()))
        assert_array_equal(stats.support, [3, 2, 2])
        assert_array_equal(stats.counts, [[3, 2, 1], [2, 2, 0], [1, 0, 2]])
        self.assertEqual(stats.m, 4)

    def test_single_entry(self):
        stats = cooccurrence(build_matrix([SearchRecord('u1', 'A', 'FR', T0)]))
        assert_array_equal(stats.counts, [[1]])

    def test_identical_rows(self):
        R = np.ones((5, 4), dtype=np.int64)
        stats = cooccurrence(matrix_from_dense(R))
        assert_array_equal(stats.counts, np.full((4, 4), 5))

    def test_matches_dense_oracle(self):
        for R in random_matrices(count=30):
            stats = cooccurrence(matrix_from_dense(R))
            assert_array_equal(stats.counts, oracle_counts(R))
            assert_array_equal(stats.support, R.sum(axis=0))
            self.assertEqual(stats.support.sum(), R.sum())

    def test_shards_and_workers_do_not_change_counts(self):
        for R in random_matrices(count=10, seed=21):
            mat = matrix_from_dense(R)
            expected = cooccurrence(mat).counts
            for shards, workers in ((2, 1), (3, 3), (50, 4)):
                assert_array_equal(cooccurrence(mat, shards=shards, workers=workers).counts, expected)

    def test_column_permutation(self):
        """Permuting destinations permutes the count matrix the same way."""
        rng = np.random.default_rng(5)
        R = (rng.random((20, 8)) < 0.3).astype(np.int64)
        perm = rng.permutation(8)
        counts = cooccurrence(matrix_from_dense(R)).counts
        permuted = cooccurrence(matrix_from_dense(R[:, perm])).counts
        assert_array_equal(permuted, counts[np.ix_(perm, perm)])

    def test_invalid_shards(self):
        with self.assertRaises(ValueError):
            cooccurrence(build_matrix(example_records()), shards=0)


class PopularityTests(SimpleTestCase):
    """Tests for popularity ranks and scores."""

    def test_worked_example(self):
        """Supports A3 B2 C2 rank B=1, C=2 (code tie-break), A=3."""
        pop = popularity(cooccurrence(build_matrix(example_records())), 0.5)
        assert_array_equal(pop.rank, [3, 1, 2])
        assert_allclose(pop.p, [0.5, 5 / 6, 2 / 3])

    def test_zero_weight(self):
        pop = popularity(cooccurrence(build_matrix(example_records())), 0.0)
        assert_allclose(pop.p, [1.0, 1.0, 1.0])

    def test_single_destination(self):
        pop = popularity(cooccurrence(build_matrix([SearchRecord('u1', 'A', 'FR', T0)])), 0.5)
        assert_allclose(pop.p, [0.5])

    def test_user_count_denominator(self):
        pop = popularity(cooccurrence(build_matrix(example_records())), 0.5, denominator='m')
        assert_allclose(pop.p, [1 - 0.5 * 3 / 4, 1 - 0.5 / 4, 1 - 0.5 * 2 / 4])

    def test_user_count_denominator_below_zero_warns(self):
        """Two users over six destinations push the top four scores to <= 0."""
        records = [SearchRecord(user, dest, 'FR', T0) for user, dests in (('u1', 'ABC'), ('u2', 'DEF')) for dest in dests]
        stats = cooccurrence(build_matrix(records))
        with self.assertLogs('destinations.matrix', 'WARNING') as logs:
            pop = popularity(stats, 0.9, denominator='m')
        self.assertEqual(int((pop.p <= 0).sum()), 4)
        self.assertIn('4 popularity scores are <= 0', logs.output[0])

    def test_more_popular_means_lower_score(self):
        for R in random_matrices(count=20, seed=3):
            stats = cooccurrence(matrix_from_dense(R))
            pop = popularity(stats, 0.7)
            self.assertTrue(np.all(pop.p > 0))
            for i in range(stats.n):
                for j in range(stats.n):
                    if stats.support[i] > stats.support[j]:
                        self.assertLess(pop.p[i], pop.p[j])

    def test_invalid_arguments(self):
        stats = cooccurrence(build_matrix(example_records()))
        for w in (-0.1, 1.0, 1.5):
            with self.assertRaises(ValueError):
                popularity(stats, w)
        with self.assertRaises(ValueError):
            popularity(stats, 0.5, denominator='users')
