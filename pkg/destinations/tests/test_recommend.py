import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from destinations.exceptions import UnknownDestinationError
from destinations.matrix import build_matrix, cooccurrence
from destinations.measures import SimilarityMatrix, compute
from destinations.recommend import EXCLUDED, code_order, fuse_rows, rank_of, recommend, top_k

from .helpers import example_records, matrix_from_dense, random_matrices


def _example_ccs():
    return compute('ccs', cooccurrence(build_matrix(example_records())))


class FuseRowsTests(SimpleTestCase):
    """Tests for averaging the rows of searched destinations."""

    def test_single_destination(self):
        scores = fuse_rows(_example_ccs(), ['A'])
        self.assertEqual(scores[0], EXCLUDED)
        assert_allclose(scores[1:], [0.5, 0.25])

    def test_two_destinations(self):
        """{B, C} averages (0.5 + 0.25) / 2 for A."""
        scores = fuse_rows(_example_ccs(), ['B', 'C'])
        self.assertAlmostEqual(scores[0], 0.375)
        self.assertEqual(scores[1], EXCLUDED)
        self.assertEqual(scores[2], EXCLUDED)

    def test_duplicates_count_once(self):
        assert_allclose(fuse_rows(_example_ccs(), ['B', 'C', 'B'])[0], 0.375)

    def test_errors(self):
        S = _example_ccs()
        with self.assertRaises(ValueError):
            fuse_rows(S, [])
        with self.assertRaises(UnknownDestinationError):
            fuse_rows(S, ['A', 'Z'])


class TopKTests(SimpleTestCase):
    """Tests for the ranked top-k list and its tie-breaking."""

    def test_recommend_example(self):
        recommendations = recommend(_example_ccs(), ['A'], k=5)
        self.assertEqual([(r.destination, r.rank) for r in recommendations], [('B', 1), ('C', 2)])
        self.assertAlmostEqual(recommendations[0].score, 0.5)
        self.assertEqual(recommendations[1].to_dict(), {'destination': 'C', 'score': 0.25, 'rank': 2})

    def test_everything_searched(self):
        self.assertEqual(recommend(_example_ccs(), ['A', 'B', 'C'], k=3), [])

    def test_ties_break_by_code(self):
        scores = np.array([0.2, 0.7, 0.2, 0.7, EXCLUDED])
        codes = ['E', 'D', 'C', 'B', 'A']
        self.assertEqual([r.destination for r in top_k(scores, 4, codes)], ['B', 'D', 'C', 'E'])

    def test_invalid_k(self):
        with self.assertRaises(ValueError):
            top_k(np.zeros(3), 0, ['A', 'B', 'C'])

    def test_singleton_equals_sorted_row(self):
        rng = np.random.default_rng(2)
        values = rng.random((6, 6))
        np.fill_diagonal(values, 0)
        codes = tuple(f'D{col:02d}' for col in range(6))
        S = SimilarityMatrix(values, 'random', codes)
        for i, code in enumerate(codes):
            expected = [codes[j] for j in np.argsort(-values[i]) if j != i]
            self.assertEqual([r.destination for r in recommend(S, [code], k=5)], expected)

    def test_positive_rescaling_keeps_recommendations(self):
        for R in random_matrices(count=20, seed=29):
            S = compute('jaccard', cooccurrence(matrix_from_dense(R)))
            scaled = SimilarityMatrix(S.values * 4.0, S.measure, S.destinations)
            searched = S.destinations[:2]
            self.assertEqual(
                [r.destination for r in recommend(S, searched, 3)],
                [r.destination for r in recommend(scaled, searched, 3)],
            )

    def test_never_recommends_searched(self):
        for R in random_matrices(count=20, seed=31):
            S = compute('cosine', cooccurrence(matrix_from_dense(R)))
            searched = set(S.destinations[::3])
            codes = {r.destination for r in recommend(S, searched, S.n)}
            self.assertFalse(codes & searched)
            self.assertEqual(len(codes), S.n - len(searched))


class RankOfTests(SimpleTestCase):
    """rank_of must agree with top_k membership for every k."""

    def test_agrees_with_top_k(self):
        rng = np.random.default_rng(37)
        codes = [f'D{col:02d}' for col in range(12)]
        order = code_order(codes)
        for _ in range(20):
            # Few distinct values so ties are common
            scores = rng.integers(0, 4, size=12).astype(np.float64)
            scores[rng.integers(12)] = EXCLUDED
            ranked = [r.destination for r in top_k(scores, 12, codes)]
            for index, code in enumerate(codes):
                position = rank_of(scores, index, order)
                if scores[index] == EXCLUDED:
                    self.assertIsNone(position)
                else:
                    self.assertEqual(ranked.index(code) + 1, position)

    def test_code_order(self):
        self.assertEqual(code_order(['C', 'A', 'B']).tolist(), [2, 0, 1])
