import json
import tempfile
from datetime import timedelta
from pathlib import Path

from django.test import SimpleTestCase
from numpy.testing import assert_array_equal

from destinations.evaluation import EvalReport, MeasureResult, average_ranks
from destinations.exceptions import InputError
from destinations.exports import (
    ranks_frame, read_similarity, sidecar_path, summary_frame, write_interactions, write_report,
    write_similarity,
)
from destinations.ingest import TimeRange
from destinations.matrix import build_matrix, cooccurrence, popularity
from destinations.measures import compute

from .helpers import T0, example_records


class SimilarityFileTests(SimpleTestCase):
    """
    Tests for the similarity CSV and its JSON sidecar.
    """

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = Path(self.tmp.name)
        window = TimeRange(T0, T0 + timedelta(hours=1))
        stats = cooccurrence(build_matrix(example_records(), window))
        self.S = compute('pccs', stats, popularity(stats, 0.5))

    def test_values_survive_exactly(self):
        path, sidecar = write_similarity(self.S, self.out / 'FR' / 'pccs_w0.5.csv', deterministic=True)
        loaded = read_similarity(path)
        assert_array_equal(loaded.values, self.S.values)
        self.assertEqual(loaded.destinations, self.S.destinations)
        self.assertEqual(loaded.label, 'pccs_w0.5')
        self.assertEqual(loaded.window, self.S.window)
        self.assertEqual(sidecar, sidecar_path(path))

    def test_sidecar_contents(self):
        path, sidecar = write_similarity(self.S, self.out / 'pccs.csv', deterministic=True)
        meta = json.loads(sidecar.read_text())
        self.assertEqual(meta['measure'], 'pccs')
        self.assertEqual(meta['params'], {'w': 0.5, 'denominator': 'n'})
        self.assertEqual(meta['n'], 3)
        self.assertEqual(meta['market'], 'FR')
        self.assertEqual(meta['window'], {'start': '2020-06-01T10:00:00Z', 'end': '2020-06-01T11:00:00Z'})
        self.assertIsNone(meta['created_at'])
        self.assertEqual(path.read_text().splitlines()[0], 'dest_i,dest_j,value')

    def test_created_at_without_deterministic(self):
        _, sidecar = write_similarity(self.S, self.out / 'pccs.csv')
        self.assertTrue(json.loads(sidecar.read_text())['created_at'].endswith('Z'))

    def test_missing_sidecar(self):
        path = self.out / 'orphan.csv'
        path.write_text('dest_i,dest_j,value\n')
        with self.assertRaises(InputError):
            read_similarity(path)

    def test_unknown_code_in_entries(self):
        path, _ = write_similarity(self.S, self.out / 'pccs.csv', deterministic=True)
        with open(path, 'a') as handle:
            handle.write('A,Z,0.5\n')
        with self.assertRaises(InputError):
            read_similarity(path)

    def test_interactions(self):
        mat = build_matrix(example_records())
        path, sidecar = write_interactions(mat, self.out / 'interactions.csv', deterministic=True)
        lines = path.read_text().splitlines()
        self.assertEqual(lines[0], 'user_idx,dest_idx,value')
        self.assertEqual(lines[1:3], ['0,0,1', '0,1,1'])
        self.assertEqual(len(lines), 8)
        meta = json.loads(sidecar.read_text())
        self.assertEqual(meta['user_ids'], ['u1', 'u2', 'u3', 'u4'])
        self.assertEqual(meta['destinations'], ['A', 'B', 'C'])


class ReportFileTests(SimpleTestCase):
    """Tests for evaluation reports and summary tables."""

    def _report(self, market, ccs_hits):
        return EvalReport(market, None, seed=0, k=5, eligible_users=10, results=[
            MeasureResult('pearson', 'pearson', {}, 3, 10),
            MeasureResult('ccs', 'ccs', {}, ccs_hits, 10),
        ])

    def test_write_report(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_report(self._report('FR', 5), Path(tmp) / 'FR' / 'eval.json', deterministic=True)
            payload = json.loads(path.read_text())
        self.assertEqual(payload['results'][1]['accuracy'], 0.5)
        self.assertEqual(payload['eligible_users'], 10)
        self.assertIsNone(payload['created_at'])

    def test_summary_and_ranks(self):
        reports = [self._report('DE', 6), self._report('FR', 2)]
        summary = summary_frame(reports)
        self.assertEqual(summary['market'].tolist(), ['DE', 'FR'])
        self.assertEqual(summary['ccs'].tolist(), [0.6, 0.2])
        summaries = average_ranks([report.accuracies() for report in reports], 'pearson')
        ranks = ranks_frame(summaries, 'pearson')
        self.assertEqual(ranks['measure'].tolist(), ['pearson', 'ccs'])
        self.assertEqual(ranks['avg_rank'].tolist(), [1.5, 1.5])
        self.assertIn('delta_vs_pearson', ranks.columns)
