import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from destinations.exports import write_interactions, write_similarity
from destinations.ingest import TimeRange, dedupe, filter_window, partition_by_market
from destinations.management.base import DestinationsCommand, add_pipeline_options
from destinations.matrix import build_matrix, cooccurrence, popularity
from destinations.measures import compute
from destinations.serializers import RunConfigSerializer

logger = logging.getLogger(__name__)


class Command(DestinationsCommand):
    help = 'Build destination similarity matrices per market from search logs.'
    serializer_class = RunConfigSerializer

    def add_options(self, parser):
        add_pipeline_options(parser)
        parser.add_argument('--export-interactions', action='store_true', default=None,
                            help='Also write the binary interaction matrix per market')

    def build_market(self, market, records, opts):
        """All requested matrices for one market, with per-matrix wall time."""
        window = None
        if opts['train_start'] is not None:
            window = TimeRange(opts['train_start'], opts['train_end'])
            records = filter_window(records, window.start, window.end)
        started = time.perf_counter()
        mat = build_matrix(dedupe(records), window, opts['max_degree'], opts['min_support'])
        logger.info('%s: %d users x %d destinations, %d searches', market, mat.m, mat.n, mat.nnz)
        stats = cooccurrence(mat, shards=opts['workers'], workers=opts['workers'])
        shared = time.perf_counter() - started

        matrices = []
        for measure in opts['measures']:
            for w in (opts['w'] if measure == 'pccs' else [None]):
                started = time.perf_counter()
                pop = popularity(stats, w, opts['popularity_denominator']) if w is not None else None
                S = compute(measure, stats, pop)
                matrices.append((S, shared + time.perf_counter() - started))
        return mat, matrices

    def run(self, opts):
        partitions = partition_by_market(self.load_records(opts))
        with ThreadPoolExecutor(max_workers=opts['workers']) as pool:
            futures = {
                market: pool.submit(self.build_market, market, records, opts)
                for market, records in partitions.items()
            }
            # Nothing is written until every market has been built
            built = {market: future.result() for market, future in futures.items()}

        out = Path(opts['out'])
        for market in sorted(built):
            mat, matrices = built[market]
            if opts['export_interactions']:
                write_interactions(mat, out / market / 'interactions.csv', opts['deterministic'])
            for S, elapsed in sorted(matrices, key=lambda item: item[0].label):
                path, _ = write_similarity(S, out / market / f'{S.label}.csv', opts['deterministic'])
                self.stdout.write(
                    f'{market} {S.label}: n={S.n} density={mat.density:.6f} time={elapsed:.3f}s -> {path}'
                )
        logger.info('Built %d matrices for %d markets', sum(len(m) for _, m in built.values()), len(built))
