import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import timedelta
from pathlib import Path

from destinations.evaluation import average_ranks, evaluate_market, rolling_windows
from destinations.exports import ranks_frame, summary_frame, write_report
from destinations.ingest import partition_by_market
from destinations.management.base import DestinationsCommand, add_pipeline_options
from destinations.serializers import EvaluateConfigSerializer

logger = logging.getLogger(__name__)


class Command(DestinationsCommand):
    help = 'Evaluate similarity measures with the mask-one-destination top-k protocol.'
    serializer_class = EvaluateConfigSerializer

    def add_options(self, parser):
        add_pipeline_options(parser)
        parser.add_argument('--test-start', help='Test window start, ISO-8601 UTC')
        parser.add_argument('--test-end', help='Test window end (exclusive)')
        parser.add_argument('--periods', type=int,
                            help='Number of periods; each earlier period is shifted back one test length')
        parser.add_argument('--train-weeks',
                            help='Comma separated training lengths in weeks, each evaluated separately')
        parser.add_argument('--baseline', help='Measure label the deltas are computed against')
        parser.add_argument('--with-baselines', action='store_true', default=None,
                            help='Also score popularity-only and random recommenders')

    def windows(self, opts):
        windows = []
        for window in rolling_windows(opts['window'], opts['periods']):
            if opts['train_weeks']:
                windows.extend(window.with_train_length(timedelta(weeks=weeks)) for weeks in self.train_weeks(opts))
            else:
                windows.append(window)
        return windows

    def train_weeks(self, opts):
        return list(dict.fromkeys(opts['train_weeks']))

    def rank_groups(self, opts, reports):
        """Reports grouped by training length, keyed by the rank table file name."""
        if not opts['train_weeks']:
            return {'ranks.csv': reports}
        return {
            f'ranks_{weeks}w.csv': [
                report for report in reports
                if report.window.train_end - report.window.train_start == timedelta(weeks=weeks)
            ]
            for weeks in self.train_weeks(opts)
        }

    def run(self, opts):
        partitions = partition_by_market(self.load_records(opts))
        config = opts['eval_config']
        tasks = [
            (market, window)
            for market in partitions
            for window in self.windows(opts)
        ]
        with ThreadPoolExecutor(max_workers=opts['workers']) as pool:
            futures = {
                task: pool.submit(evaluate_market, partitions[task[0]], replace(config, window=task[1]))
                for task in tasks
            }
            reports = [futures[task].result() for task in sorted(tasks, key=lambda t: (t[0], t[1].label))]

        # Nothing is written until ranking has succeeded
        rankings = {}
        for name, group in self.rank_groups(opts, reports).items():
            periods = [report.accuracies() for report in group if report.eligible_users]
            if periods:
                rankings[name] = average_ranks(periods, opts['baseline'])

        out = Path(opts['out'])
        for report in reports:
            path = write_report(report, out / report.market / f'eval_{report.window.label}.json', opts['deterministic'])
            if not report.eligible_users:
                self.stderr.write(
                    f'Warning: no eligible test users for {report.market} in {report.window.test}'
                )
            accuracies = ', '.join(
                f'{label}={"n/a" if accuracy is None else format(accuracy, ".4f")}'
                for label, accuracy in report.accuracies().items()
            )
            self.stdout.write(f'{report.market} {report.window.label}: {accuracies} -> {path}')

        summary_frame(reports).to_csv(out / 'summary.csv', index=False)
        for name, summaries in rankings.items():
            ranks_frame(summaries, opts['baseline']).to_csv(out / name, index=False)
            self.stdout.write(f'Average ranks -> {out / name}')
            for summary in summaries.values():
                self.stdout.write(
                    f'{summary.label}: avg rank {summary.mean_rank:.2f}, '
                    f'accuracy {summary.mean_accuracy:.4f} +/- {summary.std_accuracy:.4f}, '
                    f'delta vs {opts["baseline"]} {summary.mean_delta:+.4f}'
                )
        logger.info('Wrote %d evaluation reports to %s', len(reports), out)
