import logging
from pathlib import Path
from typing import Dict, List

from django.core.management.base import BaseCommand, CommandError
from dotenv import dotenv_values

from destinations.exceptions import DestinationSimilarityError, EmptyWindowError, InputError
from destinations.ingest import SearchRecord, filter_markets, read_log_file

logger = logging.getLogger(__name__)

USAGE_ERROR = 2


def format_errors(errors, prefix='') -> str:
    """Flatten DRF serializer errors into one line."""
    if isinstance(errors, dict):
        parts = []
        for name, detail in errors.items():
            label = '' if name == 'non_field_errors' else f'{prefix}{name}'
            parts.append(format_errors(detail, f'{label}: ' if label else ''))
        return '; '.join(parts)
    if isinstance(errors, list):
        return '; '.join(format_errors(item, prefix) for item in errors)
    return f'{prefix}{errors}'


class DestinationsCommand(BaseCommand):
    """
    Base for the pipeline commands.

    Options are merged as settings default < ``--config`` file < command-line
    flag, validated by ``serializer_class``, and handed to ``run``. Pipeline
    errors become CommandError with the error's exit code.
    """
    serializer_class = None

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Flat key=value run configuration file (dotenv format)')
        self.add_options(parser)

    def add_options(self, parser):
        raise NotImplementedError

    def load_options(self, options) -> Dict:
        data = {}
        if options.get('config'):
            path = Path(options['config'])
            if not path.is_file():
                raise CommandError(f'Config file {path} does not exist', returncode=USAGE_ERROR)
            data.update({key.replace('-', '_'): value for key, value in dotenv_values(path).items()
                         if value is not None})
        for name in self.serializer_class().fields:
            if options.get(name) is not None:
                data[name] = options[name]

        serializer = self.serializer_class(data=data)
        if not serializer.is_valid():
            raise CommandError(format_errors(serializer.errors), returncode=USAGE_ERROR)
        return serializer.validated_data

    def handle(self, *args, **options):
        opts = self.load_options(options)
        try:
            self.run(opts)
        except DestinationSimilarityError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code) from exc

    def run(self, opts):
        raise NotImplementedError

    def load_records(self, opts) -> List[SearchRecord]:
        """Read every input log, optionally keeping only the requested markets."""
        records: List[SearchRecord] = []
        for path in opts['input']:
            try:
                parsed = read_log_file(path, opts.get('format'), opts['malformed_threshold'])
            except OSError as exc:
                raise InputError(f'Cannot read {path}: {exc}') from exc
            logger.info('Read %d records from %s (%d malformed)', len(parsed), path, parsed.malformed)
            if parsed.malformed:
                self.stderr.write(f'{path}: skipped {parsed.malformed} malformed rows')
            records.extend(parsed.records)
        if opts['market']:
            records = filter_markets(records, opts['market'])
        if not records:
            markets = ', '.join(opts['market']) or 'any market'
            raise EmptyWindowError(f'No search records for {markets}')
        return records


def add_pipeline_options(parser):
    """Flags shared by `build` and `evaluate`."""
    parser.add_argument('--input', help='Comma separated search log paths (.csv or .jsonl)')
    parser.add_argument('--format', choices=('csv', 'jsonl'), help='Log format (default: from file suffix)')
    parser.add_argument('--market', help='Comma separated markets to keep (default: all)')
    parser.add_argument('--train-start', help='Training window start, ISO-8601 UTC')
    parser.add_argument('--train-end', help='Training window end (exclusive)')
    parser.add_argument('--measures', help='Comma separated similarity measures (default: all seven)')
    parser.add_argument('--w', help='Comma separated PCCS popularity weights in [0, 1)')
    parser.add_argument('--k', type=int, help='Top-k cutoff')
    parser.add_argument('--seed', type=int, help='Random seed (64-bit unsigned)')
    parser.add_argument('--out', help='Output directory')
    parser.add_argument('--popularity-denominator', choices=('n', 'm'),
                        help='Divide popularity ranks by destination count n or user count m')
    parser.add_argument('--max-degree', type=int, help='Drop users with more distinct destinations than this')
    parser.add_argument('--min-support', type=int, help='Drop destinations searched by fewer users than this')
    parser.add_argument('--malformed-threshold', type=float, help='Maximum malformed row share per log file')
    parser.add_argument('--workers', type=int, help='Worker threads for per-market work')
    parser.add_argument('--deterministic', action='store_true', default=None,
                        help='Omit creation timestamps so outputs are byte-identical across runs')
