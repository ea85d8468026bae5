from destinations.ingest import write_log_file
from destinations.management.base import DestinationsCommand
from destinations.serializers import SynthConfigSerializer
from destinations.synth import generate_markets


class Command(DestinationsCommand):
    help = 'Generate a synthetic search log with planted interest clusters.'
    serializer_class = SynthConfigSerializer

    def add_options(self, parser):
        parser.add_argument('--out', help='Output log path (.csv or .jsonl)')
        parser.add_argument('--format', choices=('csv', 'jsonl'), help='Log format (default: from file suffix)')
        parser.add_argument('--users', type=int, help='Users per market')
        parser.add_argument('--destinations', type=int, help='Number of destinations')
        parser.add_argument('--clusters', type=int, help='Number of interest clusters')
        parser.add_argument('--zipf', type=float, help='Zipf exponent of destination popularity')
        parser.add_argument('--searches', help='Distinct searches per user as lo,hi')
        parser.add_argument('--noise', type=float, help='Probability a search ignores the user cluster')
        parser.add_argument('--seed', type=int, help='Random seed (64-bit unsigned)')
        parser.add_argument('--market', help='Comma separated markets, one log section each')
        parser.add_argument('--start', help='Time range start, ISO-8601 UTC')
        parser.add_argument('--end', help='Time range end (exclusive)')

    def run(self, opts):
        records = generate_markets(opts['config'], opts['market'])
        count = write_log_file(records, opts['out'], opts['format'])
        self.stdout.write(f"Wrote {count} search records to {opts['out']}")
