"""
Search-log ingestion: parsing, windowing, deduplication and market partitioning.

A search log is a CSV file with the header ``user_id,destination,market,timestamp``
or a JSONL file with one object per line using the same field names. Timestamps
are ISO-8601 UTC instants (``YYYY-MM-DDThh:mm:ssZ``).
"""
from __future__ import annotations

import csv
import io
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from pathlib import Path
from typing import BinaryIO, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .exceptions import LogFormatError
from .utils import ensure_utc, format_utc, parse_utc

logger = logging.getLogger(__name__)

FIELDS = ('user_id', 'destination', 'market', 'timestamp')
FORMATS = ('csv', 'jsonl')


@dataclass(frozen=True)
class SearchRecord:
    user_id: str
    destination: str
    market: str
    timestamp: datetime

    @classmethod
    def from_fields(cls, row: Dict[str, object]) -> 'SearchRecord':
        """
        Build a record from raw field values, normalizing as the log format requires.

        Destination and market codes are trimmed and uppercased so that "par" and
        "PAR" land in the same matrix column.

        Raises:
            ValueError: on a missing/blank field or an unparseable timestamp.
        """
        values = {}
        for name in FIELDS:
            raw = row.get(name)
            if raw is None or not isinstance(raw, str) or not raw.strip():
                raise ValueError(f"missing field '{name}'")
            values[name] = raw.strip()
        return cls(
            user_id=values['user_id'],
            destination=values['destination'].upper(),
            market=values['market'].upper(),
            timestamp=parse_utc(values['timestamp']),
        )

    def as_row(self) -> Dict[str, str]:
        return {
            'user_id': self.user_id,
            'destination': self.destination,
            'market': self.market,
            'timestamp': format_utc(self.timestamp),
        }


@dataclass(frozen=True)
class TimeRange:
    """Half-open [start, end) interval of UTC instants."""
    start: datetime
    end: datetime

    def __post_init__(self):
        object.__setattr__(self, 'start', ensure_utc(self.start))
        object.__setattr__(self, 'end', ensure_utc(self.end))
        if self.start >= self.end:
            raise ValueError(f'Window start {format_utc(self.start)} must precede end {format_utc(self.end)}')

    def __contains__(self, moment: datetime) -> bool:
        return self.start <= moment < self.end

    def __str__(self) -> str:
        return f'[{format_utc(self.start)}, {format_utc(self.end)})'

    def to_dict(self) -> Dict[str, str]:
        return {'start': format_utc(self.start), 'end': format_utc(self.end)}

    @classmethod
    def from_dict(cls, payload: Dict[str, str]) -> 'TimeRange':
        return cls(parse_utc(payload['start']), parse_utc(payload['end']))


@dataclass(frozen=True)
class WindowSpec:
    """Training window followed by a test window, both half-open [start, end)."""
    train_start: datetime
    train_end: datetime
    test_start: datetime
    test_end: datetime

    def __post_init__(self):
        for name in ('train_start', 'train_end', 'test_start', 'test_end'):
            object.__setattr__(self, name, ensure_utc(getattr(self, name)))
        if not (self.train_start < self.train_end <= self.test_start < self.test_end):
            raise ValueError(
                'Window must satisfy train_start < train_end <= test_start < test_end'
            )

    @property
    def train(self) -> TimeRange:
        return TimeRange(self.train_start, self.train_end)

    @property
    def test(self) -> TimeRange:
        return TimeRange(self.test_start, self.test_end)

    @property
    def test_length(self) -> timedelta:
        return self.test_end - self.test_start

    def shifted(self, delta: timedelta) -> 'WindowSpec':
        return WindowSpec(
            self.train_start + delta,
            self.train_end + delta,
            self.test_start + delta,
            self.test_end + delta,
        )

    def with_train_length(self, length: timedelta) -> 'WindowSpec':
        return replace(self, train_start=self.train_end - length)

    @property
    def label(self) -> str:
        fmt = '%Y%m%dT%H%M%S'
        return '_'.join(moment.strftime(fmt) for moment in (self.train_start, self.train_end, self.test_start, self.test_end))

    def to_dict(self) -> Dict[str, str]:
        return {
            'train_start': format_utc(self.train_start),
            'train_end': format_utc(self.train_end),
            'test_start': format_utc(self.test_start),
            'test_end': format_utc(self.test_end),
        }


@dataclass
class ParsedLog:
    records: List[SearchRecord] = field(default_factory=list)
    malformed: int = 0
    malformed_lines: List[int] = field(default_factory=list)
    rows: int = 0

    def __iter__(self) -> Iterator[SearchRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


def _csv_rows(text: io.TextIOBase) -> Iterator[Tuple[int, Optional[Dict[str, object]]]]:
    reader = csv.reader(text)
    header = next(reader, None)
    if header is None:
        raise LogFormatError('CSV log has no header row', line_number=1)
    header = [name.strip() for name in header]
    missing = [name for name in FIELDS if name not in header]
    if missing:
        raise LogFormatError(f"CSV header is missing {', '.join(missing)}", line_number=1)
    for row in reader:
        if not row:
            continue
        if len(row) != len(header):
            yield reader.line_num, None
            continue
        yield reader.line_num, dict(zip(header, row))


def _jsonl_rows(text: io.TextIOBase) -> Iterator[Tuple[int, Optional[Dict[str, object]]]]:
    for line_number, line in enumerate(text, start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError:
            yield line_number, None
            continue
        yield line_number, payload if isinstance(payload, dict) else None


def parse_log(source: BinaryIO, format: str = 'csv', malformed_threshold: float = 0.5) -> ParsedLog:
    """
    Parse a UTF-8 search log into records, in file order.

    Malformed rows (wrong arity, blank fields, bad timestamps, invalid JSON) are
    excluded and counted. When the malformed share of data rows exceeds
    ``malformed_threshold`` the whole file is rejected.

    Args:
        source: binary stream positioned at the start of the log
        format: 'csv' or 'jsonl'
        malformed_threshold: maximum tolerated malformed fraction

    Returns:
        ParsedLog with the records and the malformed row accounting.

    Raises:
        LogFormatError: invalid UTF-8, missing header or too many malformed rows
        OSError: the stream cannot be read
    """
    if format not in FORMATS:
        raise ValueError(f"Unsupported log format '{format}', expected one of {FORMATS}")

    text = io.TextIOWrapper(source, encoding='utf-8', newline='')
    rows = _csv_rows(text) if format == 'csv' else _jsonl_rows(text)
    parsed = ParsedLog()
    try:
        for line_number, row in rows:
            parsed.rows += 1
            try:
                if row is None:
                    raise ValueError('unparseable row')
                parsed.records.append(SearchRecord.from_fields(row))
            except ValueError:
                parsed.malformed += 1
                parsed.malformed_lines.append(line_number)
    except UnicodeDecodeError as exc:
        raise LogFormatError(f'Search log is not valid UTF-8: {exc}') from exc
    finally:
        text.detach()

    if parsed.malformed:
        logger.warning(
            'Skipped %d malformed of %d rows (first at line %d)',
            parsed.malformed, parsed.rows, parsed.malformed_lines[0],
        )
        if parsed.malformed / parsed.rows > malformed_threshold:
            raise LogFormatError(
                f'{parsed.malformed} of {parsed.rows} rows are malformed',
                line_number=parsed.malformed_lines[0],
            )
    return parsed


def write_log(records: Iterable[SearchRecord], target: BinaryIO, format: str = 'csv') -> int:
    """Serialize records in the ingest format. Returns the number written."""
    if format not in FORMATS:
        raise ValueError(f"Unsupported log format '{format}', expected one of {FORMATS}")

    text = io.TextIOWrapper(target, encoding='utf-8', newline='')
    count = 0
    try:
        if format == 'csv':
            writer = csv.DictWriter(text, fieldnames=FIELDS, lineterminator='\n')
            writer.writeheader()
            for record in records:
                writer.writerow(record.as_row())
                count += 1
        else:
            for record in records:
                text.write(json.dumps(record.as_row()) + '\n')
                count += 1
        text.flush()
    finally:
        text.detach()
    return count


def log_format_for(path: Path, default: str = 'csv') -> str:
    suffix = Path(path).suffix.lower()
    if suffix in ('.jsonl', '.ndjson'):
        return 'jsonl'
    if suffix == '.csv':
        return 'csv'
    return default


def read_log_file(path: Path, format: Optional[str] = None, malformed_threshold: float = 0.5) -> ParsedLog:
    with open(path, 'rb') as handle:
        return parse_log(handle, format or log_format_for(path), malformed_threshold)


def write_log_file(records: Iterable[SearchRecord], path: Path, format: Optional[str] = None) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as handle:
        return write_log(records, handle, format or log_format_for(path))


def partition_by_market(records: Iterable[SearchRecord]) -> Dict[str, List[SearchRecord]]:
    """Group records by market, preserving record order within each market."""
    partitions: Dict[str, List[SearchRecord]] = defaultdict(list)
    for record in records:
        partitions[record.market].append(record)
    return dict(sorted(partitions.items()))


def filter_markets(records: Iterable[SearchRecord], markets: Sequence[str]) -> List[SearchRecord]:
    wanted = {market.strip().upper() for market in markets}
    return [record for record in records if record.market in wanted]


def filter_window(records: Iterable[SearchRecord], start: datetime, end: datetime) -> List[SearchRecord]:
    """Keep records with start <= timestamp < end, in order."""
    window = TimeRange(start, end)
    return [record for record in records if record.timestamp in window]


def dedupe(records: Sequence[SearchRecord]) -> List[SearchRecord]:
    """
    Keep one record per (user, destination): the earliest, first occurrence on ties.
    Surviving records keep their relative input order.
    """
    earliest: Dict[Tuple[str, str], Tuple[datetime, int]] = {}
    for position, record in enumerate(records):
        key = (record.user_id, record.destination)
        best = earliest.get(key)
        if best is None or record.timestamp < best[0]:
            earliest[key] = (record.timestamp, position)
    keep = sorted(position for _, position in earliest.values())
    return [records[position] for position in keep]
