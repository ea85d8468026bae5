from __future__ import annotations

import hashlib
from datetime import datetime, timezone
from typing import Iterable, List

from django.utils.dateparse import parse_datetime

UTC_FORMAT = '%Y-%m-%dT%H:%M:%SZ'


def parse_utc(value: str) -> datetime:
    """
    Parse an ISO-8601 instant into an aware UTC datetime at second resolution.

    Accepts the log format ``YYYY-MM-DDThh:mm:ssZ`` as well as explicit
    offsets (converted to UTC) and naive values (read as UTC).

    Raises:
        ValueError: if the value is not an ISO-8601 instant.
    """
    parsed = parse_datetime(value.strip())
    if parsed is None:
        raise ValueError(f"'{value}' is not an ISO-8601 instant")
    return ensure_utc(parsed).replace(microsecond=0)


def ensure_utc(value: datetime) -> datetime:
    if value.tzinfo is None:
        return value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


def format_utc(value: datetime) -> str:
    return ensure_utc(value).strftime(UTC_FORMAT)


def stable_hash(text: str) -> int:
    """64-bit hash of a string that does not change between processes."""
    digest = hashlib.blake2b(text.encode('utf-8'), digest_size=8).digest()
    return int.from_bytes(digest, 'big')


def split_list(value: Iterable[str] | str) -> List[str]:
    """Split a comma separated flag value, dropping blanks."""
    if isinstance(value, str):
        value = value.split(',')
    return [item.strip() for item in value if item and item.strip()]
