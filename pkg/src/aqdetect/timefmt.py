"""UTC timestamp helpers.

All timestamps in this package are integer epoch seconds (UTC). Datetimes
only appear at the edges: CSV files, the HTTP API, and event records, always
ISO-8601 with an explicit offset (``Z`` preferred).
"""

from __future__ import annotations

from datetime import datetime, timezone


def parse_iso(text: str) -> int:
    """Parse an ISO-8601 timestamp to epoch seconds. Naive input is taken as UTC."""
    raw = text.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_iso(epoch: int) -> str:
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def utc_datetime(epoch: int) -> datetime:
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc)
