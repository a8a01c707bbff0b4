"""Listening-event ingestion: delimited logs -> per-(track, year) play counts.

Events are (user_id, track_id, timestamp) rows; timestamps are epoch seconds
or ISO-8601, interpreted in UTC. Only events inside the configured calendar
window count; malformed and out-of-window rows are tallied, never fatal.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from ..exceptions import ConfigError, MissingInputError

DEFAULT_WINDOW: tuple[int, ...] = (2016, 2017, 2018, 2019, 2020)

_REQUIRED_COLUMNS = ("user_id", "track_id", "timestamp")


@dataclass(frozen=True)
class TrackYearStats:
    track_id: str
    year: int
    total_plays: int
    unique_listeners: int
    repeat_listeners: int
    median_plays_per_listener: float

    def __post_init__(self):
        if not (self.repeat_listeners <= self.unique_listeners <= self.total_plays):
            raise ValueError(
                f"inconsistent stats for {self.track_id}/{self.year}: "
                f"repeat {self.repeat_listeners} ≤ unique {self.unique_listeners} "
                f"≤ total {self.total_plays} violated"
            )


def zero_stats(track_id: str, year: int) -> TrackYearStats:
    return TrackYearStats(track_id, year, 0, 0, 0, 0.0)


@dataclass
class IngestResult:
    """Per-(track, year) user play counts plus ingestion tallies."""

    counts: dict[tuple[str, int], dict[str, int]] = field(default_factory=dict)
    n_events: int = 0
    n_malformed: int = 0
    n_out_of_window: int = 0


def parse_timestamp_year(raw: str) -> int:
    """Calendar year (UTC) of an epoch-seconds or ISO-8601 timestamp."""
    raw = raw.strip()
    try:
        epoch = float(raw)
    except ValueError:
        pass
    else:
        return datetime.fromtimestamp(epoch, tz=timezone.utc).year
    text = raw[:-1] + "+00:00" if raw.endswith("Z") else raw
    dt = datetime.fromisoformat(text)  # ValueError propagates to the caller
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).year


def read_event_rows(path: str | Path) -> Iterator[tuple[str, str, str]]:
    """Yield raw (user_id, track_id, timestamp) string triples from a CSV/TSV
    log with a header. Rows missing a required value yield empty strings in
    that position so the caller can tally them as malformed."""
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"event log not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline()
        if not first:
            return
        delim = "\t" if "\t" in first else ","
        header = [h.strip() for h in first.rstrip("\r\n").split(delim)]
        missing = [c for c in _REQUIRED_COLUMNS if c not in header]
        if missing:
            raise ConfigError(f"event log {path} lacks columns {missing}; header was {header}")
        idx = [header.index(c) for c in _REQUIRED_COLUMNS]
        for row in csv.reader(fh, delimiter=delim):
            if not row:
                continue
            vals = tuple(row[i].strip() if i < len(row) else "" for i in idx)
            yield vals  # type: ignore[misc]


def ingest_events(
    source: str | Path | Iterable[tuple[str, str, str]],
    window: Sequence[int] = DEFAULT_WINDOW,
) -> IngestResult:
    """Aggregate an event stream into per-(track, year) user play counts.

    `source` is a log file path or an iterable of raw string triples.
    A row is malformed if an id is empty or the timestamp does not parse;
    well-formed rows outside the window are counted separately and dropped.
    """
    years = frozenset(int(y) for y in window)
    rows = read_event_rows(source) if isinstance(source, (str, Path)) else source
    result = IngestResult()
    for user_id, track_id, raw_ts in rows:
        if not user_id or not track_id or not raw_ts:
            result.n_malformed += 1
            continue
        try:
            year = parse_timestamp_year(raw_ts)
        except (ValueError, OverflowError, OSError):
            result.n_malformed += 1
            continue
        if year not in years:
            result.n_out_of_window += 1
            continue
        per_user = result.counts.setdefault((track_id, year), {})
        per_user[user_id] = per_user.get(user_id, 0) + 1
        result.n_events += 1
    return result


def compute_track_year_stats(
    track_id: str, year: int, user_counts: Mapping[str, int]
) -> TrackYearStats:
    """Summarize one track-year's per-user play counts.

    Median over the per-user count multiset uses the interpolated convention
    (mean of the two middle values for even sizes), matching a plain
    sort-based recompute.
    """
    if not user_counts:
        return zero_stats(track_id, year)
    counts = list(user_counts.values())
    if any(c < 1 for c in counts):
        raise ValueError(f"play counts must be >= 1, got {min(counts)}")
    return TrackYearStats(
        track_id=track_id,
        year=year,
        total_plays=sum(counts),
        unique_listeners=len(counts),
        repeat_listeners=sum(1 for c in counts if c >= 2),
        median_plays_per_listener=float(np.median(counts)),
    )
