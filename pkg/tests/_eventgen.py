"""Random listening-log generator with known ground truth, for oracle tests."""

from __future__ import annotations

import csv
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

WINDOW = (2016, 2017, 2018, 2019, 2020)


def render_timestamp(rng: np.random.Generator, year: int) -> str:
    dt = datetime(
        year,
        int(rng.integers(1, 13)),
        int(rng.integers(1, 29)),
        int(rng.integers(0, 24)),
        int(rng.integers(0, 60)),
        int(rng.integers(0, 60)),
        tzinfo=timezone.utc,
    )
    style = int(rng.integers(0, 4))
    if style == 0:
        return str(int(dt.timestamp()))
    if style == 1:
        return f"{dt.timestamp():.1f}"
    if style == 2:
        return dt.strftime("%Y-%m-%dT%H:%M:%SZ")
    return dt.strftime("%Y-%m-%d %H:%M:%S")  # naive, interpreted as UTC


def random_event_log(
    rng: np.random.Generator,
    n_events: int,
    n_tracks: int = 20,
    n_users: int = 60,
    window=WINDOW,
    out_of_window_frac: float = 0.05,
    malformed_frac: float = 0.03,
):
    """Returns (raw rows, truth events, n_malformed, n_out_of_window).

    Raw rows are (user_id, track_id, timestamp-string) triples; truth events
    are (user_id, track_id, year) for the well-formed rows only.
    """
    rows: list[tuple[str, str, str]] = []
    truth: list[tuple[str, str, int]] = []
    n_malformed = 0
    n_out = 0
    outside_years = (min(window) - 3, min(window) - 1, max(window) + 1)
    for _ in range(n_events):
        user = f"u{rng.integers(n_users)}"
        track = f"t{rng.integers(n_tracks)}"
        roll = rng.random()
        if roll < malformed_frac:
            kind = int(rng.integers(0, 3))
            bad = [(user, track, "not-a-time"), ("", track, "123456"), (user, "", "123456")][kind]
            rows.append(bad)
            n_malformed += 1
        elif roll < malformed_frac + out_of_window_frac:
            year = int(rng.choice(outside_years))
            rows.append((user, track, render_timestamp(rng, year)))
            n_out += 1
        else:
            year = int(rng.choice(window))
            rows.append((user, track, render_timestamp(rng, year)))
            truth.append((user, track, year))
    return rows, truth, n_malformed, n_out


def write_log_file(path: Path, rows, delimiter: str = ",") -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow(["user_id", "track_id", "timestamp"])
        w.writerows(rows)
    return path


def random_track_artist(rng: np.random.Generator, n_tracks: int, n_artists: int = 6):
    return {f"t{i}": f"a{rng.integers(n_artists)}" for i in range(n_tracks)}
