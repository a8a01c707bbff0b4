"""Song- and artist-level engagement features over a multi-year window.

Song features summarize one track's yearly stats; artist features pool all
of an artist's tracks per year and summarize the level, trend, and stability
of the pooled series. Everything is a pure function of TrackYearStats, so
any component can be recomputed independently for verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..exceptions import ConfigError
from .events import DEFAULT_WINDOW, IngestResult, TrackYearStats, compute_track_year_stats, zero_stats


@dataclass(frozen=True)
class SongCTD:
    track_id: str
    years: tuple[int, ...]
    per_year: tuple[TrackYearStats, ...]  # one entry per window year, zero-filled
    total_plays: int
    unique_listeners: int
    repeat_listeners: int
    median_of_medians: float
    loyalty_rate: float
    repeat_ratio: float


@dataclass(frozen=True)
class ArtistCTD:
    artist_id: str
    loyalty_rate: float
    loyalty_growth_rate: float
    reach_growth_rate: float
    loyalty_consistency: float
    engagement_consistency: float


def compute_song_ctd(
    track_id: str,
    yearly: Mapping[int, TrackYearStats],
    years: Sequence[int] = DEFAULT_WINDOW,
) -> SongCTD:
    """Window aggregates and engagement ratios for one track.

    Missing years are zero-filled. loyalty_rate = window repeat / window
    unique; repeat_ratio = (total − unique) / total; both 0 on empty windows.
    """
    stats = tuple(yearly.get(y, zero_stats(track_id, y)) for y in years)
    total = sum(s.total_plays for s in stats)
    unique = sum(s.unique_listeners for s in stats)
    repeat = sum(s.repeat_listeners for s in stats)
    return SongCTD(
        track_id=track_id,
        years=tuple(int(y) for y in years),
        per_year=stats,
        total_plays=total,
        unique_listeners=unique,
        repeat_listeners=repeat,
        median_of_medians=float(np.median([s.median_plays_per_listener for s in stats])),
        loyalty_rate=repeat / unique if unique else 0.0,
        repeat_ratio=(total - unique) / total if total else 0.0,
    )


def _ols_slope(values: Sequence[float]) -> float:
    """Least-squares slope of values against their index 0..n-1."""
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    if n < 2:
        return 0.0
    idx = np.arange(n, dtype=np.float64)
    dx = idx - idx.mean()
    return float(np.sum(dx * (v - v.mean())) / np.sum(dx * dx))


def compute_artist_ctd(
    artist_id: str,
    track_yearly: Mapping[str, Mapping[int, TrackYearStats]],
    years: Sequence[int] = DEFAULT_WINDOW,
) -> ArtistCTD:
    """Pool an artist's tracks per year, then summarize the pooled series.

    Per year y over the artist's tracks:
      L_y = Σ repeat / Σ unique (0 when no listeners)  — pooled loyalty
      R_y = Σ unique                                    — pooled reach
      E_y = median of per-track median plays-per-listener over tracks with
            listeners that year (0 when none)           — pooled engagement

    Features: loyalty_rate = mean L_y over years with listeners;
    growth rates = OLS slopes of L_y and log(1+R_y) against year index over
    the whole window; consistencies = 1/(1+population stdev of the series).
    """
    if not track_yearly:
        raise ValueError(f"artist {artist_id!r} has no tracks")
    loyalty, reach, engagement = [], [], []
    for y in years:
        stats = [tr.get(y) for tr in track_yearly.values()]
        stats = [s for s in stats if s is not None]
        unique = sum(s.unique_listeners for s in stats)
        repeat = sum(s.repeat_listeners for s in stats)
        loyalty.append(repeat / unique if unique else 0.0)
        reach.append(float(unique))
        medians = [s.median_plays_per_listener for s in stats if s.unique_listeners > 0]
        engagement.append(float(np.median(medians)) if medians else 0.0)
    active = [l for l, r in zip(loyalty, reach) if r > 0]
    return ArtistCTD(
        artist_id=artist_id,
        loyalty_rate=float(np.mean(active)) if active else 0.0,
        loyalty_growth_rate=_ols_slope(loyalty),
        reach_growth_rate=_ols_slope(np.log1p(reach)),
        loyalty_consistency=1.0 / (1.0 + float(np.std(loyalty))),
        engagement_consistency=1.0 / (1.0 + float(np.std(engagement))),
    )


# ---------------------------------------------------------------------------
# feature vectors


_AGG_SONG = ("song_total_plays", "song_unique_listeners", "song_repeat_listeners", "song_median_plays")
_AGG_RATIOS = ("song_loyalty_rate", "song_repeat_ratio")
_AGG_ARTIST = (
    "artist_loyalty_rate",
    "artist_loyalty_growth",
    "artist_reach_growth",
    "artist_loyalty_consistency",
    "artist_engagement_consistency",
)
_YEARLY_METRICS = ("total_plays", "unique_listeners", "repeat_listeners", "median_plays")


@dataclass(frozen=True)
class CTDSchema:
    mode: str  # "aggregate" | "temporal"
    years: tuple[int, ...]
    names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.names)

    def to_json(self) -> dict:
        return {"mode": self.mode, "window_years": list(self.years), "feature_names": list(self.names)}

    @staticmethod
    def from_json(d: dict) -> "CTDSchema":
        return CTDSchema(d["mode"], tuple(d["window_years"]), tuple(d["feature_names"]))


def default_schema(mode: str, years: Sequence[int] = DEFAULT_WINDOW) -> CTDSchema:
    """11 aggregate features; temporal mode appends 4 yearly metrics per year."""
    if mode not in ("aggregate", "temporal"):
        raise ConfigError(f"CTD mode must be 'aggregate' or 'temporal', got {mode!r}")
    names = list(_AGG_SONG + _AGG_RATIOS + _AGG_ARTIST)
    if mode == "temporal":
        for y in years:
            names.extend(f"y{y}_{m}" for m in _YEARLY_METRICS)
    return CTDSchema(mode=mode, years=tuple(int(y) for y in years), names=tuple(names))


def assemble_ctd_vector(song: SongCTD, artist: ArtistCTD, schema: CTDSchema, mode: str) -> np.ndarray:
    """Lay out song + artist features per the schema. Errors on mode mismatch."""
    if mode != schema.mode:
        raise ConfigError(f"requested mode {mode!r} but schema is {schema.mode!r}")
    if song.years != schema.years:
        raise ConfigError(f"song window {song.years} does not match schema {schema.years}")
    values = [
        float(song.total_plays),
        float(song.unique_listeners),
        float(song.repeat_listeners),
        song.median_of_medians,
        song.loyalty_rate,
        song.repeat_ratio,
        artist.loyalty_rate,
        artist.loyalty_growth_rate,
        artist.reach_growth_rate,
        artist.loyalty_consistency,
        artist.engagement_consistency,
    ]
    if schema.mode == "temporal":
        for s in song.per_year:
            values.extend(
                (
                    float(s.total_plays),
                    float(s.unique_listeners),
                    float(s.repeat_listeners),
                    s.median_plays_per_listener,
                )
            )
    vec = np.asarray(values, dtype=np.float64)
    if vec.size != len(schema):
        raise ConfigError(f"assembled {vec.size} values for a {len(schema)}-feature schema")
    return vec


def build_ctd_dataset(
    ingest: IngestResult,
    track_artist: Mapping[str, str],
    mode: str,
    years: Sequence[int] = DEFAULT_WINDOW,
) -> tuple[list[str], np.ndarray, CTDSchema]:
    """Feature matrix for every track that has events and a known artist.

    Artist features pool only tracks present in the event log. Rows are
    ordered by track_id for determinism.
    """
    schema = default_schema(mode, years)
    yearly: dict[str, dict[int, TrackYearStats]] = {}
    for (track_id, year), user_counts in ingest.counts.items():
        yearly.setdefault(track_id, {})[year] = compute_track_year_stats(track_id, year, user_counts)
    track_ids = sorted(t for t in yearly if t in track_artist)
    by_artist: dict[str, dict[str, dict[int, TrackYearStats]]] = {}
    for t in track_ids:
        by_artist.setdefault(track_artist[t], {})[t] = yearly[t]
    artist_ctd = {a: compute_artist_ctd(a, tracks, years) for a, tracks in by_artist.items()}
    rows = [
        assemble_ctd_vector(compute_song_ctd(t, yearly[t], years), artist_ctd[track_artist[t]], schema, mode)
        for t in track_ids
    ]
    matrix = np.vstack(rows) if rows else np.zeros((0, len(schema)))
    return track_ids, matrix, schema
