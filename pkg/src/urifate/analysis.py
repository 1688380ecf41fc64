"""Contingency statistics, temporal centroids, and the linear decay models.

The endgame of an audit: cross liveness and archival verdicts into a 2x2
table per event, anchor each event's resources to the peak dates of its
sharing activity, and fit percent-missing (and percent-archived) against
resource age in days.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from datetime import date, datetime, time, timezone
from typing import Iterable, Mapping, TextIO

import numpy as np

from .posts import Corpus

logger = logging.getLogger(__name__)

DEFAULT_MIN_SEPARATION_DAYS = 14


class CoverageMismatchError(ValueError):
    """Liveness and archival inputs do not cover the same URI set."""

    def __init__(self, only_live: set[str], only_archive: set[str]):
        self.only_live = only_live
        self.only_archive = only_archive
        parts = []
        if only_live:
            parts.append("only in liveness: %s" % ", ".join(sorted(only_live)[:10]))
        if only_archive:
            parts.append("only in archive: %s" % ", ".join(sorted(only_archive)[:10]))
        super().__init__("input URI sets differ (%s)" % "; ".join(parts))


class DegenerateFitError(ValueError):
    """Cannot fit a line: fewer than two distinct ages."""


@dataclass(frozen=True)
class EventStats:
    """Per-event counts: extracted total, unique after alias collapse, and
    the 2x2 archived-by-available cells over the unique resources."""

    event: str
    all_count: int
    unique: int
    archived_available: int
    archived_missing: int
    unarchived_available: int
    unarchived_missing: int

    def __post_init__(self):
        cells = (self.archived_available + self.archived_missing
                 + self.unarchived_available + self.unarchived_missing)
        if cells != self.unique:
            raise ValueError(
                "cells sum to %d but unique is %d for %r"
                % (cells, self.unique, self.event))

    @property
    def missing_total(self) -> int:
        return self.archived_missing + self.unarchived_missing

    @property
    def available_total(self) -> int:
        return self.archived_available + self.unarchived_available

    @property
    def archived_total(self) -> int:
        return self.archived_available + self.archived_missing

    @property
    def unarchived_total(self) -> int:
        return self.unarchived_available + self.unarchived_missing

    def pct(self, count: int) -> float:
        """Percentage of the unique resources."""
        if self.unique == 0:
            return 0.0
        return 100.0 * count / self.unique

    @property
    def unique_pct(self) -> float:
        if self.all_count == 0:
            return 0.0
        return 100.0 * self.unique / self.all_count


def contingency(
    event: str,
    verdicts: Mapping[str, object],
    archived_flags: Mapping[str, object],
    all_count: int | None = None,
) -> EventStats:
    """Cross per-URI liveness verdicts with archived flags.

    Both mappings must cover exactly the same URIs; a mismatch is a
    pipeline bug and raises listing the difference. Verdict values may be
    LivenessVerdict objects or plain 'available'/'missing' strings;
    archived values may be ArchiveVerdict objects or booleans.
    """
    live_uris = set(verdicts)
    arch_uris = set(archived_flags)
    if live_uris != arch_uris:
        raise CoverageMismatchError(live_uris - arch_uris, arch_uris - live_uris)
    cells = {(True, True): 0, (True, False): 0, (False, True): 0, (False, False): 0}
    for uri in live_uris:
        verdict = verdicts[uri]
        status = getattr(verdict, "status", verdict)
        available = status == "available"
        flag = archived_flags[uri]
        archived = bool(getattr(flag, "archived", flag))
        cells[(archived, available)] += 1
    unique = len(live_uris)
    return EventStats(
        event=event,
        all_count=unique if all_count is None else all_count,
        unique=unique,
        archived_available=cells[(True, True)],
        archived_missing=cells[(True, False)],
        unarchived_available=cells[(False, True)],
        unarchived_missing=cells[(False, False)],
    )


def daily_counts(corpus: Corpus) -> dict[date, int]:
    """URI-bearing posts per UTC calendar day; days with none are absent."""
    counts: dict[date, int] = {}
    for post in corpus.posts:
        if not post.uris:
            continue
        day = post.created_at.astimezone(timezone.utc).date()
        counts[day] = counts.get(day, 0) + 1
    return counts


def detect_centroids(
    daily: Mapping[date, int],
    max_centroids: int = 2,
    min_separation_days: int = DEFAULT_MIN_SEPARATION_DAYS,
) -> list[date]:
    """Pick the 1 or 2 peak days of a daily share series.

    Candidates are local maxima of the series with absent days counted as
    zero; the highest wins, then the highest remaining one at least
    ``min_separation_days`` away. Equal counts tie toward the earlier day.
    Returned in chronological order.
    """
    if not daily:
        raise ValueError("daily counts are empty")
    if max_centroids not in (1, 2):
        raise ValueError("max_centroids must be 1 or 2, got %r" % max_centroids)

    def count_at(d: date) -> int:
        return daily.get(d, 0)

    candidates = []
    for day, count in daily.items():
        prev_day = date.fromordinal(day.toordinal() - 1)
        next_day = date.fromordinal(day.toordinal() + 1)
        if count >= count_at(prev_day) and count >= count_at(next_day):
            candidates.append(day)
    candidates.sort(key=lambda d: (-daily[d], d))

    picked: list[date] = [candidates[0]]
    if max_centroids == 2:
        for day in candidates[1:]:
            if abs((day - picked[0]).days) >= min_separation_days:
                picked.append(day)
                break
    return sorted(picked)


def nearest_centroid(when: datetime, centroids: list[date]) -> int:
    """Index of the temporally nearest centroid; exact ties go earlier."""
    anchors = [datetime.combine(c, time(0), tzinfo=timezone.utc) for c in centroids]
    best = 0
    best_gap = abs(when - anchors[0])
    for i, anchor in enumerate(anchors[1:], start=1):
        gap = abs(when - anchor)
        if gap < best_gap:
            best, best_gap = i, gap
    return best


@dataclass
class CentroidSplit:
    """Resources partitioned by nearest centroid.

    ``assignment`` keys are the URI strings as shared; a URI shared more
    than once follows its earliest share.
    """

    event: str
    centroids: list[date]
    assignment: dict[str, int] = field(default_factory=dict)
    per_centroid: list[EventStats] | None = None


def split_by_centroid(corpus: Corpus, centroids: list[date],
                      event: str = "") -> CentroidSplit:
    if not 1 <= len(centroids) <= 2:
        raise ValueError("expected 1 or 2 centroids, got %d" % len(centroids))
    ordered = sorted(centroids)
    first_seen: dict[str, datetime] = {}
    for post in corpus.posts:
        for uri in post.uris:
            seen = first_seen.get(uri)
            if seen is None or post.created_at < seen:
                first_seen[uri] = post.created_at
    assignment = {
        uri: nearest_centroid(when, ordered) for uri, when in first_seen.items()
    }
    return CentroidSplit(event=event or corpus.source_label,
                         centroids=ordered, assignment=assignment)


@dataclass
class LinearModel:
    """Ordinary least squares fit of percent against age in days."""

    slope: float
    intercept: float
    r_squared: float
    points: list[tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "points": [[x, y] for x, y in self.points],
        }


def fit_linear(points: Iterable[tuple[float, float]]) -> LinearModel:
    """Least-squares line through (age_days, percent) points.

    Needs at least two points with two distinct ages; anything flatter is
    a DegenerateFitError rather than a garbage slope.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 2:
        raise DegenerateFitError("need at least 2 points, got %d" % len(pts))
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if np.all(xs == xs[0]):
        raise DegenerateFitError("all ages equal (%g); slope is undefined" % xs[0])
    design = np.column_stack([xs, np.ones_like(xs)])
    (slope, intercept), *_ = np.linalg.lstsq(design, ys, rcond=None)
    residuals = ys - (slope * xs + intercept)
    ss_res = float(np.sum(residuals ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    r_squared = min(1.0, max(0.0, r_squared))
    return LinearModel(slope=float(slope), intercept=float(intercept),
                       r_squared=r_squared, points=pts)


def predict(model: LinearModel, age_days: float) -> float:
    """Modeled percent at a given age, clamped into [0, 100]."""
    if age_days < 0:
        raise ValueError("age_days must be >= 0, got %r" % age_days)
    value = model.slope * age_days + model.intercept
    return min(100.0, max(0.0, value))


def age_in_days(centroid: date, audit_date: date) -> int:
    return (audit_date - centroid).days


# ---------------------------------------------------------------------------
# Plot-ready file emitters
# ---------------------------------------------------------------------------

def write_events_csv(stats: Iterable[EventStats], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([
        "event", "all", "unique", "unique_pct",
        "archived_available", "archived_available_pct",
        "unarchived_available", "unarchived_available_pct",
        "archived_missing", "archived_missing_pct",
        "unarchived_missing", "unarchived_missing_pct",
        "missing_total", "missing_pct", "archived_total", "archived_pct",
    ])
    for s in stats:
        writer.writerow([
            s.event, s.all_count, s.unique, "%.2f" % s.unique_pct,
            s.archived_available, "%.2f" % s.pct(s.archived_available),
            s.unarchived_available, "%.2f" % s.pct(s.unarchived_available),
            s.archived_missing, "%.2f" % s.pct(s.archived_missing),
            s.unarchived_missing, "%.2f" % s.pct(s.unarchived_missing),
            s.missing_total, "%.2f" % s.pct(s.missing_total),
            s.archived_total, "%.2f" % s.pct(s.archived_total),
        ])


def write_split_csv(rows: Iterable[dict], stream: TextIO) -> None:
    """Rows: event, centroid_index, centroid_date, age_days, unique,
    missing_pct, archived_pct."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["event", "centroid_index", "centroid_date", "age_days",
                     "unique", "missing_pct", "archived_pct"])
    for row in rows:
        writer.writerow([
            row["event"], row["centroid_index"], row["centroid_date"].isoformat(),
            row["age_days"], row["unique"],
            "%.2f" % row["missing_pct"], "%.2f" % row["archived_pct"],
        ])


def write_series_csv(daily: Mapping[date, int], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["date", "count"])
    for day in sorted(daily):
        writer.writerow([day.isoformat(), daily[day]])


def write_model_json(models: dict[str, LinearModel | None], audit_date: date,
                     stream: TextIO) -> None:
    payload: dict = {"audit_date": audit_date.isoformat()}
    for name, model in models.items():
        payload[name] = model.to_dict() if model is not None else None
    json.dump(payload, stream, indent=2, sort_keys=True)
    stream.write("\n")
