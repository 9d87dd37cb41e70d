"""
Build the (S, T, L, R) count table from break records and a train schedule.

Every section sees trains_per_day trains on every day of the period. Those
exposures are spread over the (season, time bucket) cells in proportion to each
cell's share of calendar hours, rounded with the largest-remainder rule so the
per-section total is exact. Breaks land in their bucketed cell and the rest of
the cell is counted as no-break exposures.
"""
import logging
from dataclasses import dataclass
from datetime import date, datetime
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from apps.networks.railbreak import LOCATION, SEASON, TIME_OF_DAY, CountTable
from core.exceptions import InconsistencyError, ScheduleError
from .buckets import SECTIONS, SEASON_CODES, TIME_CODES, BucketMaps, section_state
from .exposures import ExposureRecord, records_frame

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScheduleConfig:
    """Daily train estimate over an inclusive date period"""
    trains_per_day: float
    period_start: date
    period_end: date

    def __post_init__(self):
        try:
            trains = float(self.trains_per_day)
        except (TypeError, ValueError):
            raise ScheduleError(f"trains_per_day must be a number, got {self.trains_per_day!r}") from None
        if not np.isfinite(trains) or trains <= 0:
            raise ScheduleError(f"trains_per_day must be positive, got {self.trains_per_day}")
        object.__setattr__(self, 'trains_per_day', trains)
        if self.period_end < self.period_start:
            raise ScheduleError(f"Empty schedule period: {self.period_start} to {self.period_end}")

    @property
    def period_days(self) -> int:
        return (self.period_end - self.period_start).days + 1

    @property
    def exposures_per_section(self) -> int:
        return int(round(self.trains_per_day * self.period_days))

    def contains(self, moment: datetime) -> bool:
        day = moment.date() if isinstance(moment, datetime) else moment
        return self.period_start <= day <= self.period_end

    def to_dict(self) -> dict:
        return {
            'trains_per_day': self.trains_per_day,
            'period_start': self.period_start.isoformat(),
            'period_end': self.period_end.isoformat(),
        }


def estimate_trains_per_day(records: Iterable[ExposureRecord], period_start: date, period_end: date) -> float:
    """Average trains per day implied by a complete exposure log (one row per train and section)"""
    days = (period_end - period_start).days + 1
    if days <= 0:
        raise ScheduleError(f"Empty schedule period: {period_start} to {period_end}")
    inside = sum(1 for r in records if period_start <= r.timestamp.date() <= period_end)
    if inside == 0:
        raise ScheduleError('Cannot estimate trains per day: no exposures inside the period')
    estimate = inside / (len(SECTIONS) * days)
    logger.info(f"Estimated {estimate:.3f} trains per day from {inside} exposures over {days} days")
    return estimate


def season_days(schedule: ScheduleConfig, maps: BucketMaps) -> np.ndarray:
    """Number of days of each season inside the period"""
    days = pd.date_range(schedule.period_start, schedule.period_end, freq='D')
    season_index = np.array([SEASON_CODES.index(m) for m in maps.months])[np.asarray(days.month) - 1]
    return np.bincount(season_index, minlength=len(SEASON_CODES))


def calendar_hours(schedule: ScheduleConfig, maps: BucketMaps) -> np.ndarray:
    """Hours of each (season, time bucket) cell inside the period, shape 4x2"""
    bucket_hours = np.array([maps.hours.count(code) for code in TIME_CODES])
    return np.outer(season_days(schedule, maps), bucket_hours)


def _largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer apportionment of `total` proportional to `weights`; ties go to the lower index"""
    weights = np.asarray(weights, dtype=np.int64).ravel()
    denominator = int(weights.sum())
    # Exact integer split.
    scaled = weights * int(total)
    quotas = scaled // denominator
    remainders = scaled - quotas * denominator
    leftover = int(total) - int(quotas.sum())
    order = np.lexsort((np.arange(weights.size), -remainders))
    quotas[order[:leftover]] += 1
    return quotas


def build_counts(breaks: Iterable[ExposureRecord], schedule: ScheduleConfig,
                 maps: Optional[BucketMaps] = None) -> CountTable:
    """
    Count table for a break log under a train schedule

    Args:
        breaks: Exposure records; only those with broke=True are used
        schedule: Trains per day and the inclusive period they run over
        maps: Season and time-of-day maps, the defaults if omitted

    Returns:
        CountTable whose total is 3 * schedule.exposures_per_section

    Raises:
        ScheduleError: A break falls outside the period
        InconsistencyError: A cell has more breaks than exposures
    """
    maps = maps or BucketMaps.default()
    frame = records_frame(breaks)
    ignored = int((~frame['broke']).sum())
    if ignored:
        logger.info(f"Ignoring {ignored} no-break records; no-break exposures come from the schedule")
    frame = frame[frame['broke']]

    dates = frame['timestamp'].dt.date
    outside = (dates < schedule.period_start) | (dates > schedule.period_end)
    if outside.any():
        row = frame[outside].iloc[0]
        raise ScheduleError(
            f"Break of train {row['train_id']} at {row['timestamp']:%Y-%m-%dT%H:%M:%S} is outside "
            f"the schedule period {schedule.period_start} to {schedule.period_end}"
        )

    month_to_season = np.array([SEASON_CODES.index(code) for code in maps.months])
    hour_to_bucket = np.array([TIME_CODES.index(code) for code in maps.hours])
    season_index = month_to_season[frame['timestamp'].dt.month.to_numpy(dtype=np.int64) - 1]
    bucket_index = hour_to_bucket[frame['timestamp'].dt.hour.to_numpy(dtype=np.int64)]
    section_index = frame['section'].map(section_state).map(LOCATION.states.index).to_numpy(dtype=np.int64)

    break_counts = np.zeros((4, 2, 3), dtype=np.int64)
    np.add.at(break_counts, (season_index, bucket_index, section_index), 1)

    allocation = _largest_remainder(calendar_hours(schedule, maps), schedule.exposures_per_section).reshape(4, 2)
    exposures = np.repeat(allocation[:, :, np.newaxis], len(SECTIONS), axis=2)

    over = np.argwhere(break_counts > exposures)
    if len(over):
        s, t, l = (int(i) for i in over[0])
        cell = (SEASON.states[s], TIME_OF_DAY.states[t], LOCATION.states[l])
        raise InconsistencyError(
            f"{break_counts[s, t, l]} breaks exceed the {exposures[s, t, l]} exposures of cell "
            f"S={cell[0]}, T={cell[1]}, L={cell[2]}",
            cell=cell,
        )

    counts = np.stack([exposures - break_counts, break_counts], axis=-1)
    table = CountTable(counts)
    logger.info(
        f"Built count table: {table.total} exposures, {int(break_counts.sum())} breaks, "
        f"{schedule.period_days} days at {schedule.trains_per_day:g} trains per day"
    )
    return table
