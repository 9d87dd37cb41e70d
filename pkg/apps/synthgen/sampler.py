"""
Seeded exposure sampler
"""
import logging
from datetime import date
from typing import List, Optional

import numpy as np
import pandas as pd

from apps.ingest.buckets import SEASON_CODES, SECTIONS, TIME_CODES, BucketMaps
from apps.ingest.exposures import ExposureRecord
from apps.networks.railbreak import RiskModel
from core.exceptions import SamplingError

logger = logging.getLogger(__name__)

DEFAULT_PERIOD = (date(2015, 1, 1), date(2015, 12, 31))


def sample_exposures(model: RiskModel, n: int, seed: int,
                     period_start: date = DEFAULT_PERIOD[0], period_end: date = DEFAULT_PERIOD[1],
                     maps: Optional[BucketMaps] = None) -> List[ExposureRecord]:
    """
    Draw n independent exposures from a model

    (S, T, L) come from the model's cause distribution and the break flag from
    p(R | S, T, L). The timestamp is uniform over the days of the drawn season
    inside the period and the hours of the drawn time bucket.

    Args:
        model: Model to sample from
        n: Number of exposures, a positive integer
        seed: Seed for numpy's default generator; equal seeds give equal streams
        period_start: First day of the sampling period
        period_end: Last day of the sampling period (inclusive)
        maps: Bucket maps used to place timestamps, the defaults if omitted

    Returns:
        Records with train ids SYN0000001, SYN0000002, ...
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n <= 0:
        raise SamplingError(f"Number of exposures must be a positive integer, got {n!r}")
    if period_end < period_start:
        raise SamplingError(f"Empty sampling period: {period_start} to {period_end}")
    maps = maps or BucketMaps.default()
    rng = np.random.default_rng(seed)

    joint = model.joint().values
    causes = joint.sum(axis=3)
    cell_mass = causes.ravel()
    break_given_cell = np.divide(joint[..., 1].ravel(), cell_mass, out=np.zeros_like(cell_mass), where=cell_mass > 0)

    days = pd.date_range(period_start, period_end, freq='D')
    day_seasons = np.array([SEASON_CODES.index(maps.months[m - 1]) for m in days.month])
    season_days = [days[day_seasons == s] for s in range(len(SEASON_CODES))]
    bucket_hours = [np.array([h for h, code in enumerate(maps.hours) if code == t]) for t in TIME_CODES]
    for s, mass in enumerate(causes.sum(axis=(1, 2))):
        if mass > 0 and len(season_days[s]) == 0:
            raise SamplingError(f"Season {SEASON_CODES[s]} has probability {mass:.4g} but no day in the period")

    cells = rng.choice(cell_mass.size, size=n, p=cell_mass / cell_mass.sum())
    broke = rng.random(n) < break_given_cell[cells]
    season, time, location = np.unravel_index(cells, causes.shape)

    day_offset = np.zeros(n, dtype='timedelta64[s]')
    start_day = np.empty(n, dtype='datetime64[s]')
    for s in range(len(SEASON_CODES)):
        chosen = season == s
        if chosen.any():
            picks = rng.integers(0, len(season_days[s]), size=int(chosen.sum()))
            start_day[chosen] = season_days[s].values[picks].astype('datetime64[s]')
    for t in range(len(TIME_CODES)):
        chosen = time == t
        if chosen.any():
            hours = bucket_hours[t][rng.integers(0, len(bucket_hours[t]), size=int(chosen.sum()))]
            day_offset[chosen] = (hours * 3600).astype('timedelta64[s]')
    day_offset += rng.integers(0, 3600, size=n).astype('timedelta64[s]')
    timestamps = pd.to_datetime(start_day + day_offset).to_pydatetime()

    records = [
        ExposureRecord(f"SYN{i + 1:07d}", timestamps[i], SECTIONS[location[i]], bool(broke[i]))
        for i in range(n)
    ]
    logger.info(f"Sampled {n} exposures with seed {seed}: {int(broke.sum())} breaks")
    return records
