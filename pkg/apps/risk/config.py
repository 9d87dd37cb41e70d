"""
Domain configuration: bucket maps, schedule and fitting options from one key-value file
"""
import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Optional, Sequence, Union

from django.conf import settings
from dotenv import dotenv_values

from apps.ingest.buckets import BucketMaps
from apps.ingest.counts import ScheduleConfig, estimate_trains_per_day
from apps.ingest.exposures import ExposureRecord
from core.exceptions import ConfigError
from .serializers import RiskConfigSerializer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RiskConfig:
    maps: BucketMaps
    trains_per_day: Optional[float]  # None estimates it from the exposure log
    period_start: Optional[date]
    period_end: Optional[date]
    alpha: float
    fit_mode: str
    source: str = ''

    def period(self, records: Sequence[ExposureRecord] = ()):
        """Configured period, or the span of the records' calendar dates"""
        start, end = self.period_start, self.period_end
        if start is None or end is None:
            if not records:
                raise ConfigError('PERIOD_START and PERIOD_END are required when there are no records')
            days = [r.timestamp.date() for r in records]
            start = start or min(days)
            end = end or max(days)
        return start, end

    def schedule(self, records: Sequence[ExposureRecord] = ()) -> ScheduleConfig:
        start, end = self.period(records)
        trains = self.trains_per_day
        if trains is None:
            trains = estimate_trains_per_day(records, start, end)
        return ScheduleConfig(trains, start, end)

    def provenance(self) -> dict:
        return {
            'config': self.source,
            'alpha': self.alpha,
            'fit_mode': self.fit_mode,
            'bucket_maps': self.maps.to_dict(),
        }


def default_config_path() -> Path:
    return Path(settings.RAILRISK_DEFAULT_CONFIG)


def load_config(path: Union[str, Path, None] = None) -> RiskConfig:
    path = Path(path) if path else default_config_path()
    if not path.is_file():
        raise ConfigError(f"Config file {path} does not exist")
    try:
        values = dotenv_values(path, encoding='utf-8')
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from None

    serializer = RiskConfigSerializer(data={k: v for k, v in values.items() if v not in (None, '')})
    if not serializer.is_valid():
        raise ConfigError(f"Invalid config file {path}: {serializer.errors}")
    data = serializer.validated_data
    logger.info(f"Loaded config from {path}")
    return RiskConfig(
        maps=data['maps'],
        trains_per_day=data['TRAINS_PER_DAY'],
        period_start=data['PERIOD_START'],
        period_end=data['PERIOD_END'],
        alpha=data['ALPHA'],
        fit_mode=data['FIT_MODE'],
        source=str(path),
    )
