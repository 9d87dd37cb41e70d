"""
Season, time-of-day and section bucketing
"""
import logging
import re
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from core.exceptions import BucketError, SectionError

logger = logging.getLogger(__name__)

SEASON_CODES = ('s0', 's1', 's2', 's3')
TIME_CODES = ('t0', 't1')

# Peak breaks fall in April to July (winter), the fewest in October to December.
DEFAULT_SEASON_MONTHS = {
    's0': (10, 11, 12),
    's1': (1, 2, 3),
    's2': (4, 5, 6, 7),
    's3': (8, 9),
}
# Half-open [start, end): hour 11 is not morning.
DEFAULT_MORNING_HOURS = (4, 11)

SECTIONS = ('coastal', 'semi_coastal', 'inland')
SECTION_STATES = {'coastal': 'l0', 'semi_coastal': 'l1', 'inland': 'l2'}

LOOP_COUNT = 22
SEMI_COASTAL_FROM_LOOP = 3
INLAND_FROM_LOOP = 10
NAMED_POSITIONS = {
    'salkor': 'coastal',
    'bamboesbaai': 'semi_coastal',
    'halfweg': 'inland',
    'erts': 'inland',
}
LOOP_PATTERN = re.compile(r'^loop[_\s-]?(\d+)$')


@dataclass(frozen=True)
class BucketMaps:
    """month -> season code (index month - 1) and hour -> time bucket code"""
    months: Tuple[str, ...]
    hours: Tuple[str, ...]

    def __post_init__(self):
        months = tuple(self.months)
        hours = tuple(self.hours)
        object.__setattr__(self, 'months', months)
        object.__setattr__(self, 'hours', hours)

        if len(months) != 12 or any(m not in SEASON_CODES for m in months):
            raise BucketError(f"Month map needs 12 entries drawn from {list(SEASON_CODES)}")
        if len(hours) != 24 or any(h not in TIME_CODES for h in hours):
            raise BucketError(f"Hour map needs 24 entries drawn from {list(TIME_CODES)}")
        unused = [s for s in SEASON_CODES if s not in months]
        if unused:
            raise BucketError(f"Seasons without any month: {unused}")
        morning = [h for h, code in enumerate(hours) if code == 't0']
        if not morning or len(morning) == 24:
            raise BucketError('Both time buckets need at least one hour')
        if morning != list(range(morning[0], morning[-1] + 1)):
            raise BucketError(f"Morning hours must be a contiguous range, got {morning}")

    @classmethod
    def from_ranges(cls, season_months: Mapping[str, Iterable[int]],
                    morning_hours: Sequence[int]) -> 'BucketMaps':
        months: list = [None] * 12
        for season, listed in season_months.items():
            if season not in SEASON_CODES:
                raise BucketError(f"Unknown season {season}")
            for month in listed:
                month = int(month)
                if not 1 <= month <= 12:
                    raise BucketError(f"Month {month} is outside 1..12")
                if months[month - 1] is not None:
                    raise BucketError(f"Month {month} is assigned to both {months[month - 1]} and {season}")
                months[month - 1] = season
        missing = [m + 1 for m, season in enumerate(months) if season is None]
        if missing:
            raise BucketError(f"Months without a season: {missing}")

        start, end = (int(h) for h in morning_hours)
        if not 0 <= start < end <= 24:
            raise BucketError(f"Morning must be a range [start, end) inside 0..24, got [{start}, {end})")
        hours = ['t0' if start <= h < end else 't1' for h in range(24)]
        return cls(tuple(months), tuple(hours))

    @classmethod
    def default(cls) -> 'BucketMaps':
        return cls.from_ranges(DEFAULT_SEASON_MONTHS, DEFAULT_MORNING_HOURS)

    @property
    def season_months(self) -> Dict[str, Tuple[int, ...]]:
        return {s: tuple(m + 1 for m, code in enumerate(self.months) if code == s) for s in SEASON_CODES}

    @property
    def morning_hours(self) -> Tuple[int, int]:
        morning = [h for h, code in enumerate(self.hours) if code == 't0']
        return morning[0], morning[-1] + 1

    def season_for(self, month: int) -> str:
        if not isinstance(month, int) or isinstance(month, bool) or not 1 <= month <= 12:
            raise BucketError(f"Month must be an integer in 1..12, got {month!r}")
        return self.months[month - 1]

    def bucket_for(self, hour: int) -> str:
        if not isinstance(hour, int) or isinstance(hour, bool) or not 0 <= hour <= 23:
            raise BucketError(f"Hour must be an integer in 0..23, got {hour!r}")
        return self.hours[hour]

    def to_dict(self) -> dict:
        return {
            'season_months': {s: list(m) for s, m in self.season_months.items()},
            'morning_hours': list(self.morning_hours),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> 'BucketMaps':
        try:
            return cls.from_ranges(data['season_months'], data['morning_hours'])
        except (KeyError, TypeError, ValueError) as e:
            raise BucketError(f"Invalid bucket map definition: {e}") from None


def assign_season(month: int, maps: Optional[BucketMaps] = None) -> str:
    return (maps or BucketMaps.default()).season_for(month)


def assign_time_bucket(hour: int, maps: Optional[BucketMaps] = None) -> str:
    return (maps or BucketMaps.default()).bucket_for(hour)


def assign_section(position_label: str) -> str:
    """
    Section of a line position. Loops 0-2 and Salkor yard are coastal, loops
    3-9 semi-coastal, loop 10 onwards inland; boundary loops go to the section
    further inland.
    """
    label = str(position_label).strip().lower()
    if label in NAMED_POSITIONS:
        return NAMED_POSITIONS[label]
    match = LOOP_PATTERN.match(label)
    if match:
        loop = int(match.group(1))
        if loop < LOOP_COUNT:
            if loop < SEMI_COASTAL_FROM_LOOP:
                return 'coastal'
            if loop < INLAND_FROM_LOOP:
                return 'semi_coastal'
            return 'inland'
    raise SectionError(
        f"Unknown line position '{position_label}'; expected loop_0..loop_{LOOP_COUNT - 1} "
        f"or one of {', '.join(sorted(NAMED_POSITIONS))}"
    )


def section_state(section: str) -> str:
    try:
        return SECTION_STATES[section]
    except KeyError:
        raise SectionError(f"Unknown section '{section}'; expected one of {', '.join(SECTIONS)}") from None
