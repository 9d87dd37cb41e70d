"""
Exposure records and the exposure CSV format

Columns: train_id, timestamp (ISO 8601 local time, second precision),
section (coastal|semi_coastal|inland), broke (0|1). A header row is required.
"""
import logging
import os
import re
from dataclasses import dataclass
from datetime import datetime
from typing import IO, Iterable, List, Union

import pandas as pd

from core.exceptions import ParseError, SectionError
from .buckets import SECTIONS

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['train_id', 'timestamp', 'section', 'broke']
TIMESTAMP_FORMAT = '%Y-%m-%dT%H:%M:%S'

Source = Union[str, os.PathLike, IO]


@dataclass(frozen=True)
class ExposureRecord:
    """One train traversing one line section, with its break outcome"""
    train_id: str
    timestamp: datetime
    section: str
    broke: bool

    def __post_init__(self):
        if self.section not in SECTIONS:
            raise SectionError(f"Unknown section '{self.section}'; expected one of {', '.join(SECTIONS)}")


def _first_bad_row(mask: pd.Series) -> int:
    return int(mask.to_numpy().nonzero()[0][0])


def parse_exposures(source: Source) -> List[ExposureRecord]:
    """Read every row of an exposure CSV or fail with the offending line number"""
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, skip_blank_lines=False, encoding='utf-8-sig')
    except pd.errors.EmptyDataError:
        raise ParseError('no exposures: the file is empty', line=1) from None
    except pd.errors.ParserError as e:
        match = re.search(r'line (\d+)', str(e))
        raise ParseError(f"malformed row: {e}", line=int(match.group(1)) if match else None) from None
    except UnicodeDecodeError as e:
        raise ParseError(f"input is not UTF-8: {e}") from None

    header = [str(c).strip() for c in frame.columns]
    if header != CSV_COLUMNS:
        raise ParseError(f"header must be {','.join(CSV_COLUMNS)}, got {','.join(header)}", line=1)
    frame.columns = CSV_COLUMNS
    frame = frame.fillna('')

    # Trailing blank lines are tolerated, interior ones are not.
    blank = (frame == '').all(axis=1)
    while len(frame) and blank.iloc[-1]:
        frame = frame.iloc[:-1]
        blank = blank.iloc[:-1]
    if frame.empty:
        logger.info('Parsed exposure file with no data rows')
        return []

    train_ids = frame['train_id'].str.strip()
    sections = frame['section'].str.strip()
    flags = frame['broke'].str.strip()
    timestamps = pd.to_datetime(frame['timestamp'].str.strip(), format=TIMESTAMP_FORMAT, errors='coerce')

    checks = [
        (train_ids == '', 'empty train_id'),
        (timestamps.isna(), "timestamp must look like 2014-05-07T06:12:00"),
        (~sections.isin(SECTIONS), f"section must be one of {', '.join(SECTIONS)}"),
        (~flags.isin(['0', '1']), 'broke must be 0 or 1'),
    ]
    failures = [(_first_bad_row(mask), reason) for mask, reason in checks if mask.any()]
    if failures:
        row, reason = min(failures)
        raise ParseError(f"{reason} (row: {','.join(frame.iloc[row])})", line=row + 2)

    records = [
        ExposureRecord(train_id, timestamp, section, flag == '1')
        for train_id, timestamp, section, flag in zip(
            train_ids, timestamps.dt.to_pydatetime(), sections, flags
        )
    ]
    logger.info(f"Parsed {len(records)} exposure records ({int((flags == '1').sum())} breaks)")
    return records


def records_frame(records: Iterable[ExposureRecord]) -> pd.DataFrame:
    rows = [(r.train_id, r.timestamp, r.section, r.broke) for r in records]
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS)
    frame['timestamp'] = pd.to_datetime(frame['timestamp'])
    frame['broke'] = frame['broke'].astype(bool)
    return frame


def write_exposures(records: Iterable[ExposureRecord], target: Source) -> int:
    """Write records in the exposure CSV format and return the number of rows"""
    frame = records_frame(records)
    frame['timestamp'] = frame['timestamp'].dt.strftime(TIMESTAMP_FORMAT)
    frame['broke'] = frame['broke'].astype(int)
    frame.to_csv(target, index=False, lineterminator='\n')
    logger.info(f"Wrote {len(frame)} exposure records")
    return len(frame)
