import io
from datetime import date, datetime

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import BucketError, InconsistencyError, ParseError, ScheduleError, SectionError
from .buckets import (
    BucketMaps, assign_season, assign_section, assign_time_bucket, section_state,
)
from .counts import (
    ScheduleConfig, _largest_remainder, build_counts, calendar_hours, estimate_trains_per_day, season_days,
)
from .exposures import ExposureRecord, parse_exposures, write_exposures

HEADER = 'train_id,timestamp,section,broke\n'
YEAR_2015 = ScheduleConfig(12, date(2015, 1, 1), date(2015, 12, 31))


class BucketTests(SimpleTestCase):

    def test_every_month_and_hour_has_a_bucket(self):
        maps = BucketMaps.default()
        seasons = {assign_season(m, maps) for m in range(1, 13)}
        buckets = [assign_time_bucket(h, maps) for h in range(24)]
        self.assertEqual(seasons, {'s0', 's1', 's2', 's3'})
        self.assertEqual(buckets.count('t0'), 7)
        self.assertEqual(buckets.count('t1'), 17)

    def test_default_seasons(self):
        self.assertEqual(assign_season(1), 's1')
        self.assertEqual(assign_season(4), 's2')
        self.assertEqual(assign_season(7), 's2')
        self.assertEqual(assign_season(8), 's3')
        self.assertEqual(assign_season(10), 's0')
        self.assertEqual(assign_season(12), 's0')

    def test_morning_is_half_open(self):
        self.assertEqual(assign_time_bucket(3), 't1')
        self.assertEqual(assign_time_bucket(4), 't0')
        self.assertEqual(assign_time_bucket(10), 't0')
        self.assertEqual(assign_time_bucket(11), 't1')

    def test_out_of_range(self):
        for month in (0, 13, True, 1.5):
            with self.subTest(month=month):
                with self.assertRaises(BucketError):
                    assign_season(month)
        for hour in (-1, 24):
            with self.subTest(hour=hour):
                with self.assertRaises(BucketError):
                    assign_time_bucket(hour)

    def test_custom_maps(self):
        maps = BucketMaps.from_ranges({'s0': [1, 2, 3], 's1': [4, 5, 6], 's2': [7, 8, 9], 's3': [10, 11, 12]},
                                      (6, 9))
        self.assertEqual(maps.season_for(5), 's1')
        self.assertEqual(maps.bucket_for(8), 't0')
        self.assertEqual(BucketMaps.from_dict(maps.to_dict()), maps)

    def test_invalid_maps(self):
        default = {'s0': (10, 11, 12), 's1': (1, 2, 3), 's2': (4, 5, 6, 7), 's3': (8, 9)}
        cases = [
            (dict(default, s3=(8,)), (4, 11)),
            (dict(default, s3=(8, 9, 10)), (4, 11)),
            (dict(default, s4=(1,)), (4, 11)),
            (default, (11, 4)),
            (default, (0, 24)),
        ]
        for months, morning in cases:
            with self.subTest(months=months, morning=morning):
                with self.assertRaises(BucketError):
                    BucketMaps.from_ranges(months, morning)
        with self.assertRaises(BucketError):
            BucketMaps.from_dict({'season_months': default})


class SectionTests(SimpleTestCase):

    def test_loops(self):
        expected = {0: 'coastal', 2: 'coastal', 3: 'semi_coastal', 9: 'semi_coastal', 10: 'inland', 21: 'inland'}
        for loop, section in expected.items():
            self.assertEqual(assign_section(f"loop_{loop}"), section)

    def test_named_positions(self):
        self.assertEqual(assign_section('Salkor'), 'coastal')
        self.assertEqual(assign_section('bamboesbaai'), 'semi_coastal')
        self.assertEqual(assign_section('erts'), 'inland')

    def test_unknown_positions(self):
        for label in ('loop_22', 'loop_x', 'cape town', ''):
            with self.subTest(label=label):
                with self.assertRaises(SectionError):
                    assign_section(label)

    def test_section_state(self):
        self.assertEqual(section_state('semi_coastal'), 'l1')
        with self.assertRaises(SectionError):
            section_state('desert')


class ParseTests(SimpleTestCase):

    def test_parses_rows(self):
        text = HEADER + 'T1,2015-05-07T06:12:00,inland,1\nT2,2015-11-02T14:00:00,coastal,0\n'
        records = parse_exposures(io.StringIO(text))
        self.assertEqual(records[0], ExposureRecord('T1', datetime(2015, 5, 7, 6, 12), 'inland', True))
        self.assertFalse(records[1].broke)

    def test_header_only(self):
        self.assertEqual(parse_exposures(io.StringIO(HEADER)), [])

    def test_byte_order_mark_is_ignored(self):
        data = (HEADER + 'T1,2015-05-07T06:12:00,inland,1\n').encode('utf-8-sig')
        records = parse_exposures(io.BytesIO(data))
        self.assertEqual(records, [ExposureRecord('T1', datetime(2015, 5, 7, 6, 12), 'inland', True)])

    def test_trailing_blank_lines(self):
        records = parse_exposures(io.StringIO(HEADER + 'T1,2015-05-07T06:12:00,inland,1\n\n\n'))
        self.assertEqual(len(records), 1)

    def test_empty_file(self):
        with self.assertRaises(ParseError) as caught:
            parse_exposures(io.StringIO(''))
        self.assertEqual(caught.exception.line, 1)

    def test_bad_header(self):
        with self.assertRaises(ParseError) as caught:
            parse_exposures(io.StringIO('id,when,where,broke\n'))
        self.assertEqual(caught.exception.line, 1)

    def test_bad_rows_report_their_line(self):
        good = 'T1,2015-05-07T06:12:00,inland,1\n'
        bad_rows = {
            'T2,07/05/2015 06:12,inland,1\n': 'timestamp',
            'T2,2015-05-07T06:12:00,desert,1\n': 'section',
            'T2,2015-05-07T06:12:00,inland,yes\n': 'broke',
            ',2015-05-07T06:12:00,inland,1\n': 'train_id',
        }
        for row, reason in bad_rows.items():
            with self.subTest(row=row):
                with self.assertRaises(ParseError) as caught:
                    parse_exposures(io.StringIO(HEADER + good + good + row + good))
                self.assertEqual(caught.exception.line, 4)
                self.assertIn('line 4', str(caught.exception))
                self.assertIn(reason, str(caught.exception))

    def test_written_file_parses_back(self):
        records = [
            ExposureRecord('T1', datetime(2015, 5, 7, 6, 12), 'inland', True),
            ExposureRecord('T2', datetime(2015, 11, 2, 14, 0, 5), 'semi_coastal', False),
        ]
        buffer = io.StringIO()
        self.assertEqual(write_exposures(records, buffer), 2)
        self.assertTrue(buffer.getvalue().startswith(HEADER))
        self.assertEqual(parse_exposures(io.StringIO(buffer.getvalue())), records)

    def test_record_section_is_checked(self):
        with self.assertRaises(SectionError):
            ExposureRecord('T1', datetime(2015, 1, 1), 'desert', True)


def broke(train, stamp, section='inland'):
    return ExposureRecord(train, datetime.fromisoformat(stamp), section, True)


class CountTests(SimpleTestCase):

    def test_schedule(self):
        self.assertEqual(YEAR_2015.period_days, 365)
        self.assertEqual(YEAR_2015.exposures_per_section, 4380)
        with self.assertRaises(ScheduleError):
            ScheduleConfig(0, date(2015, 1, 1), date(2015, 12, 31))
        with self.assertRaises(ScheduleError):
            ScheduleConfig(1, date(2015, 12, 31), date(2015, 1, 1))

    def test_calendar(self):
        maps = BucketMaps.default()
        np.testing.assert_array_equal(season_days(YEAR_2015, maps), [92, 90, 122, 61])
        hours = calendar_hours(YEAR_2015, maps)
        self.assertEqual(int(hours.sum()), 365 * 24)
        self.assertEqual(int(hours[2, 0]), 122 * 7)

    def test_largest_remainder(self):
        np.testing.assert_array_equal(_largest_remainder(np.array([1, 1, 1]), 2), [1, 1, 0])
        np.testing.assert_array_equal(_largest_remainder(np.array([1, 2, 3]), 12), [2, 4, 6])
        rng = np.random.default_rng(3)
        for _ in range(50):
            weights = rng.integers(1, 1000, size=8)
            total = int(rng.integers(1, 100000))
            split = _largest_remainder(weights, total)
            self.assertEqual(int(split.sum()), total)
            self.assertTrue(np.all(np.abs(split - weights * total / weights.sum()) < 1))

    def test_counts_are_conserved(self):
        breaks = [
            broke('A', '2015-05-07T06:12:00'),
            broke('B', '2015-05-08T06:30:00'),
            broke('C', '2015-11-02T14:00:00', 'coastal'),
            broke('D', '2015-08-01T12:00:00', 'semi_coastal'),
        ]
        table = build_counts(breaks, YEAR_2015)
        self.assertEqual(table.total, 3 * YEAR_2015.exposures_per_section)
        self.assertEqual(int(table.breaks.sum()), 4)
        self.assertEqual(table.count('s2', 't0', 'l2', 'r1'), 2)
        self.assertEqual(table.count('s0', 't1', 'l0', 'r1'), 1)
        self.assertEqual(table.count('s3', 't1', 'l1', 'r1'), 1)
        np.testing.assert_array_equal(table.exposures[..., 0], table.exposures[..., 2])

    def test_no_break_records_are_ignored(self):
        quiet = ExposureRecord('Q', datetime(2015, 5, 7, 6), 'inland', False)
        self.assertEqual(build_counts([quiet], YEAR_2015), build_counts([], YEAR_2015))

    def test_break_outside_period(self):
        with self.assertRaisesMessage(ScheduleError, 'train LATE'):
            build_counts([broke('LATE', '2016-01-02T06:00:00')], YEAR_2015)

    def test_too_many_breaks(self):
        schedule = ScheduleConfig(1, date(2015, 5, 1), date(2015, 5, 1))
        breaks = [broke(f"T{i}", '2015-05-01T05:00:00') for i in range(3)]
        with self.assertRaises(InconsistencyError) as caught:
            build_counts(breaks, schedule)
        self.assertEqual(caught.exception.cell, ('s2', 't0', 'l2'))

    def test_estimate_trains_per_day(self):
        records = [ExposureRecord(f"T{i}", datetime(2015, 1, 1 + i % 2), section, False)
                   for i in range(4) for section in ('coastal', 'semi_coastal', 'inland')]
        self.assertAlmostEqual(estimate_trains_per_day(records, date(2015, 1, 1), date(2015, 1, 2)), 2.0)
        with self.assertRaises(ScheduleError):
            estimate_trains_per_day(records, date(2016, 1, 1), date(2016, 1, 2))
