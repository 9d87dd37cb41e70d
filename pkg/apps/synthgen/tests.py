from datetime import date

import numpy as np
from django.test import SimpleTestCase

from apps.ingest.buckets import SECTIONS, BucketMaps
from apps.ingest.counts import ScheduleConfig, build_counts, estimate_trains_per_day
from apps.networks.railbreak import fit_factorized
from apps.networks.risk import posterior, query_risk
from core.exceptions import SamplingError
from .reference import (
    ANCHORS, ANCHORS_BY_KEY, FAIL, PASS, WAIVED, calibrate_reference, evaluate_anchor,
    evaluate_anchors, load_reference, reference_priors, reference_provenance,
)
from .sampler import sample_exposures

ROUND_TRIP_N = 200000


class AnchorTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.model = load_reference()

    def test_every_active_anchor_passes(self):
        results = evaluate_anchors(self.model)
        self.assertEqual(len(results), len(ANCHORS))
        for result in results:
            with self.subTest(anchor=result.anchor.key):
                expected = WAIVED if result.anchor.waived else PASS
                self.assertEqual(result.status, expected)
                self.assertIsNotNone(result.value)

    def test_waived_anchor_is_still_reported(self):
        result = evaluate_anchor(self.model, ANCHORS_BY_KEY['coastal_not_morning'])
        self.assertEqual(result.status, WAIVED)
        self.assertAlmostEqual(result.value, query_risk(self.model, {'L': 'l0', 'T': 't1'}), delta=1e-15)
        self.assertEqual(result.to_dict()['status'], WAIVED)

    def test_perturbed_model_fails(self):
        risk = self.model.break_risk().copy()
        risk[:, :, 2] *= 2
        perturbed = type(self.model).from_tables(
            self.model.prior('S').values, self.model.prior('T').values, self.model.prior('L').values,
            np.stack([1 - risk, risk], axis=-1),
        )
        result = evaluate_anchor(perturbed, ANCHORS_BY_KEY['inland_winter'])
        self.assertEqual(result.status, FAIL)
        self.assertGreater(result.residual, 0)

    def test_risk_rises_towards_winter(self):
        risk = self.model.break_risk().mean(axis=1)
        for l in range(3):
            self.assertGreater(risk[2, l], risk[3, l])
            self.assertGreater(risk[3, l], risk[1, l])
            self.assertGreater(risk[1, l], risk[0, l])


class CalibrationTests(SimpleTestCase):

    def test_priors(self):
        priors = reference_priors()
        np.testing.assert_allclose(priors['S'], np.array([92, 90, 122, 61]) / 365, atol=1e-15)
        np.testing.assert_allclose(priors['T'], [7 / 24, 17 / 24], atol=1e-15)

    def test_calibration_reproduces_fixture(self):
        calibrated = calibrate_reference()
        fixture = load_reference()
        np.testing.assert_allclose(calibrated.break_risk(), fixture.break_risk(), rtol=0, atol=1e-9)
        for name in ('S', 'T', 'L'):
            np.testing.assert_allclose(calibrated.prior(name).values, fixture.prior(name).values, rtol=0, atol=1e-9)
        self.assertEqual(fixture.provenance, reference_provenance())


class SamplerTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.model = load_reference()

    def test_same_seed_same_stream(self):
        self.assertEqual(sample_exposures(self.model, 1, seed=7), sample_exposures(self.model, 1, seed=7))
        first = sample_exposures(self.model, 500, seed=7)
        self.assertEqual(first, sample_exposures(self.model, 500, seed=7))
        self.assertNotEqual(first, sample_exposures(self.model, 500, seed=8))

    def test_invalid_requests(self):
        for n in (0, -1, 2.5, True):
            with self.subTest(n=n):
                with self.assertRaises(SamplingError):
                    sample_exposures(self.model, n, seed=1)
        with self.assertRaises(SamplingError):
            sample_exposures(self.model, 10, seed=1, period_start=date(2015, 2, 1), period_end=date(2015, 1, 1))
        # February only: the other seasons have mass but no day.
        with self.assertRaises(SamplingError):
            sample_exposures(self.model, 10, seed=1, period_start=date(2015, 2, 1), period_end=date(2015, 2, 28))

    def test_timestamps_fall_in_period_and_buckets(self):
        maps = BucketMaps.default()
        records = sample_exposures(self.model, 5000, seed=3)
        ids = [r.train_id for r in records]
        self.assertEqual(ids[0], 'SYN0000001')
        self.assertEqual(len(set(ids)), len(ids))
        for record in records:
            self.assertEqual(record.timestamp.year, 2015)
            self.assertIn(maps.season_for(record.timestamp.month), ('s0', 's1', 's2', 's3'))
        morning = np.mean([maps.bucket_for(r.timestamp.hour) == 't0' for r in records])
        self.assertAlmostEqual(morning, 7 / 24, delta=0.03)

    def test_break_rate(self):
        for seed in (7, 8):
            records = sample_exposures(self.model, 200000, seed=seed)
            rate = np.mean([r.broke for r in records])
            self.assertAlmostEqual(rate, 0.019, delta=0.002)

    def test_refit_recovers_model(self):
        records = sample_exposures(self.model, ROUND_TRIP_N, seed=2015)
        start, end = date(2015, 1, 1), date(2015, 12, 31)
        schedule = ScheduleConfig(estimate_trains_per_day(records, start, end), start, end)
        counts = build_counts(records, schedule)
        self.assertAlmostEqual(counts.total, ROUND_TRIP_N, delta=len(SECTIONS))
        breaks = [r for r in records if r.broke]
        morning = np.mean([BucketMaps.default().bucket_for(r.timestamp.hour) == 't0' for r in breaks])
        self.assertAlmostEqual(morning, 0.56, delta=0.02)

        fitted = fit_factorized(counts, alpha=0)
        np.testing.assert_allclose(fitted.break_risk(), self.model.break_risk(), rtol=0, atol=0.01)
        for name in ('S', 'T', 'L'):
            np.testing.assert_allclose(fitted.prior(name).values, self.model.prior(name).values, rtol=0, atol=0.005)
        self.assertAlmostEqual(query_risk(fitted), 0.019, delta=0.002)
        share = posterior(fitted, 'T', {'R': 'r1'}).value({'T': 't0'})
        self.assertAlmostEqual(share, 0.56, delta=0.02)
