import json
import tempfile
from datetime import date
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings
from rest_framework.test import APIClient

from apps.networks.railbreak import CountTable, JointRailBreakModel, RailBreakModel, fit_full_joint
from apps.networks.risk import normalized_percentage, query_risk
from apps.synthgen.reference import load_reference
from core.exceptions import ConfigError, ModelFileError
from .commandutils import EXIT_USAGE, EXIT_VALIDATION
from .config import load_config
from .modelfile import load_model, model_to_dict, save_model
from .services import RiskReportService, format_probability


def run(command, *args):
    out = StringIO()
    call_command(command, *args, stdout=out, stderr=StringIO())
    return out.getvalue()


def uniform_model():
    """Every cell carries the same break risk, so no section, season or time stands out"""
    risk = np.full((4, 2, 3), 0.02)
    return RailBreakModel.from_tables([0.25] * 4, [0.5, 0.5], [1 / 3] * 3, np.stack([1 - risk, risk], axis=-1))


def perturbed_reference():
    """Reference model with one cell's break risk pushed far off its anchors"""
    model = load_reference()
    risk = model.break_risk().copy()
    risk[2, 0, 2] = 0.5
    return RailBreakModel.from_tables(
        model.prior('S').values, model.prior('T').values, model.prior('L').values,
        np.stack([1 - risk, risk], axis=-1), model.provenance,
    )


class TempDirMixin:

    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        super().tearDown()


class ConfigTests(TempDirMixin, SimpleTestCase):

    def test_default_config(self):
        config = load_config()
        self.assertIsNone(config.trains_per_day)
        self.assertEqual(config.period_start, date(2015, 1, 1))
        self.assertEqual(config.alpha, 1.0)
        self.assertEqual(config.fit_mode, 'factorized')
        self.assertEqual(config.maps.season_for(5), 's2')
        self.assertEqual(config.maps.morning_hours, (4, 11))

    def test_overrides(self):
        path = self.tmp / 'custom.env'
        path.write_text('TRAINS_PER_DAY=12\nALPHA=0\nFIT_MODE=full_joint\nMORNING_START_HOUR=5\nPERIOD_START=\n')
        config = load_config(path)
        self.assertEqual(config.trains_per_day, 12.0)
        self.assertEqual(config.alpha, 0.0)
        self.assertEqual(config.fit_mode, 'full_joint')
        self.assertEqual(config.maps.bucket_for(4), 't1')
        self.assertIsNone(config.period_start)

    def test_invalid_files(self):
        cases = {
            'unknown.env': 'TRAINS=12\n',
            'overlap.env': 'SEASON_WINTER_MONTHS=4,5,6,7,8\n',
            'period.env': 'PERIOD_START=2015-12-31\nPERIOD_END=2015-01-01\n',
            'alpha.env': 'ALPHA=-1\n',
            'trains.env': 'TRAINS_PER_DAY=many\n',
        }
        for name, text in cases.items():
            with self.subTest(name=name):
                path = self.tmp / name
                path.write_text(text)
                with self.assertRaises(ConfigError):
                    load_config(path)
        with self.assertRaises(ConfigError):
            load_config(self.tmp / 'missing.env')


class ModelFileTests(TempDirMixin, SimpleTestCase):

    def test_round_trip(self):
        model = load_reference()
        path = save_model(model, self.tmp / 'model.json')
        self.assertEqual(load_model(path), model)

    def test_full_joint_round_trip(self):
        counts = CountTable(np.arange(48).reshape(4, 2, 3, 2))
        model = JointRailBreakModel(fit_full_joint(counts, 1.0), {'fit_mode': 'full_joint'})
        document = model_to_dict(model)
        self.assertEqual(document['structure']['edges'], [])
        self.assertEqual([t['name'] for t in document['tables']], ['joint'])
        self.assertEqual(load_model(save_model(model, self.tmp / 'joint.json')), model)

    def test_break_table_layout(self):
        document = model_to_dict(load_reference())
        table = document['tables'][-1]
        self.assertEqual(table['scope'], ['S', 'T', 'L', 'R'])
        self.assertEqual(len(table['values']), 48)
        self.assertAlmostEqual(table['values'][0] + table['values'][1], 1.0, delta=1e-12)

    def test_rejects_bad_files(self):
        document = model_to_dict(load_reference())
        variants = {
            'schema': dict(document, schema_version=2),
            'kind': dict(document, kind='neural'),
            'edges': dict(document, structure={'edges': [['S', 'R']]}),
            'tables': dict(document, tables=document['tables'][:3]),
        }
        for name, variant in variants.items():
            with self.subTest(name=name):
                path = self.tmp / f"{name}.json"
                path.write_text(json.dumps(variant))
                with self.assertRaises(ModelFileError):
                    load_model(path)

        corrupt = self.tmp / 'corrupt.json'
        corrupt.write_text('{"schema_version": 1,')
        with self.assertRaises(ModelFileError):
            load_model(corrupt)
        with self.assertRaises(ModelFileError):
            load_model(self.tmp / 'missing.json')


class ReportServiceTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.model = load_reference()

    def test_format_probability(self):
        self.assertEqual(format_probability(0.0190004), '0.019')
        self.assertEqual(format_probability(0.00070012), '0.0007001')
        self.assertEqual(format_probability(None), 'n/a')

    def test_report(self):
        report = RiskReportService.build_report(self.model)
        self.assertEqual(len(report['scenarios']), 24)
        self.assertEqual(len(report['anchors']), 10)
        summary = report['summary']
        self.assertAlmostEqual(summary['overall_risk'], 0.019, delta=0.001)
        self.assertLess(abs(summary['trip_sum_residual']), 1e-9)
        self.assertAlmostEqual(sum(summary['break_attribution']['T'].values()), 1.0, delta=1e-9)
        rows = summary['time_of_day']
        self.assertEqual([row['time'] for row in rows], ['t0', 't1'])
        self.assertAlmostEqual(rows[0]['day_share'], 7 / 24, delta=1e-9)
        self.assertAlmostEqual(rows[0]['break_share'], 0.56, delta=0.02)
        expected = normalized_percentage([r['break_share'] for r in rows], [r['day_share'] for r in rows])
        self.assertEqual([row['normalized_share'] for row in rows], expected)
        self.assertGreater(rows[0]['normalized_share'], 0.73)
        text = RiskReportService.render_report(report)
        self.assertIn('inland/coastal ratio', text)
        self.assertIn('[WAIVED] coastal_not_morning', text)
        self.assertIn('time of day', text)

    def test_uniform_model_report(self):
        summary = RiskReportService.build_report(uniform_model())['summary']
        self.assertAlmostEqual(summary['inland_coastal_ratio'], 1.0, delta=1e-12)
        for row in summary['time_of_day']:
            self.assertAlmostEqual(row['normalized_share'], 0.5, delta=1e-12)

    def test_reference_validates(self):
        result = RiskReportService.validate(self.model)
        self.assertTrue(result.passed, result.failures)
        names = [check.name for check in result.invariants]
        self.assertIn('cause_independence', names)
        self.assertIn('trip_sum_identity', names)

    def test_perturbed_model_fails(self):
        result = RiskReportService.validate(perturbed_reference())
        self.assertFalse(result.passed)
        self.assertIn('inland_winter_morning', result.failures)


class CommandTests(TempDirMixin, SimpleTestCase):

    def assertExitCode(self, code, command, *args):
        with self.assertRaises(CommandError) as caught:
            run(command, *args)
        self.assertEqual(caught.exception.returncode, code)
        return caught.exception

    def test_query(self):
        out = run('query')
        self.assertIn('p(R=r1 | no evidence) =', out)
        payload = json.loads(run('query', '--location', 'inland', '--season', 'winter', '--json'))
        self.assertAlmostEqual(payload['risk'], 0.024, delta=0.002)
        self.assertEqual(payload['evidence'], {'S': 's2', 'L': 'l2'})
        self.assertEqual(payload['kind'], 'factorized')

    def test_query_rejects_unknown_state(self):
        error = self.assertExitCode(EXIT_USAGE, 'query', '--location', 'desert')
        self.assertIn('legal states', str(error))

    def test_report(self):
        self.assertIn('Scenario risk', run('report'))
        payload = json.loads(run('report', '--json'))
        self.assertEqual(len(payload['scenarios']), 24)

    def test_report_on_uniform_model(self):
        path = save_model(uniform_model(), self.tmp / 'uniform.json')
        self.assertIn('inland/coastal ratio: 1\n', run('report', '--model', str(path)))
        payload = json.loads(run('report', '--json', '--model', str(path)))
        self.assertAlmostEqual(payload['summary']['inland_coastal_ratio'], 1.0, delta=1e-12)

    def test_validate(self):
        self.assertIn('All checks passed', run('validate'))
        payload = json.loads(run('validate', '--json'))
        self.assertTrue(payload['passed'])

    def test_validate_perturbed_model(self):
        path = save_model(perturbed_reference(), self.tmp / 'perturbed.json')
        self.assertExitCode(EXIT_VALIDATION, 'validate', '--model', str(path))

    def test_corrupted_model_file(self):
        path = self.tmp / 'corrupt.json'
        path.write_text('not json')
        for command in ('query', 'report', 'validate'):
            with self.subTest(command=command):
                self.assertExitCode(EXIT_USAGE, command, '--model', str(path))

    def test_synth_is_reproducible(self):
        first, second = self.tmp / 'a.csv', self.tmp / 'b.csv'
        run('synth', '--n', '2000', '--seed', '7', '--out', str(first))
        run('synth', '--n', '2000', '--seed', '7', '--out', str(second))
        self.assertEqual(first.read_bytes(), second.read_bytes())
        lines = first.read_text().splitlines()
        self.assertEqual(lines[0], 'train_id,timestamp,section,broke')
        self.assertEqual(len(lines), 2001)

    def test_synth_refuses_to_overwrite(self):
        out = self.tmp / 'a.csv'
        out.write_text('keep me')
        self.assertExitCode(EXIT_USAGE, 'synth', '--n', '10', '--out', str(out))
        self.assertEqual(out.read_text(), 'keep me')
        run('synth', '--n', '10', '--out', str(out), '--force')
        self.assertTrue(out.read_text().startswith('train_id'))

    def test_synth_rejects_bad_n(self):
        self.assertExitCode(EXIT_USAGE, 'synth', '--n', '0', '--out', str(self.tmp / 'zero.csv'))

    def test_fit_routes_agree(self):
        data = self.tmp / 'exposures.csv'
        run('synth', '--n', '30000', '--seed', '11', '--out', str(data))
        factorized, full = self.tmp / 'factorized.json', self.tmp / 'full.json'
        out = run('fit', '--in', str(data), '--out', str(factorized))
        self.assertIn('p(R=r1) =', out)
        run('fit', '--in', str(data), '--mode', 'full_joint', '--out', str(full))

        factorized_model, full_model = load_model(factorized), load_model(full)
        self.assertIsInstance(full_model, JointRailBreakModel)
        self.assertEqual(factorized_model.provenance['fit_mode'], 'factorized')
        self.assertEqual(full_model.provenance['exposures'], 30000)
        self.assertLess(abs(query_risk(factorized_model) - query_risk(full_model)), 0.001)

    def test_fit_errors(self):
        empty = self.tmp / 'empty.csv'
        empty.write_text('train_id,timestamp,section,broke\n')
        error = self.assertExitCode(EXIT_USAGE, 'fit', '--in', str(empty), '--out', str(self.tmp / 'm.json'))
        self.assertIn('no exposures', str(error))

        broken = self.tmp / 'broken.csv'
        broken.write_text('train_id,timestamp,section,broke\nT1,2015-05-07T06:12:00,desert,1\n')
        error = self.assertExitCode(EXIT_USAGE, 'fit', '--in', str(broken), '--out', str(self.tmp / 'm.json'))
        self.assertIn('line 2', str(error))

        self.assertExitCode(EXIT_USAGE, 'fit', '--in', str(self.tmp / 'missing.csv'), '--out', str(self.tmp / 'm.json'))
        self.assertFalse((self.tmp / 'm.json').exists())

    def test_calibrate_writes_fixture_copy(self):
        out = self.tmp / 'reference.json'
        text = run('calibrate', '--out', str(out))
        self.assertIn('[WAIVED] coastal_not_morning', text)
        np.testing.assert_allclose(load_model(out).break_risk(), load_reference().break_risk(), rtol=0, atol=1e-9)


class RiskApiTests(SimpleTestCase):

    def setUp(self):
        self.client = APIClient()

    def assertEnvelope(self, response, success):
        body = response.json()
        self.assertEqual(set(body), {'success', 'data', 'message', 'request_id', 'timestamp'})
        self.assertEqual(body['success'], success)
        self.assertIn('X-Request-ID', response)
        self.assertEqual(body['request_id'], response['X-Request-ID'])
        return body

    def test_query_without_evidence(self):
        response = self.client.get('/api/v1/risk/query')
        self.assertEqual(response.status_code, 200)
        body = self.assertEnvelope(response, True)
        self.assertAlmostEqual(body['data']['risk'], 0.019, delta=0.001)

    def test_request_id_is_echoed(self):
        response = self.client.get('/api/v1/risk/query', HTTP_X_REQUEST_ID='trace-42')
        self.assertEqual(response['X-Request-ID'], 'trace-42')
        self.assertEqual(self.assertEnvelope(response, True)['request_id'], 'trace-42')

    def test_query_with_evidence(self):
        response = self.client.get('/api/v1/risk/query', {'season': 'winter', 'time': 'morning', 'location': 'inland'})
        body = self.assertEnvelope(response, True)
        self.assertAlmostEqual(body['data']['risk'], 0.054, delta=0.003)
        self.assertEqual(body['data']['evidence'], {'S': 's2', 'T': 't0', 'L': 'l2'})

    def test_query_unknown_state(self):
        response = self.client.get('/api/v1/risk/query', {'location': 'desert'})
        self.assertEqual(response.status_code, 400)
        self.assertIn('legal states', self.assertEnvelope(response, False)['message'])

    def test_trip(self):
        legs = [{'section': s} for s in ('coastal', 'semi_coastal', 'inland')]
        response = self.client.post('/api/v1/risk/trip', {'legs': legs}, format='json')
        self.assertEqual(response.status_code, 200)
        body = self.assertEnvelope(response, True)
        self.assertAlmostEqual(body['data']['risk'], query_risk(load_reference()), delta=1e-9)

    def test_trip_errors(self):
        for payload in ({'legs': []}, {'legs': [{'section': 'inland'}, {'section': 'l2', 'time': 'morning'}]},
                        {'legs': [{'section': 'desert'}]}):
            with self.subTest(payload=payload):
                response = self.client.post('/api/v1/risk/trip', payload, format='json')
                self.assertEqual(response.status_code, 400)
                self.assertEnvelope(response, False)

    def test_report(self):
        body = self.assertEnvelope(self.client.get('/api/v1/risk/report'), True)
        self.assertEqual(len(body['data']['scenarios']), 24)

    @override_settings(RAILRISK_MODEL_PATH='/nonexistent/model.json')
    def test_missing_model(self):
        response = self.client.get('/api/v1/risk/query')
        self.assertEqual(response.status_code, 500)
        self.assertEnvelope(response, False)
        self.assertEqual(self.client.get('/health/').status_code, 500)

    def test_health(self):
        self.assertEqual(self.client.get('/health/').json()['status'], 'healthy')
        self.assertEqual(self.client.get('/health/live').json()['status'], 'alive')
