import itertools

import numpy as np
from django.test import SimpleTestCase

from apps.factors.factor import Variable, make_factor
from apps.factors.inference import check_independence, eliminate
from apps.synthgen.reference import load_reference
from core.exceptions import (
    AcyclicityError, CPTError, EvidenceError, LegError, RatioError, ShareError,
    StructureError, UndefinedConditionalError,
)
from .bayesnet import build_bn, joint_of
from .dag import make_dag
from .railbreak import (
    RAIL_DAG, CountTable, JointRailBreakModel, RailBreakModel, describe_evidence,
    fit_factorized, fit_full_joint, resolve_evidence, resolve_state,
)
from .risk import Leg, normalized_percentage, posterior, query_risk, risk_ratio, trip_risk

A = Variable('A', ('0', '1'))
B = Variable('B', ('0', '1'))


def toy_model(risk=None):
    """Factorized model with uniform priors and the given 4x2x3 break risk"""
    risk = np.full((4, 2, 3), 0.02) if risk is None else np.asarray(risk)
    rail_break = np.stack([1 - risk, risk], axis=-1)
    return RailBreakModel.from_tables([0.25] * 4, [0.5, 0.5], [1 / 3] * 3, rail_break)


def kahn_is_acyclic(vertices, edges):
    """Independent cycle check: repeatedly strip vertices with no incoming edge"""
    indegree = {v: 0 for v in vertices}
    outgoing = {v: [] for v in vertices}
    for parent, child in edges:
        indegree[child] += 1
        outgoing[parent].append(child)
    ready = [v for v in vertices if indegree[v] == 0]
    removed = 0
    while ready:
        vertex = ready.pop()
        removed += 1
        for child in outgoing[vertex]:
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(child)
    return removed == len(vertices)


def random_edges(rng, vertices):
    pairs = [(p, c) for p in vertices for c in vertices if p != c]
    count = int(rng.integers(0, len(vertices) + 3))
    return [pairs[i] for i in rng.choice(len(pairs), size=count, replace=False)]


def random_bn(rng):
    """Random 4-vertex network with edges following a shuffled vertex order"""
    names = [str(n) for n in rng.permutation(list('ABCD'))]
    variables = {n: Variable(n, tuple(f"v{k}" for k in range(int(rng.integers(2, 4))))) for n in names}
    edges = [(p, c) for i, p in enumerate(names) for c in names[i + 1:] if rng.random() < 0.5]
    dag = make_dag(sorted(names), edges)
    cpts = {}
    for child in names:
        scope = [variables[p] for p in dag.parents(child)] + [variables[child]]
        table = rng.random([v.cardinality for v in scope]) + 0.05
        table = table / table.sum(axis=-1, keepdims=True)
        cpts[child] = make_factor(scope, table.ravel())
    return build_bn(dag, cpts)


class DagTests(SimpleTestCase):

    def test_rail_structure(self):
        self.assertEqual(RAIL_DAG.parents('R'), ['S', 'T', 'L'])
        self.assertEqual(RAIL_DAG.parents('S'), [])
        self.assertEqual(RAIL_DAG.children('S'), ['R'])
        self.assertEqual(RAIL_DAG.topological_order(), ['S', 'T', 'L', 'R'])

    def test_cycle_is_rejected(self):
        with self.assertRaises(AcyclicityError) as caught:
            make_dag(['S', 'R'], [('S', 'R'), ('R', 'S')])
        self.assertEqual(set(caught.exception.cycle), {'S', 'R'})

    def test_self_loop_is_rejected(self):
        with self.assertRaises(AcyclicityError):
            make_dag(['S'], [('S', 'S')])

    def test_bad_edges(self):
        with self.assertRaises(StructureError):
            make_dag(['S'], [('S', 'Q')])
        with self.assertRaises(StructureError):
            make_dag(['S', 'R'], [('S', 'R'), ('S', 'R')])
        with self.assertRaises(StructureError):
            make_dag(['S', 'S'])

    def test_topological_order_is_deterministic(self):
        dag = make_dag(['C', 'B', 'A'], [('A', 'B')])
        self.assertEqual(dag.topological_order(), ['C', 'A', 'B'])

    def test_acyclicity_matches_independent_check(self):
        rng = np.random.default_rng(23)
        vertices = ['A', 'B', 'C', 'D', 'E']
        accepted = rejected = 0
        for _ in range(400):
            edges = random_edges(rng, vertices)
            if kahn_is_acyclic(vertices, edges):
                dag = make_dag(vertices, edges)
                position = {v: i for i, v in enumerate(dag.topological_order())}
                self.assertTrue(all(position[p] < position[c] for p, c in edges))
                accepted += 1
            else:
                with self.assertRaises(AcyclicityError) as caught:
                    make_dag(vertices, edges)
                cycle = caught.exception.cycle
                closing = list(zip(cycle, cycle[1:] + cycle[:1]))
                self.assertTrue(all(edge in edges for edge in closing), (edges, cycle))
                rejected += 1
        self.assertGreater(accepted, 20)
        self.assertGreater(rejected, 20)


class BayesNetTests(SimpleTestCase):

    def setUp(self):
        self.dag = make_dag(['A', 'B'], [('A', 'B')])
        self.cpts = {
            'A': make_factor([A], [0.3, 0.7]),
            'B': make_factor([A, B], [0.9, 0.1, 0.2, 0.8]),
        }

    def test_chain_rule(self):
        net = build_bn(self.dag, self.cpts)
        joint = joint_of(net)
        self.assertEqual(joint.names, ('A', 'B'))
        np.testing.assert_allclose(joint.values.ravel(), [0.27, 0.03, 0.14, 0.56], atol=1e-12)

    def test_joint_of_random_networks(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            net = random_bn(rng)
            joint = joint_of(net)
            self.assertEqual(list(joint.names), net.dag.topological_order())
            expected = np.ones(joint.values.shape)
            for index in itertools.product(*(range(n) for n in joint.values.shape)):
                states = dict(zip(joint.names, index))
                for f in net.factors:
                    expected[index] *= f.values[tuple(states[n] for n in f.names)]
            np.testing.assert_allclose(joint.values, expected, rtol=0, atol=1e-12)

    def test_unnormalized_row(self):
        cpts = dict(self.cpts, B=make_factor([A, B], [0.9, 0.2, 0.2, 0.8]))
        with self.assertRaises(CPTError):
            build_bn(self.dag, cpts)

    def test_scope_must_match_parents(self):
        cpts = dict(self.cpts, B=make_factor([B], [0.5, 0.5]))
        with self.assertRaises(StructureError):
            build_bn(self.dag, cpts)

    def test_cpts_must_cover_vertices(self):
        with self.assertRaises(StructureError):
            build_bn(self.dag, {'A': self.cpts['A']})


class EvidenceTests(SimpleTestCase):

    def test_aliases(self):
        self.assertEqual(resolve_state('L', 'Inland'), 'l2')
        self.assertEqual(resolve_state('T', 'not-morning'), 't1')
        self.assertEqual(resolve_state('S', 's3'), 's3')
        self.assertEqual(resolve_evidence({'season': 'winter', 'time': None, 'L': ''}), {'S': 's2'})

    def test_unknown_state(self):
        with self.assertRaisesMessage(EvidenceError, 'l0 (coastal)'):
            resolve_state('L', 'desert')

    def test_description(self):
        self.assertEqual(describe_evidence({'L': 'l2', 'S': 's2'}), 'Season=winter, Location=inland')
        self.assertEqual(describe_evidence({}), 'no evidence')


class ReferenceModelTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.model = load_reference()

    def test_joint_is_a_distribution(self):
        joint = self.model.joint()
        self.assertEqual(joint.names, ('S', 'T', 'L', 'R'))
        self.assertAlmostEqual(joint.total(), 1.0, delta=1e-9)

    def test_overall_risk(self):
        self.assertAlmostEqual(query_risk(self.model), 0.019, delta=0.001)

    def test_inland_winter(self):
        self.assertAlmostEqual(query_risk(self.model, {'L': 'inland', 'S': 'winter'}), 0.024, delta=0.002)

    def test_inland_coastal_ratio(self):
        ratio = risk_ratio(self.model, {'L': 'l2'}, {'L': 'l0'})
        self.assertAlmostEqual(ratio, 10.0, delta=1.5)

    def test_morning_break_share(self):
        share = posterior(self.model, 'T', {'R': 'r1'}).value({'T': 't0'})
        self.assertAlmostEqual(share, 0.56, delta=0.02)

    def test_break_cannot_be_evidence_for_risk(self):
        with self.assertRaises(EvidenceError):
            query_risk(self.model, {'R': 'r1'})

    def test_causes_are_independent(self):
        joint = self.model.joint()
        for x, y in (('S', 'T'), ('S', 'L'), ('T', 'L')):
            self.assertTrue(check_independence(joint, x, y))

    def test_query_matches_joint(self):
        joint = self.model.joint()
        cell = joint.values[2, 0, 2]
        self.assertAlmostEqual(query_risk(self.model, {'S': 's2', 'T': 't0', 'L': 'l2'}),
                               cell[1] / cell.sum(), delta=1e-12)

    def test_full_legs_sum_to_overall(self):
        legs = [Leg('coastal'), Leg('semi_coastal'), Leg('inland')]
        self.assertAlmostEqual(trip_risk(self.model, legs), query_risk(self.model), delta=1e-12)

    def test_trip_with_conditions(self):
        legs = [('coastal', 'not_morning', 'early_summer'), ('inland', 'morning', 'winter')]
        expected = sum(
            eliminate(self.model.factors, ['L', 'R'], {'T': t, 'S': s}).value({'L': l, 'R': 'r1'})
            for l, t, s in (('l0', 't1', 's0'), ('l2', 't0', 's2'))
        )
        self.assertAlmostEqual(trip_risk(self.model, legs), expected, delta=1e-12)

    def test_complement_combination(self):
        legs = [Leg('coastal'), Leg('inland')]
        total = trip_risk(self.model, legs)
        combined = trip_risk(self.model, legs, complement=True)
        self.assertLess(combined, total)
        self.assertAlmostEqual(combined, total, delta=1e-3)

    def test_bad_trips(self):
        with self.assertRaises(LegError):
            trip_risk(self.model, [])
        with self.assertRaises(LegError):
            trip_risk(self.model, [Leg('inland'), Leg('l2', time='morning')])


class RiskHelperTests(SimpleTestCase):

    def test_zero_denominator(self):
        risk = np.full((4, 2, 3), 0.02)
        risk[:, :, 0] = 0.0
        with self.assertRaises(RatioError):
            risk_ratio(toy_model(risk), {'L': 'l2'}, {'L': 'l0'})

    def test_normalized_percentage(self):
        shares = normalized_percentage([0.56, 0.44], [0.29, 0.71])
        self.assertAlmostEqual(shares[0], 0.757, delta=1e-3)
        self.assertAlmostEqual(sum(shares), 1.0, delta=1e-12)
        np.testing.assert_allclose(normalized_percentage([0.56, 0.44], [7 / 24, 17 / 24]), [0.76, 0.24], atol=0.01)

    def test_normalized_percentage_errors(self):
        for breaks, durations in (([0.5, 0.5], [1.0]), ([0.5, 0.5], [1.0, 0.0]),
                                  ([1.0, 0.0], [0.5, 0.5]), ([0.6, 0.6], [0.5, 0.5])):
            with self.subTest(breaks=breaks, durations=durations):
                with self.assertRaises(ShareError):
                    normalized_percentage(breaks, durations)


class FitTests(SimpleTestCase):

    def counts(self):
        rng = np.random.default_rng(11)
        exposures = rng.integers(500, 1500, size=(4, 2, 3))
        breaks = rng.binomial(exposures, 0.02)
        return CountTable(np.stack([exposures - breaks, breaks], axis=-1))

    def test_full_joint_without_smoothing_is_relative_frequency(self):
        counts = self.counts()
        joint = fit_full_joint(counts, alpha=0)
        np.testing.assert_allclose(joint.values, counts.counts / counts.total, atol=1e-15)

    def test_full_joint_smoothing(self):
        joint = fit_full_joint(CountTable.zeros(), alpha=1)
        np.testing.assert_allclose(joint.values, np.full((4, 2, 3, 2), 1 / 48), atol=1e-15)

    def test_factorized_fit(self):
        counts = self.counts()
        model = fit_factorized(counts, alpha=0)
        exposures = counts.exposures
        np.testing.assert_allclose(model.break_risk(), counts.breaks / exposures, atol=1e-12)
        np.testing.assert_allclose(model.prior('S').values, exposures.sum(axis=(1, 2)) / counts.total, atol=1e-12)
        self.assertAlmostEqual(model.joint().total(), 1.0, delta=1e-9)

    def test_empty_cell_without_smoothing(self):
        counts = self.counts().counts.copy()
        counts[1, 0, 2] = 0
        with self.assertRaises(UndefinedConditionalError) as caught:
            fit_factorized(CountTable(counts), alpha=0)
        self.assertEqual(caught.exception.cell, ('s1', 't0', 'l2'))
        model = fit_factorized(CountTable(counts), alpha=1)
        self.assertAlmostEqual(model.break_risk()[1, 0, 2], 0.5, delta=1e-12)

    def test_models_agree_on_cell_risk(self):
        counts = self.counts()
        factorized = fit_factorized(counts, alpha=0)
        full = JointRailBreakModel(fit_full_joint(counts, alpha=0))
        for evidence in ({'S': 's1', 'T': 't0', 'L': 'l0'}, {'S': 's3', 'T': 't1', 'L': 'l2'}):
            self.assertAlmostEqual(query_risk(full, evidence), query_risk(factorized, evidence), delta=1e-12)

    def test_fits_agree_on_factorized_data(self):
        generator = load_reference().joint()
        rng = np.random.default_rng(2015)
        counts = CountTable(rng.multinomial(200000, generator.values.ravel()).reshape(4, 2, 3, 2))
        full = fit_full_joint(counts, alpha=0)
        factorized = joint_of(fit_factorized(counts, alpha=0).net).reorder(list(full.names))
        np.testing.assert_allclose(factorized.values, full.values, rtol=0, atol=0.01)
        np.testing.assert_allclose(full.values, generator.values, rtol=0, atol=0.005)

    def test_count_table_validation(self):
        with self.assertRaises(StructureError):
            CountTable(np.zeros(47, dtype=int))
        with self.assertRaises(StructureError):
            CountTable(-np.ones((4, 2, 3, 2), dtype=int))
