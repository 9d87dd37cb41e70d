import itertools
import string

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import (
    ConstructionError, DegenerateDistributionError, EvidenceError,
    ImpossibleEvidenceError, ScopeConflictError, UnknownVariableError,
)
from .factor import (
    Factor, Variable, make_factor, marginalize, marginalize_to, normalize,
    product, reduce, unit_factor,
)
from .inference import (
    bayes_posterior, check_independence, elimination_order, eliminate, evidence_mass,
)

X = Variable('X', ('a', 'b'))
Y = Variable('Y', ('c', 'd'))
Z = Variable('Z', ('e', 'f', 'g'))


def random_factor(rng, scope):
    size = int(np.prod([v.cardinality for v in scope]))
    return make_factor(scope, rng.random(size))


class VariableTests(SimpleTestCase):

    def test_needs_two_distinct_states(self):
        with self.assertRaises(ConstructionError):
            Variable('A', ('only',))
        with self.assertRaises(ConstructionError):
            Variable('A', ('x', 'x'))

    def test_unknown_state_lists_legal_states(self):
        with self.assertRaisesMessage(EvidenceError, 'legal states: a, b'):
            X.index('z')


class MakeFactorTests(SimpleTestCase):

    def test_break_distribution(self):
        r = Variable('R', ('r0', 'r1'))
        f = make_factor([r], [0.981, 0.019])
        self.assertTrue(f.is_distribution())
        self.assertEqual(f.value({'R': 'r1'}), 0.019)

    def test_unnormalized_factor(self):
        f = make_factor([X], [1, 1])
        self.assertEqual(f.total(), 2.0)
        self.assertFalse(f.is_distribution())

    def test_row_major_lookup(self):
        f = make_factor([X, Y], [0.1, 0.2, 0.3, 0.4])
        self.assertEqual(f.value({'X': 'b', 'Y': 'c'}), 0.3)
        self.assertEqual(f.flat(), [0.1, 0.2, 0.3, 0.4])

    def test_rejects_bad_values(self):
        for values in ([0.5], [0.1, 0.2, 0.3], [0.5, -0.1, 0.3, 0.3], [np.nan, 0, 0, 0], [np.inf, 0, 0, 0]):
            with self.subTest(values=values):
                with self.assertRaises(ConstructionError):
                    make_factor([X, Y], values)

    def test_rejects_duplicate_scope(self):
        with self.assertRaises(ConstructionError):
            make_factor([X, X], [1, 1, 1, 1])

    def test_values_are_read_only(self):
        f = make_factor([X], [1, 2])
        with self.assertRaises(ValueError):
            f.values[0] = 5

    def test_cpt_check(self):
        cpt = make_factor([Y, X], [0.2, 0.8, 0.6, 0.4])
        self.assertTrue(cpt.is_cpt('X'))
        self.assertFalse(cpt.is_cpt('Y'))


class ProductTests(SimpleTestCase):

    def test_matches_hand_multiplication(self):
        rng = np.random.default_rng(1)
        f = random_factor(rng, [X, Y])
        g = random_factor(rng, [Y, Z])
        h = product(f, g)
        self.assertEqual(h.names, ('X', 'Y', 'Z'))
        for x, y, z in itertools.product(X.states, Y.states, Z.states):
            expected = f.value({'X': x, 'Y': y}) * g.value({'Y': y, 'Z': z})
            self.assertAlmostEqual(h.value({'X': x, 'Y': y, 'Z': z}), expected, places=15)

    def test_uniform_absorbs(self):
        rng = np.random.default_rng(2)
        g = random_factor(rng, [X])
        h = product(make_factor([X], [0.5, 0.5]), g)
        np.testing.assert_allclose(h.values, g.values / 2, atol=1e-15)

    def test_identity_commutative_associative(self):
        rng = np.random.default_rng(3)
        f, g, k = random_factor(rng, [X, Y]), random_factor(rng, [Z]), random_factor(rng, [Y, Z])
        self.assertEqual(product(f, unit_factor()), f)
        self.assertTrue(product(f, g).allclose(product(g, f)))
        self.assertTrue(product(product(f, g), k).allclose(product(f, product(g, k))))

    def test_scope_conflict(self):
        other_x = Variable('X', ('a', 'b', 'c'))
        with self.assertRaises(ScopeConflictError):
            product(make_factor([X], [1, 1]), make_factor([other_x], [1, 1, 1]))

    def test_rail_joint_scope(self):
        s = Variable('S', ('s0', 's1', 's2', 's3'))
        t = Variable('T', ('t0', 't1'))
        l = Variable('L', ('l0', 'l1', 'l2'))
        r = Variable('R', ('r0', 'r1'))
        rng = np.random.default_rng(4)
        risk = rng.uniform(0.001, 0.05, size=(4, 2, 3))
        partial = product(product(make_factor([s, t, l, r], np.stack([1 - risk, risk], -1)),
                                  make_factor([t], [7 / 24, 17 / 24])),
                          make_factor([l], [1 / 3] * 3))
        joint = product(make_factor([s], [0.25] * 4), partial)
        self.assertEqual(set(joint.names), {'S', 'T', 'L', 'R'})
        self.assertAlmostEqual(joint.total(), 1.0, delta=1e-9)


class MarginalizeTests(SimpleTestCase):

    def test_recovers_break_marginal(self):
        t = Variable('T', ('t0', 't1'))
        r = Variable('R', ('r0', 'r1'))
        joint = product(make_factor([t], [7 / 24, 17 / 24]), make_factor([r], [0.981, 0.019]))
        np.testing.assert_allclose(marginalize(joint, 'T').values, [0.981, 0.019], atol=1e-12)

    def test_only_variable_gives_scalar(self):
        f = marginalize(make_factor([X], [0.3, 0.7]), 'X')
        self.assertTrue(f.is_scalar)
        self.assertAlmostEqual(f.item(), 1.0, delta=1e-12)

    def test_order_does_not_matter_and_mass_is_kept(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            f = random_factor(rng, [X, Y, Z])
            a = marginalize(marginalize(f, 'X'), 'Z')
            b = marginalize(marginalize(f, 'Z'), 'X')
            self.assertTrue(a.allclose(b, 1e-12))
            for v in ('X', 'Y', 'Z'):
                self.assertAlmostEqual(marginalize(f, v).total(), f.total(), delta=1e-12)

    def test_marginalize_to_orders_result(self):
        rng = np.random.default_rng(6)
        f = random_factor(rng, [X, Y, Z])
        kept = marginalize_to(f, ['Z', 'X'])
        self.assertEqual(kept.names, ('Z', 'X'))
        np.testing.assert_allclose(kept.values, f.values.sum(axis=1).T, atol=1e-12)

    def test_unknown_variable(self):
        with self.assertRaises(UnknownVariableError):
            marginalize(make_factor([X], [1, 1]), 'Q')


class ReduceTests(SimpleTestCase):

    def test_empty_evidence_is_identity(self):
        f = make_factor([X, Y], [0.1, 0.2, 0.3, 0.4])
        self.assertEqual(reduce(f, {}), f)

    def test_conditioning(self):
        f = make_factor([X, Y], [0.1, 0.2, 0.3, 0.4])
        conditional = normalize(reduce(f, {'Y': 'd'}))
        self.assertEqual(conditional.names, ('X',))
        np.testing.assert_allclose(conditional.values, [0.2 / 0.6, 0.4 / 0.6], atol=1e-12)

    def test_full_reduction_is_point_lookup(self):
        f = make_factor([X, Y], [0.1, 0.2, 0.3, 0.4])
        self.assertEqual(reduce(f, {'X': 'b', 'Y': 'd'}).item(), 0.4)

    def test_bad_evidence(self):
        f = make_factor([X], [1, 1])
        with self.assertRaises(EvidenceError):
            reduce(f, {'Q': 'a'})
        with self.assertRaises(EvidenceError):
            reduce(f, {'X': 'z'})


class NormalizeTests(SimpleTestCase):

    def test_examples(self):
        np.testing.assert_allclose(normalize(make_factor([X], [2, 2])).values, [0.5, 0.5])
        np.testing.assert_allclose(normalize(make_factor([X], [56, 44])).values, [0.56, 0.44])

    def test_zero_mass(self):
        with self.assertRaises(DegenerateDistributionError):
            normalize(make_factor([X], [0, 0]))


class BayesTests(SimpleTestCase):

    def test_flat_prior(self):
        likelihood = make_factor([X], [0.2, 0.6])
        prior = make_factor([X], [0.5, 0.5])
        posterior = bayes_posterior(likelihood, prior, 0.4)
        np.testing.assert_allclose(posterior.values, [0.25, 0.75], atol=1e-12)

    def test_morning_break_arithmetic(self):
        r = Variable('R', ('r0', 'r1'))
        likelihood = make_factor([r], [(7 / 24 - 0.56 * 0.019) / 0.981, 0.56])
        prior = make_factor([r], [0.981, 0.019])
        posterior = bayes_posterior(likelihood, prior, 7 / 24)
        self.assertAlmostEqual(posterior.value({'R': 'r1'}), 0.56 * 0.019 / (7 / 24), delta=1e-12)
        self.assertAlmostEqual(posterior.value({'R': 'r1'}), 0.0365, delta=1e-4)

    def test_certain_evidence(self):
        posterior = bayes_posterior(make_factor([X], [1, 0]), make_factor([X], [0.3, 0.7]), 0.3)
        np.testing.assert_allclose(posterior.values, [1.0, 0.0], atol=1e-12)

    def test_zero_marginal(self):
        with self.assertRaises(DegenerateDistributionError):
            bayes_posterior(make_factor([X], [0, 0]), make_factor([X], [0.5, 0.5]), 0.0)

    def test_agrees_with_reduce_and_normalize(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            joint = normalize(random_factor(rng, [X, Z]))
            prior = marginalize(joint, 'Z')
            for z in Z.states:
                slab = reduce(joint, {'Z': z})
                marginal = marginalize_to(joint, ['Z']).value({'Z': z})
                likelihood = Factor(prior.scope, slab.values / prior.values)
                expected = normalize(slab)
                self.assertTrue(bayes_posterior(likelihood, prior, marginal).allclose(expected, 1e-9))
                self.assertTrue(normalize(product(likelihood, prior)).allclose(expected, 1e-9))


class IndependenceTests(SimpleTestCase):

    def test_outer_product_is_independent(self):
        joint = product(make_factor([X], [0.3, 0.7]), make_factor([Y], [0.6, 0.4]))
        self.assertTrue(check_independence(joint, 'X', 'Y'))

    def test_correlated_is_dependent(self):
        joint = make_factor([X, Y], [0.5, 0, 0, 0.5])
        self.assertFalse(check_independence(joint, 'X', 'Y'))

    def test_conditional_independence_in_a_chain(self):
        rng = np.random.default_rng(8)
        px = normalize(random_factor(rng, [X]))
        pz_x = make_factor([X, Z], [0.1, 0.3, 0.6, 0.5, 0.2, 0.3])
        py_z = make_factor([Z, Y], [0.9, 0.1, 0.4, 0.6, 0.2, 0.8])
        joint = product(product(px, pz_x), py_z)
        self.assertTrue(check_independence(joint, 'X', 'Y', given='Z'))
        self.assertFalse(check_independence(joint, 'X', 'Y'))

    def test_unknown_variable(self):
        with self.assertRaises(UnknownVariableError):
            check_independence(make_factor([X, Y], [0.25] * 4), 'X', 'Q')


class EliminationOrderTests(SimpleTestCase):

    def test_chain(self):
        factors = [make_factor([X, Y], [1] * 4), make_factor([Y, Z], [1] * 6)]
        self.assertEqual(elimination_order(factors, ['X', 'Y', 'Z']), ['X', 'Y', 'Z'])

    def test_star_hub_goes_last(self):
        hub = Variable('E', ('0', '1'))
        leaves = [Variable(n, ('0', '1')) for n in 'DCB']
        factors = [make_factor([hub, leaf], [1] * 4) for leaf in leaves]
        self.assertEqual(elimination_order(factors, ['E', 'B', 'C', 'D']), ['B', 'C', 'D', 'E'])

    def test_degree_ties_break_by_name(self):
        # Once two leaves are gone the hub and the last leaf both have degree 1.
        hub = Variable('A', ('0', '1'))
        leaves = [Variable(n, ('0', '1')) for n in 'DCB']
        factors = [make_factor([hub, leaf], [1] * 4) for leaf in leaves]
        self.assertEqual(elimination_order(factors, ['A', 'B', 'C', 'D']), ['B', 'C', 'A', 'D'])


def random_network(rng):
    """Random BN as (variables, cpts) where each cpt is (scope, array laid out along scope)"""
    count = int(rng.integers(2, 7))
    variables = [Variable(string.ascii_uppercase[i], tuple(f"v{k}" for k in range(int(rng.integers(2, 5)))))
                 for i in range(count)]
    cpts = []
    for i, child in enumerate(variables):
        earlier = list(range(i))
        chosen = rng.permutation(earlier)[:int(rng.integers(0, min(3, i) + 1))] if earlier else []
        scope = [child] + [variables[p] for p in chosen]
        order = rng.permutation(len(scope))
        scope = [scope[k] for k in order]
        table = rng.random([v.cardinality for v in scope]) + 0.05
        table = table / table.sum(axis=scope.index(child), keepdims=True)
        cpts.append((scope, table))
    return variables, cpts


def enumerate_joint(variables, cpts):
    """Full joint by einsum over the raw tables, indexed by variable position"""
    letters = {v.name: string.ascii_lowercase[i] for i, v in enumerate(variables)}
    inputs = ','.join(''.join(letters[v.name] for v in scope) for scope, _ in cpts)
    output = ''.join(letters[v.name] for v in variables)
    return np.einsum(f"{inputs}->{output}", *[table for _, table in cpts])


class EliminationTests(SimpleTestCase):

    def test_single_factor(self):
        f = make_factor([X], [3, 1])
        np.testing.assert_allclose(eliminate([f], ['X']).values, [0.75, 0.25])

    def test_impossible_evidence(self):
        f = make_factor([X, Y], [0.5, 0.0, 0.5, 0.0])
        with self.assertRaises(ImpossibleEvidenceError) as caught:
            eliminate([f], ['X'], {'Y': 'd'})
        self.assertEqual(caught.exception.evidence, {'Y': 'd'})
        self.assertIn('Y=d', str(caught.exception))

    def test_query_cannot_be_evidence(self):
        with self.assertRaises(EvidenceError):
            eliminate([make_factor([X], [1, 1])], ['X'], {'X': 'a'})

    def test_evidence_must_appear_in_a_factor(self):
        with self.assertRaises(EvidenceError):
            eliminate([make_factor([X], [1, 1])], ['X'], {'Y': 'c'})

    def test_evidence_mass(self):
        f = make_factor([X, Y], [0.1, 0.2, 0.3, 0.4])
        self.assertAlmostEqual(evidence_mass([f], {'Y': 'd'}), 0.6, delta=1e-12)
        self.assertAlmostEqual(evidence_mass([f], {}), 1.0, delta=1e-12)

    def test_matches_brute_force_on_random_networks(self):
        rng = np.random.default_rng(2015)
        checked = 0
        for _ in range(500):
            variables, cpts = random_network(rng)
            factors = [make_factor(scope, table.ravel()) for scope, table in cpts]
            joint = enumerate_joint(variables, cpts)
            self.assertAlmostEqual(joint.sum(), 1.0, delta=1e-9)
            names = [v.name for v in variables]

            for q, query in enumerate(variables):
                others = [i for i in range(len(variables)) if i != q]
                for size in range(3):
                    for subset in itertools.combinations(others, size):
                        states = {i: int(rng.integers(variables[i].cardinality)) for i in subset}
                        index = tuple(states.get(i, slice(None)) for i in range(len(variables)))
                        sliced = joint[index]
                        free = [i for i in range(len(variables)) if i not in states]
                        axis = tuple(k for k, i in enumerate(free) if i != q)
                        expected = sliced.sum(axis=axis) if axis else sliced
                        expected = expected / expected.sum()

                        evidence = {names[i]: variables[i].states[s] for i, s in states.items()}
                        result = eliminate(factors, [query.name], evidence)
                        np.testing.assert_allclose(result.values, expected, rtol=0, atol=1e-9)
                        checked += 1
        self.assertGreater(checked, 500)
