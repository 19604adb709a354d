import unittest

import numpy as np

from paratomo import bos, predict, qsim, recovery
from paratomo.errors import ArgumentError, CapabilityError
from paratomo.tomo import ExactOracle, LocalCliffordShadows


def _family():
    H = qsim.nmr_hamiltonian(2, fields=[1, 2], couplings={(0, 1): 1})
    rho0 = qsim.plus_state(2)
    return H, rho0, bos.fourier_basis(H.e_max), (lambda t: qsim.evolve(H, rho0, t))


class TestDenseReports(unittest.TestCase):

    def setUp(self):
        _, _, self.basis, self.state_at = _family()
        plan = recovery.make_full_plan(self.basis, 0.1, 0.1, M=30)
        self.report = recovery.execute_plan(plan, self.state_at, ExactOracle(2), rng_seed=11)

    def test_weights_shape(self):
        weights = predict.prediction_weights(self.report, 1.0)
        self.assertEqual(weights.m.shape, (30,))
        self.assertAlmostEqual(weights.l1, float(np.abs(weights.m).sum()))

    def test_routes_agree_with_the_true_trajectory(self):
        for O in ("ZI", "XX", {"XX": 0.5, "YY": 0.5}, qsim.pauli_word("YZ")):
            for x in (0.0, 0.9, 4.2):
                with self.subTest(observable=str(O)[:12], x=x):
                    exact = float(np.real(qsim.expectation(self.state_at(x), qsim.observable_matrix(O))))
                    by_coefficients = predict.predict_expectation(self.report, O, x)
                    by_weights = predict.predict_expectation(self.report, O, x, route=predict.WEIGHTS)
                    self.assertAlmostEqual(by_coefficients, exact, places=8)
                    self.assertAlmostEqual(by_weights, by_coefficients, places=8)

    def test_point_outside_domain(self):
        with self.assertRaises(ArgumentError):
            predict.predict_expectation(self.report, "ZI", 7.0)

    def test_unknown_route(self):
        with self.assertRaises(ArgumentError):
            predict.predict_expectation(self.report, "ZI", 1.0, route="spline")

    def test_importance_sampling_needs_shadows(self):
        with self.assertRaises(CapabilityError):
            predict.predict_importance_sampled(self.report, "ZI", 1.0, 100)
        with self.assertRaises(ArgumentError):
            predict.predict_importance_sampled(self.report, "ZI", 1.0, 0)

    def test_trajectory_rows(self):
        rows = predict.trajectory_rows(self.report, {"z0": "ZI", "zz": "ZZ"}, [0.0, 1.0, 2.0])
        self.assertEqual(len(rows), 6)
        self.assertEqual({row["observable_id"] for row in rows}, {"z0", "zz"})
        self.assertTrue(all(row["stderr"] is None for row in rows))


class TestTermBudgets(unittest.TestCase):

    def test_shares_sum_to_the_budget(self):
        cases = {
            "even split, odd budget": ([(0.5, "XX"), (0.5, "YY")], 5, [3, 2]),
            "tiny weight": ([(1.0, "XX"), (1e-6, "YY")], 3, [3, 0]),
            "three terms": ([(1.0, "XI"), (-2.0, "IX"), (1.0, "ZZ")], 7, [2, 3, 2]),
            "zero weights": ([(0.0, "XX"), (0.0, "YY")], 4, [0, 0]),
        }
        for name, (terms, budget, expected) in cases.items():
            with self.subTest(name):
                self.assertEqual(predict._term_budgets(terms, budget), expected)


class TestShadowReports(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        _, _, basis, cls.state_at = _family()
        plan = recovery.make_full_plan(basis, 0.1, 0.1, M=30)
        procedure = LocalCliffordShadows(2, ell=1, snapshots=2000)
        cls.report = recovery.execute_plan(plan, cls.state_at, procedure, rng_seed=12)

    def test_matrix_observable_is_refused(self):
        with self.assertRaises(CapabilityError):
            predict.predict_expectation(self.report, np.eye(4), 1.0)

    def test_importance_sampling_tracks_the_deterministic_prediction(self):
        for O in ("ZI", {"ZI": 0.5, "IZ": 0.5}):
            with self.subTest(observable=str(O)):
                target = predict.predict_expectation(self.report, O, 0.7)
                sampled = predict.predict_importance_sampled(self.report, O, 0.7, 20000, rng_seed=1)
                self.assertEqual(sampled.evaluated, 20000)
                self.assertGreater(sampled.stderr, 0.0)
                self.assertAlmostEqual(float(sampled), target, delta=0.3)

    def test_odd_budget_is_spent_exactly(self):
        """Largest-remainder shares spend the whole budget on a Pauli sum."""
        sampled = predict.predict_importance_sampled(self.report, {"XX": 0.5, "YY": 0.5}, 0.7, 5, rng_seed=2)
        self.assertEqual(sampled.evaluated, 5)
        self.assertFalse(sampled.zero_weights)

    def test_routes_agree(self):
        by_coefficients = predict.predict_expectation(self.report, "ZZ", 2.5)
        by_weights = predict.predict_expectation(self.report, "ZZ", 2.5, route=predict.WEIGHTS)
        self.assertAlmostEqual(by_coefficients, by_weights, places=8)

    def test_sampled_trajectory_rows(self):
        rows = predict.trajectory_rows(self.report, {"z0": "ZI"}, [0.5, 1.5], budget=500, rng_seed=3)
        self.assertEqual(len(rows), 2)
        self.assertTrue(all(row["stderr"] is not None for row in rows))


if __name__ == '__main__':
    unittest.main()
