import math
import unittest

import numpy as np

from paratomo import bos, qsim, recovery
from paratomo.errors import ArgumentError, CapabilityError, DomainError, SingularMatrixError
from paratomo.norms import local_pauli_list, pauli_list, trace_ball
from paratomo.tomo import ExactOracle, FullPauliTomography, LocalCliffordShadows


class TestSampleCounts(unittest.TestCase):

    def test_sparse_formula_variants(self):
        s, D, delta = 3, 9, 0.1
        tail = recovery.C2 * math.log(2 / delta)
        corollary = math.ceil(s * (recovery.C1 * math.log(300 * s) * math.log(4 * D) + tail))
        algorithm = math.ceil(s * (recovery.C1 * math.log(300 * s) ** 2 * math.log(4 * D) + tail))
        self.assertEqual(recovery.sample_count_sparse(s, D, 1.0, 1.0, delta, recovery.COROLLARY), corollary)
        self.assertEqual(recovery.sample_count_sparse(s, D, 1.0, 1.0, delta, recovery.ALGORITHM1), algorithm)

    def test_sparse_formula_arguments(self):
        cases = {
            "sparsity": dict(s=10, D=9, K=1.0, Delta=1.0, delta=0.1),
            "Delta": dict(s=2, D=9, K=1.0, Delta=1.5, delta=0.1),
            "delta": dict(s=2, D=9, K=1.0, Delta=1.0, delta=1.0),
        }
        for name, kwargs in cases.items():
            with self.subTest(name):
                with self.assertRaises(ArgumentError):
                    recovery.sample_count_sparse(**kwargs)
        with self.assertRaises(ArgumentError):
            recovery.sample_count_sparse(2, 9, 1.0, 1.0, 0.1, "lemma")

    def test_full_formula(self):
        self.assertEqual(recovery.sample_count_full(5, math.sqrt(2), 0.1),
                         math.ceil(11 * 5 * math.sqrt(2) ** 2 * math.log(2 * 5 / 0.1)))

    def test_theorem_mode_derives_M(self):
        basis = bos.fourier_basis(2)
        plan = recovery.make_sparse_plan(basis, [0, 1], 1.0, 0.1, 0.1, mode=recovery.THEOREM)
        self.assertEqual(plan.M, recovery.sample_count_sparse(2, 5, 1.0, 1.0, 0.1))
        full = recovery.make_full_plan(basis, 0.1, 0.1, mode=recovery.THEOREM)
        self.assertEqual(full.M, recovery.sample_count_full(5, 1.0, 0.1))
        self.assertTrue(full.full)
        self.assertEqual(full.labels, basis.index_set)

    def test_empirical_mode_needs_M(self):
        with self.assertRaises(ArgumentError):
            recovery.make_sparse_plan(bos.fourier_basis(1), [0], 1.0, 0.1, 0.1)

    def test_plan_rejects_foreign_labels(self):
        with self.assertRaises(DomainError):
            recovery.make_sparse_plan(bos.fourier_basis(1), [5], 1.0, 0.1, 0.1, M=10)

    def test_per_point_accuracy(self):
        plan = recovery.make_sparse_plan(bos.fourier_basis(1), [1, 0], 1.0, 0.3, 0.2, M=10)
        eps, dlt = plan.per_point
        self.assertAlmostEqual(eps, 0.3 / math.sqrt(6))
        self.assertAlmostEqual(dlt, 0.2 / 20)
        self.assertEqual(plan.support, (0, 1))

    def test_total_sample_count(self):
        plan = recovery.make_sparse_plan(bos.fourier_basis(1), [0], 1.0, 0.3, 0.2, M=10)
        self.assertEqual(recovery.total_sample_count(plan, ExactOracle(1)), 0)
        pauli = FullPauliTomography(1)
        self.assertEqual(recovery.total_sample_count(plan, pauli), 10 * pauli.sample_count(*plan.per_point))


class TestRecovery(unittest.TestCase):

    def setUp(self):
        self.H = qsim.nmr_hamiltonian(2, fields=[1, 2], couplings={(0, 1): 1})
        self.rho0 = qsim.plus_state(2)
        self.truth = qsim.fourier_coefficients(self.H, self.rho0)
        self.basis = bos.fourier_basis(self.H.e_max)
        self.state_at = lambda t: qsim.evolve(self.H, self.rho0, t)

    def test_full_recovery_is_exact_for_noise_free_data(self):
        plan = recovery.make_full_plan(self.basis, 0.1, 0.1, M=30)
        report = recovery.execute_plan(plan, self.state_at, ExactOracle(2), rng_seed=1)
        for k in self.basis.index_set:
            with self.subTest(k=k):
                np.testing.assert_allclose(report.alpha_hat.coefficient(k), self.truth.coefficient(k), atol=1e-10)
        self.assertLess(report.diagnostics["residual"], 1e-10)
        self.assertEqual(report.error_budget.total, 0.1)

    def test_truncated_support_error_is_bounded(self):
        """The error never exceeds out-of-support + spillover + noise."""
        plan = recovery.make_sparse_plan(self.basis, [-2, -1, 0, 1, 2], 1.0, 0.2, 0.1, M=40)
        point_rng, acquisition_rng = 3, 4
        points = bos.sample_measure(self.basis, plan.M, point_rng)
        A = bos.build_measurement_matrix(self.basis, points)
        states = [self.state_at(x) for x in points]
        procedure = FullPauliTomography(2, shots_per_pauli=200)
        observations = recovery.acquire_observations(procedure, states, plan, acquisition_rng)
        report = recovery.recover_sparse(plan, plan.support, observations, A)
        parts = recovery.error_decomposition(self.truth, report, states, local_pauli_list(2, 2))
        self.assertGreater(parts.out_of_support, 0.0)
        self.assertLessEqual(parts.error, parts.bound + 1e-10)

    def test_observation_count_must_match(self):
        plan = recovery.make_full_plan(self.basis, 0.1, 0.1, M=20)
        A = bos.build_measurement_matrix(self.basis, bos.sample_measure(self.basis, 20, 0))
        with self.assertRaises(ArgumentError):
            recovery.recover_full(plan, [self.rho0] * 19, A)

    def test_too_few_points_is_singular(self):
        plan = recovery.make_full_plan(self.basis, 0.1, 0.1, M=5)
        with self.assertRaises(SingularMatrixError):
            recovery.execute_plan(plan, self.state_at, ExactOracle(2), rng_seed=0)

    def test_shadow_backed_recovery(self):
        plan = recovery.make_sparse_plan(self.basis, list(self.basis.index_set), 1.0, 0.5, 0.1, M=30)
        procedure = LocalCliffordShadows(2, ell=1, snapshots=3000)
        report = recovery.execute_plan(plan, self.state_at, procedure, rng_seed=2)
        self.assertTrue(report.shadow_backed)
        points = np.linspace(0.0, 6.0, 7)
        estimate = np.real(report.alpha_hat.trajectory("ZI", points))
        exact = [np.real(qsim.expectation(self.state_at(t), qsim.pauli_word("ZI"))) for t in points]
        np.testing.assert_allclose(estimate, exact, atol=0.25)
        with self.assertRaises(CapabilityError):
            report.alpha_hat.trajectory(np.eye(4), points)
        dense = report.alpha_hat.densify()
        np.testing.assert_allclose(dense.trajectory("ZI", points), report.alpha_hat.trajectory("ZI", points),
                                   atol=1e-9)

    def test_shadow_error_needs_pauli_list(self):
        plan = recovery.make_sparse_plan(self.basis, [0], 1.0, 0.5, 0.1, M=3)
        report = recovery.execute_plan(plan, self.state_at, LocalCliffordShadows(2, snapshots=50), rng_seed=0)
        with self.assertRaises(CapabilityError):
            recovery.coefficient_error(self.truth, report.alpha_hat, trace_ball(2), 2)
        value = recovery.coefficient_error(self.truth, report.alpha_hat, pauli_list(["ZZ"]), 2)
        self.assertGreaterEqual(value, 0.0)

    def test_reduced_report(self):
        plan = recovery.make_full_plan(self.basis, 0.1, 0.1, M=30)
        report = recovery.execute_plan(plan, self.state_at, ExactOracle(2), rng_seed=5)
        reduced = recovery.reduce_report(report, [1])
        self.assertEqual(reduced.n_qubits, 1)
        np.testing.assert_allclose(reduced.evaluate(1.1), qsim.partial_trace(self.state_at(1.1), [1]), atol=1e-10)

    def test_coefficient_sidecar_payload(self):
        plan = recovery.make_full_plan(self.basis, 0.1, 0.1, M=30)
        report = recovery.execute_plan(plan, self.state_at, ExactOracle(2), rng_seed=6)
        arrays = report.coefficient_arrays()
        self.assertEqual(int(arrays["format_version"]), recovery.COEFFICIENT_FORMAT_VERSION)
        restored = recovery.operator_from_arrays(arrays)
        self.assertEqual(restored.basis, self.basis)
        np.testing.assert_allclose(restored.evaluate(0.4), report.alpha_hat.evaluate(0.4))
        arrays["format_version"] = np.array(99)
        with self.assertRaises(ArgumentError):
            recovery.operator_from_arrays(arrays)

    def test_observation_expectation(self):
        rho = qsim.pure_state([1, 0, 0, 0])
        self.assertAlmostEqual(recovery.observation_expectation(rho, "ZZ"), 1.0)
        self.assertAlmostEqual(recovery.observation_expectation(rho, {"ZI": 0.5, "IZ": 0.5}), 1.0)


class TestBudgetsAndRadii(unittest.TestCase):

    def test_error_budget(self):
        budget = recovery.ErrorBudget(0.1, 0.2, 0.3)
        self.assertAlmostEqual(budget.total, 0.6)
        with self.assertRaises(ArgumentError):
            recovery.ErrorBudget(-0.1, 0.0, 0.1)

    def test_deviation_bound(self):
        self.assertAlmostEqual(recovery.deviation_bound([0.3, 0.4], 2), 0.5)
        self.assertAlmostEqual(recovery.deviation_bound([0.3, -0.4], math.inf), 0.4)
        with self.assertRaises(ArgumentError):
            recovery.deviation_bound([], 2)

    def test_subgaussian_radius(self):
        n, sigma, tau, gamma = 2, 1.0, 0.5, 1e-3
        prefactor = 2 ** (n / 2 + 4) * tau * math.pi * sigma ** 2
        expected = max(2, math.ceil(1 + math.sqrt(8 * sigma ** 2 * math.log(prefactor / gamma))))
        radius = recovery.subgaussian_support_radius(n, sigma, tau, gamma)
        self.assertEqual(radius.R, expected)
        self.assertFalse(radius.vacuous)
        self.assertEqual(radius.labels(), tuple(range(-expected, expected + 1)))
        self.assertLessEqual(recovery.subgaussian_tail_bound(n, sigma, tau, radius.R), gamma)

    def test_vacuous_radius(self):
        with self.assertLogs(level='WARNING'):
            radius = recovery.subgaussian_support_radius(1, 0.1, 0.01, 10.0)
        self.assertTrue(radius.vacuous)
        self.assertEqual(int(radius), 2)

    def test_chebyshev_cutoff(self):
        n, J, gamma = 2, 0.5, 1e-3
        omega = 2.0 * 2 * n * math.sqrt(2 * n - 1) * J
        expected = max(math.ceil(math.e * omega), math.ceil(2 * n + 0.5 + math.log2(1 / gamma))) + 1
        self.assertEqual(recovery.chebyshev_support_cutoff(n, J, gamma), expected)

    def test_chebyshev_cutoff_with_F(self):
        F = qsim.on_site_fermionic_hamiltonian([0.2]).F
        self.assertAlmostEqual(recovery.fermionic_omega_max(1, 0.1, F), 0.4)

    def test_nmr_guarantee(self):
        self.assertAlmostEqual(recovery.nmr_guarantee(0.01, 0.2), 0.22)


if __name__ == '__main__':
    unittest.main()
