import math
import unittest

import numpy as np

from paratomo import qsim
from paratomo.errors import ArgumentError
from paratomo.tomo import (
    ExactOracle,
    FullPauliTomography,
    LocalCliffordShadows,
    ShadowData,
    acquire,
    fermionic_shadow_sample_count,
    make_procedure,
    shadow_norm_bound,
    shadow_sample_count,
)
from paratomo.tomo.pauli import project_to_states
from paratomo.tomo.shadows import SHADOW_CONSTANT, measurement_probabilities, mom_batches


class TestProcedureFactory(unittest.TestCase):

    def test_make_procedure(self):
        self.assertIsInstance(make_procedure("exact", 2), ExactOracle)
        self.assertIsInstance(make_procedure("pauli", 2, shots_per_pauli=10), FullPauliTomography)
        self.assertIsInstance(make_procedure("shadows", 2, ell=1), LocalCliffordShadows)

    def test_guaranteed_observable_sets(self):
        self.assertEqual(ExactOracle(2).obs_set.kind, "trace")
        self.assertEqual(FullPauliTomography(2).obs_set.kind, "trace")
        local = LocalCliffordShadows(3, ell=2).obs_set
        self.assertEqual((local.kind, local.ell), ("local", 2))
        self.assertEqual(LocalCliffordShadows(1, ell=2).obs_set.ell, 1)

    def test_unknown_procedure(self):
        with self.assertRaises(ArgumentError):
            make_procedure("mps", 2)

    def test_accuracy_arguments_checked(self):
        rho = qsim.plus_state(1)
        for epsilon, delta in ((0.0, 0.1), (0.1, 1.0), (1.5, 0.1)):
            with self.subTest(epsilon=epsilon, delta=delta):
                with self.assertRaises(ArgumentError):
                    acquire(ExactOracle(1), rho, epsilon, delta)

    def test_shape_mismatch(self):
        with self.assertRaises(ArgumentError):
            acquire(ExactOracle(2), qsim.plus_state(1), 0.1, 0.1)


class TestExactAndPauli(unittest.TestCase):

    def test_exact_oracle_returns_the_state(self):
        rho = qsim.random_density_matrix(2, rng_seed=0)
        estimate = acquire(ExactOracle(2), rho, 0.1, 0.1)
        np.testing.assert_array_equal(estimate.dense(), rho.matrix)
        self.assertEqual(estimate.copies, 0)
        self.assertEqual(ExactOracle(2).sample_count(0.1, 0.1), 0)

    def test_pauli_shot_formula(self):
        proc = FullPauliTomography(1)
        m = 3
        self.assertEqual(proc.shots_for(0.1, 0.05), math.ceil(2.0 * m * math.log(2.0 * m / 0.05) / 0.1 ** 2))
        self.assertEqual(proc.sample_count(0.1, 0.05), m * proc.shots_for(0.1, 0.05))

    def test_pauli_estimate_is_accurate(self):
        rho = qsim.random_density_matrix(2, rng_seed=1)
        estimate = acquire(FullPauliTomography(2), rho, 0.2, 0.1, rng_seed=2)
        self.assertLessEqual(qsim.trace_norm(estimate.dense() - rho.matrix), 0.2)

    def test_pauli_estimate_is_a_state(self):
        rho = qsim.plus_state(2)
        estimate = acquire(FullPauliTomography(2, shots_per_pauli=20), rho, 0.2, 0.1, rng_seed=3)
        qsim.DensityOperator(estimate.dense()).validate(herm_tol=1e-10, trace_tol=1e-10)
        self.assertEqual(estimate.copies, 15 * 20)

    def test_projection_of_negative_matrix(self):
        projected = project_to_states(np.diag([-1.0, -2.0]))
        np.testing.assert_allclose(projected, np.eye(2) / 2)

    def test_dense_estimate_expectation(self):
        estimate = acquire(ExactOracle(1), qsim.pure_state([1, 0]), 0.1, 0.1)
        self.assertAlmostEqual(estimate.expectation("Z"), 1.0)
        self.assertAlmostEqual(estimate.expectation(qsim.X), 0.0)


class TestShadows(unittest.TestCase):

    def test_sample_count_formula(self):
        self.assertEqual(shadow_sample_count(0.1, 0.1, 4, 2),
                         math.ceil(34 * 2 * 12 ** 2 / 0.1 ** 2 * math.log(4 / 0.1)))
        # ell = 0 keeps the 1/epsilon^2 log(n/delta) scaling.
        self.assertEqual(shadow_sample_count(0.5, 0.1, 2, 0), math.ceil(34 * 1 * 12 ** 0 / 0.5 ** 2 * math.log(2 / 0.1)))

    def test_fermionic_count_formula(self):
        self.assertEqual(fermionic_shadow_sample_count(0.5, 0.1, 4, 2),
                         math.ceil(34 * 4 ** 2 * 2 ** 1.5 / 0.5 ** 2 * math.log(4 / 0.1)))

    def test_budget_arguments(self):
        with self.assertRaises(ArgumentError):
            shadow_sample_count(0.1, 0.1, 0, 1)

    def test_norm_bound(self):
        self.assertEqual(shadow_norm_bound("XIZ"), 16.0)
        self.assertEqual(shadow_norm_bound(2 * np.eye(2), ell=1), 16.0)
        with self.assertRaises(ArgumentError):
            shadow_norm_bound(np.eye(2))

    def test_measurement_probabilities(self):
        rho = qsim.plus_state(1).matrix
        np.testing.assert_allclose(measurement_probabilities(rho, [0]), [1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(measurement_probabilities(rho, [2]), [0.5, 0.5], atol=1e-12)
        plus_i = qsim.pure_state([1, 1j]).matrix
        np.testing.assert_allclose(measurement_probabilities(plus_i, [1]), [1.0, 0.0], atol=1e-12)

    def test_snapshot_values(self):
        data = ShadowData(2, [[0, 2], [2, 2], [2, 0]], [[0, 1], [1, 1], [0, 0]])
        np.testing.assert_allclose(data.snapshot_values("IZ"), [-3.0, -3.0, 0.0])
        np.testing.assert_allclose(data.snapshot_values("ZZ"), [0.0, 9.0, 0.0])
        np.testing.assert_allclose(data.snapshot_values("II"), [1.0, 1.0, 1.0])
        with self.assertRaises(ArgumentError):
            data.snapshot_values("Z")

    def test_invalid_records(self):
        with self.assertRaises(ArgumentError):
            ShadowData(1, [[3]], [[0]])
        with self.assertRaises(ArgumentError):
            ShadowData(1, [[0]], [[2]])

    def test_shadow_estimates_are_unbiased(self):
        rho = qsim.random_density_matrix(2, rng_seed=4)
        proc = LocalCliffordShadows(2, ell=2, snapshots=30000)
        data = acquire(proc, rho, 0.1, 0.1, rng_seed=5)
        self.assertEqual(len(data), 30000)
        for label in ("ZI", "XY", "ZZ"):
            with self.subTest(label=label):
                exact = np.real(qsim.expectation(rho, qsim.pauli_word(label)))
                self.assertAlmostEqual(data.expectation(label), exact, delta=0.1)
                self.assertAlmostEqual(data.expectation(label, batches=5), exact, delta=0.15)

    def test_dense_reconstruction_matches_snapshot_means(self):
        rho = qsim.random_density_matrix(2, rng_seed=6)
        data = acquire(LocalCliffordShadows(2, snapshots=200), rho, 0.1, 0.1, rng_seed=7)
        dense = data.dense()
        for label in ("XI", "YZ", "ZZ"):
            with self.subTest(label=label):
                direct = float(np.real(np.trace(qsim.pauli_word(label) @ dense)))
                self.assertAlmostEqual(direct, data.snapshot_values(label).mean())

    def test_serialized_forms_restore_the_records(self):
        data = acquire(LocalCliffordShadows(3, snapshots=25), qsim.plus_state(3), 0.1, 0.1, rng_seed=8)
        for restored in (ShadowData.from_json(data.to_json()), ShadowData.from_bytes(data.to_bytes())):
            with self.subTest(kind=type(restored).__name__):
                np.testing.assert_array_equal(restored.bases, data.bases)
                np.testing.assert_array_equal(restored.outcomes, data.outcomes)

    def test_unknown_format_version(self):
        with self.assertRaises(ArgumentError):
            ShadowData.from_dict({"format": "paratomo-shadow", "version": 99, "n_qubits": 1, "snapshots": []})

    def test_median_of_means_envelope(self):
        """With 34 ||O||^2 / epsilon^2 snapshots per batch, all Paulis land within epsilon often enough."""
        epsilon, delta, reps = 0.3, 0.2, 40
        labels = qsim.all_pauli_labels(2)[1:]
        batches = mom_batches(delta, len(labels))
        per_batch = math.ceil(SHADOW_CONSTANT * max(shadow_norm_bound(label) for label in labels) / epsilon ** 2)
        rho = qsim.random_density_matrix(2, rng_seed=12)
        exact = {label: float(np.real(qsim.expectation(rho, qsim.pauli_word(label)))) for label in labels}
        proc = LocalCliffordShadows(2, snapshots=batches * per_batch)
        misses = 0
        for seed in range(reps):
            data = acquire(proc, rho, epsilon, delta, rng_seed=100 + seed)
            misses += max(abs(data.expectation(label, batches) - exact[label]) for label in labels) > epsilon
        self.assertLessEqual(misses / reps, delta + 0.1)

    def test_mom_batches(self):
        self.assertEqual(mom_batches(0.1), math.ceil(2.0 * math.log(2.0 * 1 / 0.1)))
        self.assertEqual(mom_batches(0.99, 1), 2)


if __name__ == '__main__':
    unittest.main()
