import unittest

import numpy as np

from paratomo import bos, channels, qsim, recovery
from paratomo.errors import ArgumentError, GuardExceededError
from paratomo.tomo import ExactOracle


class TestSuperoperators(unittest.TestCase):

    def test_vec_stacks_columns(self):
        np.testing.assert_array_equal(channels.vec(np.array([[1, 2], [3, 4]])), [1, 3, 2, 4])
        np.testing.assert_array_equal(channels.unvec([1, 3, 2, 4]), [[1, 2], [3, 4]])
        with self.assertRaises(ArgumentError):
            channels.unvec(np.arange(3))

    def test_kraus_action(self):
        flip = channels.superoperator_from_kraus([qsim.X])
        out = channels.channel_apply(flip, qsim.pure_state([1, 0]))
        np.testing.assert_allclose(out, np.diag([0, 1]))
        with self.assertRaises(ArgumentError):
            channels.channel_apply(flip, np.eye(4))

    def test_choi_probe_matches_direct_probe(self):
        C = channels.random_channel(1, rng_seed=3)
        for P in "IXYZ":
            for Q in "IXYZ":
                with self.subTest(P=P, Q=Q):
                    self.assertAlmostEqual(channels.pauli_transfer_probe(C, P, Q, route="choi"),
                                           channels.pauli_transfer_probe(C, P, Q), places=10)
        with self.assertRaises(ArgumentError):
            channels.pauli_transfer_probe(C, "X", "XZ")

    def test_pauli_transfer_matrix_of_depolarizing(self):
        R = channels.pauli_transfer_matrix(channels.depolarizing_channel(1, 0.25))
        np.testing.assert_allclose(R, np.diag([1.0, 0.75, 0.75, 0.75]), atol=1e-12)

    def test_is_cptp(self):
        cases = {
            "identity": (channels.identity_channel(1), True),
            "depolarizing": (channels.depolarizing_channel(2, 0.4), True),
            "random": (channels.random_channel(2, rng_seed=5), True),
            "scaled": (2 * channels.identity_channel(1), False),
        }
        for name, (C, expected) in cases.items():
            with self.subTest(name):
                self.assertEqual(channels.is_cptp(C), expected)

    def test_full_depolarization(self):
        out = channels.channel_apply(channels.depolarizing_channel(1), qsim.pure_state([1, 0]))
        np.testing.assert_allclose(out, np.eye(2) / 2, atol=1e-12)
        with self.assertRaises(ArgumentError):
            channels.depolarizing_channel(1, 1.5)

    def test_z_rotation(self):
        coefficients = channels.z_rotation_fourier_coefficients()
        theta = 0.83
        expansion = sum(A * np.exp(-1j * k * theta) for k, A in coefficients.items())
        np.testing.assert_allclose(expansion, channels.z_rotation_channel(theta), atol=1e-12)
        np.testing.assert_allclose(channels.hamiltonian_channel(qsim.Z / 2, theta),
                                   channels.z_rotation_channel(theta), atol=1e-12)


class TestTesterSeminorm(unittest.TestCase):

    def test_without_ancilla(self):
        testers = [(qsim.pure_state([1, 0]), qsim.Z)]
        self.assertAlmostEqual(channels.tester_seminorm(channels.identity_channel(1), testers), 1.0)
        self.assertAlmostEqual(channels.tester_seminorm(channels.depolarizing_channel(1), testers), 0.0)

    def test_with_ancilla(self):
        testers = [(channels.maximally_entangled_state(2), qsim.pauli_word("ZZ"))]
        self.assertAlmostEqual(channels.tester_seminorm(channels.identity_channel(1), testers), 1.0)
        self.assertAlmostEqual(channels.tester_seminorm(channels.depolarizing_channel(1), testers), 0.0)

    def test_argument_checks(self):
        with self.assertRaises(ArgumentError):
            channels.tester_seminorm(channels.identity_channel(1), [])
        with self.assertRaises(ArgumentError):
            channels.tester_seminorm(channels.identity_channel(2), [(np.eye(2) / 2, qsim.Z)])


class TestParametrizedChannels(unittest.TestCase):

    def setUp(self):
        self.basis = bos.fourier_basis(1)
        coefficients = channels.z_rotation_fourier_coefficients()
        self.channel = channels.ParametrizedChannel(self.basis, [-1, 0, 1], [coefficients[k] for k in (-1, 0, 1)])

    def test_evaluate(self):
        np.testing.assert_allclose(self.channel.evaluate(1.2), channels.z_rotation_channel(1.2), atol=1e-12)
        self.assertEqual(self.channel.n_qubits, 1)

    def test_apply(self):
        rho = qsim.plus_state(1).matrix
        U = np.diag([np.exp(-0.6j), np.exp(0.6j)])
        np.testing.assert_allclose(self.channel.apply(1.2, rho), U @ rho @ U.conj().T, atol=1e-12)

    def test_coefficient_count_mismatch(self):
        with self.assertRaises(ArgumentError):
            channels.ParametrizedChannel(self.basis, [0, 1], [np.eye(4)])

    def test_recover_channel(self):
        plan = recovery.make_full_plan(self.basis, 0.1, 0.1, M=12)
        A = bos.build_measurement_matrix(self.basis, bos.sample_measure(self.basis, 12, 0))
        observations = [channels.z_rotation_channel(x) for x in A.sample_points]
        report = channels.recover_channel(plan, observations, A)
        self.assertIsInstance(report.alpha_hat, channels.ParametrizedChannel)
        self.assertTrue(report.diagnostics["channel"])
        for k, expected in channels.z_rotation_fourier_coefficients().items():
            with self.subTest(k=k):
                np.testing.assert_allclose(report.alpha_hat.coefficient(k), expected, atol=1e-10)


class TestChannelTomography(unittest.TestCase):

    def test_exact_oracle_recovers_the_superoperator(self):
        for n in (1, 2):
            with self.subTest(n=n):
                C = channels.random_channel(n, rng_seed=n)
                estimate = channels.channel_tomography(C, ExactOracle(n), 0.1, 0.1, rng_seed=0)
                np.testing.assert_allclose(estimate, C, atol=1e-10)

    def test_qubit_cap(self):
        with self.assertRaises(GuardExceededError):
            channels.random_channel(4)


if __name__ == '__main__':
    unittest.main()
