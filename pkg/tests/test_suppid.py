import math
import unittest

import numpy as np

from paratomo import bos, qsim, suppid
from paratomo.csolve import rip_bound_certificate, rip_constant_bruteforce
from paratomo.errors import ArgumentError, GuardExceededError, RipNotCertifiedError


def _two_level_family(seed, M=40):
    """Superposition of energies 0 and 1: the Fourier support is {-1, 0, 1}."""
    rng = np.random.default_rng(seed)
    H = qsim.nmr_hamiltonian(2, fields=[1, 2])
    psi = np.zeros(4, dtype=complex)
    psi[[0, 2]] = rng.uniform(0.6, 1.0, size=2) * np.exp(1j * rng.uniform(0, 2 * np.pi, size=2))
    rho0 = qsim.pure_state(psi)
    basis = bos.fourier_basis(H.e_max)
    A = bos.build_measurement_matrix(basis, bos.sample_measure(basis, M, rng))
    states = [qsim.evolve(H, rho0, x) for x in A.sample_points]
    return H, rho0, basis, A, states


class TestHelpers(unittest.TestCase):

    def test_probe_count(self):
        self.assertEqual(suppid.probe_count(7, 0.1, 0.5, 0.0),
                         math.ceil(math.log(2 * 7 / 0.1) * (1 + 0.0) ** 2 / (2 * 0.5 ** 4)))
        with self.assertRaises(ArgumentError):
            suppid.probe_count(7, 0.1, 0.5, -1.0)

    def test_top_s_ties(self):
        np.testing.assert_array_equal(suppid.top_s([0.5, 1.0, 1.0, 1.0], 2), [1, 2])

    def test_coefficient_bound_check(self):
        self.assertTrue(suppid.coefficient_bound_check(1.0 + 1e-12, 0.0))
        with self.assertLogs(level='WARNING'):
            self.assertFalse(suppid.coefficient_bound_check(1.5, 0.2))

    def test_sigma_s(self):
        self.assertAlmostEqual(suppid.sigma_s([3.0, -1.0, 0.5, 2.0], 2), 1.5)
        self.assertEqual(suppid.sigma_s([1.0, 2.0], 2), 0.0)

    def test_flatness(self):
        self.assertAlmostEqual(suppid.flatness([1.0, -1.0, 1.0, 1.0]), 1.0)
        self.assertAlmostEqual(suppid.flatness([1.0, 0.0, 0.0, 0.0]), 0.5)
        self.assertEqual(suppid.flatness(np.zeros(4)), 1.0)

    def test_hs_estimator_is_exact(self):
        for seed in range(3):
            with self.subTest(seed=seed):
                exact, sampled = suppid.hs_norm_estimator_check(qsim.random_hermitian(2, seed))
                self.assertAlmostEqual(exact, sampled, places=10)

    def test_normalized_hs_norm(self):
        self.assertAlmostEqual(suppid.normalized_hs_norm(qsim.Z / 2), 0.5)


class TestIdentifySupport(unittest.TestCase):

    def test_exhaustive_identification(self):
        for seed in range(3):
            with self.subTest(seed=seed):
                _, _, basis, A, states = _two_level_family(seed)
                estimate = suppid.identify_support(states, A.entries, 3, exhaustive=True, labels=basis.index_set)
                self.assertEqual(tuple(estimate.S), (-1, 0, 1))
                self.assertEqual(estimate.L, 16)
                self.assertGreater(estimate.gap, 0.0)
                self.assertEqual(estimate.seeds["mode"], "exhaustive")

    def test_xhat_matches_normalized_norms(self):
        H, rho0, basis, A, states = _two_level_family(4)
        estimate = suppid.identify_support(states, A.entries, 3, exhaustive=True, labels=basis.index_set)
        truth = qsim.fourier_coefficients(H, rho0)
        for k, value in zip(basis.index_set, estimate.xhat):
            with self.subTest(k=k):
                self.assertAlmostEqual(value, suppid.normalized_hs_norm(truth.coefficient(k)), places=6)

    def test_random_probes(self):
        _, _, basis, A, states = _two_level_family(5)
        estimate = suppid.identify_support(states, A.entries, 3, L=64, rng_seed=9, labels=basis.index_set)
        self.assertEqual(tuple(estimate.S), (-1, 0, 1))
        self.assertEqual(len(estimate.seeds["probes"]), 64)
        again = suppid.identify_support(states, A.entries, 3, L=64, rng_seed=9, labels=basis.index_set)
        np.testing.assert_array_equal(again.xhat, estimate.xhat)
        self.assertTrue(0.0 <= estimate.local_support_rate <= 1.0)
        self.assertIn('"S"', estimate.to_json())

    def test_full_support_short_circuit(self):
        _, _, basis, A, states = _two_level_family(0, M=10)
        estimate = suppid.identify_support(states, A.entries, basis.size, L=2, rng_seed=0, labels=basis.index_set)
        self.assertEqual(estimate.S, basis.index_set)
        self.assertEqual(estimate.gap, float("inf"))

    def test_strict_mode_refuses_uncertified_matrix(self):
        _, _, basis, A, states = _two_level_family(1)
        bad = rip_bound_certificate(A.normalized(), 7, 0.9)
        with self.assertRaises(RipNotCertifiedError) as ctx:
            suppid.identify_support(states, A.entries, 3, L=4, rng_seed=0, strict=True, certificate=bad)
        self.assertAlmostEqual(ctx.exception.delta, 0.9)
        with self.assertLogs(level='WARNING'):
            suppid.identify_support(states, A.entries, 3, L=4, rng_seed=0, certificate=bad)

    def test_argument_checks(self):
        _, _, basis, A, states = _two_level_family(2)
        with self.subTest("observation count"):
            with self.assertRaises(ArgumentError):
                suppid.identify_support(states[:-1], A.entries, 3, L=4)
        with self.subTest("sparsity"):
            with self.assertRaises(ArgumentError):
                suppid.identify_support(states, A.entries, 0, L=4)
        with self.subTest("probe count"):
            with self.assertRaises(ArgumentError):
                suppid.identify_support(states, A.entries, 3)

    def test_exhaustive_guard(self):
        states = [np.eye(32) / 32] * 3
        with self.assertRaises(GuardExceededError):
            suppid.identify_support(states, np.ones((3, 2)), 1, exhaustive=True)

    def test_relabeling_permutes_the_support(self):
        _, _, basis, A, states = _two_level_family(6)
        perm = np.random.default_rng(6).permutation(basis.size)
        labels = [basis.index_set[p] for p in perm]
        base = suppid.identify_support(states, A.entries, 3, exhaustive=True, labels=basis.index_set)
        moved = suppid.identify_support(states, A.entries[:, perm], 3, exhaustive=True, labels=labels)
        self.assertEqual(sorted(moved.S), sorted(base.S))
        np.testing.assert_allclose(moved.xhat, base.xhat[perm], atol=1e-8)

    def test_random_probe_estimates_stay_within_epsilon(self):
        """With L = probe_count probes, max_k |X_hat_k - X_k| > epsilon in at most delta (plus slack) of the runs."""
        epsilon, delta, reps = 0.45, 0.1, 200
        H, rho0, basis, A, states = _two_level_family(7)
        truth = qsim.fourier_coefficients(H, rho0)
        exact = np.array([suppid.normalized_hs_norm(truth.coefficient(k)) for k in basis.index_set])
        L = suppid.probe_count(basis.size, delta, epsilon, 0.0)
        certificate = rip_constant_bruteforce(A.normalized(), basis.size)
        misses = 0
        for seed in range(reps):
            estimate = suppid.identify_support(
                states, A.entries, 3, L=L, rng_seed=seed, certificate=certificate, labels=basis.index_set
            )
            misses += np.abs(estimate.xhat - exact).max() > epsilon
        self.assertLessEqual(misses / reps, delta + 0.08)


class TestSeparability(unittest.TestCase):

    def test_sparse_family_is_separable(self):
        H, rho0, basis, _, _ = _two_level_family(3)
        truth = qsim.fourier_coefficients(H, rho0)
        S = basis.positions([-1, 0, 1])
        margin = suppid.separability_margin(truth, None, S, epsilon=0.01)
        self.assertTrue(margin.worst_case_holds)
        self.assertTrue(margin.flatness_holds)
        self.assertAlmostEqual(margin.worst_case_rhs, 0.02)
        self.assertEqual(margin.beta_c, 1.0)
        self.assertIn("worst_case", margin.to_dict())

    def test_wrong_support_fails(self):
        H, rho0, basis, _, _ = _two_level_family(3)
        truth = qsim.fourier_coefficients(H, rho0)
        margin = suppid.separability_margin(truth, None, basis.positions([2, 3]), epsilon=0.01)
        self.assertFalse(margin.worst_case_holds)
        self.assertFalse(margin.flatness_holds)

    def test_flat_adversary(self):
        """
        |Tr[P alpha_k]| = 1 on S and x off S for every Pauli word: the flatness
        criterion only needs 1 >= 2 epsilon + 2x, the worst case pays for all D - s tails.
        """
        rng = np.random.default_rng(8)
        words = qsim.all_pauli_labels(2)
        x, epsilon, s = 0.05, 0.1, 2

        def flat(scale):
            signs = rng.choice([-1.0, 1.0], size=len(words))
            return scale / 4 * sum(sign * qsim.pauli_word(w) for sign, w in zip(signs, words))

        for D in (5, 9):
            with self.subTest(D=D):
                alphas = [flat(1.0) for _ in range(s)] + [flat(x) for _ in range(D - s)]
                margin = suppid.separability_margin(alphas, None, range(s), epsilon)
                self.assertAlmostEqual(margin.worst_case_lhs, 1.0 - x)
                self.assertAlmostEqual(margin.worst_case_rhs,
                                       2 * epsilon + 2 * suppid.DEFAULT_D1 / math.sqrt(s) * (D - s) * x)
                self.assertAlmostEqual(margin.beta_c, 1.0)
                self.assertAlmostEqual(margin.flatness_rhs, 2 * epsilon + 2 * x)
                self.assertTrue(margin.flatness_holds)
        self.assertFalse(margin.worst_case_holds)

    def test_mismatched_perturbations(self):
        with self.assertRaises(ArgumentError):
            suppid.separability_margin([np.eye(2)], [np.eye(2), np.eye(2)], [0], 0.1)

    def test_pauli_table(self):
        C = suppid.pauli_coefficient_table([qsim.Z, qsim.X])
        np.testing.assert_allclose(C[:, 0], [0, 0, 0, 2])
        np.testing.assert_allclose(C[:, 1], [0, 2, 0, 0])


if __name__ == '__main__':
    unittest.main()
