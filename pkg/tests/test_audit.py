import unittest
from unittest.mock import patch

from paratomo.audit import CHECKS, run_checks
from paratomo.config import validate_config
from paratomo.errors import ArgumentError

FAST_CHECKS = [
    "formula.sample_counts",
    "suppid.hs_estimator",
    "fermion.time_reversal",
    "chebyshev.bessel_tail",
    "channels.choi_identity",
    "recovery.budget_decomposition",
    "predict.route_agreement",
    "channels.rotation_recovery",
]


class TestAudit(unittest.TestCase):

    def setUp(self):
        """A scaled-down audit configuration."""
        self.config = validate_config({"experiment": "audit", "seed": 17, "numerics": {"audit_scale": 0.2}})

    def _scaled(self, scale, **numerics):
        return validate_config({"experiment": "audit", "seed": 17, "numerics": dict(numerics, audit_scale=scale)})

    def test_fast_checks_pass(self):
        """Every check in the fast subset passes on a clean build."""
        results = run_checks(self.config, only=FAST_CHECKS)
        self.assertEqual([r.check_id for r in results], FAST_CHECKS)
        for result in results:
            with self.subTest(check=result.check_id):
                self.assertTrue(result.passed, result.detail)

    def test_results_are_reproducible(self):
        """The same seed gives the same details, regardless of which other checks run."""
        first = run_checks(self.config, only=["suppid.hs_estimator", "fermion.time_reversal"])
        second = run_checks(self.config, only=["fermion.time_reversal"])
        self.assertEqual(first[1].detail, second[0].detail)

    def test_unknown_check(self):
        """An unknown check id is refused before anything runs."""
        with self.assertRaises(ArgumentError):
            run_checks(self.config, only=["formula.sample_counts", "no.such_check"])

    def test_result_dict(self):
        """Results serialize with their id, outcome and detail; all fifteen formula values are pinned."""
        result = run_checks(self.config, only=["formula.sample_counts"])[0]
        self.assertEqual(set(result.to_dict()), {"check_id", "passed", "detail"})
        self.assertIn("15/15", result.detail)

    def test_exact_sparse_recovery_is_certified(self):
        """Every instance gets a certified sampling matrix before its error is scored."""
        result = run_checks(self.config, only=["recovery.exact_sparse"])[0]
        self.assertTrue(result.passed, result.detail)
        self.assertIn("over 10 certified instances; 0 without", result.detail)

    def test_shadow_guarantee(self):
        """Shadow-backed recoveries stay inside their error budget often enough."""
        config = self._scaled(0.1, audit_max_snapshots=1000)
        result = run_checks(config, only=["recovery.shadow_guarantee"])[0]
        self.assertTrue(result.passed, result.detail)
        self.assertIn("/5 runs over budget", result.detail)
        self.assertIn("at 1000 snapshots per point", result.detail)

    def test_random_probe_identification(self):
        """Random Pauli probing finds the three-label support in the separated runs."""
        with patch('paratomo.audit.suppid.probe_count', return_value=200):
            result = run_checks(self._scaled(0.1), only=["suppid.random_identification"])[0]
        self.assertTrue(result.passed, result.detail)
        self.assertIn("5 drawn", result.detail)
        self.assertIn("L = 200", result.detail)

    def test_fermion_end_to_end(self):
        """Recovered 1-local Z trajectories match the exact ones on both sides of t = 0."""
        result = run_checks(self.config, only=["fermion.end_to_end"])[0]
        self.assertTrue(result.passed, result.detail)

    def test_failed_check_is_logged_as_error(self):
        """A corrupted coefficient breaks the error decomposition and is reported."""
        config = self._scaled(0.2, corrupt_coefficients=True)
        with self.assertLogs(level='ERROR'):
            result = run_checks(config, only=["recovery.budget_decomposition"])[0]
        self.assertFalse(result.passed)

    def test_every_check_is_registered_once(self):
        """Check ids are dotted and unique."""
        self.assertEqual(len(set(CHECKS)), len(CHECKS))
        self.assertTrue(all("." in name for name in CHECKS))


if __name__ == '__main__':
    unittest.main()
