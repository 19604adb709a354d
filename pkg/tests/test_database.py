import unittest
from paratomo.database import LedgerManager

class TestLedgerManager(unittest.TestCase):

    def setUp(self):
        """Set up a new in-memory ledger for each test."""
        self.ledger = LedgerManager(":memory:")
        self.ledger.setup()

    def tearDown(self):
        """Close the ledger connection after each test."""
        self.ledger.close_connection()

    def test_start_and_finish_run(self):
        """A run starts as 'running' and stores its outcome when finished."""
        run_id = self.ledger.start_run("nmr", 7, "abc123")

        runs = self.ledger.get_runs()
        self.assertEqual(len(runs), 1)
        self.assertEqual(runs[0]['status'], 'running')
        self.assertIsNone(runs[0]['exit_code'])

        self.assertTrue(self.ledger.finish_run(run_id, "ok", 0, "/data/runs/nmr_seed7.json"))
        run = self.ledger.get_runs()[0]
        self.assertEqual(run['status'], 'ok')
        self.assertEqual(run['exit_code'], 0)
        self.assertEqual(run['report_path'], "/data/runs/nmr_seed7.json")

    def test_large_seeds_survive(self):
        """Seeds above the signed 64-bit range are stored without loss."""
        seed = 2 ** 64 - 1
        self.ledger.start_run("audit", seed, "d")
        self.assertEqual(int(self.ledger.get_runs()[0]['seed']), seed)

    def test_runs_filtered_by_experiment(self):
        """Runs come back newest first and can be filtered by experiment."""
        self.ledger.start_run("nmr", 1, "a")
        self.ledger.start_run("audit", 2, "b")
        self.ledger.start_run("nmr", 3, "c")

        nmr_runs = self.ledger.get_runs("nmr")
        self.assertEqual([run['seed'] for run in nmr_runs], ["3", "1"])
        self.assertEqual(len(self.ledger.get_runs()), 3)

    def test_checks_are_replaced_by_id(self):
        """Re-adding a check id overwrites the earlier outcome."""
        run_id = self.ledger.start_run("audit", 0, "d")
        self.ledger.add_check(run_id, "time_reversal", False, "residual 1e-3")
        self.ledger.add_check(run_id, "time_reversal", True, "residual 1e-14")
        self.ledger.add_check(run_id, "bessel_recurrence", True)

        checks = self.ledger.get_checks(run_id)
        self.assertEqual([c['check_id'] for c in checks], ["bessel_recurrence", "time_reversal"])
        self.assertTrue(checks[1]['passed'])
        self.assertEqual(checks[1]['detail'], "residual 1e-14")

    def test_checks_belong_to_their_run(self):
        """Checks of one run do not leak into another."""
        first = self.ledger.start_run("audit", 0, "d")
        second = self.ledger.start_run("audit", 1, "d")
        self.ledger.add_check(first, "hs_estimator", True)

        self.assertEqual(self.ledger.get_checks(second), [])

    def test_setup_is_idempotent(self):
        """Running setup twice keeps existing rows."""
        self.ledger.start_run("nmr", 1, "a")
        self.ledger.setup()
        self.assertEqual(len(self.ledger.get_runs()), 1)

if __name__ == '__main__':
    unittest.main()
