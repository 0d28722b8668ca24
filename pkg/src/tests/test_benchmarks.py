"""
Tests for the reproduction suite's verdicts and reporting.
"""

import csv
import tempfile
import unittest
from pathlib import Path

from benchmarks.reproduction import (
    SYNTHETIC_GAP_DEVIATION,
    BenchmarkSuite,
    CheckResult,
    heterogeneity_verdict,
)


class TestHeterogeneityVerdict(unittest.TestCase):
    """Tests for heterogeneity_verdict."""

    def test_growing_gap_passes(self):
        self.assertEqual(heterogeneity_verdict([0.9, 1.0, 0.8], [0.01, 0.02, 0.02]), (True, True))

    def test_recorded_synthetic_run(self):
        """Win rates hold but the gap shrinks with E."""
        wins_ok, monotone = heterogeneity_verdict([1.0, 1.0, 0.8], [0.0108, 0.0077, 0.0039])
        self.assertTrue(wins_ok)
        self.assertFalse(monotone)

    def test_low_win_rate(self):
        wins_ok, _ = heterogeneity_verdict([1.0, 0.7, 0.9], [0.01, 0.02, 0.03])
        self.assertFalse(wins_ok)


class TestBenchmarkSuite(unittest.TestCase):
    """Tests for CheckResult status and the exported CSV."""

    def test_status(self):
        self.assertEqual(CheckResult("a", True, 0.0).status, "PASS")
        self.assertEqual(CheckResult("b", False, 0.0).status, "FAIL")
        known = CheckResult("c", False, 0.0, known_deviation=SYNTHETIC_GAP_DEVIATION)
        self.assertEqual(known.status, "KNOWN")
        self.assertFalse(known.blocking)
        self.assertTrue(CheckResult("d", False, 0.0).blocking)
        self.assertIn("known deviation", str(known))

    def test_known_deviation_only_applies_to_failures(self):
        result = CheckResult("e", True, 0.0, known_deviation="gap shrinks")
        self.assertEqual(result.status, "PASS")
        self.assertNotIn("known deviation", str(result))

    def test_export_results(self):
        suite = BenchmarkSuite("test")
        suite.results.append(CheckResult("synthetic", False, 1.5, {"E2_gap": 0.01}, known_deviation="gap shrinks"))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "results.csv"
            suite.export_results(str(path))
            with open(path, newline="") as f:
                rows = list(csv.DictReader(f))
        self.assertEqual(rows[0]["status"], "KNOWN")
        self.assertEqual(rows[0]["metric"], "E2_gap")


if __name__ == "__main__":
    unittest.main()
