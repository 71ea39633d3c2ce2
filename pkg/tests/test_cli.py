import io
import json
import math
import os
import tempfile
import unittest
from unittest.mock import ANY, patch

from src.routes.cli_routes import dispatch
from src.utils.pointset_io import read_pointset


class TestCli(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name: str) -> str:
        return os.path.join(self.tmp.name, name)

    def run_json(self, argv):
        with patch("sys.stdout", new_callable=io.StringIO) as stdout:
            code = dispatch(argv)
        self.assertEqual(code, 0)
        return json.loads(stdout.getvalue())

    def test_generate_then_count_patches(self):
        self.assertEqual(dispatch(["generate", "lattice", "--half-width", "20", "-o", self.path("z.txt")]), 0)
        ps = read_pointset(self.path("z.txt"))
        self.assertEqual(len(ps), 41)

        payload = self.run_json(["patches", self.path("z.txt"), "--D", "2,3"])
        self.assertEqual([r["patch_count"] for r in payload["result"]["results"]], [1, 1])
        self.assertEqual(payload["metadata"]["tool"], "flc-entropy 0.3.0")
        self.assertIn('"subcommand":"patches"', payload["metadata"]["config"])

    def test_negative_window_values(self):
        self.assertEqual(dispatch(["generate", "lattice", "--window", "-5,5", "-o", self.path("w.txt")]), 0)
        self.assertEqual(len(read_pointset(self.path("w.txt"))), 11)

    def test_csv_rows(self):
        dispatch(["generate", "coin", "--half-width", "300", "--seed", "9", "-o", self.path("coin.txt")])
        self.assertEqual(dispatch(["entropy", self.path("coin.txt"), "--radii", "1,2,3", "--format", "csv", "-o", self.path("h.csv")]), 0)
        with open(self.path("h.csv"), encoding="utf-8") as f:
            lines = f.read().splitlines()
        self.assertTrue(lines[0].startswith("# tool="))
        header = [line for line in lines if not line.startswith("#")][0]
        self.assertEqual(header, "n,count,value")

    def test_seed_makes_output_reproducible(self):
        for name in ("a.txt", "b.txt"):
            dispatch(["generate", "coin", "--half-width", "30", "--seed", "4", "-o", self.path(name)])
        self.assertEqual(read_pointset(self.path("a.txt")).colors, read_pointset(self.path("b.txt")).colors)

    def test_mahler_polynomial_with_negative_exponents(self):
        payload = self.run_json(["mahler", "--poly", "-1,0,1 0,0,3"])
        self.assertEqual(payload["result"]["polynomial"], "-1,0,1.0,0.0 0,0,3.0,0.0")
        self.assertTrue(payload["result"]["converged"])
        self.assertGreater(payload["result"]["value"], math.log(2))

    def test_usage_errors_exit_one(self):
        with patch("sys.stderr", new_callable=io.StringIO):
            self.assertEqual(dispatch(["patches", self.path("missing.txt")]), 1)
            self.assertEqual(dispatch([]), 1)
            self.assertEqual(dispatch(["patches", self.path("missing.txt"), "--D", "2"]), 1)
            self.assertEqual(dispatch(["kronecker", "--threads", "0"]), 1)
            self.assertEqual(dispatch(["metric", "a", "b", "--resolution", "0.5"]), 1)

    def test_parse_errors_exit_one(self):
        with open(self.path("bad.txt"), "w", encoding="utf-8") as f:
            f.write("# dim=1\n# r=0.5\n# R=1\n0.0\n")
        with patch("sys.stderr", new_callable=io.StringIO) as stderr:
            self.assertEqual(dispatch(["verify", self.path("bad.txt")]), 1)
        self.assertIn("ParseError", stderr.getvalue())

    def test_computation_errors_exit_two(self):
        dispatch(["generate", "lattice", "--half-width", "5", "-o", self.path("small.txt")])
        with patch("sys.stderr", new_callable=io.StringIO) as stderr:
            self.assertEqual(dispatch(["patches", self.path("small.txt"), "--D", "20"]), 2)
        self.assertIn("WindowTooSmallError", stderr.getvalue())

    def test_help_exits_zero(self):
        with patch("sys.stdout", new_callable=io.StringIO) as stdout:
            self.assertEqual(dispatch(["--help"]), 0)
        self.assertIn("theorem-check", stdout.getvalue())

    @patch("src.routes.cli_routes.run_report")
    def test_report_delegates_to_workflow(self, mock_run_report):
        mock_run_report.return_value = {"scale": "quick", "sections": {}, "failures": []}
        payload = self.run_json(["report", "--seed", "3"])
        self.assertEqual(payload["result"]["scale"], "quick")
        mock_run_report.assert_called_once_with(scale="quick", seed=3, threads=ANY)

    def test_verify_can_stop_at_the_first_hole(self):
        dispatch(["generate", "visible", "--bound", "40", "-o", self.path("v.txt")])
        full = self.run_json(["verify", self.path("v.txt")])["result"]
        first = self.run_json(["verify", self.path("v.txt"), "--first-hole"])["result"]
        self.assertTrue(full["exhaustive"])
        self.assertFalse(first["exhaustive"])
        self.assertFalse(first["relatively_dense"])

    @patch("src.routes.cli_routes.verify_delone")
    def test_unexpected_errors_exit_two(self, mock_verify):
        mock_verify.side_effect = ValueError("broken")
        dispatch(["generate", "lattice", "--half-width", "5", "-o", self.path("z.txt")])
        with patch("sys.stderr", new_callable=io.StringIO) as stderr:
            self.assertEqual(dispatch(["verify", self.path("z.txt")]), 2)
        self.assertIn("ValueError: broken", stderr.getvalue())


if __name__ == "__main__":
    unittest.main()
