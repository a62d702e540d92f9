import glob
import json
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from qimpc.config import load_config_text
from qimpc.errors import NumericalError, PreconditionError, RunAbortedError
from qimpc.harness import (
    csv_header,
    load_logs,
    plot_directory,
    read_csv,
    run_experiment,
    run_seed,
    write_atomic,
    write_csv,
)
from qimpc.mpc import TrajectoryLog, TrajectoryRecord, run_qimpc
from qimpc.plots import PLOT_FILES

SHORT_PENDULUM = "experiment: pendulum\nmpc: {total_steps: 6}\n"
SUMMARY_KEYS = {"experiment", "seed", "initial_loss", "final_loss", "reduction", "steps", "wall_ms", "converged",
                "bound_violations"}


def short_config(text=SHORT_PENDULUM):
    return load_config_text(text)


class TestCsv(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_header(self):
        self.assertEqual(csv_header(2, 1), ["step", "x_0", "x_1", "u_raw_0", "u_clip_0", "loss", "lr", "grad_norm"])

    def test_rows_round_trip_exactly(self):
        _, trajectory, _, _ = run_seed(short_config(), 0)
        path = os.path.join(self.tmp.name, "seed-0.csv")
        write_csv(trajectory, path)
        with open(path, newline="") as f:
            lines = f.read().split("\n")
        self.assertEqual(lines[0], "step,x_0,x_1,u_raw_0,u_clip_0,loss,lr,grad_norm")
        self.assertEqual(lines[-1], "")
        self.assertTrue(all(len(line.split(",")) == 8 for line in lines[:-1]))
        self.assertEqual(len(lines), len(trajectory) + 2)

        parsed = read_csv(path)
        np.testing.assert_array_equal(parsed.states(), trajectory.states())
        np.testing.assert_array_equal(parsed.raw_controls(), trajectory.raw_controls())
        np.testing.assert_array_equal(parsed.controls(), trajectory.controls())
        np.testing.assert_array_equal(parsed.losses(), trajectory.losses())
        self.assertEqual([r.lr for r in parsed.records], [r.lr for r in trajectory.records])
        self.assertEqual([r.grad_norm for r in parsed.records], [r.grad_norm for r in trajectory.records])

    def test_awkward_floats_survive(self):
        values = [0.1 + 0.2, 1e-300, -2.0 ** 0.5, 123456789.123456789]
        trajectory = TrajectoryLog(state_dim=2, control_dim=1)
        for i, v in enumerate(values):
            trajectory.records.append(TrajectoryRecord(i, np.array([v, -v]), np.array([v / 3.0]), np.array([v]),
                                                       v * v, 0.1, abs(v)))
        path = os.path.join(self.tmp.name, "seed-9.csv")
        write_csv(trajectory, path)
        parsed = read_csv(path)
        np.testing.assert_array_equal(parsed.states(), trajectory.states())
        np.testing.assert_array_equal(parsed.raw_controls(), trajectory.raw_controls())
        np.testing.assert_array_equal(parsed.losses(), trajectory.losses())

    def test_empty_log_writes_header_only(self):
        path = os.path.join(self.tmp.name, "seed-0.csv")
        write_csv(TrajectoryLog(state_dim=4, control_dim=2), path)
        with open(path) as f:
            self.assertEqual(f.read(), ",".join(csv_header(4, 2)) + "\n")
        self.assertEqual(len(read_csv(path)), 0)

    def test_foreign_csv_is_rejected(self):
        path = os.path.join(self.tmp.name, "seed-0.csv")
        with open(path, "w") as f:
            f.write("a,b\n1,2\n")
        with self.assertRaises(PreconditionError):
            read_csv(path)

    def test_atomic_write_leaves_no_temporary_files(self):
        path = os.path.join(self.tmp.name, "out.txt")
        write_atomic(path, "first\n")
        write_atomic(path, "second\n")
        with open(path) as f:
            self.assertEqual(f.read(), "second\n")
        self.assertEqual(os.listdir(self.tmp.name), ["out.txt"])

    def test_failed_atomic_write_keeps_the_old_file(self):
        path = os.path.join(self.tmp.name, "out.txt")
        write_atomic(path, "kept\n")
        with mock.patch("qimpc.harness.os.replace", side_effect=OSError("disk full")):
            with self.assertRaisesRegex(OSError, "cannot write"):
                write_atomic(path, "lost\n")
        with open(path) as f:
            self.assertEqual(f.read(), "kept\n")
        self.assertEqual(os.listdir(self.tmp.name), ["out.txt"])


class TestRunExperiment(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_five_seeds_write_five_csvs_and_one_summary(self):
        result = run_experiment(short_config(), out_dir=self.tmp.name)
        target = os.path.join(self.tmp.name, "pendulum")
        self.assertEqual(sorted(os.listdir(target)),
                         sorted(["seed-{}.csv".format(s) for s in range(5)] + ["summary.json"] + list(PLOT_FILES)))
        self.assertFalse(result.failed)
        with open(os.path.join(target, "summary.json")) as f:
            summary = json.load(f)
        self.assertEqual(summary["experiment"], "pendulum")
        self.assertFalse(summary["baseline"])
        self.assertEqual(summary["errors"], [])
        self.assertEqual([s["seed"] for s in summary["summaries"]], [0, 1, 2, 3, 4])
        for entry in summary["summaries"]:
            self.assertEqual(set(entry), SUMMARY_KEYS)
            self.assertEqual(entry["steps"], 6)
            self.assertEqual(entry["bound_violations"], 0)

    def test_seed_subset(self):
        result = run_experiment(short_config(), out_dir=self.tmp.name, seeds=[3, 1])
        self.assertEqual(sorted(result.logs), [1, 3])
        self.assertEqual(sorted(glob.glob(os.path.join(self.tmp.name, "pendulum", "*.csv"))),
                         [os.path.join(self.tmp.name, "pendulum", "seed-{}.csv".format(s)) for s in (1, 3)])

    def test_failed_seed_does_not_stop_the_others(self):
        def flaky(plant, encoder, ansatz, head, loss, mpc, opt_cfg, x0, theta=None, workers=1):
            if mpc.seed == 3:
                partial = TrajectoryLog(state_dim=2, control_dim=1)
                err = RunAbortedError("run aborted at step 0: overflow", partial)
                err.__cause__ = NumericalError("overflow")
                raise err
            return run_qimpc(plant, encoder, ansatz, head, loss, mpc, opt_cfg, x0, theta, workers)

        with mock.patch("qimpc.harness.run_qimpc", side_effect=flaky):
            result = run_experiment(short_config(), out_dir=self.tmp.name)
        self.assertTrue(result.failed)
        self.assertEqual(sorted(result.logs), [0, 1, 2, 4])
        self.assertEqual(len(result.errors), 1)
        error = result.errors[0]
        self.assertEqual((error["seed"], error["error"], error["steps"]), (3, "NumericalError", 0))
        target = os.path.join(self.tmp.name, "pendulum")
        self.assertFalse(os.path.exists(os.path.join(target, "seed-3.csv")))
        with open(os.path.join(target, "summary.json")) as f:
            self.assertEqual(json.load(f)["errors"][0]["seed"], 3)

    def test_reruns_are_byte_identical(self):
        first, second = os.path.join(self.tmp.name, "a"), os.path.join(self.tmp.name, "b")
        run_experiment(short_config(), out_dir=first, seeds=[0, 1])
        run_experiment(short_config(), out_dir=second, seeds=[0, 1])
        for name in ["seed-0.csv", "seed-1.csv"] + list(PLOT_FILES):
            with open(os.path.join(first, "pendulum", name), "rb") as f:
                expected = f.read()
            with open(os.path.join(second, "pendulum", name), "rb") as f:
                self.assertEqual(f.read(), expected, name)

    def test_baseline_outputs_are_prefixed(self):
        run_experiment(short_config(), out_dir=self.tmp.name, seeds=[0], baseline=True)
        target = os.path.join(self.tmp.name, "pendulum")
        self.assertTrue(os.path.isfile(os.path.join(target, "baseline-seed-0.csv")))
        self.assertTrue(os.path.isfile(os.path.join(target, "baseline-summary.json")))
        self.assertEqual(sorted(os.listdir(os.path.join(target, "baseline"))), sorted(PLOT_FILES))
        self.assertEqual(load_logs(target), {})
        self.assertEqual(list(load_logs(target, baseline=True)), [0])

    def test_building_summary_counts_comfort_violations(self):
        cfg = short_config("experiment: building\nmpc: {total_steps: 3}\nencoder: {n_qubits: 3}\n")
        _, _, summary, error = run_seed(cfg, 0)
        self.assertIsNone(error)
        self.assertIsInstance(summary.comfort_violations, int)
        self.assertEqual(set(summary.to_dict()), SUMMARY_KEYS)

        run_experiment(cfg, out_dir=self.tmp.name, seeds=[0, 2])
        with open(os.path.join(self.tmp.name, "building", "summary.json")) as f:
            document = json.load(f)
        for entry in document["summaries"]:
            self.assertEqual(set(entry), SUMMARY_KEYS)
        self.assertEqual(sorted(document["comfort_violations"]), ["0", "2"])
        self.assertEqual(document["comfort_violations"]["0"], summary.comfort_violations)

    def test_comfort_violations_only_for_buildings(self):
        run_experiment(short_config(), out_dir=self.tmp.name, seeds=[0])
        with open(os.path.join(self.tmp.name, "pendulum", "summary.json")) as f:
            self.assertNotIn("comfort_violations", json.load(f))

    def test_no_write(self):
        result = run_experiment(short_config(), out_dir=self.tmp.name, seeds=[0], write=False)
        self.assertEqual(list(result.logs), [0])
        self.assertEqual(os.listdir(self.tmp.name), [])

    def test_empty_seed_list(self):
        with self.assertRaises(PreconditionError):
            run_experiment(short_config(), out_dir=self.tmp.name, seeds=[], write=False)

    def test_negative_seed_list(self):
        with self.assertRaisesRegex(PreconditionError, "non-negative"):
            run_experiment(short_config(), out_dir=self.tmp.name, seeds=[0, -1], write=False)

    def test_plot_directory_redraws_from_csv(self):
        run_experiment(short_config(), out_dir=self.tmp.name, seeds=[0, 1])
        target = os.path.join(self.tmp.name, "pendulum")
        for name in PLOT_FILES:
            os.unlink(os.path.join(target, name))
        paths = plot_directory(target, log_scale=True)
        self.assertEqual([os.path.basename(p) for p in paths], list(PLOT_FILES))
        self.assertTrue(all(os.path.isfile(p) for p in paths))
        with self.assertRaises(PreconditionError):
            plot_directory(self.tmp.name)


if __name__ == '__main__':
    unittest.main()
