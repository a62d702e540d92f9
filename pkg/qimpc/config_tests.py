import os
import tempfile
import unittest
from unittest import mock

import yaml

from qimpc.circuits import EncoderKind
from qimpc.config import (
    OUTPUT_ROOT_ENV,
    PRESETS,
    config_from_dict,
    dump_config,
    load_config,
    load_config_text,
    load_preset,
    resolve_config_path,
)
from qimpc.errors import ConfigurationError
from qimpc.losses import LossKind
from qimpc.plants import BuildingPlant, DoublePendulumPlant, PendulumPlant, TargetTrackPlant, VehiclePlant

CUSTOM_CONFIG = """
experiment: custom
plant: {kind: pendulum, x0: [0.0, 1.0]}
encoder: {kind: angle-ry, n_qubits: 2, feature_wires: [0, 1]}
ansatz: {n_layers: 1}
head: {readout_wires: [1], gains: [2.0], offsets: [0.0]}
loss: {kind: algorithm-one, target: [0.0, 0.0], weights: [0.05]}
mpc: {total_steps: 3, u_min: [-2.0], u_max: [2.0]}
optimizer: {}
run: {seeds: [0]}
"""

# (preset, field, published value); "plant" is the built plant and
# "params" its physical parameters, every other head names a config section
PUBLISHED_VALUES = [
    ("target-tracking", "params.alpha", 0.1),
    ("target-tracking", "encoder.n_qubits", 10),
    ("target-tracking", "head.readout_wires", (0, 1, 2)),
    ("target-tracking", "mpc.total_steps", 50),
    ("building", "plant.n_rooms", 3),
    ("building", "params.r", 0.5),
    ("building", "params.c", 1.0),
    ("building", "params.t_out", 15.0),
    ("building", "params.q_solar", 5.0),
    ("building", "params.q_occ", 3.0),
    ("building", "params.dt", 0.1),
    ("building", "params.t_comfort_min", 20.0),
    ("building", "params.t_comfort_max", 24.0),
    ("building", "loss.x_target", (22.0, 22.0, 22.0)),
    ("building", "loss.weights", (0.01, 0.005)),
    ("building", "mpc.u_min", (0.0, 0.0, 0.0)),
    ("building", "mpc.u_max", (10.0, 10.0, 10.0)),
    ("building", "mpc.total_steps", 200),
    ("vehicle", "params.m", 1500.0),
    ("vehicle", "params.wheelbase", 2.5),
    ("vehicle", "params.c_d", 0.3),
    ("vehicle", "params.rho", 1.225),
    ("vehicle", "params.area", 2.5),
    ("vehicle", "params.c_r", 0.01),
    ("vehicle", "params.g", 9.81),
    ("vehicle", "params.kappa", 0.0),
    ("vehicle", "loss.weights", (0.1, 0.1, 0.01, 0.01)),
    ("vehicle", "mpc.total_steps", 60),
    ("pendulum", "params.m", 1.0),
    ("pendulum", "params.length", 1.0),
    ("pendulum", "params.g", 9.81),
    ("pendulum", "params.dt", 0.05),
    ("pendulum", "loss.weights", (0.05,)),
    ("pendulum", "mpc.u_min", (-2.0,)),
    ("pendulum", "mpc.u_max", (2.0,)),
    ("pendulum", "mpc.total_steps", 50),
    ("pendulum", "optimizer.lr_init", 0.3),
    ("pendulum", "optimizer.lr_min", 0.01),
    ("pendulum", "optimizer.decay", 0.95),
    ("pendulum", "optimizer.momentum", 0.85),
    ("pendulum", "optimizer.grad_clip", 0.5),
    ("double-pendulum", "params.m1", 1.0),
    ("double-pendulum", "params.m2", 1.0),
    ("double-pendulum", "params.l1", 1.0),
    ("double-pendulum", "params.l2", 1.0),
    ("double-pendulum", "params.g", 9.81),
    ("double-pendulum", "params.dt", 0.05),
    ("double-pendulum", "x0", (0.1, 0.0, 0.1, 0.0)),
    ("double-pendulum", "loss.x_target", (0.79, 0.0, 0.52, 0.0)),
]


def preset_field(cfg, dotted):
    head, *rest = dotted.split(".")
    if head == "plant":
        value = cfg.build_plant()
    elif head == "params":
        value = cfg.build_plant().params
    else:
        value = getattr(cfg, head)
    for name in rest:
        value = getattr(value, name)
    return value


class TestPresets(unittest.TestCase):

    def test_published_values(self):
        presets = {name: load_preset(name) for name in PRESETS}
        for name, dotted, expected in PUBLISHED_VALUES:
            with self.subTest(preset=name, field=dotted):
                self.assertEqual(preset_field(presets[name], dotted), expected)

    def test_every_preset_is_in_the_table(self):
        self.assertEqual({name for name, _, _ in PUBLISHED_VALUES}, set(PRESETS))

    def test_plant_types(self):
        self.assertIsInstance(load_preset("pendulum").build_plant(), PendulumPlant)
        self.assertIsInstance(load_preset("building").build_plant(), BuildingPlant)
        self.assertIsInstance(load_preset("double-pendulum").build_plant(), DoublePendulumPlant)
        self.assertIsInstance(load_preset("vehicle").build_plant(), VehiclePlant)
        self.assertIsInstance(load_preset("target-tracking").build_plant(), TargetTrackPlant)

    def test_pendulum(self):
        cfg = load_preset("pendulum")
        self.assertEqual(cfg.x0, (0.0, 1.4))
        self.assertEqual(cfg.encoder.kind, EncoderKind.HADAMARD_RY)
        self.assertEqual(cfg.head.readout_wires, (1,))
        self.assertEqual(cfg.run.seeds, (0, 1, 2, 3, 4))

    def test_building(self):
        cfg = load_preset("building")
        self.assertEqual(cfg.loss.kind, LossKind.BUILDING)
        self.assertEqual((cfg.head.gains, cfg.head.offsets), ((5.0,) * 3, (5.0,) * 3))

    def test_double_pendulum(self):
        cfg = load_preset("double-pendulum")
        self.assertEqual(cfg.loss.weights, (1.0, 0.1, 0.01))
        self.assertTrue(cfg.run.log_scale_loss)

    def test_every_preset_round_trips(self):
        for name in PRESETS:
            cfg = load_preset(name)
            self.assertEqual(cfg.experiment, name)
            text = dump_config(cfg)
            self.assertEqual(load_config_text(text), cfg)
            self.assertEqual(dump_config(load_config_text(text)), text)

    def test_unknown_preset(self):
        with self.assertRaises(ConfigurationError):
            load_preset("quadrotor")


class TestParsing(unittest.TestCase):

    def test_override_is_merged_key_by_key(self):
        cfg = load_config_text("experiment: pendulum\nmpc: {total_steps: 7}\noptimizer: {lr_init: 0.5}\n")
        self.assertEqual(cfg.mpc.total_steps, 7)
        self.assertEqual(cfg.mpc.u_min, (-2.0,))
        self.assertEqual(cfg.optimizer.lr_init, 0.5)
        self.assertEqual(cfg.optimizer.momentum, 0.85)

    def test_unknown_key_is_named(self):
        with self.assertRaisesRegex(ConfigurationError, "unknown key 'learning_rate' in section 'optimizer'"):
            load_config_text("experiment: pendulum\noptimizer: {learning_rate: 0.1}\n")
        with self.assertRaisesRegex(ConfigurationError, "top-level key 'extra'"):
            load_config_text("experiment: pendulum\nextra: 1\n")

    def test_wrong_types_are_named(self):
        with self.assertRaisesRegex(ConfigurationError, "'total_steps' in section 'mpc' must be an integer"):
            load_config_text("experiment: pendulum\nmpc: {total_steps: 2.5}\n")
        with self.assertRaisesRegex(ConfigurationError, "'wrap_angles' in section 'plant' must be true or false"):
            load_config_text("experiment: pendulum\nplant: {wrap_angles: 1}\n")
        with self.assertRaisesRegex(ConfigurationError, "'kind' in section 'encoder'"):
            load_config_text("experiment: pendulum\nencoder: {kind: amplitude}\n")

    def test_invalid_values(self):
        with self.assertRaisesRegex(ConfigurationError, "below"):
            load_config_text("experiment: pendulum\nmpc: {u_min: [2.0], u_max: [2.0]}\n")
        with self.assertRaisesRegex(ConfigurationError, r"\[0, 1\]"):
            load_config_text("experiment: pendulum\nloss: {weights: [2.0]}\n")
        with self.assertRaisesRegex(ConfigurationError, "x0"):
            load_config_text("experiment: pendulum\nplant: {x0: [0.0]}\n")

    def test_negative_seeds_are_rejected(self):
        with self.assertRaisesRegex(ConfigurationError, "run.seeds must be non-negative"):
            load_config_text("experiment: pendulum\nmpc: {total_steps: 2}\nrun: {seeds: [-1]}\n")
        with self.assertRaisesRegex(ConfigurationError, "run.seeds must be non-negative"):
            load_config_text("experiment: pendulum\nrun: {seeds: [0, 3, -2]}\n")

    def test_custom_experiment(self):
        cfg = load_config_text(CUSTOM_CONFIG)
        self.assertEqual(cfg.experiment, "custom")
        self.assertEqual(cfg.ansatz.n_layers, 1)
        self.assertEqual(cfg.optimizer.lr_init, 0.1)
        self.assertEqual(load_config_text(dump_config(cfg)), cfg)

    def test_custom_requires_every_section(self):
        raw = yaml.safe_load(CUSTOM_CONFIG)
        del raw["head"]
        with self.assertRaisesRegex(ConfigurationError, "section 'head'"):
            config_from_dict(raw)

    def test_unknown_experiment(self):
        with self.assertRaisesRegex(ConfigurationError, "unknown experiment"):
            load_config_text("experiment: rocket\n")
        with self.assertRaisesRegex(ConfigurationError, "experiment"):
            load_config_text("mpc: {total_steps: 3}\n")

    def test_malformed_yaml(self):
        with self.assertRaisesRegex(ConfigurationError, "cannot parse"):
            load_config_text("experiment: [pendulum\n")
        with self.assertRaisesRegex(ConfigurationError, "mapping"):
            load_config_text("- pendulum\n")


class TestFiles(unittest.TestCase):

    def test_resolve_paths(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "short.yaml")
            with open(path, "w") as f:
                f.write("experiment: pendulum\nmpc: {total_steps: 4}\n")
            self.assertEqual(resolve_config_path(path), path)
            self.assertEqual(resolve_config_path(os.path.join(tmp, "short")), path)
            self.assertEqual(load_config(path).mpc.total_steps, 4)
        self.assertTrue(resolve_config_path("vehicle").endswith(os.path.join("presets", "vehicle.yaml")))
        with self.assertRaisesRegex(ConfigurationError, "not found"):
            resolve_config_path("/nonexistent/config.yaml")

    def test_output_root(self):
        cfg = load_preset("pendulum")
        with mock.patch.dict(os.environ, {OUTPUT_ROOT_ENV: "/tmp/qimpc-runs"}):
            self.assertEqual(cfg.output_dir, "/tmp/qimpc-runs")
        with mock.patch.dict(os.environ, {}, clear=True):
            self.assertEqual(cfg.output_dir, "output")
        explicit = load_config_text("experiment: pendulum\nrun: {output_dir: results}\n")
        with mock.patch.dict(os.environ, {OUTPUT_ROOT_ENV: "/tmp/qimpc-runs"}):
            self.assertEqual(explicit.output_dir, "results")


if __name__ == '__main__':
    unittest.main()
