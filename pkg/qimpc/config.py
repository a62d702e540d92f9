"""
Experiment configuration files.

A config is a YAML mapping with the sections below. `experiment` names one of
the built-in presets (whose missing sections and keys are filled from
presets/<name>.yaml) or `custom`, in which case every section must be given.

    experiment: pendulum
    plant:     {kind, x0, <plant parameters>, [n_rooms], [wrap_angles]}
    encoder:   {kind, n_qubits, feature_wires, [offsets], [scales]}
    ansatz:    {[n_layers], [entanglement], [rot_convention]}
    head:      {readout_wires, gains, offsets}
    loss:      {kind, target, [weights]}
    mpc:       {total_steps, u_min, u_max, [horizon], [lookahead], [tolerance], [shots]}
    optimizer: {[lr_init], [lr_min], [decay], [momentum], [grad_clip]}
    run:       {[seeds], [output_dir], [workers], [log_scale_loss]}
"""
import copy
import logging
import os
from dataclasses import dataclass, fields
from typing import Optional, Tuple

import yaml

from .circuits import AnsatzSpec, ControlHead, EncoderKind, EncoderSpec, Entanglement, RotConvention
from .errors import ConfigurationError
from .losses import LossKind, LossSpec
from .mpc import MpcConfig
from .optimizer import OptimizerConfig
from .plants import (
    BuildingParams,
    BuildingPlant,
    DoublePendulumParams,
    DoublePendulumPlant,
    PendulumParams,
    PendulumPlant,
    TargetTrackParams,
    TargetTrackPlant,
    VehicleParams,
    VehiclePlant,
)

log = logging.getLogger(__name__)

PRESET_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "presets")
PRESETS = ("target-tracking", "building", "vehicle", "pendulum", "double-pendulum")
CUSTOM = "custom"

OUTPUT_ROOT_ENV = "QIMPC_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "output"

SECTIONS = ("plant", "encoder", "ansatz", "head", "loss", "mpc", "optimizer", "run")

PLANT_TYPES = {
    TargetTrackPlant.name: (TargetTrackPlant, TargetTrackParams, ()),
    BuildingPlant.name: (BuildingPlant, BuildingParams, ("n_rooms",)),
    VehiclePlant.name: (VehiclePlant, VehicleParams, ()),
    PendulumPlant.name: (PendulumPlant, PendulumParams, ("wrap_angles",)),
    DoublePendulumPlant.name: (DoublePendulumPlant, DoublePendulumParams, ("wrap_angles",)),
}


def output_root() -> str:
    return os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT)


@dataclass(frozen=True)
class RunOptions:
    seeds: Tuple[int, ...] = (0, 1, 2, 3, 4)
    output_dir: Optional[str] = None
    workers: int = 1
    log_scale_loss: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    plant_kind: str
    plant_params: Tuple[Tuple[str, object], ...]
    x0: Tuple[float, ...]
    encoder: EncoderSpec
    ansatz: AnsatzSpec
    head: ControlHead
    loss: LossSpec
    mpc: MpcConfig
    optimizer: OptimizerConfig
    run: RunOptions

    def build_plant(self):
        plant_cls, params_cls, extras = PLANT_TYPES[self.plant_kind]
        values = dict(self.plant_params)
        options = {name: values.pop(name) for name in extras if name in values}
        return plant_cls(params_cls(**values), **options)

    @property
    def output_dir(self) -> str:
        return self.run.output_dir or output_root()

    def validate(self) -> None:
        plant = self.build_plant()
        if len(self.x0) != plant.state_dim:
            raise ConfigurationError("plant.x0 has {} entries but {} needs {}".format(
                len(self.x0), plant.name, plant.state_dim))
        self.encoder.validate(n_features=plant.state_dim)
        self.ansatz.validate()
        if self.encoder.n_qubits != self.ansatz.n_qubits:
            raise ConfigurationError("encoder and ansatz disagree on the qubit count")
        self.head.validate(self.ansatz.n_qubits, control_dim=plant.control_dim)
        self.loss.validate(state_dim=plant.state_dim, control_dim=plant.control_dim)
        self.mpc.validate(control_dim=plant.control_dim)
        self.optimizer.validate()
        if not self.run.seeds:
            raise ConfigurationError("run.seeds must name at least one seed")
        if len(set(self.run.seeds)) != len(self.run.seeds):
            raise ConfigurationError("run.seeds must be distinct, got {}".format(list(self.run.seeds)))
        if any(seed < 0 for seed in self.run.seeds):
            raise ConfigurationError("run.seeds must be non-negative, got {}".format(list(self.run.seeds)))
        if self.run.workers < 1:
            raise ConfigurationError("run.workers must be at least 1, got {}".format(self.run.workers))

    def to_dict(self) -> dict:
        plant = {"kind": self.plant_kind, "x0": list(self.x0)}
        plant.update(self.plant_params)
        encoder = {
            "kind": self.encoder.kind.value,
            "n_qubits": self.encoder.n_qubits,
            "feature_wires": list(self.encoder.feature_wires),
            "offsets": None if self.encoder.offsets is None else list(self.encoder.offsets),
            "scales": None if self.encoder.scales is None else list(self.encoder.scales),
        }
        return {
            "experiment": self.experiment,
            "plant": plant,
            "encoder": encoder,
            "ansatz": {
                "n_layers": self.ansatz.n_layers,
                "entanglement": self.ansatz.entanglement.value,
                "rot_convention": self.ansatz.rot_convention.value,
            },
            "head": {
                "readout_wires": list(self.head.readout_wires),
                "gains": list(self.head.gains),
                "offsets": list(self.head.offsets),
            },
            "loss": {
                "kind": self.loss.kind.value,
                "target": list(self.loss.x_target),
                "weights": list(self.loss.weights),
            },
            "mpc": {
                "total_steps": self.mpc.total_steps,
                "u_min": list(self.mpc.u_min),
                "u_max": list(self.mpc.u_max),
                "horizon": self.mpc.horizon,
                "lookahead": self.mpc.lookahead,
                "tolerance": self.mpc.tolerance,
                "shots": self.mpc.shots,
            },
            "optimizer": {f.name: getattr(self.optimizer, f.name) for f in fields(self.optimizer)},
            "run": {
                "seeds": list(self.run.seeds),
                "output_dir": self.run.output_dir,
                "workers": self.run.workers,
                "log_scale_loss": self.run.log_scale_loss,
            },
        }


# field parsers, each raising with the section and key it failed on

def _fail(section, key, expected, value):
    raise ConfigurationError("'{}' in section '{}' must be {}, got {!r}".format(key, section, expected, value))


def _real(section, key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(section, key, "a number", value)
    return float(value)


def _integer(section, key, value):
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(section, key, "an integer", value)
    return value


def _boolean(section, key, value):
    if not isinstance(value, bool):
        _fail(section, key, "true or false", value)
    return value


def _path(section, key, value):
    if not isinstance(value, str) or not value:
        _fail(section, key, "a path", value)
    return value


def _reals(section, key, value):
    if not isinstance(value, list):
        _fail(section, key, "a list of numbers", value)
    return tuple(_real(section, key, v) for v in value)


def _integers(section, key, value):
    if not isinstance(value, list):
        _fail(section, key, "a list of integers", value)
    return tuple(_integer(section, key, v) for v in value)


def _optional(parser):
    def parse(section, key, value):
        return None if value is None else parser(section, key, value)
    return parse


def _choice(enum_cls):
    def parse(section, key, value):
        for member in enum_cls:
            if member.value == value:
                return member
        _fail(section, key, "one of {}".format(", ".join(m.value for m in enum_cls)), value)
    return parse


def _fields(section, raw, required, optional):
    """
    Parse the mapping `raw` against {key: parser} tables, rejecting unknown
    and missing keys. Keys absent from `raw` fall back to the optional
    table's default.
    """
    if not isinstance(raw, dict):
        raise ConfigurationError("section '{}' must be a mapping, got {!r}".format(section, raw))
    for key in raw:
        if key not in required and key not in optional:
            raise ConfigurationError("unknown key '{}' in section '{}'".format(key, section))
    parsed = {}
    for key, parser in required.items():
        if key not in raw:
            raise ConfigurationError("missing key '{}' in section '{}'".format(key, section))
        parsed[key] = parser(section, key, raw[key])
    for key, (parser, default) in optional.items():
        parsed[key] = parser(section, key, raw[key]) if key in raw else default
    return parsed


def _parse_plant(raw):
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigurationError("missing key 'kind' in section 'plant'")
    kind = raw["kind"]
    if kind not in PLANT_TYPES:
        _fail("plant", "kind", "one of {}".format(", ".join(PLANT_TYPES)), kind)
    _, params_cls, extras = PLANT_TYPES[kind]
    optional = {f.name: (_real, float(f.default)) for f in fields(params_cls)}
    if "n_rooms" in extras:
        optional["n_rooms"] = (_integer, 3)
    if "wrap_angles" in extras:
        optional["wrap_angles"] = (_boolean, False)
    parsed = _fields("plant", raw, {"kind": lambda s, k, v: v, "x0": _reals}, optional)
    kind = parsed.pop("kind")
    x0 = parsed.pop("x0")
    params = tuple((name, parsed[name]) for name in optional)
    return kind, params, x0


def _parse_encoder(raw):
    p = _fields("encoder", raw, {
        "kind": _choice(EncoderKind),
        "n_qubits": _integer,
        "feature_wires": _integers,
    }, {
        "offsets": (_optional(_reals), None),
        "scales": (_optional(_reals), None),
    })
    return EncoderSpec(p["kind"], p["n_qubits"], p["feature_wires"], p["offsets"], p["scales"])


def _parse_ansatz(raw, n_qubits):
    p = _fields("ansatz", raw, {}, {
        "n_layers": (_integer, 2),
        "entanglement": (_choice(Entanglement), Entanglement.LINEAR),
        "rot_convention": (_choice(RotConvention), RotConvention.ZYZ),
    })
    return AnsatzSpec(n_qubits, p["n_layers"], p["entanglement"], p["rot_convention"])


def _parse_head(raw):
    p = _fields("head", raw, {"readout_wires": _integers, "gains": _reals, "offsets": _reals}, {})
    return ControlHead(p["readout_wires"], p["gains"], p["offsets"])


def _parse_loss(raw):
    p = _fields("loss", raw, {"kind": _choice(LossKind), "target": _reals}, {"weights": (_reals, ())})
    return LossSpec(p["kind"], p["target"], p["weights"])


def _parse_mpc(raw):
    p = _fields("mpc", raw, {"total_steps": _integer, "u_min": _reals, "u_max": _reals}, {
        "horizon": (_integer, 1),
        "lookahead": (_integer, 1),
        "tolerance": (_optional(_real), None),
        "shots": (_optional(_integer), None),
    })
    return MpcConfig(**p)


def _parse_optimizer(raw):
    p = _fields("optimizer", raw, {}, {
        "lr_init": (_real, OptimizerConfig.lr_init),
        "lr_min": (_real, OptimizerConfig.lr_min),
        "decay": (_real, OptimizerConfig.decay),
        "momentum": (_real, OptimizerConfig.momentum),
        "grad_clip": (_optional(_real), OptimizerConfig.grad_clip),
    })
    return OptimizerConfig(**p)


def _parse_run(raw):
    p = _fields("run", raw, {}, {
        "seeds": (_integers, RunOptions.seeds),
        "output_dir": (_optional(_path), None),
        "workers": (_integer, 1),
        "log_scale_loss": (_boolean, False),
    })
    return RunOptions(**p)


def _read_yaml(text, origin):
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigurationError("cannot parse {}: {}".format(origin, e)) from e
    if not isinstance(raw, dict):
        raise ConfigurationError("{} must hold a mapping at the top level".format(origin))
    return raw


def preset_path(name: str) -> str:
    return os.path.join(PRESET_DIR, "{}.yaml".format(name))


def _load_preset_raw(name):
    path = preset_path(name)
    with open(path) as f:
        return _read_yaml(f.read(), path)


def _merge(raw):
    """
    Fill the sections of `raw` from its preset, key by key.
    """
    experiment = raw.get("experiment")
    if experiment is None:
        raise ConfigurationError("missing key 'experiment' at the top level")
    for key in raw:
        if key != "experiment" and key not in SECTIONS:
            raise ConfigurationError("unknown top-level key '{}'".format(key))
    if experiment == CUSTOM:
        for section in SECTIONS:
            if section not in raw:
                raise ConfigurationError("custom experiments must give section '{}'".format(section))
        return raw
    if experiment not in PRESETS:
        raise ConfigurationError("unknown experiment '{}', expected one of {} or {}".format(
            experiment, ", ".join(PRESETS), CUSTOM))
    merged = _load_preset_raw(experiment)
    for section in SECTIONS:
        override = raw.get(section)
        if override is None:
            continue
        if not isinstance(override, dict):
            raise ConfigurationError("section '{}' must be a mapping, got {!r}".format(section, override))
        base = copy.deepcopy(merged.get(section) or {})
        base.update(override)
        merged[section] = base
    merged["experiment"] = experiment
    return merged


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = _merge(raw)
    plant_kind, plant_params, x0 = _parse_plant(raw["plant"])
    encoder = _parse_encoder(raw["encoder"])
    cfg = ExperimentConfig(
        experiment=raw["experiment"],
        plant_kind=plant_kind,
        plant_params=plant_params,
        x0=x0,
        encoder=encoder,
        ansatz=_parse_ansatz(raw.get("ansatz") or {}, encoder.n_qubits),
        head=_parse_head(raw["head"]),
        loss=_parse_loss(raw["loss"]),
        mpc=_parse_mpc(raw["mpc"]),
        optimizer=_parse_optimizer(raw.get("optimizer") or {}),
        run=_parse_run(raw.get("run") or {}),
    )
    cfg.validate()
    return cfg


def load_config_text(text: str, origin: str = "<config>") -> ExperimentConfig:
    return config_from_dict(_read_yaml(text, origin))


def resolve_config_path(path: str) -> str:
    """
    Accept a file path, the same path without its .yaml suffix, or a bare
    preset name.
    """
    for candidate in (path, path + ".yaml"):
        if os.path.isfile(candidate):
            return candidate
    if path in PRESETS:
        return preset_path(path)
    raise ConfigurationError("config file not found: {}".format(path))


def load_config(path: str) -> ExperimentConfig:
    path = resolve_config_path(path)
    log.debug("loading config from %s", path)
    with open(path) as f:
        return load_config_text(f.read(), path)


def load_preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigurationError("unknown preset '{}'".format(name))
    return load_config(preset_path(name))


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), default_flow_style=None, sort_keys=False)
