"""
Experiment runner: one run per seed, CSV trajectories, a JSON summary and
plots under <output root>/<experiment>/.
"""
import csv
import glob
import io
import json
import logging
import os
import re
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from .config import ExperimentConfig
from .control import count_bound_violations
from .errors import PreconditionError, QimpcError, RunAbortedError
from .mpc import TrajectoryLog, TrajectoryRecord, run_classical_baseline, run_qimpc
from .plants import BuildingPlant, comfort_violations
from .plots import emit_plots

log = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"
CSV_PATTERN = re.compile(r"^(?:baseline-)?seed-(\d+)\.csv$")


@dataclass
class RunSummary:
    experiment: str
    seed: int
    initial_loss: float
    final_loss: float
    reduction: float
    steps: int
    wall_ms: float
    converged: bool
    bound_violations: int
    comfort_violations: Optional[int] = None

    def to_dict(self):
        data = asdict(self)
        del data["comfort_violations"]
        return data


@dataclass
class ExperimentResult:
    experiment: str
    logs: Dict[int, TrajectoryLog] = field(default_factory=dict)
    summaries: List[RunSummary] = field(default_factory=list)
    errors: List[dict] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return bool(self.errors)


def summarize(experiment, seed, trajectory: TrajectoryLog, wall_ms, u_min, u_max, plant=None) -> RunSummary:
    initial, final = trajectory.initial_loss, trajectory.final_loss
    reduction = (initial - final) / initial if initial > 0 else 0.0
    comfort = comfort_violations(plant, trajectory.states()) if isinstance(plant, BuildingPlant) else None
    return RunSummary(
        experiment=experiment,
        seed=seed,
        initial_loss=initial,
        final_loss=final,
        reduction=reduction,
        steps=len(trajectory),
        wall_ms=wall_ms,
        converged=trajectory.converged,
        bound_violations=count_bound_violations(trajectory.controls(), u_min, u_max),
        comfort_violations=comfort,
    )


def run_seed(cfg: ExperimentConfig, seed: int, baseline: bool = False):
    """
    Run one seed. Returns (seed, log, summary, error record); failures of
    the run itself come back as an error record instead of raising.
    """
    plant = cfg.build_plant()
    mpc = replace(cfg.mpc, seed=seed)
    started = time.perf_counter()
    try:
        if baseline:
            trajectory = run_classical_baseline(plant, cfg.loss, mpc, cfg.optimizer, cfg.x0)
        else:
            trajectory = run_qimpc(plant, cfg.encoder, cfg.ansatz, cfg.head, cfg.loss, mpc, cfg.optimizer, cfg.x0)
    except QimpcError as err:
        steps = len(err.log) if isinstance(err, RunAbortedError) and err.log is not None else 0
        cause = err.__cause__ if err.__cause__ is not None else err
        log.error("%s seed %d failed after %d step(s): %s", cfg.experiment, seed, steps, err)
        return seed, None, None, {
            "experiment": cfg.experiment,
            "seed": seed,
            "error": type(cause).__name__,
            "message": str(err),
            "steps": steps,
        }
    wall_ms = (time.perf_counter() - started) * 1000.0
    summary = summarize(cfg.experiment, seed, trajectory, wall_ms, mpc.u_min, mpc.u_max, plant)
    log.info("%s seed %d: loss %.6g -> %.6g over %d step(s)", cfg.experiment, seed,
             summary.initial_loss, summary.final_loss, summary.steps)
    return seed, trajectory, summary, None


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[str] = None, seeds=None, baseline: bool = False,
                   write: bool = True) -> ExperimentResult:
    """
    Run every seed of `cfg`, in worker processes when run.workers > 1.
    Results are gathered in seed order whatever the completion order.
    """
    seeds = list(cfg.run.seeds if seeds is None else seeds)
    if not seeds:
        raise PreconditionError("at least one seed is required")
    if any(seed < 0 for seed in seeds):
        raise PreconditionError("seeds must be non-negative, got {}".format(seeds))
    result = ExperimentResult(cfg.experiment)
    if cfg.run.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.run.workers) as pool:
            outcomes = list(pool.map(run_seed, [cfg] * len(seeds), seeds, [baseline] * len(seeds)))
    else:
        outcomes = [run_seed(cfg, seed, baseline) for seed in seeds]

    for seed, trajectory, summary, error in outcomes:
        if error is not None:
            result.errors.append(error)
            continue
        result.logs[seed] = trajectory
        result.summaries.append(summary)

    if write:
        write_outputs(cfg, result, out_dir or cfg.output_dir, baseline)
    return result


def write_outputs(cfg: ExperimentConfig, result: ExperimentResult, out_root: str, baseline: bool = False):
    target = os.path.join(out_root, cfg.experiment)
    os.makedirs(target, exist_ok=True)
    prefix = "baseline-" if baseline else ""
    for seed, trajectory in result.logs.items():
        write_csv(trajectory, os.path.join(target, "{}seed-{}.csv".format(prefix, seed)))
    summary = {
        "experiment": cfg.experiment,
        "baseline": baseline,
        "summaries": [s.to_dict() for s in result.summaries],
        "errors": result.errors,
    }
    comfort = {str(s.seed): s.comfort_violations for s in result.summaries if s.comfort_violations is not None}
    if comfort:
        summary["comfort_violations"] = comfort
    write_atomic(os.path.join(target, "{}{}".format(prefix, SUMMARY_FILE)),
                 json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if result.logs:
        plant = cfg.build_plant()
        plot_dir = os.path.join(target, "baseline") if baseline else target
        emit_plots(list(result.logs.values()), plot_dir, plant.state_labels, plant.control_labels,
                   log_scale=cfg.run.log_scale_loss, title=cfg.experiment)
    log.info("outputs written to %s", target)
    return target


def write_atomic(path: str, text: str) -> None:
    """
    Write through a temporary file in the same directory, then rename.
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except OSError as e:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError("cannot write {}: {}".format(path, e)) from e


def _fmt(value) -> str:
    return "{:.17g}".format(value)


def csv_header(state_dim: int, control_dim: int) -> List[str]:
    return (["step"]
            + ["x_{}".format(i) for i in range(state_dim)]
            + ["u_raw_{}".format(i) for i in range(control_dim)]
            + ["u_clip_{}".format(i) for i in range(control_dim)]
            + ["loss", "lr", "grad_norm"])


def write_csv(trajectory: TrajectoryLog, path: str) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_header(trajectory.state_dim, trajectory.control_dim))
    for r in trajectory.records:
        writer.writerow([str(r.step)]
                        + [_fmt(v) for v in r.x]
                        + [_fmt(v) for v in r.raw]
                        + [_fmt(v) for v in r.clipped]
                        + [_fmt(r.loss), _fmt(r.lr), _fmt(r.grad_norm)])
    write_atomic(path, buf.getvalue())


def read_csv(path: str) -> TrajectoryLog:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise PreconditionError("{} has no header row".format(path))
    header = rows[0]
    state_dim = sum(1 for name in header if name.startswith("x_"))
    control_dim = sum(1 for name in header if name.startswith("u_raw_"))
    if header != csv_header(state_dim, control_dim):
        raise PreconditionError("{} does not have a trajectory header".format(path))
    trajectory = TrajectoryLog(state_dim=state_dim, control_dim=control_dim)
    s, m = state_dim, control_dim
    for row in rows[1:]:
        values = [float(v) for v in row[1:]]
        trajectory.records.append(TrajectoryRecord(
            step=int(row[0]),
            x=np.array(values[:s]),
            raw=np.array(values[s:s + m]),
            clipped=np.array(values[s + m:s + 2 * m]),
            loss=values[s + 2 * m],
            lr=values[s + 2 * m + 1],
            grad_norm=values[s + 2 * m + 2],
        ))
    return trajectory


def load_logs(directory: str, baseline: bool = False) -> Dict[int, TrajectoryLog]:
    logs = {}
    for path in sorted(glob.glob(os.path.join(directory, "*.csv"))):
        name = os.path.basename(path)
        match = CSV_PATTERN.match(name)
        if not match or name.startswith("baseline-") != baseline:
            continue
        logs[int(match.group(1))] = read_csv(path)
    return dict(sorted(logs.items()))


def plot_directory(directory: str, log_scale: bool = False):
    logs = load_logs(directory)
    if not logs:
        raise PreconditionError("no seed-*.csv trajectories in {}".format(directory))
    return emit_plots(list(logs.values()), directory, log_scale=log_scale,
                      title=os.path.basename(os.path.normpath(directory)))
