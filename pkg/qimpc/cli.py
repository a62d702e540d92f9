"""
qimpc command line: run experiments, list presets, check gradients, plot logs.

Exit codes: 0 success, 1 failed run or check, 2 usage or configuration error.
"""
import argparse
import logging
import os
import sys

from . import __version__
from .config import PRESETS, ExperimentConfig, dump_config, load_config, load_preset
from .errors import ConfigurationError, PreconditionError, QimpcError
from .gradcheck import run_grad_check
from .harness import plot_directory, run_experiment

log = logging.getLogger(__name__)

LOG_LEVEL_ENV = "QIMPC_LOG_LEVEL"
LOG_FORMAT = "%(asctime)s | QIMPC | %(levelname)s | (%(filename)s:%(lineno)d in %(funcName)s) | %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S %Z"

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def setup_logging(level=None, stream=None):
    level = (level or os.environ.get(LOG_LEVEL_ENV) or "INFO").upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ConfigurationError("unknown log level '{}'".format(level))
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, LOG_DATE_FORMAT))
    root = logging.getLogger("qimpc")
    root.handlers = [handler]
    root.setLevel(level)
    root.propagate = False


def _seed_list(text):
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("seeds must be comma separated integers, got '{}'".format(text))
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    if any(seed < 0 for seed in seeds):
        raise argparse.ArgumentTypeError("seeds must be non-negative, got '{}'".format(text))
    return seeds


def build_parser():
    parser = argparse.ArgumentParser(prog="qimpc", description="Quantum-inspired model predictive control")
    parser.add_argument("--version", action="version", version="%(prog)s {}".format(__version__))
    parser.add_argument("--log-level", default=None,
                        help="DEBUG, INFO, WARNING or ERROR (default: ${} or INFO)".format(LOG_LEVEL_ENV))
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    for name, help_text in (("run", "run an experiment with the circuit controller"),
                            ("baseline", "run an experiment with the classical controller")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="config file or preset name")
        cmd.add_argument("--out", default=None, help="output root (default: run.output_dir, then $QIMPC_OUTPUT_ROOT)")
        cmd.add_argument("--seeds", type=_seed_list, default=None, help="comma separated seeds, e.g. 0,1,2")

    show = sub.add_parser("list", help="print the built-in presets")
    show.add_argument("--verbose", action="store_true", help="print every parameter")

    check = sub.add_parser("grad-check", help="compare parameter-shift and finite-difference gradients")
    check.add_argument("--qubits", type=int, default=4)
    check.add_argument("--trials", type=int, default=100)
    check.add_argument("--seed", type=int, default=0)

    plot = sub.add_parser("plot", help="redraw plots from the CSV trajectories of a directory")
    plot.add_argument("--in", dest="in_dir", required=True, help="directory holding seed-*.csv files")
    plot.add_argument("--log-scale", action="store_true", help="logarithmic loss axis")
    return parser


def _describe(cfg: ExperimentConfig, verbose):
    if verbose:
        return dump_config(cfg)
    return "{}: {} qubits, {} steps, loss {}, bounds {} .. {}".format(
        cfg.experiment, cfg.encoder.n_qubits, cfg.mpc.total_steps, cfg.loss.kind.value,
        list(cfg.mpc.u_min), list(cfg.mpc.u_max))


def cmd_list(args):
    for name in PRESETS:
        print(_describe(load_preset(name), args.verbose))
    return EXIT_OK


def cmd_run(args, baseline=False):
    cfg = load_config(args.config)
    result = run_experiment(cfg, out_dir=args.out, seeds=args.seeds, baseline=baseline)
    for summary in result.summaries:
        print("seed {}: loss {:.6g} -> {:.6g} ({:.1%} reduction), {} steps, {} bound violations".format(
            summary.seed, summary.initial_loss, summary.final_loss, summary.reduction, summary.steps,
            summary.bound_violations))
    for error in result.errors:
        print("seed {}: {} ({})".format(error["seed"], error["error"], error["message"]))
    return EXIT_FAILED if result.failed else EXIT_OK


def cmd_grad_check(args):
    report = run_grad_check(args.qubits, args.trials, args.seed)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_plot(args):
    for path in plot_directory(args.in_dir, log_scale=args.log_scale):
        print(path)
    return EXIT_OK


def cli_main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        setup_logging(args.log_level)
        if args.command == "list":
            return cmd_list(args)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "baseline":
            return cmd_run(args, baseline=True)
        if args.command == "grad-check":
            return cmd_grad_check(args)
        return cmd_plot(args)
    except (ConfigurationError, PreconditionError) as e:
        print("error: {}".format(e), file=sys.stderr)
        return EXIT_USAGE
    except (QimpcError, OSError) as e:
        log.error("%s", e)
        return EXIT_FAILED
