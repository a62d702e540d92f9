"""
Experiment tasks: run presets, check gradients, verify reproducibility
"""
from __future__ import print_function

import os
import shutil
import tempfile

from invoke import task
from invoke.exceptions import Exit

from .utils import PACKAGE, csv_mismatches, parse_seeds

PRESETS = ["target-tracking", "building", "vehicle", "pendulum", "double-pendulum"]


def _cli(ctx, args, warn=False):
    return ctx.run("python -m {} {}".format(PACKAGE, args), warn=warn)


def _run_args(config, out=None, seeds=None, baseline=False):
    args = "{} --config {}".format("baseline" if baseline else "run", config)
    if out:
        args += " --out {}".format(out)
    seeds = parse_seeds(seeds)
    if seeds:
        args += " --seeds {}".format(",".join(str(s) for s in seeds))
    return args


@task
def run(ctx, config, out=None, seeds=None, baseline=False):
    """
    Run one experiment from a config file or preset name.

    Example invokation:
        inv experiment.run --config=pendulum --seeds=0,1
    """
    res = _cli(ctx, _run_args(config, out, seeds, baseline), warn=True)
    if res.exited != 0:
        raise Exit(code=res.exited)


@task
def suite(ctx, out=None, seeds=None, baseline=False):
    """
    Run every built-in preset, then report which ones had failing seeds
    """
    failed = []
    for name in PRESETS:
        print("Running preset {}".format(name))
        res = _cli(ctx, _run_args(name, out, seeds, baseline), warn=True)
        if res.exited != 0:
            failed.append(name)

    if failed:
        print("Error: presets with failed runs: {}".format(", ".join(failed)))
        raise Exit(code=1)


@task
def grad_check(ctx, qubits=4, trials=100, seed=0):
    """
    Compare parameter-shift gradients with finite differences
    """
    res = _cli(ctx, "grad-check --qubits {} --trials {} --seed {}".format(qubits, trials, seed), warn=True)
    if res.exited != 0:
        raise Exit(code=res.exited)


@task
def reproducibility(ctx, seeds="0,1", keep=False):
    """
    Run the preset suite twice and check the CSV logs are byte-identical
    """
    root = tempfile.mkdtemp(prefix="{}-repro-".format(PACKAGE))
    first, second = os.path.join(root, "first"), os.path.join(root, "second")
    try:
        suite(ctx, out=first, seeds=seeds)
        suite(ctx, out=second, seeds=seeds)
        mismatches = csv_mismatches(first, second)
        if mismatches:
            for rel in mismatches:
                print("Error: {} differs between runs".format(rel))
            raise Exit(code=1)
        print("All CSV logs are identical across runs")
    finally:
        if keep:
            print("Outputs kept in {}".format(root))
        else:
            shutil.rmtree(root, ignore_errors=True)
