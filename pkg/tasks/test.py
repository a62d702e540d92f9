"""
High level testing tasks
"""
from __future__ import print_function

import os
import re

from invoke import task
from invoke.exceptions import Exit

from .utils import PACKAGE, TEST_PATTERN, get_git_branch_name


@task()
def test(ctx, targets=None, verbose=False, failfast=False, skip_linters=False):
    """
    Run the linters and the unit tests. If targets are not specified, every
    *_tests.py module of the package runs.

    Example invokation:
        inv test --targets=quantum_tests,plants_tests --verbose
    """
    if not skip_linters:
        lint_python(ctx)

    flags = ""
    if verbose:
        flags += " -v"
    if failfast:
        flags += " -f"

    if targets:
        modules = ["{}.{}".format(PACKAGE, t.strip()) for t in targets.split(',') if t.strip()]
        cmd = "python -m unittest{} {}".format(flags, " ".join(modules))
    else:
        cmd = "python -m unittest discover{} -s {} -t . -p \"{}\"".format(flags, PACKAGE, TEST_PATTERN)

    res = ctx.run(cmd, warn=True, env={"MPLBACKEND": "Agg"})
    if res.exited != 0:
        raise Exit(code=res.exited)


@task
def lint_releasenote(ctx, base="master"):
    """
    Lint release notes with Reno
    """
    ctx.run("reno lint")

    # checking if a releasenote has been added/changed on a feature branch
    branch = os.environ.get("CI_BRANCH") or get_git_branch_name()
    if re.match(r".*/.*", branch) is None:
        print("{} is not a feature branch, skipping the releasenote check".format(branch))
        return

    files = ctx.run("git diff --name-only {}...HEAD".format(base), hide=True).stdout.splitlines()
    if any(f.startswith("releasenotes/notes/") for f in files):
        return
    if any(f.startswith(PACKAGE + "/") and not f.endswith("_tests.py") for f in files):
        print("Error: No releasenote was found for this branch. Please add one using 'reno new'.")
        raise Exit(code=1)


@task
def lint_python(ctx):
    """
    Lints Python files.
    See 'setup.cfg' file for configuration
    """

    ctx.run("flake8 .")
