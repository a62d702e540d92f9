"""
Miscellaneous functions, no tasks here
"""
from __future__ import print_function

import filecmp
import os
from subprocess import check_output


PACKAGE = "qimpc"
TEST_PATTERN = "*_tests.py"


def get_git_branch_name():
    """
    Return the name of the current git branch
    """
    return check_output(["git", "rev-parse", "--abbrev-ref", "HEAD"]).decode('utf-8').strip()


def parse_seeds(seeds):
    """
    Seeds come from the command line as comma separated tokens in a string
    """
    if seeds is None:
        return None
    return [int(s) for s in str(seeds).split(',') if s.strip()]


def csv_mismatches(first_dir, second_dir):
    """
    Compare every CSV below first_dir with its counterpart below second_dir,
    byte for byte. Returns the relative paths that differ or are missing.
    """
    mismatches = []
    for root, _, files in os.walk(first_dir):
        for name in sorted(files):
            if not name.endswith(".csv"):
                continue
            rel = os.path.relpath(os.path.join(root, name), first_dir)
            other = os.path.join(second_dir, rel)
            if not os.path.isfile(other) or not filecmp.cmp(os.path.join(first_dir, rel), other, shallow=False):
                mismatches.append(rel)
    return mismatches
