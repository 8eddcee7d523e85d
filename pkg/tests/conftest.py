"""Shared fixtures: a session-wide kernel-table cache and a CLI runner."""

import os
import subprocess
import sys

import pytest

from liquifbm.kernel import TimeGrid, build_table


@pytest.fixture(scope="session")
def tables():
    """Memoized build_table; the n = 256 tables dominate suite runtime."""
    cache = {}

    def get(h, n, horizon=1.0):
        key = (float(h), int(n), float(horizon))
        if key not in cache:
            cache[key] = build_table(TimeGrid(horizon, n), h)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def cli():
    """Run the installed CLI in a subprocess; returns (rc, stdout, stderr)."""

    def run(*args, env=None):
        full_env = dict(os.environ)
        if env:
            full_env.update(env)
        proc = subprocess.run(
            [sys.executable, "-m", "liquifbm.cli", *map(str, args)],
            capture_output=True, text=True, env=full_env, timeout=600,
        )
        return proc.returncode, proc.stdout, proc.stderr

    return run
