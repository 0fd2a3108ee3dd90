"""Shared fixtures: compile the numba kernels once before any timed test."""

import pytest

from immuno_opt import _kernels


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    """Force kernel compilation up front so wall-clock assertions in the
    acceptance tests measure runs, not the JIT."""
    _kernels.warmup()
    return _kernels.AVAILABLE
