from __future__ import annotations

import numpy as np
import pytest

from spatialcp.fv import FVTable, cached_fv_table


@pytest.fixture(scope="session")
def fv_table() -> FVTable:
    """Default F_V table, built once per machine and cached on disk."""
    return cached_fv_table()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def report(capsys):
    """Print one acceptance line straight to the terminal, bypassing capture."""

    def emit(criterion: str, passed: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")

    return emit
