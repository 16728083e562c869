import sys

import numpy as np
import pytest

from guiprune import _backend
from guiprune.core import ImportanceMap, PartitionMask, TokenGrid


@pytest.fixture(params=sorted(_backend.available_backends()))
def kern(request):
    """Every kernel implementation that is importable in this build."""
    return _backend.available_backends()[request.param]


def make_grid(rows, cols, patch_px=14, merge_factor=2):
    return TokenGrid(rows, cols, patch_px, merge_factor)


def make_inputs(rows, cols, fg, scores):
    grid = make_grid(rows, cols)
    fg_arr = np.zeros(rows * cols, dtype=bool)
    fg_arr[list(fg)] = True
    return grid, ImportanceMap(grid, np.asarray(scores, dtype=np.float64)), PartitionMask(grid, fg_arr)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[n]
        terminalreporter.write_line(f"acceptance {n}: {'PASS' if ok else 'FAIL'} - {detail}")
