import time
from contextlib import contextmanager

import pytest


@pytest.fixture
def report_line(capsys):
    """Time a block and print one PASS/FAIL line for it, bypassing capture."""

    @contextmanager
    def run(label, limit):
        t0 = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            dt = time.perf_counter() - t0
            ok = ok and dt < limit
            with capsys.disabled():
                print(f"\n{label}: {'PASS' if ok else 'FAIL'} ({dt:.1f} s, limit {limit:.0f} s)")
        assert dt < limit, f"{label} took {dt:.1f} s, limit {limit} s"

    return run
