import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from rieszsphere import Configuration, SweepConfig, run_sweep

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

CACHE_DIR = Path(os.environ.get("RIESZSPHERE_TEST_CACHE", Path(__file__).parent / ".cache"))
SWEEP_N = [64, 128, 256, 512, 1024]

_acceptance = []


def record_acceptance(number, title, passed, detail=""):
    _acceptance.append((number, title, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_acceptance):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} [{number:2d}] {title}  {detail}")


@pytest.fixture(scope="session")
def cache_dir():
    CACHE_DIR.mkdir(parents=True, exist_ok=True)
    return str(CACHE_DIR)


def _sweep(s, cache_dir):
    cfg = SweepConfig(d=2, s=s, N_list=SWEEP_N, epsilon=0.2, init="spiral",
                      outputs={"cache_dir": cache_dir})
    return run_sweep(cfg)


@pytest.fixture(scope="session")
def sweep_riesz(cache_dir):
    """d=2, s=1 sweep over N = 64..1024."""
    return _sweep(1.0, cache_dir)


@pytest.fixture(scope="session")
def sweep_log(cache_dir):
    """d=2 logarithmic sweep over N = 64..1024."""
    return _sweep(0.0, cache_dir)


def tetrahedron():
    X = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / np.sqrt(3.0)
    return Configuration(2, X)


def antipodal(d=2):
    X = np.zeros((2, d + 1))
    X[0, -1], X[1, -1] = 1.0, -1.0
    return Configuration(d, X)


def equilateral():
    ang = 2 * np.pi * np.arange(3) / 3
    return Configuration(2, np.column_stack([np.cos(ang), np.sin(ang), np.zeros(3)]))
