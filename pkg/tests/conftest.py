"""Session-wide trained models; training dominates the suite's runtime."""
import time

import pytest

from risdesign.designer import DesignSpec, design_nbit
from risdesign.fixtures import (ACCEPTANCE_BAND, ACCEPTANCE_FREQ, ACCEPTANCE_SAMPLES,
                                acceptance_oracle)
from risdesign.oracle import OracleConfig, generate_arrays
from risdesign.surrogate import TrainConfig, train

FIXTURE_TRAIN = TrainConfig(epochs=100, batch_size=128, lbfgs_iters=2000, seed=0)


class Timed:
    def __init__(self, value, seconds):
        self.value = value
        self.seconds = seconds


def _timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return Timed(out, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def default_dataset():
    cfg = OracleConfig()
    return generate_arrays(cfg, 2000, (cfg.f_lo, cfg.f_hi, 201), seed=0)


@pytest.fixture(scope="session")
def default_training(default_dataset):
    """(model, report) from the default config, wrapped with its wall time."""
    return _timed(train, default_dataset, TrainConfig(seed=0))


@pytest.fixture(scope="session")
def fixture_dataset():
    return generate_arrays(acceptance_oracle(), ACCEPTANCE_SAMPLES, ACCEPTANCE_BAND, seed=0)


@pytest.fixture(scope="session")
def fixture_training(fixture_dataset):
    return _timed(train, fixture_dataset, FIXTURE_TRAIN)


@pytest.fixture(scope="session")
def fixture_design(fixture_training):
    model = fixture_training.value[0]
    return _timed(design_nbit, model, DesignSpec(bits=3, freq=ACCEPTANCE_FREQ, seed=0))


_CRITERIA: dict = {}


@pytest.fixture(scope="session")
def criterion():
    """Record and print one PASS/FAIL line per acceptance criterion."""
    def record(number: int, title: str, passed: bool, detail: str = ""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}  {detail}".rstrip()
        _CRITERIA[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
