import math
from pathlib import Path

import numpy as np
import pytest

from strainflow.classify import acceptance_doc
from strainflow.config import parse_config
from strainflow.model import AgeGrid, ModelParams, RateFunction, StrainParams

ACCEPTANCE_LINES = []
ROOT = Path(__file__).resolve().parent.parent


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def two_strain(lam=2.0, mu_s=1.0, bx=0.9, by=2.0, mux=1.0, muy=1.0):
    return ModelParams(lam, mu_s, (
        StrainParams("x", RateFunction.constant(mux), RateFunction.constant(bx, 0.5, 3.0)),
        StrainParams("y", RateFunction.constant(muy), RateFunction.constant(by, 1.5, 4.0)),
    ))


def regime_config(regime, **kw):
    return parse_config(acceptance_doc(regime, **kw))


@pytest.fixture
def grid():
    return AgeGrid(10.0, 0.02)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
