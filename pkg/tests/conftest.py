import logging
from pathlib import Path

import numpy as np
import pytest

from bccva import CirppParams, DiscountCurve, G2ppParams, HazardCurve, RunConfig, fit_phi, fit_psi

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(autouse=True)
def _quiet_logs(caplog):
    caplog.set_level(logging.ERROR, logger="bccva")


@pytest.fixture(scope="session")
def curve():
    return DiscountCurve.from_zero_rates(
        [1, 2, 3, 5, 7, 10, 15, 30], [0.010, 0.016, 0.021, 0.028, 0.032, 0.035, 0.038, 0.040]
    )


@pytest.fixture(scope="session")
def g2_params():
    return G2ppParams(0.5, 0.05, 0.010, 0.009, -0.5)


@pytest.fixture(scope="session")
def rates(g2_params, curve):
    return fit_phi(g2_params, curve)


@pytest.fixture(scope="session")
def cir_I():
    return fit_psi(CirppParams("I", 0.4, 0.015, 0.1, 0.012), HazardCurve.flat("I", 0.02))


@pytest.fixture(scope="session")
def cir_C():
    return fit_psi(CirppParams("C", 0.5, 0.04, 0.2, 0.035), HazardCurve.flat("C", 0.06))


def load_config(name: str, **sim) -> RunConfig:
    return RunConfig.load(CONFIGS / name).with_overrides(**sim)


def within_se(estimate, target, se, k=3.0):
    return abs(estimate - target) <= k * se


def mc_mean(x):
    x = np.asarray(x, dtype=float)
    return x.mean(), x.std(ddof=1) / np.sqrt(len(x))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
