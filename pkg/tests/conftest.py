from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from surfquad.metrics import Telemetry
from surfquad.plant import QuadParams

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def params() -> QuadParams:
    return QuadParams()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def make_telemetry(t: np.ndarray, F: np.ndarray) -> Telemetry:
    """Minimal telemetry carrying motor thrusts ``F`` on grid ``t``."""
    n = len(t)
    z3 = np.zeros((n, 3))
    return Telemetry(
        t=np.asarray(t, float), x=z3, v=z3, R=np.repeat(np.eye(3)[None], n, axis=0), w=z3,
        mode=np.zeros(n, int), phase=np.zeros(n, int), psi=np.zeros(n), e_R=z3, e_omega=z3,
        e_x=np.full((n, 3), np.nan), e_v=np.full((n, 3), np.nan), f=np.sum(F, axis=1), u=z3,
        f_cmd=np.sum(F, axis=1), u_cmd=z3, F=np.asarray(F, float), saturated=np.zeros((n, 4), bool),
        s_R=z3, s_x=np.full((n, 3), np.nan),
    )


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
