import numpy as np
import pytest
from hypothesis import settings

from sedpce.grid import Bus, Generator, Line, Load, PowerSystem, WindFarm
from sedpce.io import bundled, load_system

settings.register_profile("default", max_examples=40, deadline=None)
settings.register_profile("fast", max_examples=5, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def five_bus():
    return load_system(bundled("five_bus.json"))


def single_bus(load=(100.0,), cost=10.0, p_max=200.0, p_min=0.0, wind_farms=0, **gen):
    T = len(load)
    return PowerSystem(
        periods=T,
        buses=(Bus(1, slack=True),),
        lines=(),
        generators=(Generator("g1", 1, p_min, p_max, ((p_max, cost),), (1,) * T, **gen),),
        loads=(Load("d1", 1, tuple(load)),),
        wind_farms=tuple(WindFarm(k + 1, 1) for k in range(wind_farms)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
