import numpy as np
import pytest
from hypothesis import settings

from nanomag_rc.magnetics import Role
from nanomag_rc.reservoir import ReservoirLayout, get_preset

settings.register_profile("repo", max_examples=60, deadline=None)
settings.load_profile("repo")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def preset():
    return get_preset("default-pma")


@pytest.fixture(scope="session")
def params(preset):
    return preset.llg_params()


def square_layout(preset, n=2):
    """``n x n`` grid at the preset pitch, first magnet as the input."""
    mags = []
    for j in range(n):
        for i in range(n):
            role = Role.INPUT if not mags else Role.READOUT
            mags.append(preset.magnet((preset.pitch * i, preset.pitch * j, 0.0), role))
    return ReservoirLayout.from_magnets(mags, name=f"square{n}")


def pair_layout(preset):
    mags = [preset.magnet((0.0, 0.0, 0.0), Role.INPUT), preset.magnet((preset.pitch, 0.0, 0.0))]
    return ReservoirLayout.from_magnets(mags, name="pair")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def square_magnets(preset, n=2):
    """Identical readout-role magnets on an ``n x n`` grid (no input stiffening)."""
    return [preset.magnet((preset.pitch * i, preset.pitch * j, 0.0))
            for j in range(n) for i in range(n)]
