import pytest

from containsim.config import preset

ACCEPTANCE_LINES: list[str] = []


def report(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_cfg():
    """Small, fast world for behavioral tests."""
    return preset("paper-text", area_width=200.0, area_height=200.0, population=60,
                  initial_confirmed=3, initial_carriers=3, horizon=40.0, rng_seed=11)


@pytest.fixture
def micro_cfg():
    """Hand-placed micro-worlds: one camera, one cell, agents barely move."""
    return preset("paper-text", area_width=100.0, area_height=100.0, population=2,
                  initial_confirmed=0, initial_carriers=0, camera_grid=(1, 1),
                  cell_grid=(1, 1), horizon=1.0, speed_min=1e-6, speed_max=1e-6)
