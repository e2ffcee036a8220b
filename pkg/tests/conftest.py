import os

import pytest

from stackelberg_align.domain import validate_scenario

# acceptance lines collected during the run, printed in the terminal summary
ACCEPTANCE: list[tuple[int, bool, str]] = []

S1 = {
    "types": [
        {"id": "theta1", "alpha_a": 0.2, "alpha_b": 0.5, "r_a": 1.0, "r_b": 2.0},
        {"id": "theta2", "alpha_a": 0.25, "alpha_b": 0.5, "r_a": 2.0, "r_b": 1.0},
    ],
    "prior": [0.5, 0.5],
    "gamma_alg": 0.9,
    "gamma_user": 0.6,
    "entry": "ae",
}


@pytest.fixture
def s1_raw():
    import copy

    return copy.deepcopy(S1)


@pytest.fixture
def s1():
    return validate_scenario(S1)


@pytest.fixture
def s1_signal():
    return validate_scenario({**S1, "cost": 0.05})


@pytest.fixture
def acceptance():
    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE.append((number, passed, line))
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(line)


def pytest_configure(config):
    # single-threaded by default so timings are comparable
    os.environ.setdefault("STACKELBERG_ALIGN_THREADS", "1")
