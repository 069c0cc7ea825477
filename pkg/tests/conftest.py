import pytest

import pev_bottleneck as pb


@pytest.fixture(scope="session")
def params():
    return pb.reference_scenario()


@pytest.fixture(scope="session")
def params_pbar():
    # non-zero base price, to check that it only ever shifts costs
    return pb.reference_scenario(p_bar=0.05)


ACCEPTANCE_LINES = []


def record_acceptance(label: str, passed: bool, detail: str) -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
