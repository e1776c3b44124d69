import pytest
from hypothesis import HealthCheck, settings

from semirigid.bench import benchmark
from semirigid.model import build_frame
from semirigid.sections import default_catalog

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def frame3_rigid():
    return benchmark("frame3", "rigid")


def portal_config(beam_conn="rigid", base="fixed", pool=("W12X26", "W14X34", "W16X31")):
    """One-bay, one-story portal: nodes 0, 1 at the base, 2, 3 at the top."""
    return {
        "grid": {"bays": 1, "bay_m": 5.0, "stories": 1, "story_m": 3.2,
                 "column_groups": [{"stories": [1, 1], "group": "C"}],
                 "beam_groups": [{"stories": [1, 1], "group": "B"}],
                 "beam_conn": beam_conn, "base": base},
        "groups": [{"label": "C", "role": "column", "pool": list(pool)},
                   {"label": "B", "role": "beam", "pool": list(pool)}],
    }


@pytest.fixture
def portal(catalog):
    return build_frame(portal_config(), catalog)


ACCEPTANCE_LINES = []


def record_criterion(label, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'}  criterion {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
