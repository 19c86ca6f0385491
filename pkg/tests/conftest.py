from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from pwthermo import catalog
from pwthermo.cylinders import clear_cache

settings.register_profile("pwthermo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pwthermo")

#: Lines recorded by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES: list = []


@pytest.fixture(params=sorted(catalog.CATALOG))
def catalog_map(request):
    return catalog.get(request.param)


@pytest.fixture(autouse=True, scope="module")
def _fresh_cache():
    clear_cache()
    yield


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
