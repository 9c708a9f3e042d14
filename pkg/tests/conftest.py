import json
from pathlib import Path

import pytest

from pgcache import linegraph as lg
from pgcache import pda as pdamod

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracle_counts():
    return json.loads((DATA / "oracle_counts.json").read_text())


@pytest.fixture(scope="session")
def instance_2411():
    """Geometry, line graph, cover and PDA for (q, k, m, t) = (2, 4, 1, 1)."""
    ctx = lg.build_geometry(2, 4, 1, 1)
    L = lg.build_line_graph(ctx)
    cover = lg.transmission_cover(ctx, L)
    return ctx, L, cover, pdamod.line_graph_to_pda(L, cover)


@pytest.fixture(scope="session")
def pda_2411(instance_2411):
    return instance_2411[3]


@pytest.fixture()
def example():
    return lg.example_graph()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
