import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fusionperc.lattice import Lattice  # noqa: E402


def small_graph(n_nodes: int, edges, colors=None, name: str = "graph") -> Lattice:
    """Non-periodic lattice over an explicit edge list."""
    edges = list(edges)
    m = len(edges)
    colors = np.ones(n_nodes, dtype=np.int64) if colors is None else np.asarray(colors)
    return Lattice(
        name=name,
        extents=(),
        n=max(3, n_nodes),
        colors=colors,
        edge_a=np.array([a for a, _ in edges], dtype=np.int64).reshape(m),
        edge_b=np.array([b for _, b in edges], dtype=np.int64).reshape(m),
        edge_offset=np.zeros((m, 1), dtype=np.int64),
        edge_kind=np.zeros(m, dtype=np.int8),
        unit_cell=None,
        periodic=False,
    )


@pytest.fixture
def graph():
    return small_graph


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, ok: bool, text: str) -> None:
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
