import re

import numpy as np
import pytest

from hdcluster.encoding import EncodingSpec
from hdcluster.graph import GraphState, dft_matrix, layout, make_graph, omega, resolve_frame
from hdcluster.presets import chain4_qudit, comb8

ACCEPTANCE_LINES: list[str] = []

# Operator strings of the two published witnesses, written with the local
# Hadamards already absorbed into the measured state.
WITNESS8_STRINGS = """
X2 Z3 Z4 Z5 Z6 X7 X8 | X2 Z6 X7 X8 | X2 Z4 Z5 X7 X8 | X2 Z3 X7 X8 | X1 Z4 Z5 Z6 X8 |
X1 Z3 Z6 X8 | X1 Z3 Z4 Z5 X8 | X1 X8 | X1 X2 Z3 Z4 Z5 Z6 X7 | X1 X2 Z6 X7 | X1 X2 Z4 Z5 X7 |
X1 X2 Z3 X7 | Z4 Z5 Z6 | Z3 Z6 | Z3 Z4 Z5 | Z1 Z2 X3 X5 X6 Z7 Z8 | Z1 Z2 X3 X4 X6 Z7 Z8 |
Z1 X4 X5 Z7 Z8 | Z1 Z7 Z8 | Z1 X3 X5 X6 Z8 | Z1 X3 X4 X6 Z8 | Z1 Z2 X4 X5 Z8 | Z1 Z2 Z8 |
X3 X5 X6 Z7 | X3 X4 X6 Z7 | Z2 X4 X5 Z7 | Z2 Z7 | Z2 X3 X5 X6 | Z2 X3 X4 X6 | X4 X5
"""
WITNESS8_IDENTITY_WEIGHT = 2

WITNESS5_STRINGS = """
Z1^4 Z2^2 X3 X4 | Z1^4 Z2^3 X3^2 X4^2 | Z1^4 Z2^4 X3^3 X4^3 | Z1^4 X3^4 X4^4 |
Z1^3 Z2^3 X3 X4 | Z1^3 Z2^4 X3^2 X4^2 | Z1^3 X3^3 X4^3 | Z1^3 Z2 X3^4 X4^4 | Z2 X3 X4 |
Z2^2 X3^2 X4^2 | Z1^4 Z2 | Z1^3 Z2^2 | Z3 Z4^4 | Z3^2 Z4^3 | X1 X2 Z3^2 Z4^4 |
X1 X2 Z3^3 Z4^3 | X1 X2 Z3^4 Z4^2 | X1 X2 Z4 | X1 X2 Z3 | X1^2 X2^2 Z3^3 Z4^4 | X1^2 X2^2 Z3^4 Z4^3 |
X1^2 X2^2 Z4^2 | X1^2 X2^2 Z3 Z4 | X1^2 X2^2 Z3^2
"""


def parse_strings(text: str, n: int, d: int) -> list[tuple]:
    """Parse ``|``-separated Pauli strings into ``(x, z)`` exponent tuples."""
    out = []
    for chunk in text.split("|"):
        chunk = chunk.strip()
        if not chunk:
            continue
        x, z = [0] * n, [0] * n
        for op, v, p in re.findall(r"([XZ])(\d+)(?:\^(\d+))?", chunk):
            (x if op == "X" else z)[int(v) - 1] = int(p or 1) % d
        out.append((tuple(x), tuple(z)))
    return out


@pytest.fixture(scope="session")
def g8():
    return comb8()


@pytest.fixture(scope="session")
def g5():
    return chain4_qudit(5)


@pytest.fixture(scope="session")
def spec8():
    return EncodingSpec(2, 4)


@pytest.fixture(scope="session")
def spec5():
    return EncodingSpec(5, 2)


def random_realizable_graph(rng, d=None, n_per_photon=None, explicit_frame=None) -> GraphState:
    d = int(rng.choice([2, 3, 5])) if d is None else d
    n = int(rng.integers(1, 4)) if n_per_photon is None else n_per_photon
    labels = rng.permutation(np.arange(1, 2 * n + 1))
    a_side, b_side = sorted(labels[:n].tolist()), labels[n:].tolist()
    edges = [(a, b, 1) for a, b in zip(a_side, b_side)]
    for side in (a_side, b_side):
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.5:
                    edges.append((side[i], side[j], int(rng.integers(1, d))))
    if explicit_frame is None:
        explicit_frame = rng.random() < 0.5
    frame = None
    if explicit_frame:
        frame = {a if rng.random() < 0.5 else b for a, b in zip(a_side, b_side)}
    return make_graph(d, edges, a_side, b_side, frame)


def direct_state(g: GraphState) -> np.ndarray:
    """``prod H^dag (prod CZ^w) |+>^n`` built vertex by vertex, laid out as ``(M, M)``."""
    d, n = g.d, g.n_vertices
    psi = np.ones((d,) * n, dtype=complex) / np.sqrt(d) ** n
    grids = np.indices((d,) * n)
    w = omega(d)
    for u, v, wt in g.edges:
        psi = psi * w ** (wt * grids[u - 1] * grids[v - 1])
    hdag = dft_matrix(d).conj().T
    for v in resolve_frame(g):
        psi = np.moveaxis(np.tensordot(hdag, psi, axes=(1, v - 1)), 0, v - 1)
    a_order, b_order = layout(g)
    psi = np.transpose(psi, [v - 1 for v in a_order + b_order])
    m = d ** (n // 2)
    return psi.reshape(m, m)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
