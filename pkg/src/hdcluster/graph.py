"""Two-photon qudit graph states: realizability, compilation and stabilizers.

Vertices are labelled ``1..2N``; the witnesses split them by label parity.

SPDC produces, per aperture pair, the state ``sum_i |ii>/sqrt(d)``, which
equals a single-edge graph state up to ``H_d^dag`` on one of its two qudits.
That qudit is recorded as *framed*. A framed vertex changes how intra-photon
edges compile:

* both ends unframed: CZ^w, i.e. a phase ``w * q_u * q_v * 2pi/d`` per mode;
* one end framed: controlled shift ``q_t -> q_t + w * q_c``, a mode relabeling;
* both ends framed: a dense (non-monomial) unitary on the framed digits.

Generalized Paulis follow ``X|j> = |j+1 mod d>`` and ``Z|j> = w**j |j>``
with ``w = exp(2 pi i / d)``; ``H_d`` is the DFT ``|j> -> sum_k w**(jk)|k>/sqrt(d)``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .encoding import EncodingSpec, digit_table
from .errors import CompilationError, ValidationError
from .state import (
    ModeUnitary,
    TwoPhotonState,
    apply_mode_permutation,
    apply_mode_phases,
    apply_photon_unitary,
    spdc_state,
)


def omega(d: int) -> complex:
    return np.exp(2j * np.pi / d)


def dft_matrix(d: int) -> np.ndarray:
    j = np.arange(d)
    return omega(d) ** np.outer(j, j) / np.sqrt(d)


def shift_matrix(d: int) -> np.ndarray:
    return np.roll(np.eye(d), 1, axis=0)


def clock_matrix(d: int) -> np.ndarray:
    return np.diag(omega(d) ** np.arange(d))


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


@dataclass(frozen=True)
class GraphState:
    d: int
    n_vertices: int
    edges: frozenset  # of (u, v, w) with u < v
    allocation: dict  # vertex -> 'A' | 'B'
    hadamard_frame: frozenset | None = None  # None: derive on compilation

    def __post_init__(self):
        if self.d < 2:
            raise ValidationError(f"dimension must be >= 2, got {self.d}")
        norm = set()
        for u, v, w in self.edges:
            u, v, w = int(u), int(v), int(w)
            if u == v:
                raise ValidationError(f"self-loop on vertex {u}")
            if not (1 <= u <= self.n_vertices and 1 <= v <= self.n_vertices):
                raise ValidationError(f"edge ({u},{v}) outside vertices 1..{self.n_vertices}")
            if not 1 <= w <= self.d - 1:
                raise ValidationError(f"edge weight {w} outside [1, {self.d - 1}]")
            a, b = min(u, v), max(u, v)
            if any((x, y) == (a, b) for x, y, _ in norm):
                raise ValidationError(f"duplicate edge ({a},{b})")
            norm.add((a, b, w))
        object.__setattr__(self, "edges", frozenset(norm))
        alloc = {int(k): str(p) for k, p in self.allocation.items()}
        if set(alloc) != set(self.vertices):
            raise ValidationError("allocation must cover every vertex exactly once")
        if not set(alloc.values()) <= {"A", "B"}:
            raise ValidationError("allocation values must be 'A' or 'B'")
        object.__setattr__(self, "allocation", alloc)
        if self.hadamard_frame is not None:
            frame = frozenset(int(v) for v in self.hadamard_frame)
            if not frame <= set(self.vertices):
                raise ValidationError("frame flags reference unknown vertices")
            object.__setattr__(self, "hadamard_frame", frame)

    @property
    def vertices(self) -> range:
        return range(1, self.n_vertices + 1)

    def neighbors(self, v: int) -> dict[int, int]:
        out = {}
        for a, b, w in self.edges:
            if a == v:
                out[b] = w
            elif b == v:
                out[a] = w
        return out

    def photon_vertices(self, photon: str) -> list[int]:
        return sorted(v for v, p in self.allocation.items() if p == photon)

    def cross_edges(self) -> list[tuple[int, int, int]]:
        return sorted(e for e in self.edges if self.allocation[e[0]] != self.allocation[e[1]])

    def intra_edges(self, photon: str) -> list[tuple[int, int, int]]:
        return sorted(
            e for e in self.edges
            if self.allocation[e[0]] == photon and self.allocation[e[1]] == photon
        )

    def with_frame(self, frame: Iterable[int]) -> "GraphState":
        return GraphState(self.d, self.n_vertices, self.edges, self.allocation, frozenset(frame))

    def to_dict(self) -> dict:
        out = {
            "d": self.d,
            "vertices": self.n_vertices,
            "edges": [list(e) for e in sorted(self.edges)],
            "allocation": {"A": self.photon_vertices("A"), "B": self.photon_vertices("B")},
        }
        if self.hadamard_frame is not None:
            out["frame"] = sorted(self.hadamard_frame)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, obj: dict) -> "GraphState":
        edges = []
        for e in obj["edges"]:
            u, v = int(e[0]), int(e[1])
            edges.append((u, v, int(e[2]) if len(e) > 2 else 1))
        alloc = {}
        for photon in ("A", "B"):
            for v in obj["allocation"].get(photon, []):
                alloc[int(v)] = photon
        frame = obj.get("frame")
        return cls(
            d=int(obj["d"]),
            n_vertices=int(obj["vertices"]),
            edges=frozenset(edges),
            allocation=alloc,
            hadamard_frame=None if frame is None else frozenset(frame),
        )

    @classmethod
    def from_json(cls, text: str) -> "GraphState":
        return cls.from_dict(json.loads(text))


def make_graph(d, edges, photon_a, photon_b, frame=None) -> GraphState:
    """Convenience constructor from an edge list (pairs or weighted triples)."""
    alloc = {v: "A" for v in photon_a} | {v: "B" for v in photon_b}
    norm = frozenset((e[0], e[1], e[2] if len(e) > 2 else 1) for e in edges)
    return GraphState(d, len(alloc), norm, alloc, None if frame is None else frozenset(frame))


# --- realizability -------------------------------------------------------


@dataclass(frozen=True)
class Realizability:
    ok: bool
    matching: tuple = ()  # (A-vertex, B-vertex) pairs when ok
    violations: tuple = ()  # offending edges or vertices otherwise
    reason: str = ""

    def __bool__(self):
        return self.ok


def check_two_photon_realizable(g: GraphState) -> Realizability:
    """Cross-photon edges must form a unit-weight perfect matching."""
    a_side, b_side = g.photon_vertices("A"), g.photon_vertices("B")
    if len(a_side) != len(b_side):
        return Realizability(
            False, violations=tuple(g.vertices),
            reason=f"photons hold {len(a_side)} and {len(b_side)} vertices; a matching needs equal halves",
        )
    cross = g.cross_edges()
    heavy = tuple(e for e in cross if e[2] != 1)
    if heavy:
        return Realizability(False, violations=heavy, reason="cross-photon edges must have weight 1")
    degree = {v: 0 for v in g.vertices}
    for u, v, _ in cross:
        degree[u] += 1
        degree[v] += 1
    bad = tuple(v for v in g.vertices if degree[v] != 1)
    if bad:
        offending = tuple(e for e in cross if e[0] in bad or e[1] in bad) or bad
        return Realizability(
            False, violations=offending,
            reason="every vertex needs exactly one cross-photon edge; offending vertices "
            + ", ".join(map(str, bad)),
        )
    matching = tuple(
        sorted((u, v) if g.allocation[u] == "A" else (v, u) for u, v, _ in cross)
    )
    return Realizability(True, matching=matching)


def layout(g: GraphState) -> tuple[list[int], list[int]]:
    """Vertex held by each digit of photon A and photon B.

    A digits follow ascending vertex order; B digit ``k`` holds the SPDC
    partner of A digit ``k`` because both photons carry the same label.
    """
    real = check_two_photon_realizable(g)
    if not real:
        raise CompilationError(f"graph is not two-photon realizable: {real.reason}", real)
    partner = dict(real.matching)
    a_order = g.photon_vertices("A")
    return a_order, [partner[v] for v in a_order]


def vertex_axes(g: GraphState) -> dict[int, int]:
    """Axis of ``TwoPhotonState.tensor()`` carrying each vertex."""
    a_order, b_order = layout(g)
    n = len(a_order)
    axes = {v: k for k, v in enumerate(a_order)}
    axes.update({v: n + k for k, v in enumerate(b_order)})
    return axes


def _frame_cost(g: GraphState, frame: set) -> tuple[int, int]:
    dense = relabel = 0
    for photon in ("A", "B"):
        for u, v, _ in g.intra_edges(photon):
            k = (u in frame) + (v in frame)
            dense += k == 2
            relabel += k == 1
    return dense, relabel


def resolve_frame(g: GraphState) -> frozenset:
    """Explicit frame, or the cheapest one-per-pair choice.

    Cost order: dense edges, then relabeling edges, then fewest framed A
    vertices, then lexicographic. Explicit frames are checked to hold exactly
    one vertex of every SPDC pair.
    """
    a_order, b_order = layout(g)
    if g.hadamard_frame is not None:
        for a, b in zip(a_order, b_order):
            if (a in g.hadamard_frame) == (b in g.hadamard_frame):
                raise CompilationError(
                    f"frame must flag exactly one vertex of SPDC pair ({a},{b})", (a, b)
                )
        return g.hadamard_frame
    best = None
    for choice in itertools.product((1, 0), repeat=len(a_order)):
        frame = {a if c == 0 else b for a, b, c in zip(a_order, b_order, choice)}
        key = (*_frame_cost(g, frame), sum(1 for c in choice if c == 0), sorted(frame))
        if best is None or key < best[0]:
            best = (key, frame)
    return frozenset(best[1])


# --- compilation ---------------------------------------------------------


@dataclass(frozen=True)
class CompiledCircuit:
    spec: EncodingSpec
    pairing: tuple
    layout_A: tuple
    layout_B: tuple
    frame: frozenset
    phases_A: np.ndarray
    phases_B: np.ndarray
    perm_A: np.ndarray
    perm_B: np.ndarray
    dense_A: np.ndarray | None = None
    dense_B: np.ndarray | None = None
    frame_ops: tuple = field(default=())

    def photon_unitary(self, photon: str) -> np.ndarray:
        """Full per-photon mode unitary: dense @ permutation @ diag(phases)."""
        phases = self.phases_A if photon == "A" else self.phases_B
        perm = self.perm_A if photon == "A" else self.perm_B
        dense = self.dense_A if photon == "A" else self.dense_B
        u = np.zeros((len(perm), len(perm)), dtype=complex)
        u[perm, np.arange(len(perm))] = np.exp(1j * phases)
        return u if dense is None else dense @ u

    def to_dict(self) -> dict:
        out = {
            "schema_version": 1,
            "spec": self.spec.to_dict(),
            "pairing": [list(p) for p in self.pairing],
            "layout_A": list(self.layout_A),
            "layout_B": list(self.layout_B),
            "frame": sorted(self.frame),
            "frame_ops": [list(op) for op in self.frame_ops],
            "phases_A": self.phases_A.tolist(),
            "phases_B": self.phases_B.tolist(),
            "perm_A": self.perm_A.tolist(),
            "perm_B": self.perm_B.tolist(),
        }
        for name in ("dense_A", "dense_B"):
            m = getattr(self, name)
            if m is not None:
                out[name] = {"real": m.real.tolist(), "imag": m.imag.tolist()}
        return out


def _compile_photon(edges, order, frame, spec):
    d, M = spec.d, spec.M
    digits = digit_table(spec)
    pos = {v: k for k, v in enumerate(order)}
    phases = np.zeros(M)
    shifted = digits.copy()
    dense_phase = np.zeros(M)
    has_dense = False
    for u, v, w in edges:
        fu, fv = u in frame, v in frame
        qu, qv = digits[:, pos[u]], digits[:, pos[v]]
        if not fu and not fv:
            phases += 2 * np.pi / d * ((w * qu * qv) % d)
        elif fu and fv:
            dense_phase += 2 * np.pi / d * ((w * qu * qv) % d)
            has_dense = True
        else:
            target, ctrl = (pos[u], qv) if fu else (pos[v], qu)
            shifted[:, target] = (shifted[:, target] + w * ctrl) % d
    powers = d ** np.arange(spec.N - 1, -1, -1)
    perm = shifted @ powers
    dense = None
    if has_dense:
        f = kron_all([dft_matrix(d) if v in frame else np.eye(d) for v in order])
        dense = f.conj().T @ np.diag(np.exp(1j * dense_phase)) @ f
    return np.mod(phases, 2 * np.pi), perm.astype(int), dense


def compile_graph(g: GraphState, spec: EncodingSpec) -> CompiledCircuit:
    real = check_two_photon_realizable(g)
    if not real:
        raise CompilationError(f"graph is not two-photon realizable: {real.reason}", real)
    if g.d != spec.d or g.n_vertices != 2 * spec.N:
        raise CompilationError(
            f"graph (d={g.d}, {g.n_vertices} vertices) does not fit encoding d={spec.d}, N={spec.N}"
        )
    a_order, b_order = layout(g)
    frame = resolve_frame(g)
    ph_a, perm_a, dense_a = _compile_photon(g.intra_edges("A"), a_order, frame, spec)
    ph_b, perm_b, dense_b = _compile_photon(g.intra_edges("B"), b_order, frame, spec)
    return CompiledCircuit(
        spec=spec,
        pairing=real.matching,
        layout_A=tuple(a_order),
        layout_B=tuple(b_order),
        frame=frame,
        phases_A=ph_a,
        phases_B=ph_b,
        perm_A=perm_a,
        perm_B=perm_b,
        dense_A=dense_a,
        dense_B=dense_b,
        frame_ops=tuple(("Hdag", v) for v in sorted(frame)),
    )


def run_circuit(circuit: CompiledCircuit, state: TwoPhotonState | None = None) -> TwoPhotonState:
    state = spdc_state(circuit.spec) if state is None else state
    for photon in ("A", "B"):
        phases = circuit.phases_A if photon == "A" else circuit.phases_B
        perm = circuit.perm_A if photon == "A" else circuit.perm_B
        dense = circuit.dense_A if photon == "A" else circuit.dense_B
        state = apply_mode_phases(state, photon, phases)
        state = apply_mode_permutation(state, photon, perm)
        if dense is not None:
            state = apply_photon_unitary(state, photon, ModeUnitary(dense))
    return state


def simulate_cluster(g: GraphState, spec: EncodingSpec) -> TwoPhotonState:
    return run_circuit(compile_graph(g, spec))


# --- stabilizers ---------------------------------------------------------


@dataclass(frozen=True)
class StabilizerTerm:
    """``phase * prod_v X_v**x[v] Z_v**z[v]`` with ``X`` to the left of ``Z`` per vertex."""

    d: int
    x: tuple
    z: tuple
    phase: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(int(a) % self.d for a in self.x))
        object.__setattr__(self, "z", tuple(int(b) % self.d for b in self.z))

    @property
    def n(self) -> int:
        return len(self.x)

    def is_identity(self) -> bool:
        return not any(self.x) and not any(self.z)

    def __mul__(self, other: "StabilizerTerm") -> "StabilizerTerm":
        # Z^b X^c = w^(bc) X^c Z^b
        expo = sum(b * c for b, c in zip(self.z, other.x))
        return StabilizerTerm(
            self.d,
            tuple(a + c for a, c in zip(self.x, other.x)),
            tuple(b + e for b, e in zip(self.z, other.z)),
            self.phase * other.phase * omega(self.d) ** expo,
        )

    def __pow__(self, p: int) -> "StabilizerTerm":
        out = identity_term(self.d, self.n)
        for _ in range(p):
            out = out * self
        return out

    def conjugate_frame(self, frame: Iterable[int]) -> "StabilizerTerm":
        """``H^dag P H`` on framed vertices: ``X^a Z^b -> w^(-ab) X^b Z^(-a)``."""
        x, z, phase = list(self.x), list(self.z), self.phase
        for v in frame:
            a, b = x[v - 1], z[v - 1]
            x[v - 1], z[v - 1] = b, -a
            phase *= omega(self.d) ** (-a * b)
        return StabilizerTerm(self.d, tuple(x), tuple(z), phase)

    def key(self) -> tuple:
        return (self.x, self.z)

    def label(self) -> str:
        parts = []
        for v, (a, b) in enumerate(zip(self.x, self.z), start=1):
            for op, p in (("X", a), ("Z", b)):
                if p:
                    parts.append(f"{op}{v}" + (f"^{p}" if p > 1 else ""))
        body = " ".join(parts) if parts else "I"
        if abs(self.phase - 1) < 1e-12:
            return body
        return f"({self.phase.real:+.3g}{self.phase.imag:+.3g}j) {body}"

    def matrix(self, axes_order: Sequence[int]) -> np.ndarray:
        """Dense operator with tensor factors ordered by ``axes_order`` (vertex list)."""
        X, Z = shift_matrix(self.d), clock_matrix(self.d)
        mats = [
            np.linalg.matrix_power(X, self.x[v - 1]) @ np.linalg.matrix_power(Z, self.z[v - 1])
            for v in axes_order
        ]
        return self.phase * kron_all(mats)


def identity_term(d: int, n: int) -> StabilizerTerm:
    return StabilizerTerm(d, (0,) * n, (0,) * n, 1.0)


def stabilizers(g: GraphState, frame: Iterable[int] | None = None) -> list[StabilizerTerm]:
    """Generators ``S_k = X_k prod_j Z_j^w_kj``, conjugated by the Hadamard frame.

    ``frame`` defaults to the graph's resolved frame when it is two-photon
    realizable, and to no frame otherwise.
    """
    if frame is None:
        frame = resolve_frame(g) if check_two_photon_realizable(g) else frozenset()
    n = g.n_vertices
    terms = []
    for k in g.vertices:
        x = [0] * n
        z = [0] * n
        x[k - 1] = 1
        for j, w in g.neighbors(k).items():
            z[j - 1] = w
        terms.append(StabilizerTerm(g.d, tuple(x), tuple(z)).conjugate_frame(frame))
    return terms


def apply_term(term: StabilizerTerm, tensor: np.ndarray, axes: dict[int, int]) -> np.ndarray:
    """``term |psi>`` for a state tensor with one axis per vertex."""
    d = term.d
    out = np.array(tensor, dtype=complex, copy=True)
    w = omega(d)
    for v, b in enumerate(term.z, start=1):
        if b:
            shape = [1] * out.ndim
            shape[axes[v]] = d
            out = out * (w ** (b * np.arange(d))).reshape(shape)
    for v, a in enumerate(term.x, start=1):
        if a:
            out = np.roll(out, a, axis=axes[v])
    return term.phase * out


def term_expectation(state: TwoPhotonState, term: StabilizerTerm, axes: dict[int, int]) -> complex:
    t = state.tensor()
    return complex(np.vdot(t, apply_term(term, t, axes)))


def stabilizer_expectations(state: TwoPhotonState, g: GraphState) -> list[complex]:
    axes = vertex_axes(g)
    return [term_expectation(state, s, axes) for s in stabilizers(g)]
