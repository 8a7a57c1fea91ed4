"""Passive intra-feedforward for qubits sharing one photon.

A photon carrying ``N`` qubits has ``2**N`` modes, mode ``q_1...q_N`` (big
endian). Qubit ``j`` measured in the equatorial basis ``B(s * theta)`` with
``s = f_j(m_1..m_{j-1})`` is realized by a phase ``-s * theta`` on modes with
``q_j = 1`` followed by 50:50 beam splitters between modes differing only in
``q_j``. After the splitter the digit ``q_j`` *is* the outcome, with
``m_j = (-1)**q_j``, so every later layer reads earlier outcomes straight off
the mode label. One layer per qubit keeps the depth linear in ``N``.

``adaptive_oracle`` is the sequential reference: measure, branch, adapt.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import PatternError, ValidationError
from .graph import GraphState, layout, resolve_frame
from .state import ModeUnitary, TwoPhotonState

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

DEFAULT_MAX_QUBITS = 10


def rx(a: float) -> np.ndarray:
    return np.cos(a / 2) * np.eye(2) - 1j * np.sin(a / 2) * PAULI_X


def rz(a: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])


@dataclass(frozen=True)
class QubitMeasurement:
    basis: str = "EQ"  # 'EQ' (equatorial) or 'Z'
    theta: float = 0.0
    depends_on: frozenset = frozenset()
    sign_fn: Callable | None = None  # outcomes (m_1..m_{j-1}) -> +1/-1; overrides depends_on

    def __post_init__(self):
        if self.basis not in ("EQ", "Z"):
            raise PatternError(f"basis must be 'EQ' or 'Z', got {self.basis!r}")
        object.__setattr__(self, "depends_on", frozenset(int(i) for i in self.depends_on))
        if self.basis == "Z" and (self.depends_on or self.sign_fn is not None):
            raise PatternError("Z-basis measurements are never adapted")


@dataclass(frozen=True)
class MeasurementPattern:
    """Qubits listed in measurement order; qubit ``j`` is 1-based.

    ``frame_x`` / ``frame_z`` are parity masks over outcomes giving the Pauli
    correction ``X^x Z^z`` on the output qubit (empty for no output frame).
    """

    qubits: tuple
    frame_x: frozenset = frozenset()
    frame_z: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        for j, q in enumerate(self.qubits, start=1):
            bad = [i for i in q.depends_on if not 1 <= i < j]
            if bad:
                raise PatternError(f"qubit {j} depends on {bad}, which are not measured earlier")
        n = len(self.qubits)
        for mask in (self.frame_x, self.frame_z):
            if any(not 1 <= i <= n for i in mask):
                raise PatternError("frame masks reference unknown qubits")

    @property
    def n(self) -> int:
        return len(self.qubits)

    def sign(self, j: int, outcomes: Sequence[int]) -> int:
        """``f_j`` evaluated on the outcomes of qubits ``1..j-1``."""
        q = self.qubits[j - 1]
        prior = tuple(outcomes[: j - 1])
        if q.sign_fn is not None:
            s = int(q.sign_fn(prior))
            if s not in (1, -1):
                raise PatternError(f"sign function of qubit {j} returned {s}")
            return s
        s = 1
        for i in q.depends_on:
            s *= prior[i - 1]
        return s

    def frame_word(self, outcomes: Sequence[int]) -> tuple[int, int]:
        x = sum(outcomes[i - 1] == -1 for i in self.frame_x) % 2
        z = sum(outcomes[i - 1] == -1 for i in self.frame_z) % 2
        return x, z

    def to_dict(self) -> dict:
        if any(q.sign_fn is not None for q in self.qubits):
            raise ValidationError("patterns with callable sign functions cannot be serialized")
        return {
            "schema_version": 1,
            "qubits": [
                {"basis": q.basis, "theta": q.theta, "depends_on": sorted(q.depends_on)}
                for q in self.qubits
            ],
            "frame_x": sorted(self.frame_x),
            "frame_z": sorted(self.frame_z),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MeasurementPattern":
        qubits = tuple(
            QubitMeasurement(
                basis=q.get("basis", "EQ"),
                theta=float(q.get("theta", 0.0)),
                depends_on=frozenset(q.get("depends_on", ())),
            )
            for q in obj["qubits"]
        )
        return cls(qubits, frozenset(obj.get("frame_x", ())), frozenset(obj.get("frame_z", ())))


def chain_pattern(angles: Sequence[float]) -> MeasurementPattern:
    """Adaptive pattern for a linear chain, measuring qubit ``j`` at nominal ``angles[j-1]``.

    Each measurement teleports ``X^s H P(-phi)`` to the next qubit. Pushing the
    byproducts to the end flips the sign of ``phi_j`` whenever the accumulated
    X byproduct is odd and yields the final Pauli frame.
    """
    x_mask: frozenset = frozenset()
    z_mask: frozenset = frozenset()
    qubits = []
    for j, phi in enumerate(angles, start=1):
        qubits.append(QubitMeasurement("EQ", float(phi), x_mask))
        x_mask, z_mask = frozenset({j}) ^ z_mask, x_mask
    return MeasurementPattern(tuple(qubits), x_mask, z_mask)


def rotation_pattern(alpha: float, beta: float, gamma: float) -> MeasurementPattern:
    """Four-qubit pattern implementing ``R_x(gamma) R_z(beta) R_x(alpha)`` on a 5-qubit chain."""
    return chain_pattern([0.0, -alpha, -beta, -gamma])


def rotation_target(alpha: float, beta: float, gamma: float) -> np.ndarray:
    return rx(gamma) @ rz(beta) @ rx(alpha)


# --- circuit synthesis ---------------------------------------------------


@dataclass(frozen=True)
class FeedforwardLayer:
    qubit: int
    phases: np.ndarray  # per-mode phase applied before the splitters
    beam_splitter: bool


def _bits(n: int) -> np.ndarray:
    m = np.arange(2**n)
    return (m[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1


def feedforward_layers(pattern: MeasurementPattern, max_qubits: int = DEFAULT_MAX_QUBITS):
    n = pattern.n
    if n > max_qubits:
        raise PatternError(f"{n} qubits exceed the cap of {max_qubits}")
    bits = _bits(n)
    outcomes = 1 - 2 * bits  # m_i = (-1)^q_i
    layers = []
    for j, q in enumerate(pattern.qubits, start=1):
        if q.basis == "Z":
            continue
        signs = np.array([pattern.sign(j, row) for row in outcomes])
        phases = np.where(bits[:, j - 1] == 1, -signs * q.theta, 0.0)
        layers.append(FeedforwardLayer(j, phases, True))
    return layers


def _splitter(n: int, j: int) -> np.ndarray:
    mats = [HADAMARD if k == j else np.eye(2) for k in range(1, n + 1)]
    out = np.eye(1)
    for m in mats:
        out = np.kron(out, m)
    return out


def build_intra_feedforward(pattern: MeasurementPattern, max_qubits: int = DEFAULT_MAX_QUBITS) -> ModeUnitary:
    n = pattern.n
    u = np.eye(2**n, dtype=complex)
    for layer in feedforward_layers(pattern, max_qubits):
        u = np.exp(1j * layer.phases)[:, None] * u
        if layer.beam_splitter:
            u = _splitter(n, layer.qubit) @ u
    return ModeUnitary(u)


def rotation_circuit(alpha: float, beta: float, gamma: float) -> ModeUnitary:
    """16-mode circuit: four splitter layers with outcome-conditioned ``+-`` phases between them.

    Mode ``q1q2q3q4``; the phase on the ``q_j = 1`` half is set by the outcome
    signs already fixed by earlier splitters: ``+-alpha`` by ``q1``, ``+-beta``
    by ``q2``, ``+-gamma`` by ``q1 xor q3``.
    """
    modes = [(m >> 3 & 1, m >> 2 & 1, m >> 1 & 1, m & 1) for m in range(16)]

    def splitters(bit: int) -> np.ndarray:
        b = np.zeros((16, 16), dtype=complex)
        for m, q in enumerate(modes):
            partner = m ^ (1 << (3 - bit))
            b[m, m] = -1 / np.sqrt(2) if q[bit] else 1 / np.sqrt(2)
            b[m, partner] = 1 / np.sqrt(2)
        return b

    def phase_layer(bit: int, angle: float, sign_of) -> np.ndarray:
        return np.diag([np.exp(1j * sign_of(q) * angle) if q[bit] else 1.0 for q in modes])

    u = splitters(0)
    u = splitters(1) @ phase_layer(1, alpha, lambda q: 1 - 2 * q[0]) @ u
    u = splitters(2) @ phase_layer(2, beta, lambda q: 1 - 2 * q[1]) @ u
    u = splitters(3) @ phase_layer(3, gamma, lambda q: 1 - 2 * (q[0] ^ q[2])) @ u
    return ModeUnitary(u)


# --- sequential reference -------------------------------------------------


@dataclass
class BranchTable:
    outcomes: list  # tuples of +-1
    probabilities: np.ndarray
    states: np.ndarray  # (2**N, R) normalized conditional states, NaN where flagged
    frames: list  # (x, z) Pauli correction bits per branch
    zero_flags: np.ndarray
    meta: dict = field(default_factory=dict)

    def corrected_states(self) -> np.ndarray:
        """Output-qubit states with the Pauli frame removed (R must be 2)."""
        if self.states.shape[1] != 2:
            raise ValidationError("frame correction needs a single output qubit")
        out = np.empty_like(self.states)
        for k, (x, z) in enumerate(self.frames):
            fix = np.linalg.matrix_power(PAULI_Z, z) @ np.linalg.matrix_power(PAULI_X, x)
            out[k] = fix @ self.states[k]
        return out

    def expectation(self, observable: np.ndarray) -> float:
        """Frame-corrected, probability-weighted expectation on the output qubit."""
        vals = 0.0
        for p, s, zero in zip(self.probabilities, self.corrected_states(), self.zero_flags):
            if not zero:
                vals += p * np.real(np.vdot(s, observable @ s))
        return float(vals)


def _measure_vectors(q: QubitMeasurement, sign: int):
    if q.basis == "Z":
        return (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex))
    phase = np.exp(1j * sign * q.theta)
    return (
        np.array([1, phase]) / np.sqrt(2),
        np.array([1, -phase]) / np.sqrt(2),
    )


def _finish(pattern, outcomes, amps, zero_tol, meta) -> BranchTable:
    amps = np.asarray(amps)
    probs = np.sum(np.abs(amps) ** 2, axis=1)
    zero = probs <= zero_tol
    states = np.full_like(amps, np.nan)
    states[~zero] = amps[~zero] / np.sqrt(probs[~zero])[:, None]
    frames = [pattern.frame_word(o) for o in outcomes]
    return BranchTable(list(outcomes), probs, states, frames, zero, meta)


def adaptive_oracle(
    pattern: MeasurementPattern, joint=None, input_state=None, zero_tol: float = 1e-15
) -> BranchTable:
    """Measure qubits one at a time, adapting each basis to earlier outcomes.

    ``joint`` is the ``(2**N, R)`` amplitude matrix of the measured qubits
    (big-endian mode order) and whatever remains unmeasured. Passing
    ``input_state`` instead uses the linear chain of ``N + 1`` qubits with
    that input on qubit 1.
    """
    n = pattern.n
    if (joint is None) == (input_state is None):
        raise ValidationError("give exactly one of joint or input_state")
    if joint is None:
        joint = chain_state(n, input_state)
    joint = np.asarray(joint, dtype=complex)
    if joint.shape[0] != 2**n:
        raise ValidationError(f"joint state has {joint.shape[0]} rows, pattern needs {2 ** n}")
    rest = joint.shape[1]
    psi = joint.reshape((2,) * n + (rest,))
    outcomes, amps = [], []
    for branch in itertools.product((1, -1), repeat=n):
        t = psi
        for j, q in enumerate(pattern.qubits, start=1):
            vec = _measure_vectors(q, pattern.sign(j, branch))[0 if branch[j - 1] == 1 else 1]
            t = np.tensordot(vec.conj(), t, axes=(0, 0))
        outcomes.append(branch)
        amps.append(t.reshape(rest))
    return _finish(pattern, outcomes, amps, zero_tol, {"method": "adaptive"})


def circuit_branches(pattern: MeasurementPattern, joint, unitary=None, zero_tol: float = 1e-15) -> BranchTable:
    """Apply the passive circuit, then read every mode; mode bits give the outcomes."""
    n = pattern.n
    u = build_intra_feedforward(pattern) if unitary is None else unitary
    u = u.matrix if isinstance(u, ModeUnitary) else np.asarray(u)
    out = u @ np.asarray(joint, dtype=complex)
    # order branches like adaptive_oracle: +1 (bit 0) first
    bits = _bits(n)
    outcomes = [tuple(int(1 - 2 * b) for b in row) for row in bits]
    return _finish(pattern, outcomes, list(out), zero_tol, {"method": "circuit"})


def chain_state(n_measured: int, input_state) -> np.ndarray:
    """Linear cluster ``1-2-...-(n+1)`` with ``input_state`` on qubit 1.

    Returned as a ``(2**n, 2)`` matrix: measured qubits by mode, last qubit by column.
    """
    psi = np.asarray(input_state, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    n = n_measured + 1
    plus = np.array([1, 1]) / np.sqrt(2)
    vec = psi
    for _ in range(n - 1):
        vec = np.kron(vec, plus)
    bits = _bits(n)
    parity = np.sum(bits[:, :-1] * bits[:, 1:], axis=1)
    vec = vec * (-1.0) ** parity
    return vec.reshape(2**n_measured, 2)


# --- eight-qubit cluster to five-qubit chain -------------------------------

FIG2A_EDGES = frozenset({(1, 2, 1), (2, 3, 1), (3, 4, 1), (1, 8, 1), (2, 7, 1), (3, 6, 1), (4, 5, 1)})
INPUT_STATES = {
    "Z": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "Y": np.array([1, 1j], dtype=complex) / np.sqrt(2),
}


@dataclass(frozen=True)
class ChainPreparation:
    amp: np.ndarray  # (16, 2): photon-A modes x qubit 5, frames of qubits 1 and 4 still applied
    probability: float
    input_basis: str
    input_state: np.ndarray


def derive_chain_from_cluster(state: TwoPhotonState, g8: GraphState, basis8: str = "Z") -> ChainPreparation:
    """Post-select qubits 6, 7 on ``Z = +1`` and qubit 8 on the ``+1`` outcome of ``basis8``.

    Projections act on the physical state, so framed vertices are projected
    onto ``H^dag`` of the logical eigenvector.
    """
    if g8.d != 2 or g8.edges != FIG2A_EDGES or set(g8.photon_vertices("A")) != {1, 2, 3, 4}:
        raise ValidationError("expected the eight-qubit comb with qubits 1-4 on photon A")
    if basis8 not in INPUT_STATES:
        raise ValidationError(f"qubit 8 is measured in 'Z' or 'Y', got {basis8!r}")
    frame = resolve_frame(g8)
    if not {6, 7} <= frame or 8 in frame:
        raise ValidationError("post-selection assumes frames on qubits 6 and 7 and none on 8")
    _, b_order = layout(g8)
    logical = {6: np.array([1, 0]), 7: np.array([1, 0])}
    logical[8] = np.array([1, 0]) if basis8 == "Z" else np.array([1, 1j]) / np.sqrt(2)
    t = state.amp.reshape((16,) + (2,) * len(b_order))
    # contract from the last B digit so earlier axis numbers stay valid
    for k in reversed(range(len(b_order))):
        v = b_order[k]
        if v == 5:
            continue
        vec = logical[v].astype(complex)
        if v in frame:
            vec = HADAMARD.conj().T @ vec
        t = np.tensordot(t, vec.conj(), axes=(1 + k, 0))
    amp = t.reshape(16, 2)
    prob = float(np.sum(np.abs(amp) ** 2))
    return ChainPreparation(amp / np.sqrt(prob), prob, basis8, INPUT_STATES[basis8])


def physical_rotation_unitary(alpha: float, beta: float) -> np.ndarray:
    """What the MPLC applies: the outer splitters are already supplied by the frames on qubits 1 and 4."""
    frames = np.kron(np.kron(HADAMARD, np.eye(4)), HADAMARD)
    return rotation_circuit(alpha, beta, 0.0).matrix @ frames


def rotation_from_cluster(state: TwoPhotonState, g8: GraphState, alpha: float, beta: float, basis8: str):
    prep = derive_chain_from_cluster(state, g8, basis8)
    pattern = rotation_pattern(alpha, beta, 0.0)
    return circuit_branches(pattern, prep.amp, physical_rotation_unitary(alpha, beta)), prep


def rotation_sweep(steps: int = 16, inputs=("Z",), include_cluster: bool = True) -> list[dict]:
    """Expectation values on the output qubit over an ``alpha x beta`` grid in ``[0, 2 pi)``.

    Each row compares the synthesized circuit, run on the chain prepared from
    the eight-qubit cluster, against ``R_z(beta) R_x(alpha)`` applied directly.
    """
    from .graph import simulate_cluster  # local: keeps import graph shallow
    from .encoding import EncodingSpec
    from .presets import comb8

    g8 = comb8()
    st = simulate_cluster(g8, EncodingSpec(2, 4)) if include_cluster else None
    grid = 2 * np.pi * np.arange(steps) / steps
    rows = []
    for basis in inputs:
        psi = INPUT_STATES[basis]
        for a in grid:
            for b in grid:
                if st is not None:
                    table, _ = rotation_from_cluster(st, g8, a, b, basis)
                else:
                    pat = rotation_pattern(a, b, 0.0)
                    table = circuit_branches(pat, chain_state(4, psi), rotation_circuit(a, b, 0.0))
                out = rotation_target(a, b, 0.0) @ psi
                row = {"input": basis, "alpha": float(a), "beta": float(b)}
                for name, op in (("X", PAULI_X), ("Y", PAULI_Y), ("Z", PAULI_Z)):
                    row[f"sim_{name}"] = table.expectation(op)
                    row[f"exact_{name}"] = float(np.real(np.vdot(out, op @ out)))
                row["min_branch_fidelity"] = float(min(
                    abs(np.vdot(out, s)) ** 2 for s, z in zip(table.corrected_states(), table.zero_flags) if not z
                ))
                rows.append(row)
    return rows


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
