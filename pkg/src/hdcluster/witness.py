"""Stabilizer entanglement witnesses for two-colorable qudit graph states.

The witness is

    W = (d+1)/(d-1) - d/(d-1) * (prod_odd P_k + prod_even P_k),
    P_k = (1/d) sum_{p=1..d} S_k^p,

with odd/even taken over vertex labels. Expanding the two products gives a
linear combination of generalized Pauli strings; every string in the odd
group is diagonal in one product basis and every string in the even group in
another, so two measurement settings cover all of them.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .encoding import EncodingSpec, digit_table
from .errors import InsufficientDataError, UnsupportedGraphError, ValidationError
from .graph import (
    GraphState,
    StabilizerTerm,
    dft_matrix,
    identity_term,
    kron_all,
    layout,
    resolve_frame,
    stabilizers,
    term_expectation,
    vertex_axes,
)
from .state import (
    CoincidenceTable,
    ModeUnitary,
    TwoPhotonState,
    apply_photon_unitary,
    coincidence_probs,
    sample_counts,
)


@dataclass(frozen=True)
class WitnessTerm:
    group: str  # 'odd' | 'even'
    term: StabilizerTerm
    weight: float  # coefficient multiplying the term in W

    @property
    def label(self) -> str:
        return self.term.label()


@dataclass
class WitnessReport:
    value: float
    std_dev: float
    per_term: list  # (label, complex expectation, std)
    setting_used: str  # 'exact' | 'two_mub_counts'
    imag_residue: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "value": self.value,
            "std_dev": self.std_dev,
            "setting_used": self.setting_used,
            "imag_residue": self.imag_residue,
            "per_term": [
                {"label": lab, "real": float(np.real(e)), "imag": float(np.imag(e)), "std": float(s)}
                for lab, e, s in self.per_term
            ],
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def terms_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["term", "real", "imag", "std"])
        for lab, e, s in self.per_term:
            w.writerow([lab, f"{np.real(e):.12g}", f"{np.imag(e):.12g}", f"{s:.12g}"])
        return buf.getvalue()


def _check_bipartite(g: GraphState):
    for u, v, _ in g.edges:
        if (u - v) % 2 == 0:
            raise UnsupportedGraphError(
                f"edge ({u},{v}) joins two vertices of equal parity; odd/even is not a 2-coloring"
            )


def witness_constants(d: int) -> tuple[float, float]:
    """(offset, scale) with ``W = offset - scale * (prod_odd + prod_even)``."""
    return (d + 1) / (d - 1), d / (d - 1)


def witness_terms(g: GraphState) -> list[WitnessTerm]:
    """Expanded operator strings of both products, identities included."""
    _check_bipartite(g)
    d = g.d
    gens = stabilizers(g)
    _, scale = witness_constants(d)
    out = []
    for group, parity in (("odd", 1), ("even", 0)):
        members = [gens[k - 1] for k in g.vertices if k % 2 == parity]
        # p = d is the identity, so exponents 0..d-1 enumerate the same sum
        for powers in itertools.product(range(d), repeat=len(members)):
            t = identity_term(d, g.n_vertices)
            for s, p in zip(members, powers):
                t = t * (s**p)
            out.append(WitnessTerm(group, t, -scale / d ** len(members)))
    return out


def witness_from_expectations(g: GraphState, terms: list[WitnessTerm], values) -> complex:
    offset, _ = witness_constants(g.d)
    return offset + sum(t.weight * v for t, v in zip(terms, values))


def witness_exact(state: TwoPhotonState, g: GraphState) -> WitnessReport:
    terms = witness_terms(g)
    axes = vertex_axes(g)
    if state.spec.M != g.d ** (g.n_vertices // 2):
        raise ValidationError("state dimension does not match the graph")
    values = [term_expectation(state, t.term, axes) for t in terms]
    w = witness_from_expectations(g, terms, values)
    return WitnessReport(
        value=float(w.real),
        std_dev=0.0,
        per_term=[(t.label, v, 0.0) for t, v in zip(terms, values)],
        setting_used="exact",
        imag_residue=float(abs(w.imag)),
    )


def witness_mixed(g: GraphState) -> float:
    """Witness on the maximally mixed state: only identity strings survive."""
    _check_bipartite(g)
    offset, scale = witness_constants(g.d)
    n_odd = sum(1 for k in g.vertices if k % 2)
    n_even = g.n_vertices - n_odd
    return offset - scale * (g.d ** -n_odd + g.d ** -n_even)


def witness_on_mixture(g: GraphState, p: float, ideal_value: float = -1.0) -> float:
    """``(1-p) * W(ideal) + p * W(mixed)`` for white-noise fraction ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"noise fraction must lie in [0, 1], got {p}")
    return (1 - p) * ideal_value + p * witness_mixed(g)


def noise_threshold(g: GraphState, ideal_value: float = -1.0) -> float:
    """White-noise fraction at which the mixture witness crosses zero."""
    wm = witness_mixed(g)
    return -ideal_value / (wm - ideal_value)


# --- measurement settings ------------------------------------------------


@dataclass(frozen=True)
class MubSetting:
    label: str
    group: str
    u_A: ModeUnitary
    u_B: ModeUnitary
    x_vertices: frozenset  # vertices read out in the DFT basis


def _x_type(g: GraphState, group: str, frame) -> set[int]:
    parity = 1 if group == "odd" else 0
    return {v for v in g.vertices if (v % 2 == parity) != (v in frame)}


def mub_settings(g: GraphState) -> tuple[MubSetting, MubSetting]:
    """Setting 1 reads the odd-group strings, setting 2 the even group.

    A vertex is read in the DFT basis when its generator carries ``X`` on it
    after frame conjugation, otherwise in the computational basis.
    """
    _check_bipartite(g)
    frame = resolve_frame(g)
    a_order, b_order = layout(g)
    F = dft_matrix(g.d)
    eye = np.eye(g.d)
    out = []
    for label, group in (("setting1", "odd"), ("setting2", "even")):
        xs = _x_type(g, group, frame)
        u_a = kron_all([F if v in xs else eye for v in a_order])
        u_b = kron_all([F if v in xs else eye for v in b_order])
        out.append(MubSetting(label, group, ModeUnitary(u_a), ModeUnitary(u_b), frozenset(xs)))
    return tuple(out)


def measured_probs(state: TwoPhotonState, setting: MubSetting) -> np.ndarray:
    st = apply_photon_unitary(state, "A", setting.u_A)
    st = apply_photon_unitary(st, "B", setting.u_B)
    return coincidence_probs(st)


def _eigen_table(g: GraphState, spec: EncodingSpec, terms: list[WitnessTerm], setting: MubSetting):
    """``(M*M, T)`` eigenvalue of each string for every coincidence cell."""
    a_order, b_order = layout(g)
    digits = digit_table(spec)
    n = spec.N
    cols = []
    for t in terms:
        expo = np.zeros((spec.M, spec.M), dtype=np.int64)
        for k in range(n):
            for v, axis_digits, orient in ((a_order[k], digits[:, k], 0), (b_order[k], digits[:, k], 1)):
                x, z = t.term.x[v - 1], t.term.z[v - 1]
                if v in setting.x_vertices:
                    if z:
                        raise UnsupportedGraphError(f"{t.label} needs Z on DFT-read vertex {v}")
                    power = x
                else:
                    if x:
                        raise UnsupportedGraphError(f"{t.label} needs X on Z-read vertex {v}")
                    power = z
                if power:
                    expo += power * (axis_digits[:, None] if orient == 0 else axis_digits[None, :])
        eig = t.term.phase * np.exp(2j * np.pi * (expo % g.d) / g.d)
        cols.append(eig.reshape(-1))
    return np.stack(cols, axis=1)


def witness_from_counts(
    tables,
    g: GraphState,
    settings=None,
    spec: EncodingSpec | None = None,
    n_boot: int = 1000,
    seed: int = 0,
) -> WitnessReport:
    """Estimate the witness from two coincidence tables, one per setting.

    Each string is estimated as the count-weighted mean of its eigenvalue over
    coincidence cells. The standard deviation comes from a nonparametric
    bootstrap that resamples the recorded events of each table.
    """
    settings = mub_settings(g) if settings is None else settings
    if len(tables) != 2 or len(settings) != 2:
        raise ValidationError("need exactly two tables and two settings")
    n = g.n_vertices // 2
    spec = EncodingSpec(g.d, n) if spec is None else spec
    terms = witness_terms(g)
    offset, _ = witness_constants(g.d)
    rng = np.random.default_rng(seed)
    est = np.zeros(len(terms), dtype=complex)
    boot = np.zeros((n_boot, len(terms)), dtype=complex)
    for table, setting in zip(tables, settings):
        if table.total <= 0:
            raise InsufficientDataError(f"{setting.label}: coincidence table is empty")
        idx = [i for i, t in enumerate(terms) if t.group == setting.group]
        eig = _eigen_table(g, spec, [terms[i] for i in idx], setting)
        flat = table.counts.reshape(-1).astype(float)
        est[idx] = flat @ eig / table.total
        if n_boot:
            resampled = rng.multinomial(table.total, flat / table.total, size=n_boot)
            boot[:, idx] = resampled @ eig / table.total
    weights = np.array([t.weight for t in terms])
    value = offset + weights @ est
    term_std = boot.real.std(axis=0, ddof=1) if n_boot > 1 else np.zeros(len(terms))
    w_boot = (offset + boot @ weights).real
    std = float(w_boot.std(ddof=1)) if n_boot > 1 else 0.0
    return WitnessReport(
        value=float(value.real),
        std_dev=std,
        per_term=[(t.label, e, s) for t, e, s in zip(terms, est, term_std)],
        setting_used="two_mub_counts",
        imag_residue=float(abs(value.imag)),
        meta={"totals": [int(t.total) for t in tables], "n_boot": n_boot, "seed": seed},
    )


def analytic_tables(state: TwoPhotonState, g: GraphState, scale: float = 1e9):
    """Expected-count tables (probabilities x ``scale``, rounded) for both settings."""
    out = []
    for s in mub_settings(g):
        counts = np.rint(measured_probs(state, s) * scale).astype(np.int64)
        out.append(CoincidenceTable(counts, int(counts.sum())))
    return out


def noisy_probs(state: TwoPhotonState, setting: MubSetting, p: float) -> np.ndarray:
    """Outcome distribution of ``(1-p) |G><G| + p I/D``: white noise is uniform in every basis."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"noise fraction must lie in [0, 1], got {p}")
    ideal = measured_probs(state, setting)
    return (1 - p) * ideal + p / ideal.size


def sampled_tables(state: TwoPhotonState, g: GraphState, p: float, mean_total: float, seed: int):
    """Poisson-sampled tables for both settings; the second setting uses ``seed + 1``."""
    return [
        sample_counts(noisy_probs(state, s, p), mean_total, seed + k)
        for k, s in enumerate(mub_settings(g))
    ]


def term_values_from_probs(state: TwoPhotonState, g: GraphState, spec: EncodingSpec | None = None):
    """Per-string expectations read from the two settings' outcome distributions.

    Returns ``(terms, values)``; this is the measurement route, independent of
    applying operator strings to the state.
    """
    terms = witness_terms(g)
    spec = state.spec if spec is None else spec
    values = np.zeros(len(terms), dtype=complex)
    for setting in mub_settings(g):
        idx = [i for i, t in enumerate(terms) if t.group == setting.group]
        eig = _eigen_table(g, spec, [terms[i] for i in idx], setting)
        values[idx] = measured_probs(state, setting).reshape(-1) @ eig
    return terms, values
