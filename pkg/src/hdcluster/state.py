"""Pure two-photon states over joint spatial modes.

``amp[a, b]`` is the amplitude of photon A in mode ``a`` and photon B in mode
``b``. A unitary ``u`` on photon A acts as ``u @ amp``; on photon B as
``amp @ u.T``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .encoding import EncodingSpec
from .errors import ValidationError

NORM_TOL = 1e-12


@dataclass(frozen=True)
class ModeUnitary:
    matrix: np.ndarray
    tolerance: float = 1e-10

    def __post_init__(self):
        u = np.asarray(self.matrix, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValidationError(f"unitary must be square, got shape {u.shape}")
        err = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0])))
        if err > self.tolerance:
            raise ValidationError(f"matrix is not unitary: max |UU^dag - I| = {err:.3e}")
        object.__setattr__(self, "matrix", u)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class TwoPhotonState:
    amp: np.ndarray
    spec: EncodingSpec

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=complex)
        if amp.shape != (self.spec.M, self.spec.M):
            raise ValidationError(f"amplitude shape {amp.shape} does not match M={self.spec.M}")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state not normalized: |amp|_F = {norm!r}")
        amp.setflags(write=False)
        object.__setattr__(self, "amp", amp)

    @property
    def M(self) -> int:
        return self.spec.M

    def vector(self) -> np.ndarray:
        return self.amp.reshape(-1)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per qudit: A digits then B digits."""
        d, n = self.spec.d, self.spec.N
        return self.amp.reshape((d,) * (2 * n))

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_version": 1,
                "spec": self.spec.to_dict(),
                "real": self.amp.real.tolist(),
                "imag": self.amp.imag.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "TwoPhotonState":
        obj = json.loads(text)
        amp = np.asarray(obj["real"]) + 1j * np.asarray(obj["imag"])
        return cls(amp, EncodingSpec.from_dict(obj["spec"]))


@dataclass(frozen=True)
class CoincidenceTable:
    counts: np.ndarray
    total: int
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(counts < 0):
            raise ValidationError("negative coincidence counts")
        if int(counts.sum()) != int(self.total):
            raise ValidationError(f"counts sum to {counts.sum()}, table says {self.total}")
        object.__setattr__(self, "counts", counts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "col", "count"])
        for (i, j), c in np.ndenumerate(self.counts):
            w.writerow([i, j, int(c)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, seed: int | None = None) -> "CoincidenceTable":
        rows = list(csv.DictReader(io.StringIO(text)))
        size = 1 + max(max(int(r["row"]), int(r["col"])) for r in rows)
        counts = np.zeros((size, size), dtype=np.int64)
        for r in rows:
            counts[int(r["row"]), int(r["col"])] = int(r["count"])
        return cls(counts, int(counts.sum()), seed)

    def to_json(self) -> str:
        return json.dumps(
            {"schema_version": 1, "total": int(self.total), "seed": self.seed,
             "counts": self.counts.tolist(), "meta": self.meta}
        )

    @classmethod
    def from_json(cls, text: str) -> "CoincidenceTable":
        obj = json.loads(text)
        return cls(np.asarray(obj["counts"]), obj["total"], obj.get("seed"), obj.get("meta", {}))


def spdc_state(spec: EncodingSpec) -> TwoPhotonState:
    return TwoPhotonState(np.eye(spec.M, dtype=complex) / np.sqrt(spec.M), spec)


def _as_unitary(u) -> ModeUnitary:
    return u if isinstance(u, ModeUnitary) else ModeUnitary(np.asarray(u))


def _check_photon(photon: str):
    if photon not in ("A", "B"):
        raise ValidationError(f"photon must be 'A' or 'B', got {photon!r}")


def apply_photon_unitary(state: TwoPhotonState, photon: str, u) -> TwoPhotonState:
    _check_photon(photon)
    u = _as_unitary(u)
    if u.dim != state.M:
        raise ValidationError(f"unitary of size {u.dim} on {state.M} modes")
    if photon == "A":
        amp = u.matrix @ state.amp
    else:
        amp = state.amp @ u.matrix.T
    return TwoPhotonState(_renormalize(amp), state.spec)


def apply_mode_phases(state: TwoPhotonState, photon: str, phases) -> TwoPhotonState:
    _check_photon(photon)
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (state.M,):
        raise ValidationError(f"need {state.M} phases, got shape {phases.shape}")
    f = np.exp(1j * phases)
    amp = f[:, None] * state.amp if photon == "A" else state.amp * f[None, :]
    return TwoPhotonState(amp, state.spec)


def check_permutation(perm, size: int) -> np.ndarray:
    perm = np.asarray(perm, dtype=int)
    if perm.shape != (size,) or not np.array_equal(np.sort(perm), np.arange(size)):
        raise ValidationError(f"not a permutation of range({size}): {perm.tolist()}")
    return perm


def permutation_matrix(perm) -> np.ndarray:
    """Unitary sending mode ``m`` to mode ``perm[m]``."""
    perm = check_permutation(perm, len(perm))
    p = np.zeros((len(perm), len(perm)), dtype=complex)
    p[perm, np.arange(len(perm))] = 1.0
    return p


def apply_mode_permutation(state: TwoPhotonState, photon: str, perm) -> TwoPhotonState:
    """Relabel modes: population of mode ``m`` moves to mode ``perm[m]``."""
    _check_photon(photon)
    perm = check_permutation(perm, state.M)
    amp = np.empty_like(state.amp)
    if photon == "A":
        amp[perm, :] = state.amp
    else:
        amp[:, perm] = state.amp
    return TwoPhotonState(amp, state.spec)


def coincidence_probs(state: TwoPhotonState) -> np.ndarray:
    return np.abs(state.amp) ** 2


def sample_counts(probs, mean_total: float, seed: int) -> CoincidenceTable:
    """Independent Poisson draw per cell with mean ``mean_total * p``."""
    if mean_total < 0:
        raise ValidationError(f"mean_total must be non-negative, got {mean_total}")
    probs = np.asarray(probs, dtype=float)
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mean_total * np.clip(probs, 0.0, None))
    return CoincidenceTable(counts, int(counts.sum()), seed)


def state_fidelity(state: TwoPhotonState, target: TwoPhotonState) -> float:
    if state.amp.shape != target.amp.shape:
        raise ValidationError(f"shape mismatch {state.amp.shape} vs {target.amp.shape}")
    overlap = np.vdot(target.amp, state.amp)
    return float(min(1.0, abs(overlap) ** 2))


def _renormalize(amp: np.ndarray) -> np.ndarray:
    # strips float drift accumulated by long unitary products
    return amp / np.linalg.norm(amp)
