"""Phase-mask stacks: wavefront matching, transfer matrices and layer compilation.

A stack of ``P`` masks acts on a field at the first plane as
``mask_0 -> z -> mask_1 -> ... -> mask_{P-1} -> z_final``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import GeometryError
from .optics import (
    DEFAULT_ANGLE_CAP,
    DEFAULT_FINAL_DISTANCE_MM,
    DEFAULT_PITCH_UM,
    DEFAULT_PLANE_DISTANCE_MM,
    DEFAULT_SHAPE,
    DEFAULT_WAVELENGTH_NM,
    OpticalField,
    propagate_array,
    spot_layout,
    spot_modes,
)


@dataclass(frozen=True)
class PlaneStack:
    masks: tuple  # phase grids in radians
    plane_distance_mm: float = DEFAULT_PLANE_DISTANCE_MM
    final_distance_mm: float = DEFAULT_FINAL_DISTANCE_MM
    pitch_um: float = DEFAULT_PITCH_UM
    wavelength_nm: float = DEFAULT_WAVELENGTH_NM
    angle_cap: float = DEFAULT_ANGLE_CAP
    shape: tuple = DEFAULT_SHAPE
    history: tuple = ()  # objective after each full sweep
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        masks = tuple(np.asarray(m, dtype=float) for m in self.masks)
        shape = tuple(masks[0].shape) if masks else tuple(self.shape)
        if any(m.shape != shape for m in masks):
            raise GeometryError("all masks must share one shape")
        if self.plane_distance_mm <= 0 or self.final_distance_mm < 0:
            raise GeometryError("plane distance must be positive and final distance non-negative")
        if not 0 < self.angle_cap <= 1:
            raise GeometryError(f"angle cap must lie in (0, 1], got {self.angle_cap}")
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "shape", shape)

    @property
    def n_planes(self) -> int:
        return len(self.masks)

    def _prop(self, amps, dist, adjoint=False):
        return propagate_array(amps, dist, self.pitch_um, self.wavelength_nm, self.angle_cap, adjoint)

    def forward(self, amps: np.ndarray) -> np.ndarray:
        """Send a ``(modes, H, W)`` array through every mask to the output plane."""
        out = np.asarray(amps, dtype=complex)
        for k, m in enumerate(self.masks):
            out = out * np.exp(1j * m)
            dist = self.plane_distance_mm if k < self.n_planes - 1 else self.final_distance_mm
            out = self._prop(out, dist)
        if not self.masks:
            out = self._prop(out, self.final_distance_mm)
        return out

    def save(self, stem) -> tuple[Path, Path]:
        """Raw little-endian float64 masks plus a JSON header."""
        stem = Path(stem)
        header = {
            "schema_version": 1,
            "n_planes": self.n_planes,
            "shape": list(self.shape),
            "dtype": "<f8",
            "pitch_um": self.pitch_um,
            "wavelength_nm": self.wavelength_nm,
            "plane_distance_mm": self.plane_distance_mm,
            "final_distance_mm": self.final_distance_mm,
            "angle_cap": self.angle_cap,
            "history": list(self.history),
            "meta": self.meta,
        }
        hdr, raw = stem.with_suffix(".json"), stem.with_suffix(".bin")
        hdr.write_text(json.dumps(header, indent=2))
        data = np.stack(self.masks) if self.masks else np.zeros((0,) + self.shape)
        raw.write_bytes(data.astype("<f8").tobytes())
        return hdr, raw

    @classmethod
    def load(cls, stem) -> "PlaneStack":
        stem = Path(stem)
        h = json.loads(stem.with_suffix(".json").read_text())
        data = np.frombuffer(stem.with_suffix(".bin").read_bytes(), dtype=h.get("dtype", "<f8"))
        masks = data.reshape((h["n_planes"],) + tuple(h["shape"]))
        return cls(
            tuple(masks), h["plane_distance_mm"], h["final_distance_mm"], h["pitch_um"],
            h["wavelength_nm"], h["angle_cap"], tuple(h["shape"]), tuple(h.get("history", ())),
            h.get("meta", {}),
        )

    def save_previews(self, stem) -> list[Path]:
        """8-bit binary PGM image per mask, phase wrapped to [0, 2 pi)."""
        paths = []
        for k, m in enumerate(self.masks):
            img = np.round(np.mod(m, 2 * np.pi) / (2 * np.pi) * 255).astype(np.uint8)
            p = Path(f"{stem}_plane{k + 1}.pgm")
            p.write_bytes(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode() + img.tobytes())
            paths.append(p)
        return paths


@dataclass(frozen=True)
class TransferMatrix:
    matrix: np.ndarray  # outputs x inputs
    efficiency: np.ndarray  # per input column, power landing in the output set
    null_rows: tuple = ()

    def __post_init__(self):
        eff = np.asarray(self.efficiency, dtype=float)
        if np.any(eff < -1e-12) or np.any(eff > 1 + 1e-9):
            raise GeometryError(f"column efficiencies outside [0, 1]: {eff}")
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=complex))
        object.__setattr__(self, "efficiency", np.clip(eff, 0.0, 1.0))

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "real": self.matrix.real.tolist(),
            "imag": self.matrix.imag.tolist(),
            "efficiency": self.efficiency.tolist(),
            "null_rows": list(self.null_rows),
        }


def frobenius_fidelity(a, u) -> float:
    a = a.matrix if isinstance(a, TransferMatrix) else np.asarray(a, dtype=complex)
    u = np.asarray(u, dtype=complex)
    if a.shape != u.shape:
        raise GeometryError(f"shape mismatch {a.shape} vs {u.shape}")
    num = abs(np.trace(a @ u.conj().T))
    den = np.sqrt(np.real(np.trace(a @ a.conj().T)) * np.real(np.trace(u @ u.conj().T)))
    if den == 0:
        raise GeometryError("fidelity undefined for a zero matrix")
    return float(min(1.0, num / den))


def _stack_amps(fields) -> np.ndarray:
    return np.stack([f.amp if isinstance(f, OpticalField) else np.asarray(f, dtype=complex) for f in fields])


def stack_matrix(stack: PlaneStack, inputs, outputs) -> TransferMatrix:
    """``A[i, j] = <output_i | stack(input_j)>``."""
    ins, outs = _stack_amps(inputs), _stack_amps(outputs)
    if ins.shape[1:] != stack.shape or outs.shape[1:] != stack.shape:
        raise GeometryError(f"mode grids {ins.shape[1:]}/{outs.shape[1:]} do not match stack {stack.shape}")
    prop = stack.forward(ins)
    a = np.einsum("iyx,jyx->ij", outs.conj(), prop)
    in_power = np.sum(np.abs(ins) ** 2, axis=(1, 2))
    # power inside span(outputs); Gaussian tails make the outputs slightly non-orthogonal
    gram = np.einsum("iyx,jyx->ij", outs.conj(), outs)
    eff = np.real(np.einsum("ij,ij->j", a.conj(), np.linalg.solve(gram, a))) / in_power
    return TransferMatrix(a, eff)


def wavefront_match(
    inputs,
    targets,
    n_planes: int,
    n_iters: int = 30,
    plane_distance_mm: float = DEFAULT_PLANE_DISTANCE_MM,
    final_distance_mm: float = DEFAULT_FINAL_DISTANCE_MM,
    angle_cap: float = DEFAULT_ANGLE_CAP,
    pitch_um: float | None = None,
    wavelength_nm: float | None = None,
    initial=None,
) -> PlaneStack:
    """Optimize phase masks so each input lands on its target.

    The objective is ``|sum_i <t_i|S a_i>| / M``. Each plane update sets the
    mask to the phase maximizing that objective with every other mask held
    fixed, so the value never decreases. A sweep runs forward over all
    planes and then backward; ``history`` records the objective after each
    sweep, starting with the initial masks.
    """
    if not len(inputs) or len(inputs) != len(targets):
        raise GeometryError("need equal, non-empty input and target lists")
    if n_planes < 1:
        raise GeometryError("need at least one plane")
    first = inputs[0]
    pitch_um = pitch_um or getattr(first, "pitch_um", DEFAULT_PITCH_UM)
    wavelength_nm = wavelength_nm or getattr(first, "wavelength_nm", DEFAULT_WAVELENGTH_NM)
    a, t = _stack_amps(inputs), _stack_amps(targets)
    shape = a.shape[1:]
    if t.shape[1:] != shape:
        raise GeometryError("inputs and targets live on different grids")
    m_modes = a.shape[0]
    masks = [np.zeros(shape) if initial is None else np.asarray(initial[k], dtype=float).copy()
             for k in range(n_planes)]
    dists = [plane_distance_mm] * (n_planes - 1) + [final_distance_mm]

    def prop(x, d, adjoint=False):
        return propagate_array(x, d, pitch_um, wavelength_nm, angle_cap, adjoint)

    def forward_fields():
        """Field arriving at each plane, before its mask."""
        out, x = [], a
        for k in range(n_planes):
            out.append(x)
            x = prop(x * np.exp(1j * masks[k]), dists[k])
        return out, x

    def backward_fields():
        """Adjoint-propagated targets at each plane, just after its mask."""
        out = [None] * n_planes
        x = t
        for k in reversed(range(n_planes)):
            x = prop(x, dists[k], adjoint=True)
            out[k] = x
            x = x * np.exp(-1j * masks[k])
        return out

    def objective(final):
        return abs(np.sum(np.einsum("iyx,iyx->i", t.conj(), final))) / m_modes

    def update(k, fwd, bwd):
        overlap = np.sum(np.conj(bwd) * fwd, axis=0)  # per-pixel contribution to sum_i c_i
        c_total = np.sum(overlap * np.exp(1j * masks[k]))
        psi = np.angle(c_total) if c_total != 0 else 0.0
        masks[k] = np.angle(np.exp(1j * psi) * np.conj(overlap)) if np.any(overlap) else masks[k]
        # np.angle of 0 is 0: dark pixels get a flat phase

    _, out = forward_fields()
    history = [objective(out)]
    for _ in range(n_iters):
        bwd = backward_fields()
        x = a
        for k in range(n_planes):
            update(k, x, bwd[k])
            x = prop(x * np.exp(1j * masks[k]), dists[k])
        fwd, _ = forward_fields()
        x = t
        for k in reversed(range(n_planes)):
            x = prop(x, dists[k], adjoint=True)
            update(k, fwd[k], x)
            x = x * np.exp(-1j * masks[k])
        _, out = forward_fields()
        history.append(objective(out))
    return PlaneStack(
        tuple(masks), plane_distance_mm, final_distance_mm, pitch_um, wavelength_nm, angle_cap,
        tuple(shape), tuple(float(h) for h in history),
    )


def target_fields(spots, u) -> list[np.ndarray]:
    """Target ``i`` is ``sum_k u[k, i] spot_k``: input ``i`` maps to column ``i`` of ``u``."""
    s = _stack_amps(spots)
    u = np.asarray(u, dtype=complex)
    return list(np.einsum("ki,kyx->iyx", u, s))


# --- separable measurement stacks ---------------------------------------


def _kron_all(mats):
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def _embed(u, k, n, d):
    return _kron_all([u if j == k else np.eye(d) for j in range(n)])


def factor_separable(u, d: int, tol: float = 1e-9) -> list[np.ndarray]:
    """Split ``u`` into ``d x d`` tensor factors, or raise if it is entangling."""
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    n = int(round(np.log(dim) / np.log(d)))
    if d**n != dim or u.shape != (dim, dim):
        raise GeometryError(f"matrix of size {u.shape} is not a {d}-level tensor power")
    factors = []
    rest = u
    for _ in range(n - 1):
        r = rest.shape[0] // d
        # operator-Schmidt split of rest = A (d x d) kron B (r x r)
        t = rest.reshape(d, r, d, r).transpose(0, 2, 1, 3).reshape(d * d, r * r)
        uu, s, vh = np.linalg.svd(t)
        if s.size > 1 and s[1] > tol * s[0]:
            raise GeometryError("target is not separable; use wavefront_match directly")
        a = (uu[:, 0] * np.sqrt(s[0])).reshape(d, d)
        b = (vh[0] * np.sqrt(s[0])).reshape(r, r)
        scale = np.sqrt(d) / np.linalg.norm(a)
        factors.append(a * scale)
        rest = b / scale
    factors.append(rest)
    return factors


def compile_measurement_stack(
    settings,
    d: int = 2,
    planes_per_layer: int = 3,
    n_iters: int = 30,
    refine_iters: int = 30,
    strategy: str = "layered",
    shape=DEFAULT_SHAPE,
    spacing_um: float = 300.0,
    waist_um: float = 100.0,
    plane_distance_mm: float = DEFAULT_PLANE_DISTANCE_MM,
    final_distance_mm: float = DEFAULT_FINAL_DISTANCE_MM,
    angle_cap: float = DEFAULT_ANGLE_CAP,
    pitch_um: float = DEFAULT_PITCH_UM,
    wavelength_nm: float = DEFAULT_WAVELENGTH_NM,
) -> PlaneStack:
    """One optimized layer per qudit, consecutive layers sharing a boundary plane.

    ``settings`` is a list of ``d x d`` unitaries, one per qudit, or a single
    full matrix that must factor as a tensor product. Layer ``k`` maps spot
    modes to the spots mixed by ``settings[k]``; every layer but the last
    targets the plane of its own final mask, and the last targets the
    detection plane. Plane count is ``(planes_per_layer - 1) N + 1``.

    Stacking independently optimized layers compounds their residual errors,
    so the assembled stack is refined for ``refine_iters`` sweeps against the
    full product target. ``strategy="joint"`` skips the layer stage and
    optimizes the same plane budget from flat masks.
    """
    if strategy not in ("layered", "joint"):
        raise GeometryError(f"unknown strategy {strategy!r}")
    if isinstance(settings, np.ndarray) and settings.ndim == 2 and settings.shape[0] > d:
        settings = factor_separable(settings, d)
    settings = [np.asarray(s, dtype=complex) for s in settings]
    if not settings or any(s.shape != (d, d) for s in settings):
        raise GeometryError(f"need at least one {d}x{d} setting per qudit")
    n = len(settings)
    m_modes = d**n
    n_planes = (planes_per_layer - 1) * n + 1
    spots = spot_modes(m_modes, shape, spacing_um, waist_um, pitch_um, wavelength_nm)
    target = _kron_all(settings)
    geometry = (plane_distance_mm, final_distance_mm, angle_cap, pitch_um, wavelength_nm)
    masks: list[np.ndarray] = []
    layer_obj = []
    if strategy == "layered":
        for k, s in enumerate(settings):
            last = k == n - 1
            layer = wavefront_match(
                spots, target_fields(spots, _embed(s, k, n, d)), planes_per_layer, n_iters,
                plane_distance_mm, final_distance_mm if last else 0.0, angle_cap, pitch_um, wavelength_nm,
            )
            layer_obj.append(layer.history[-1])
            if masks:
                masks[-1] = masks[-1] + layer.masks[0]
                masks.extend(layer.masks[1:])
            else:
                masks.extend(layer.masks)
    stack = PlaneStack(tuple(masks), *geometry[:2], pitch_um, wavelength_nm, angle_cap, tuple(shape))
    layered_fidelity = frobenius_fidelity(stack_matrix(stack, spots, spots), target) if masks else None
    iters = refine_iters if strategy == "layered" else n_iters
    if iters or not masks:
        stack = wavefront_match(
            spots, target_fields(spots, target), n_planes, iters, *geometry, initial=masks or None,
        )
    tm = stack_matrix(stack, spots, spots)
    meta = {
        "d": d,
        "n_qudits": n,
        "strategy": strategy,
        "spot_layout": list(spot_layout(m_modes)),
        "layer_objectives": layer_obj,
        "layered_fidelity": layered_fidelity,
        "fidelity": frobenius_fidelity(tm, target),
        "mean_efficiency": float(np.mean(tm.efficiency)),
    }
    return replace(stack, meta=meta)


def beam_splitter_stack(n_planes: int = 3, n_iters: int = 30, **geometry) -> tuple[PlaneStack, float]:
    """Two-spot 50:50 splitter; returns the stack and its Frobenius fidelity."""
    shape = geometry.pop("shape", DEFAULT_SHAPE)
    spots = spot_modes(2, shape)
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    stack = wavefront_match(spots, target_fields(spots, h), n_planes, n_iters, **geometry)
    return stack, frobenius_fidelity(stack_matrix(stack, spots, spots), h)
