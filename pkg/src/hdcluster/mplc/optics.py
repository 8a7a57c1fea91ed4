"""Scalar fields on a pixel grid and band-limited angular-spectrum propagation.

Lengths are in micrometres internally; the public geometry keeps the units
of its field names (``_um``, ``_nm``, ``_mm``).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from ..errors import GeometryError

DEFAULT_PITCH_UM = 12.5
DEFAULT_WAVELENGTH_NM = 810.0
DEFAULT_SHAPE = (64, 160)
DEFAULT_PLANE_DISTANCE_MM = 87.0
DEFAULT_FINAL_DISTANCE_MM = 43.5
DEFAULT_ANGLE_CAP = 0.15


@dataclass(frozen=True)
class OpticalField:
    amp: np.ndarray
    pitch_um: float = DEFAULT_PITCH_UM
    wavelength_nm: float = DEFAULT_WAVELENGTH_NM
    sampling_warning: bool = False

    def __post_init__(self):
        a = np.asarray(self.amp, dtype=complex)
        if a.ndim != 2 or 0 in a.shape:
            raise GeometryError(f"field must be a non-empty 2D grid, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise GeometryError("field has non-finite entries")
        object.__setattr__(self, "amp", a)

    @property
    def shape(self) -> tuple[int, int]:
        return self.amp.shape

    def power(self) -> float:
        return float(np.sum(np.abs(self.amp) ** 2))

    def overlap(self, other: "OpticalField") -> complex:
        """``<other|self>``."""
        return complex(np.vdot(other.amp, self.amp))


def _freqs(shape, pitch_um):
    fy = np.fft.fftfreq(shape[0], d=pitch_um)
    fx = np.fft.fftfreq(shape[1], d=pitch_um)
    return fy[:, None], fx[None, :]


@lru_cache(maxsize=64)
def _transfer_cached(shape, pitch_um, wavelength_nm, distance_mm, cap):
    lam = wavelength_nm * 1e-3
    z = distance_mm * 1e3
    fy, fx = _freqs(shape, pitch_um)
    f_nyq = 1.0 / (2.0 * pitch_um)
    band = (np.abs(fx) <= cap * f_nyq) & (np.abs(fy) <= cap * f_nyq)
    arg = 1.0 / lam**2 - fx**2 - fy**2
    evanescent = bool(np.any(band & (arg < 0)))
    kz = np.sqrt(np.clip(arg, 0.0, None))
    h = np.where(band & (arg >= 0), np.exp(2j * np.pi * z * kz), 0.0)
    # drop the carrier phase exp(ikz): it is common to every mode
    h = h * np.exp(-2j * np.pi * z / lam)
    h.setflags(write=False)
    return h, evanescent


def transfer_function(shape, pitch_um, wavelength_nm, distance_mm, cap=DEFAULT_ANGLE_CAP):
    if not 0 < cap <= 1:
        raise GeometryError(f"angle cap must lie in (0, 1], got {cap}")
    return _transfer_cached(tuple(shape), float(pitch_um), float(wavelength_nm), float(distance_mm), float(cap))


def band_limit(field: OpticalField, cap: float = DEFAULT_ANGLE_CAP) -> OpticalField:
    """Remove spatial frequencies outside the propagation band."""
    fy, fx = _freqs(field.shape, field.pitch_um)
    f_nyq = 1.0 / (2.0 * field.pitch_um)
    band = (np.abs(fx) <= cap * f_nyq) & (np.abs(fy) <= cap * f_nyq)
    return replace(field, amp=np.fft.ifft2(np.fft.fft2(field.amp) * band))


def propagate(field: OpticalField, distance_mm: float, cap: float = DEFAULT_ANGLE_CAP) -> OpticalField:
    """Free-space propagation by ``distance_mm``; negative distances run the adjoint.

    Zero distance returns the field untouched (no band limiting).
    """
    if distance_mm == 0:
        return field
    h, evanescent = transfer_function(field.shape, field.pitch_um, field.wavelength_nm, abs(distance_mm), cap)
    if distance_mm < 0:
        h = np.conj(h)
    out = np.fft.ifft2(np.fft.fft2(field.amp) * h)
    return replace(field, amp=out, sampling_warning=field.sampling_warning or evanescent)


def propagate_array(amps: np.ndarray, distance_mm: float, pitch_um: float, wavelength_nm: float,
                    cap: float, adjoint: bool = False) -> np.ndarray:
    """Vectorized propagation of a stack ``(modes, H, W)`` of raw amplitudes."""
    if distance_mm == 0:
        return amps
    h, _ = transfer_function(amps.shape[-2:], pitch_um, wavelength_nm, distance_mm, cap)
    if adjoint:
        h = np.conj(h)
    return np.fft.ifft2(np.fft.fft2(amps, axes=(-2, -1)) * h, axes=(-2, -1))


def grid_coords(shape, pitch_um):
    """Pixel-centre coordinates ``(y, x)`` in micrometres, origin at the grid centre."""
    y = (np.arange(shape[0]) - (shape[0] - 1) / 2) * pitch_um
    x = (np.arange(shape[1]) - (shape[1] - 1) / 2) * pitch_um
    return y[:, None], x[None, :]


def gaussian_spot(shape, center_um=(0.0, 0.0), waist_um=100.0, pitch_um=DEFAULT_PITCH_UM,
                  wavelength_nm=DEFAULT_WAVELENGTH_NM) -> OpticalField:
    """Unit-power Gaussian with 1/e^2 intensity radius ``waist_um``."""
    y, x = grid_coords(shape, pitch_um)
    amp = np.exp(-((y - center_um[0]) ** 2 + (x - center_um[1]) ** 2) / waist_um**2)
    amp = amp / np.sqrt(np.sum(amp**2))
    return OpticalField(amp.astype(complex), pitch_um, wavelength_nm)


def second_moment_waist(field: OpticalField) -> tuple[float, float]:
    """``(w_y, w_x)`` from intensity second moments, ``w = 2 sigma``."""
    inten = np.abs(field.amp) ** 2
    total = inten.sum()
    y, x = grid_coords(field.shape, field.pitch_um)
    my = (inten * y).sum() / total
    mx = (inten * x).sum() / total
    vy = (inten * (y - my) ** 2).sum() / total
    vx = (inten * (x - mx) ** 2).sum() / total
    return 2 * np.sqrt(vy), 2 * np.sqrt(vx)


def rayleigh_range_mm(waist_um: float, wavelength_nm: float) -> float:
    return np.pi * waist_um**2 / (wavelength_nm * 1e-3) * 1e-3


def analytic_waist_um(z_mm: float, waist_um: float, wavelength_nm: float) -> float:
    zr = rayleigh_range_mm(waist_um, wavelength_nm)
    return waist_um * np.sqrt(1 + (z_mm / zr) ** 2)


def spot_layout(n_modes: int) -> tuple[int, int]:
    """Rows x cols of the spot array for ``n_modes`` (most square, cols >= rows)."""
    rows = max(r for r in range(1, int(np.sqrt(n_modes)) + 1) if n_modes % r == 0)
    return rows, n_modes // rows


def spot_modes(n_modes: int, shape=DEFAULT_SHAPE, spacing_um=300.0, waist_um=100.0,
               pitch_um=DEFAULT_PITCH_UM, wavelength_nm=DEFAULT_WAVELENGTH_NM, layout=None):
    """Row-major Gaussian spots centred on the grid; mode ``m`` sits at row ``m // cols``."""
    rows, cols = layout or spot_layout(n_modes)
    if rows * cols != n_modes:
        raise GeometryError(f"layout {rows}x{cols} does not hold {n_modes} modes")
    half_h = shape[0] * pitch_um / 2
    half_w = shape[1] * pitch_um / 2
    if (rows - 1) / 2 * spacing_um + waist_um > half_h or (cols - 1) / 2 * spacing_um + waist_um > half_w:
        raise GeometryError(
            f"{rows}x{cols} spots at {spacing_um} um do not fit a {shape[0]}x{shape[1]} grid of {pitch_um} um pixels"
        )
    out = []
    for m in range(n_modes):
        r, c = divmod(m, cols)
        center = ((r - (rows - 1) / 2) * spacing_um, (c - (cols - 1) / 2) * spacing_um)
        out.append(gaussian_spot(shape, center, waist_um, pitch_um, wavelength_nm))
    return out
