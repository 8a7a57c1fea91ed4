"""Transfer-matrix recovery from intensity-only data, and the two-photon loss model."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import GeometryError
from .design import TransferMatrix


@dataclass(frozen=True)
class Probe:
    input_field: np.ndarray  # complex weights on the M input modes
    intensities: np.ndarray  # recorded power at each output mode


def gauge_rows(a: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate each row so its first non-negligible element is real and positive."""
    a = np.array(a, dtype=complex)
    for i, row in enumerate(a):
        nz = np.flatnonzero(np.abs(row) > tol * max(1.0, np.abs(row).max()))
        if nz.size:
            a[i] *= np.exp(-1j * np.angle(row[nz[0]]))
    return a


def _fit_row(mag, x, y, rng, restarts, max_iter, tol):
    """Phases of one row: ``|x @ a| ** 2 = y`` with ``|a| = mag`` fixed."""
    pinv = np.linalg.pinv(x)
    sqrt_y = np.sqrt(np.clip(y, 0.0, None))
    best, best_res = None, np.inf
    for _ in range(restarts):
        a = mag * np.exp(2j * np.pi * rng.random(mag.size))
        prev = np.inf
        for _ in range(max_iter):
            z = x @ a
            z = sqrt_y * np.exp(1j * np.angle(z))
            a = pinv @ z
            a = mag * np.exp(1j * np.angle(a))
            res = float(np.sum((np.abs(x @ a) ** 2 - y) ** 2))
            if abs(prev - res) < tol:
                break
            prev = res
        if res < best_res:
            best, best_res = a, res
    return best, best_res


def gs_reconstruct(
    single_input_intensities,
    probes,
    restarts: int = 8,
    max_iter: int = 2000,
    tol: float = 1e-8,
    seed: int = 0,
) -> TransferMatrix:
    """Recover ``A`` up to one phase per row.

    Column magnitudes come from single-input scans, ``|A_ij| = sqrt(I_ij)``.
    Each probe sends a known superposition into the inputs and records all
    output powers; row phases are found by alternating between the measured
    magnitudes of ``x @ a`` and the known magnitudes of ``a``. Several seeded
    random starts are tried per row and the lowest intensity residual kept.
    """
    mags = np.sqrt(np.clip(np.asarray(single_input_intensities, dtype=float), 0.0, None))
    n_out, m_in = mags.shape
    probes = list(probes)
    if not probes:
        raise GeometryError("need at least one multi-input probe")
    x = np.stack([np.asarray(p.input_field, dtype=complex) for p in probes])
    y = np.stack([np.asarray(p.intensities, dtype=float) for p in probes])
    if x.shape[1] != m_in or y.shape[1] != n_out:
        raise GeometryError(f"probe shapes {x.shape}/{y.shape} do not match a {n_out}x{m_in} matrix")
    if len(probes) < 2 * m_in:
        warnings.warn(
            f"{len(probes)} probes for {m_in} inputs; at least {2 * m_in} are recommended",
            RuntimeWarning,
            stacklevel=2,
        )
    rng = np.random.default_rng(seed)
    a = np.zeros((n_out, m_in), dtype=complex)
    null_rows = []
    for i in range(n_out):
        if not np.any(mags[i] > 0):
            null_rows.append(i)
            continue
        a[i], _ = _fit_row(mags[i], x, y[:, i], rng, restarts, max_iter, tol)
    a = gauge_rows(a)
    eff = np.sum(np.abs(a) ** 2, axis=0)
    if np.any(eff > 1 + 1e-9):
        eff = eff / eff.max()  # measured intensities carry an arbitrary scale
    return TransferMatrix(a, eff, tuple(null_rows))


def synthetic_probes(a: np.ndarray, n_probes: int, seed: int = 0, noise: float = 0.0):
    """Probe data from a known matrix, with optional multiplicative intensity noise."""
    rng = np.random.default_rng(seed)
    a = np.asarray(a, dtype=complex)
    m_in = a.shape[1]
    single = np.abs(a) ** 2
    if noise:
        single = single * (1 + noise * rng.standard_normal(single.shape))
    probes = []
    for _ in range(n_probes):
        xin = rng.standard_normal(m_in) + 1j * rng.standard_normal(m_in)
        xin /= np.linalg.norm(xin)
        inten = np.abs(a @ xin) ** 2
        if noise:
            inten = inten * (1 + noise * rng.standard_normal(inten.shape))
        probes.append(Probe(xin, inten))
    return single, probes


# --- loss ----------------------------------------------------------------


def stack_transmission(tm: TransferMatrix) -> float:
    """Mean single-photon power transmission into the output mode set."""
    return float(np.mean(tm.efficiency))


def coincidence_probability(amp: np.ndarray, a_photon, b_photon) -> float:
    """Total coincidence probability after lossy transfer matrices on each photon."""
    a = a_photon.matrix if isinstance(a_photon, TransferMatrix) else np.asarray(a_photon)
    b = b_photon.matrix if isinstance(b_photon, TransferMatrix) else np.asarray(b_photon)
    out = a @ np.asarray(amp) @ b.T
    return float(np.sum(np.abs(out) ** 2))


def coincidence_rate(rate_hz: float, t_a: float, t_b: float) -> float:
    if rate_hz < 0 or not (0 <= t_a <= 1 and 0 <= t_b <= 1):
        raise GeometryError("rates must be non-negative and transmissions in [0, 1]")
    return rate_hz * t_a * t_b
