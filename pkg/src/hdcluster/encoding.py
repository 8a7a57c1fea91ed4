"""Mode indexing for two photons sharing one aperture mask.

Each photon carries ``M = d**N`` spatial modes. A mode index ``m`` is read as
an ``N``-digit base-``d`` string, most significant digit first, so digit 0 is
the first qudit encoded in that photon. Apertures are numbered row-major from
the top-left corner of the mask. Photon A uses apertures ``0..M-1``; by
momentum conservation its partner photon B sits at the point reflection
through the mask center, aperture ``2M-1-m``, and carries the same label ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import EncodingError


@dataclass(frozen=True)
class ApertureGrid:
    rows: int
    cols: int
    pitch_um: float = 300.0
    radius_um: float = 100.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise EncodingError("aperture grid needs at least one row and column")
        if self.pitch_um <= 2 * self.radius_um:
            raise EncodingError(
                f"apertures overlap: pitch {self.pitch_um} um <= 2 x radius {self.radius_um} um"
            )

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def coords(self, i: int) -> tuple[int, int]:
        """(row, col) of aperture ``i``."""
        if not 0 <= i < self.size:
            raise EncodingError(f"aperture {i} outside [0, {self.size})")
        return divmod(i, self.cols)

    def position_um(self, i: int) -> tuple[float, float]:
        """Physical (y, x) center of aperture ``i`` relative to the mask center."""
        r, c = self.coords(i)
        return (
            (r - (self.rows - 1) / 2) * self.pitch_um,
            (c - (self.cols - 1) / 2) * self.pitch_um,
        )


@dataclass(frozen=True)
class EncodingSpec:
    d: int
    N: int
    grid: ApertureGrid | None = None

    def __post_init__(self):
        if self.d < 2:
            raise EncodingError(f"qudit dimension must be >= 2, got {self.d}")
        if self.N < 1:
            raise EncodingError(f"need at least one qudit per photon, got {self.N}")
        if self.grid is None:
            object.__setattr__(self, "grid", default_grid(self.M))
        elif self.grid.size != 2 * self.M:
            raise EncodingError(
                f"grid holds {self.grid.size} apertures but two photons need {2 * self.M}"
            )

    @property
    def M(self) -> int:
        return self.d**self.N

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "N": self.N,
            "rows": self.grid.rows,
            "cols": self.grid.cols,
            "pitch_um": self.grid.pitch_um,
            "radius_um": self.grid.radius_um,
        }

    @classmethod
    def from_dict(cls, cfg: dict) -> "EncodingSpec":
        d, n = int(cfg["d"]), int(cfg["N"])
        grid = None
        if "rows" in cfg or "cols" in cfg:
            grid = ApertureGrid(
                rows=int(cfg["rows"]),
                cols=int(cfg["cols"]),
                pitch_um=float(cfg.get("pitch_um", 300.0)),
                radius_um=float(cfg.get("radius_um", 100.0)),
            )
        return cls(d=d, N=n, grid=grid)


def default_grid(M: int) -> ApertureGrid:
    """Most square row-major grid with ``2M`` apertures and at least as many columns as rows."""
    total = 2 * M
    rows = max(r for r in range(1, int(np.sqrt(total)) + 1) if total % r == 0)
    return ApertureGrid(rows=rows, cols=total // rows)


def index_to_digits(m: int, spec: EncodingSpec) -> tuple[int, ...]:
    if not 0 <= m < spec.M:
        raise EncodingError(f"mode index {m} outside [0, {spec.M})")
    digits = []
    for _ in range(spec.N):
        m, r = divmod(m, spec.d)
        digits.append(r)
    return tuple(reversed(digits))


def digits_to_index(digits: Iterable[int], spec: EncodingSpec) -> int:
    digits = tuple(int(q) for q in digits)
    if len(digits) != spec.N:
        raise EncodingError(f"expected {spec.N} digits, got {len(digits)}")
    m = 0
    for q in digits:
        if not 0 <= q < spec.d:
            raise EncodingError(f"digit {q} outside [0, {spec.d})")
        m = m * spec.d + q
    return m


def digit_table(spec: EncodingSpec) -> np.ndarray:
    """``(M, N)`` integer array whose row ``m`` is ``index_to_digits(m)``."""
    m = np.arange(spec.M)
    powers = spec.d ** np.arange(spec.N - 1, -1, -1)
    return (m[:, None] // powers[None, :]) % spec.d


def partner_aperture(i: int, grid: ApertureGrid) -> int:
    r, c = grid.coords(i)
    return (grid.rows - 1 - r) * grid.cols + (grid.cols - 1 - c)


def photon_apertures(spec: EncodingSpec, photon: str) -> list[int]:
    """Aperture index of each mode label ``0..M-1`` for photon ``'A'`` or ``'B'``."""
    if photon == "A":
        return list(range(spec.M))
    if photon == "B":
        return [partner_aperture(m, spec.grid) for m in range(spec.M)]
    raise EncodingError(f"photon must be 'A' or 'B', got {photon!r}")
