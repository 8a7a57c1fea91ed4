"""Rate and loss figures of merit."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class MetricsRecord:
    hilbert_dim: int
    rate_hz: float
    eqrr_hz: float
    equivalent_qubits: float
    loss_db: float | None = None

    def to_dict(self) -> dict:
        return {"schema_version": 1} | asdict(self)


def eqrr(hilbert_dim: int, rate_hz: float) -> MetricsRecord:
    """Effective quantum resource rate: Hilbert-space dimension times detection rate."""
    if hilbert_dim < 1 or rate_hz < 0:
        raise ValidationError(f"need dim >= 1 and rate >= 0, got {hilbert_dim}, {rate_hz}")
    return MetricsRecord(hilbert_dim, rate_hz, hilbert_dim * rate_hz, math.log2(hilbert_dim))


def loss_db(rate_in_hz: float, rate_out_hz: float) -> float:
    """Single-photon loss from a coincidence-rate ratio: ``10 log10(sqrt(out / in))``."""
    if rate_in_hz <= 0:
        raise ValidationError("input rate must be positive")
    if rate_out_hz < 0:
        raise ValidationError("output rate must be non-negative")
    if rate_out_hz == 0:
        return -math.inf
    return 10 * math.log10(math.sqrt(rate_out_hz / rate_in_hz))
