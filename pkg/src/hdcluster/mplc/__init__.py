"""Multi-plane light converter design and characterization."""

from .design import (
    PlaneStack,
    TransferMatrix,
    beam_splitter_stack,
    compile_measurement_stack,
    factor_separable,
    frobenius_fidelity,
    stack_matrix,
    target_fields,
    wavefront_match,
)
from .optics import (
    OpticalField,
    analytic_waist_um,
    band_limit,
    gaussian_spot,
    propagate,
    rayleigh_range_mm,
    second_moment_waist,
    spot_modes,
    transfer_function,
)
from .retrieval import (
    Probe,
    coincidence_probability,
    coincidence_rate,
    gauge_rows,
    gs_reconstruct,
    stack_transmission,
    synthetic_probes,
)

__all__ = [
    "OpticalField", "PlaneStack", "Probe", "TransferMatrix", "analytic_waist_um", "band_limit",
    "beam_splitter_stack", "coincidence_probability", "coincidence_rate", "compile_measurement_stack",
    "factor_separable", "frobenius_fidelity", "gauge_rows", "gaussian_spot", "gs_reconstruct",
    "propagate", "rayleigh_range_mm", "second_moment_waist", "spot_modes", "stack_matrix",
    "stack_transmission", "synthetic_probes", "target_fields", "transfer_function", "wavefront_match",
]
