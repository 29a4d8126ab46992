"""criticalflow: pseudospectral toolkit for the large-volume-viscosity
incompressible limit of barotropic flows.

Periodic-domain spectral fields, dyadic (Littlewood-Paley style) block
analysis with homogeneous Besov norms, Helmholtz projections, coupled
compressible/incompressible solvers, a-priori functional reports, and the
viscosity-sweep convergence experiment.
"""

__version__ = "0.1.0"

from .dyadic import (
    BesovNorm,
    DyadicPartition,
    besov_norm,
    build_partition,
    dyadic_block,
    low_cutoff,
    split_low_high,
)
from .fields import (
    Grid,
    SpectralField,
    dealiased_product,
    derivative,
    inverse_laplacian,
    make_grid,
    transform,
    zero_field,
)
from .helmholtz import project_P, project_Q
from .states import (
    CFLError,
    CnsState,
    InsState,
    PressureLaw,
    Trajectory,
    VacuumError,
    ViscosityParams,
)

__all__ = [
    "__version__",
    "Grid",
    "SpectralField",
    "make_grid",
    "transform",
    "derivative",
    "dealiased_product",
    "inverse_laplacian",
    "zero_field",
    "DyadicPartition",
    "BesovNorm",
    "build_partition",
    "dyadic_block",
    "low_cutoff",
    "besov_norm",
    "split_low_high",
    "project_P",
    "project_Q",
    "ViscosityParams",
    "PressureLaw",
    "InsState",
    "CnsState",
    "Trajectory",
    "CFLError",
    "VacuumError",
]
