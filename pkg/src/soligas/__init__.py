"""Multi-soliton solutions of KdV, their effective positions and the soliton gas."""

from .core import SolitonConfig, asymptotic_impacts, phase_shift, scattering_tables, wigner_shifts
from .effective import EffectivePositions, bethe_residual, scan_effective
from .errors import (
    CFLError,
    CoincidentSpectrumError,
    InconsistentDisplacementsError,
    InvalidConfigError,
    RepresentationError,
    SoligasError,
    SolverError,
    UnsupportedOrderError,
)
from .gas import check_assumptions, generate_ultra_dilute, generate_uniform, sequential_positions
from .hydro import DensityField, effective_velocity, ghd_evolve, ghd_step
from .observables import exact_charge, integrate_density
from .positions import PositionPath, contract, expand, extremal_and_core
from .projections import fluid_cell_projection, local_projection, project_out
from .tau import field, one_soliton, tau_centred, tau_determinant, tau_expansion

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
