"""Trapping and dispersion of planetary and gravity waves in a rotating channel."""

from .profiles import CoriolisProfile, builtin_profile, eval_profile, profile_from_config
from .symbols import (
    DispersionRoots,
    ModeMatrix,
    PhasePoint,
    admissible,
    dispersion_roots,
    mode_matrix,
    rossby_symbol_E,
)
from .trapped import (
    LambdaPoint,
    extremal_area_check,
    find_lambda_roots,
    sample_lambda,
    smallxi_scaling,
)
from .fields import (
    Grid2D,
    HusimiDensity,
    RegionOmega,
    StateField,
    grid_for,
    husimi,
    local_mass,
)
from .pde import EvolveWorkspace, build_generator
from .quantize import (
    QuantizedSymbol,
    ScalarModeField,
    ScalarResidualReport,
    SpectrumTable,
    bohr_sommerfeld_levels,
    project_modes,
    quantize_symbol,
    reconstruct_mode,
    scalar_residual_check,
)
from .wkb import (
    LagrangianCloud,
    WkbSpec,
    build_trapped_wkb,
    build_untrapped_wkb,
    wkb_initial,
)
from .io import RunConfig, load_config, read_manifest, validate_config
from .runs import run_config
from .report import build_report

__version__ = "0.1.0"
