"""Non-time-symmetric Bartnik extensions: collars, bending, gluing and mass bounds."""

from .collar import build_collar, build_simple_collar, collar_constants, mu_block_diagonal
from .data import (AxisymmetricPath, BartnikData, DirectPath, RoundnessConstants, hawking_mass_of_data,
                   roundness_constants, tilted_path, validate_data)
from .extension import assemble_cmc, assemble_extension, glue_to_schwarzschild, taper_profile
from .kernels import BACKEND
from .mass import bound_cor62, bound_thm51, hawking_along, mass_bounds
from .profiles import CMC, Constant, Custom, InverseSqrt, SqrtTwoOverR, check_monotonicity, g_of, v_of
from .radial import arclength_from_horizon, find_radius_crossing, solve_forward
from .reduction import build_reduction
from .smoothing import bend, glue, omega_bound

__version__ = "0.1.0"

__all__ = [
    "AxisymmetricPath", "BACKEND", "BartnikData", "CMC", "Constant", "Custom", "DirectPath", "InverseSqrt",
    "RoundnessConstants", "SqrtTwoOverR", "arclength_from_horizon", "assemble_cmc", "assemble_extension",
    "bend", "bound_cor62", "bound_thm51", "build_collar", "build_reduction", "build_simple_collar",
    "check_monotonicity", "collar_constants", "find_radius_crossing", "g_of", "glue", "glue_to_schwarzschild",
    "hawking_along", "hawking_mass_of_data", "mass_bounds", "mu_block_diagonal", "omega_bound",
    "roundness_constants", "solve_forward", "taper_profile", "tilted_path", "v_of", "validate_data",
]
