"""Numerical toolkit for generalized V-line transforms of symmetric
tensor fields on the unit disk: forward longitudinal / transverse / mixed /
moment transforms and the matching explicit inversion pipelines.
"""

import os as _os

# VLT_THREADS caps the worker-thread count of the numerical backends.
# It must land in the environment before any BLAS pool spins up, so it is
# handled first thing at package import.
_threads = _os.environ.get("VLT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .errors import DataFormatError, DegenerateDataError
from .grids import (GridSpec, ScalarGrid, SymmetricTensorField, PotentialSet,
                    DirectionPair, MAX_TENSOR_ORDER)
from .operators import (apply_d, apply_d_perp, apply_delta, apply_delta_perp,
                        potential_term, synthesize_from_potentials,
                        contraction_weights, contract)
from .radon import (chebyshev_T, chebyshev_U, RadonSinogram, HarmonicTable,
                    radon_forward, angular_fourier, harmonics_of_sinogram,
                    cormack_invert, perry_invert, assemble_from_harmonics)
from .vforward import (VGridSpec, VSinogram, vline_weighted_scalar,
                       vline_weighted_via_radon, vline_mixed,
                       vline_mixed_via_radon, vline_longitudinal,
                       vline_transverse, vline_moment, component_sinograms)
from .phantoms import PHANTOM_KINDS, make_phantom
from .inversion import (WeightPair, ModeMask, decomposition_weights,
                        moment_weights, invert_weighted_vline, integrate_in_s,
                        recover_potential, reconstruct_decomposition,
                        reconstruct_vector_componentwise,
                        reconstruct_2tensor_componentwise,
                        reconstruct_from_moments, DEFAULT_N_MAX)
from .io import (read_grid, write_grid, read_sinogram, write_sinogram,
                 write_pgm, GRID_MAGIC, SINO_MAGIC)
from .metrics import relative_l2, max_abs, per_component_relative_l2, metrics_report
from .kernels import HAVE_COMPILED
from .selftest import SelftestConfig, run_selftest

__version__ = "1.0.0"

__all__ = [
    "DataFormatError", "DegenerateDataError",
    "GridSpec", "ScalarGrid", "SymmetricTensorField", "PotentialSet",
    "DirectionPair", "MAX_TENSOR_ORDER",
    "apply_d", "apply_d_perp", "apply_delta", "apply_delta_perp",
    "potential_term", "synthesize_from_potentials",
    "contraction_weights", "contract",
    "chebyshev_T", "chebyshev_U", "RadonSinogram", "HarmonicTable",
    "radon_forward", "angular_fourier", "harmonics_of_sinogram",
    "cormack_invert", "perry_invert", "assemble_from_harmonics",
    "VGridSpec", "VSinogram", "vline_weighted_scalar",
    "vline_weighted_via_radon", "vline_mixed", "vline_mixed_via_radon",
    "vline_longitudinal", "vline_transverse", "vline_moment",
    "component_sinograms",
    "PHANTOM_KINDS", "make_phantom",
    "WeightPair", "ModeMask", "decomposition_weights", "moment_weights",
    "invert_weighted_vline", "integrate_in_s", "recover_potential",
    "reconstruct_decomposition", "reconstruct_vector_componentwise",
    "reconstruct_2tensor_componentwise", "reconstruct_from_moments",
    "DEFAULT_N_MAX",
    "read_grid", "write_grid", "read_sinogram", "write_sinogram",
    "write_pgm", "GRID_MAGIC", "SINO_MAGIC",
    "relative_l2", "max_abs", "per_component_relative_l2", "metrics_report",
    "HAVE_COMPILED",
    "SelftestConfig", "run_selftest",
]
