"""Dipole-lets: a cone-aware undecimated multiscale transform for QSM."""

__version__ = "0.1.0"

from .bands import COARSE, AngularConfig, BandSet, RadialConfig, build_bandset
from .estimators import (BandRegularizedQSM, DipoleletTransform, DipoleletWeights, TKDReconstructor,
                         WeightedTVReconstructor)
from .io import read_nifti_minimal, read_volume, render_slices, write_nifti_minimal, write_volume
from .kernel import cone_distance_proxy, dipole_kernel
from .metrics import evaluate, rmse, streak_energy, xsim
from .simulate import CorruptionSpec, Offset, corrupt, forward_dipole, forward_sti_z, make_phantom
from .solvers import (BandRegConfig, TkdConfig, TvConfig, admm_weighted_tv, band_regularized_descent,
                      tkd)
from .transform import Decomposition, analyze, band_energy_map, synthesize
from .volume import FreqGrid, GridSpec, Volume, make_freq_grid, volume_stats
from .weights import WeightConfig, make_mask, make_weight

__all__ = [
    "COARSE", "AngularConfig", "BandSet", "RadialConfig", "build_bandset",
    "BandRegularizedQSM", "DipoleletTransform", "DipoleletWeights", "TKDReconstructor",
    "WeightedTVReconstructor",
    "read_nifti_minimal", "read_volume", "render_slices", "write_nifti_minimal", "write_volume",
    "cone_distance_proxy", "dipole_kernel",
    "evaluate", "rmse", "streak_energy", "xsim",
    "CorruptionSpec", "Offset", "corrupt", "forward_dipole", "forward_sti_z", "make_phantom",
    "BandRegConfig", "TkdConfig", "TvConfig", "admm_weighted_tv", "band_regularized_descent", "tkd",
    "Decomposition", "analyze", "band_energy_map", "synthesize",
    "FreqGrid", "GridSpec", "Volume", "make_freq_grid", "volume_stats",
    "WeightConfig", "make_mask", "make_weight",
]
