"""Coarse-to-fine object tracking with exact banded path recovery."""

from .driver import FgConfig, TrackResult, compute_levels, track, track_multi
from .estimators import FgOrka, MultiObjectTracker, Orka, Resampler
from .metrics import shift_error
from .path_solver import BudgetExceededError, SolverConfig, solve_path
from .resampling import ResamplingPair, make_fourier_pair, make_optimal_pair, make_wavelet_pair
from .shiftops import ShiftPath, shift_apply, shift_compose
from .smoothing import build_system, objective_value, solve_object

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "FgConfig",
    "FgOrka",
    "MultiObjectTracker",
    "Orka",
    "Resampler",
    "ResamplingPair",
    "ShiftPath",
    "SolverConfig",
    "TrackResult",
    "build_system",
    "compute_levels",
    "make_fourier_pair",
    "make_optimal_pair",
    "make_wavelet_pair",
    "objective_value",
    "shift_apply",
    "shift_compose",
    "shift_error",
    "solve_object",
    "solve_path",
    "track",
    "track_multi",
]
