"""Simulator for period multiplication in flux-pumped SQUID-terminated resonators."""

__version__ = "0.1.0"

from .device import DeviceParams, ModeSpectrum, solve_spectrum  # noqa: E402
from .dynamics import FixedPoint, find_fixed_points, integrate  # noqa: E402
from .rwa import (HigherModeConfig, ProbeConfig, PumpConfig, RwaModel,  # noqa: E402
                  build_model, eom_rhs, hamiltonian_value)
from .stochastic import Histogram2D, NoiseConfig, simulate_ensemble  # noqa: E402
