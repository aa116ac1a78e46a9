"""Coefficients and right-hand side of the slow-amplitude equation

    i da/dt + (delta + i Gamma1 + alpha |a|^2) a + eps_n (a*)^(n-1) = 0

for the fundamental-mode amplitude ``a`` under flux pumping at n omega,
optionally with an additive probe drive i zeta exp(-i Delta t).

The pump term acts on the conjugate of the *fundamental* amplitude; written
with the higher-mode amplitude it would not produce the n-fold degenerate
stationary states.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .device import DeviceParams, ModeSpectrum
from .errors import MissingHigherMode, UnsupportedOrder

SUPPORTED_ORDERS = (2, 3, 4, 5)


@dataclass(frozen=True)
class PumpConfig:
    """Flux modulation delta_f(t) = delta_f0 cos(n omega t + pump_phase).

    ``delta`` is the detuning omega - omega_1 in rad/s.
    """

    n: int = 2
    delta_f0: float = 0.0
    pump_phase: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if self.n not in SUPPORTED_ORDERS:
            raise UnsupportedOrder(f"multiplication order {self.n} not in {SUPPORTED_ORDERS}")
        if not self.delta_f0 >= 0:
            raise ValueError(f"delta_f0 must be >= 0, got {self.delta_f0}")
        if self.delta_f0 > 0.5:
            warnings.warn(f"delta_f0={self.delta_f0} is outside the linear-in-pump regime",
                          stacklevel=2)


@dataclass(frozen=True)
class HigherModeConfig:
    """Response of the mode near n omega (used for odd n).

    Either give ``amplitude`` directly, or a drive from which the amplitude
    follows as ``drive_amplitude / (detuning + i damping)``. The drive may
    represent the flux line's effective current drive, parasitic crosstalk,
    or both.
    """

    amplitude: complex | None = None
    drive_amplitude: float = 0.0
    detuning: float = 0.0
    damping: float = 0.0

    def __post_init__(self):
        if self.amplitude is None and not self.damping > 0:
            raise ValueError("a drive-specified higher mode needs damping > 0")

    def response(self, pump_phase: float = 0.0) -> complex:
        if self.amplitude is not None:
            return complex(self.amplitude)
        return self.drive_amplitude * cmath.exp(1j * pump_phase) / complex(self.detuning, self.damping)


@dataclass(frozen=True)
class ProbeConfig:
    amplitude: complex = 0j
    detuning: float = 0.0

    def __post_init__(self):
        if not (cmath.isfinite(complex(self.amplitude)) and math.isfinite(self.detuning)):
            raise ValueError("probe parameters must be finite")


@dataclass(frozen=True)
class RwaModel:
    """The reduced dynamical system. Rates share one (arbitrary) unit."""

    n: int
    delta: float
    gamma1: float
    alpha: float
    epsilon: complex
    probe: ProbeConfig | None = None

    def __post_init__(self):
        if self.n not in SUPPORTED_ORDERS:
            raise UnsupportedOrder(f"multiplication order {self.n} not in {SUPPORTED_ORDERS}")
        if not self.gamma1 >= 0:
            raise ValueError(f"gamma1 must be non-negative, got {self.gamma1}")
        if not (math.isfinite(self.alpha) and cmath.isfinite(complex(self.epsilon))
                and math.isfinite(self.delta)):
            raise ValueError("model coefficients must be finite")
        object.__setattr__(self, "epsilon", complex(self.epsilon))

    @property
    def zeta(self) -> complex:
        return complex(self.probe.amplitude) if self.probe is not None else 0j

    @property
    def probe_detuning(self) -> float:
        return self.probe.detuning if self.probe is not None else 0.0

    def scaled(self, unit: float) -> RwaModel:
        """Express all rates in units of ``unit`` (time then runs in 1/unit)."""
        probe = None
        if self.probe is not None:
            probe = ProbeConfig(self.probe.amplitude / unit, self.probe.detuning / unit)
        return RwaModel(self.n, self.delta / unit, self.gamma1 / unit, self.alpha / unit,
                        self.epsilon / unit, probe)

    def with_pump_phase_shift(self, chi: float) -> RwaModel:
        return replace(self, epsilon=self.epsilon * cmath.exp(1j * chi))

    def lossless(self) -> RwaModel:
        return replace(self, gamma1=0.0, probe=None)


def duffing_coefficient(params: DeviceParams, spectrum: ModeSpectrum) -> float:
    """Kerr coefficient alpha = E+ cos(F/2) beta_1^4."""
    beta1 = spectrum.mode(1).beta
    return params.e_plus * params.cos_half_flux * beta1**4


def _flux_factor(params: DeviceParams, flux_factor: str) -> float:
    if flux_factor == "cos":
        return params.cos_half_flux
    if flux_factor == "sin":
        return math.sin(params.static_flux / 2)
    raise ValueError(f"flux_factor must be 'cos' or 'sin', got {flux_factor!r}")


def pump_coefficient_even(params: DeviceParams, spectrum: ModeSpectrum, pump: PumpConfig,
                          flux_factor: str = "cos") -> complex:
    """eps_2 = E+ cos(F/2) beta_1^2 delta_f0 e^{i phase}; eps_4 = -eps_2 beta_1^2 / 2.

    ``flux_factor="sin"`` swaps cos(F/2) for sin(F/2) in eps_2, which is what
    a re-derivation from the flux-pump potential gives.
    """
    if pump.n not in (2, 4):
        raise UnsupportedOrder(f"even pump coefficient requested for n={pump.n}")
    beta1 = spectrum.mode(1).beta
    eps2 = (params.e_plus * _flux_factor(params, flux_factor) * beta1**2 * pump.delta_f0
            * cmath.exp(1j * pump.pump_phase))
    if pump.n == 2:
        return eps2
    return -eps2 * beta1**2 / 2


def pump_coefficient_odd(params: DeviceParams, spectrum: ModeSpectrum, pump: PumpConfig,
                         higher_mode: HigherModeConfig | None = None) -> complex:
    """Odd-order pump coefficient: direct (asymmetry) term plus higher-mode term.

    For n=3:

        eps_3 = (E-/2) beta_1^3 delta_f0 / cos(F/2) e^{i phase}
                + E+ cos(F/2) beta_1^2 beta_3 a_3

    with beta_3 the coupling of the mode near 3 omega_1. n=5 is an
    extrapolation: both terms gain a factor beta_1^2 and beta_5, a_5 replace
    beta_3, a_3.
    """
    if pump.n not in (3, 5):
        raise UnsupportedOrder(f"odd pump coefficient requested for n={pump.n}")
    if higher_mode is None and params.e_minus == 0:
        raise MissingHigherMode(
            f"n={pump.n} with a symmetric SQUID and no higher-mode drive gives eps=0")
    beta1 = spectrum.mode(1).beta
    direct = (params.e_minus / 2) * beta1**3 * pump.delta_f0 / params.cos_half_flux
    direct *= cmath.exp(1j * pump.pump_phase)
    via_mode = 0j
    if higher_mode is not None:
        beta_h = spectrum.mode_near(pump.n).beta
        via_mode = (params.e_plus * params.cos_half_flux * beta1**2 * beta_h
                    * higher_mode.response(pump.pump_phase))
    eps = direct + via_mode
    if pump.n == 5:
        eps *= beta1**2
    return eps


def pump_coefficient(params, spectrum, pump, higher_mode=None, flux_factor="cos") -> complex:
    if pump.n % 2 == 0:
        return pump_coefficient_even(params, spectrum, pump, flux_factor)
    return pump_coefficient_odd(params, spectrum, pump, higher_mode)


def build_model(params: DeviceParams, spectrum: ModeSpectrum, pump: PumpConfig, gamma1: float,
                higher_mode: HigherModeConfig | None = None, probe: ProbeConfig | None = None,
                flux_factor: str = "cos") -> RwaModel:
    return RwaModel(
        n=pump.n,
        delta=pump.delta,
        gamma1=gamma1,
        alpha=duffing_coefficient(params, spectrum),
        epsilon=pump_coefficient(params, spectrum, pump, higher_mode, flux_factor),
        probe=probe,
    )


def eom_rhs(a, t, model: RwaModel):
    """da/dt. Accepts scalars or arrays for ``a``."""
    n = model.n
    da = 1j * (model.delta + 1j * model.gamma1 + model.alpha * (a * np.conj(a)).real) * a
    da = da + 1j * model.epsilon * np.conj(a) ** (n - 1)
    if model.probe is not None:
        da = da + 1j * model.zeta * np.exp(-1j * model.probe_detuning * t)
    return da


def hamiltonian_value(a, model: RwaModel):
    """Conserved energy of the lossless, unprobed equation (da/dt = i dH/da*)."""
    n = model.n
    u = (a * np.conj(a)).real
    pump = model.epsilon * np.conj(a) ** n
    return model.delta * u + 0.5 * model.alpha * u**2 + (2.0 / n) * pump.real
