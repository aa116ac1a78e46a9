"""SQUID-terminated quarter-wave resonator: working point, eigenmodes, couplings.

All energies are carried as angular frequencies (E/hbar, rad/s); hbar never
appears numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.constants as cst

from .errors import DivergentInductance, FluxSingularity, GammaOutOfRange, RootBracketFailure

TWO_PI = 2.0 * math.pi
GHZ = TWO_PI * 1e9
MHZ = TWO_PI * 1e6

#: von Klitzing constant h/e^2 in ohm.
R_K = cst.h / cst.e**2

#: Smallest |cos(F/2)| accepted for the static flux.
FLUX_GUARD = 1e-6

#: Default v/d, chosen so that the fundamental sits close to 5 GHz for the
#: default device (gamma ~ 0.05, k1 d ~ 1.4963).
DEFAULT_FREQUENCY_SCALE = 3.3415 * GHZ


@dataclass(frozen=True)
class DeviceParams:
    """Physical description of the flux-tunable resonator.

    Attributes
    ----------
    e_plus : float
        (E_J1 + E_J2)/2 as an angular frequency, rad/s.
    e_minus : float
        (E_J1 - E_J2)/2 as an angular frequency, rad/s. Zero for a symmetric SQUID.
    z0 : float
        Line impedance sqrt(L0/C0), ohm.
    el_cav : float
        Cavity inductive energy scale as an angular frequency, rad/s.
    static_flux : float
        Normalized DC flux F = 2 pi Phi_dc / Phi_0, rad.
    n_modes : int
        Number of eigenmodes to solve for.
    """

    e_plus: float = 1000.0 * GHZ
    e_minus: float = 20.0 * GHZ
    z0: float = 50.0
    el_cav: float = 92.1 * GHZ
    static_flux: float = 0.8
    n_modes: int = 3

    def __post_init__(self):
        if not self.e_plus > 0:
            raise ValueError(f"e_plus must be positive, got {self.e_plus}")
        if not abs(self.e_minus) < self.e_plus:
            raise ValueError("|e_minus| must be smaller than e_plus")
        if not self.z0 > 0:
            raise ValueError(f"z0 must be positive, got {self.z0}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ValueError(f"n_modes must be an integer >= 1, got {self.n_modes}")
        if abs(math.cos(self.static_flux / 2)) <= FLUX_GUARD:
            raise FluxSingularity(
                f"cos(F/2) vanishes at static_flux={self.static_flux}")

    @classmethod
    def from_ghz(cls, e_plus, e_minus, z0, el_cav, static_flux, n_modes=3):
        """Build from energies quoted as E/h in GHz."""
        return cls(e_plus * GHZ, e_minus * GHZ, z0, el_cav * GHZ, static_flux, n_modes)

    @property
    def asymmetry(self) -> float:
        return self.e_minus / self.e_plus

    @property
    def cos_half_flux(self) -> float:
        return math.cos(self.static_flux / 2)

    @property
    def gamma(self) -> float:
        """Participation ratio of the SQUID inductance versus the cavity inductance."""
        return self.el_cav / (2.0 * self.e_plus * self.cos_half_flux)


@dataclass(frozen=True)
class Mode:
    index: int
    kd: float
    omega: float
    beta: float
    residual: float


@dataclass(frozen=True)
class ModeSpectrum:
    gamma: float
    modes: tuple[Mode, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.modes)

    def mode(self, index: int) -> Mode:
        """Mode by its 1-based index."""
        return self.modes[index - 1]

    @property
    def kd(self) -> np.ndarray:
        return np.array([m.kd for m in self.modes])

    @property
    def beta(self) -> np.ndarray:
        return np.array([m.beta for m in self.modes])

    @property
    def omega(self) -> np.ndarray:
        return np.array([m.omega for m in self.modes])

    def mode_near(self, multiple: int) -> Mode:
        """The mode whose frequency lies closest to ``multiple`` times the fundamental.

        For a quarter-wave line the mode near 3 omega_1 is the second
        eigenmode, the one near 5 omega_1 the third.
        """
        target = multiple * self.modes[0].kd
        return min(self.modes, key=lambda m: abs(m.kd - target))


def squid_inductance(phi, f, params: DeviceParams):
    """Differential SQUID inductance relative to its zero-flux value.

    Works elementwise on arrays. Raises DivergentInductance when the
    denominator falls below 1e-12 in magnitude anywhere.
    """
    r = params.asymmetry
    den = np.cos(f / 2) * np.cos(phi) - r * np.sin(f / 2) * np.sin(phi)
    if np.any(np.abs(den) < 1e-12):
        raise DivergentInductance(f"inductance diverges at phi={phi}, f={f}")
    out = 1.0 / den
    return float(out) if np.ndim(out) == 0 else out


def static_phase(params: DeviceParams) -> float:
    half = params.static_flux / 2
    if abs(math.cos(half)) <= FLUX_GUARD:
        raise FluxSingularity(f"tan(F/2) diverges at static_flux={params.static_flux}")
    return math.atan(-params.asymmetry * math.tan(half))


def spectral_residual(kd, gamma):
    return np.abs(kd * np.tan(kd) - 1.0 / gamma)


def _branch_root(n: int, inv_gamma: float) -> float:
    # x sin x - cos x / gamma has the same roots as x tan x - 1/gamma but no poles
    def g(x):
        return x * math.sin(x) - inv_gamma * math.cos(x)

    def dg(x):
        return math.sin(x) + x * math.cos(x) + inv_gamma * math.sin(x)

    lo, hi = (n - 1) * math.pi, (2 * n - 1) * math.pi / 2
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if glo * ghi > 0:
        raise RootBracketFailure(f"no sign change on branch {n}: g({lo})={glo}, g({hi})={ghi}")

    while hi - lo > 1e-6 * hi:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm * glo > 0:
            lo, glo = mid, gm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(50):
        step = g(x) / dg(x)
        x_new = min(max(x - step, lo), hi)
        if abs(x_new - x) <= 1e-16 * x:
            x = x_new
            break
        x = x_new

    # final choice among neighbouring doubles by the residual actually reported
    best, best_res = x, spectral_residual(x, 1.0 / inv_gamma)
    cand = x
    for direction in (-math.inf, math.inf):
        cand = x
        for _ in range(8):
            cand = math.nextafter(cand, direction)
            res = spectral_residual(cand, 1.0 / inv_gamma)
            if res < best_res:
                best, best_res = cand, res
    return best


def coupling(kd, gamma: float, z0: float):
    """Mode-SQUID coupling beta_n = gamma sqrt(8 pi Z0 k_n d / R_K)."""
    return gamma * np.sqrt(8.0 * math.pi * z0 * np.asarray(kd) / R_K)


def solve_spectrum(params: DeviceParams, frequency_scale: float = DEFAULT_FREQUENCY_SCALE,
                   gamma: float | None = None) -> ModeSpectrum:
    """Solve k_n d tan(k_n d) = 1/gamma on each branch.

    Parameters
    ----------
    params : DeviceParams
    frequency_scale : float
        Phase velocity over resonator length, v/d, in rad/s.
    gamma : float, optional
        Override for the participation ratio (useful for limit studies);
        defaults to the value implied by ``params``.
    """
    if gamma is None:
        gamma = params.gamma
    if not 0.0 < gamma < 1.0:
        raise GammaOutOfRange(f"participation ratio {gamma} outside (0, 1)")
    inv_gamma = 1.0 / gamma
    modes = []
    for n in range(1, params.n_modes + 1):
        kd = _branch_root(n, inv_gamma)
        modes.append(Mode(
            index=n,
            kd=kd,
            omega=kd * frequency_scale,
            beta=float(coupling(kd, gamma, params.z0)),
            residual=float(spectral_residual(kd, gamma)),
        ))
    return ModeSpectrum(gamma=gamma, modes=tuple(modes))
