"""Signatures extracted from simulated IQ data: clusters, multiplet symmetry,
probe response and stability diagrams."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .dynamics import STABLE, find_fixed_points
from .errors import NoClusters, WrongMultiplicity
from .rwa import ProbeConfig, RwaModel
from .stochastic import (Histogram2D, NoiseConfig, accumulate_histogram, auto_extent,
                         readout_rng, sample_output_quadratures, simulate_ensemble)

GROUND_ONLY, COEXISTENCE, EXCITED_ONLY, NO_STABLE = 0, 1, 2, 3
REGION_NAMES = {GROUND_ONLY: "ground only", COEXISTENCE: "coexistence",
                EXCITED_ONLY: "excited only", NO_STABLE: "no stable state"}


@dataclass(frozen=True)
class Cluster:
    centroid: complex  # I + iQ
    weight: float
    rms_radius: float
    n_bins: int


@dataclass(frozen=True)
class ClusterReport:
    clusters: tuple[Cluster, ...]
    central_present: bool
    angular_spacings: np.ndarray
    central_radius: float

    def non_central(self) -> list[Cluster]:
        return [c for c in self.clusters if abs(c.centroid) > self.central_radius]

    def central(self) -> list[Cluster]:
        return [c for c in self.clusters if abs(c.centroid) <= self.central_radius]


def angular_gaps(angles) -> np.ndarray:
    """Sorted gaps between consecutive angles around the circle."""
    ang = np.sort(np.mod(np.asarray(angles, dtype=float), 2 * np.pi))
    if ang.size < 2:
        return np.array([2 * np.pi]) if ang.size else np.array([])
    gaps = np.diff(np.append(ang, ang[0] + 2 * np.pi))
    return np.sort(gaps)


def detect_clusters(h: Histogram2D, threshold_fraction: float = 0.2, min_bins: int = 4,
                    central_radius: float | None = None) -> ClusterReport:
    """Connected bright regions of an IQ histogram.

    Bins above ``threshold_fraction`` of the peak count are grouped into
    8-connected components; components with fewer than ``min_bins`` bins are
    dropped. ``central_radius`` (default: 10% of the extent) decides which
    clusters count as the ground-state spot.
    """
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold_fraction must lie in (0, 1)")
    total = h.total
    if total == 0:
        raise NoClusters("histogram is empty")
    if central_radius is None:
        central_radius = 0.1 * h.extent
    mask = h.counts > threshold_fraction * h.counts.max()
    labels, n_comp = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    centers = h.centers
    grid_i, grid_q = np.meshgrid(centers, centers, indexing="ij")
    clusters = []
    for k in range(1, n_comp + 1):
        sel = labels == k
        n_bins = int(sel.sum())
        if n_bins < min_bins:
            continue
        w = h.counts[sel].astype(float)
        z = grid_i[sel] + 1j * grid_q[sel]
        mass = w.sum()
        centroid = complex((w * z).sum() / mass)
        rms = math.sqrt(float((w * np.abs(z - centroid) ** 2).sum() / mass))
        clusters.append(Cluster(centroid, float(mass / total), rms, n_bins))
    if not clusters:
        raise NoClusters("no component survives the threshold and size floor")
    clusters.sort(key=lambda c: (abs(c.centroid), cmath.phase(c.centroid)))
    outer = [c.centroid for c in clusters if abs(c.centroid) > central_radius]
    return ClusterReport(
        clusters=tuple(clusters),
        central_present=len(outer) < len(clusters),
        angular_spacings=angular_gaps([cmath.phase(z) for z in outer]),
        central_radius=float(central_radius),
    )


@dataclass(frozen=True)
class SymmetryMetrics:
    spacing_error: float
    radius_spread: float
    weight_spread: float


def multiplet_symmetry_metric(report: ClusterReport, n: int) -> SymmetryMetrics:
    outer = report.non_central()
    if len(outer) != n:
        raise WrongMultiplicity(f"expected {n} non-central clusters, found {len(outer)}")
    gaps = angular_gaps([cmath.phase(c.centroid) for c in outer])
    radii = np.array([abs(c.centroid) for c in outer])
    weights = np.array([c.weight for c in outer])
    return SymmetryMetrics(
        spacing_error=float(np.max(np.abs(gaps - 2 * np.pi / n))),
        radius_spread=float((radii.max() - radii.min()) / radii.mean()),
        weight_spread=float((weights.max() - weights.min()) / weights.mean()),
    )


def excited_family(model: RwaModel) -> list:
    """Stable members of the largest-amplitude stable nontrivial family."""
    pts = [p for p in find_fixed_points(model) if p.family >= 0 and p.stability == STABLE]
    if not pts:
        return []
    r_top = max(p.r for p in pts)
    return sorted((p for p in pts if abs(p.r - r_top) <= 1e-9 * r_top), key=lambda p: p.theta)


def occupancy_by_trajectory(samples: np.ndarray, states, ground_radius: float) -> np.ndarray:
    """Trajectory-weighted occupancy of each state.

    Each trajectory (row of ``samples``) contributes the fraction of its
    samples nearest to each state; samples inside ``ground_radius`` count
    for none of them.
    """
    st = np.asarray(states, dtype=complex)
    z = np.asarray(samples)
    dist = np.abs(z[..., None] - st)
    nearest = np.argmin(dist, axis=-1)
    excited = np.abs(z) > ground_radius
    occ = np.zeros(len(st))
    for k in range(len(st)):
        occ[k] = ((nearest == k) & excited).mean(axis=1).sum()
    return occ


def occupancy_asymmetry(occ) -> float:
    occ = np.asarray(occ, dtype=float)
    if occ.max() == 0:
        return 0.0
    return float(1 - occ.min() / occ.max())


def circular_spread(angles, weights=None, about: float = 0.0) -> float:
    """Weighted circular standard deviation sqrt(-2 ln R)."""
    w = np.ones(len(angles)) if weights is None else np.asarray(weights, dtype=float)
    if w.sum() == 0:
        return float("nan")
    mean_vec = np.sum(w * np.exp(1j * (np.asarray(angles) - about))) / w.sum()
    return math.sqrt(max(0.0, -2 * math.log(max(abs(mean_vec), 1e-300))))


def angular_extents(samples: np.ndarray, states, ground_radius: float) -> np.ndarray:
    """Azimuthal spread about the origin of the samples attached to each state."""
    z = np.asarray(samples).ravel()
    st = np.asarray(states, dtype=complex)
    z = z[np.abs(z) > ground_radius]
    nearest = np.argmin(np.abs(z[:, None] - st[None, :]), axis=1)
    return np.array([circular_spread(np.angle(z[nearest == k]), about=float(np.angle(st[k])))
                     for k in range(len(st))])


@dataclass(frozen=True)
class ProbeScanPoint:
    amplitude: float
    occupancies: np.ndarray
    asymmetry: float
    asymmetry_sigma: float
    angular_extent: float
    angular_extent_sigma: float
    extents: np.ndarray
    histogram: Histogram2D
    report: ClusterReport | None


def _ratio_sigma(occ: np.ndarray) -> float:
    lo, hi = occ.min(), occ.max()
    if hi == 0:
        return 0.0
    if lo == 0:
        return 1.0 / hi
    return (lo / hi) * math.sqrt(1 / lo + 1 / hi)


def probe_response_scan(model: RwaModel, noise: NoiseConfig, amplitudes, detuning: float,
                        n_traj: int = 500, t_total: float = 100.0, dt: float = 0.01,
                        t_transient: float = 20.0, stride: int = 100, probe_phase: float = 0.0,
                        gain: float = 1.0, bins: int = 101, extent: float | None = None,
                        n_batches: int = 10, workers: int = 1) -> list[ProbeScanPoint]:
    """Simulate the multiplet under a probe of increasing strength.

    Occupancies and angular extents refer to the stable excited family of
    the unprobed model. Times are in the model's units.
    """
    base = replace(model, probe=None)
    family = excited_family(base)
    if not family:
        raise ValueError("unprobed model has no stable excited family")
    states = np.array([p.a for p in family])
    ground_radius = 0.5 * family[0].r
    if extent is None:
        extent = auto_extent([family[0].r], base, noise, gain)
    out = []
    for amp in amplitudes:
        probed = replace(base, probe=ProbeConfig(amp * cmath.exp(1j * probe_phase), detuning))
        ens = simulate_ensemble(probed, noise, n_traj, t_total, dt, t_transient, stride,
                                workers=workers)
        kept = ens.samples[~ens.diverged]
        occ = occupancy_by_trajectory(kept, states, ground_radius)
        ext = angular_extents(kept, states, ground_radius)
        batch_ext = [np.nanmean(angular_extents(part, states, ground_radius))
                     for part in np.array_split(kept, n_batches) if len(part)]
        i_vals, q_vals = sample_output_quadratures(kept.ravel(), probed, noise, gain,
                                                   readout_rng(noise.seed))
        hist = accumulate_histogram((i_vals, q_vals), extent, bins)
        try:
            report = detect_clusters(hist)
        except NoClusters:
            report = None
        out.append(ProbeScanPoint(
            amplitude=float(amp),
            occupancies=occ,
            asymmetry=occupancy_asymmetry(occ),
            asymmetry_sigma=_ratio_sigma(occ),
            angular_extent=float(np.nanmean(ext)),
            angular_extent_sigma=float(np.std(batch_ext) / math.sqrt(len(batch_ext))),
            extents=ext,
            histogram=hist,
            report=report,
        ))
    return out


@dataclass(frozen=True)
class StabilityDiagram:
    eps: np.ndarray
    delta: np.ndarray
    regions: np.ndarray  # (len(delta), len(eps))
    n_stable: np.ndarray


def classify_region(model: RwaModel) -> tuple[int, int]:
    points = find_fixed_points(model)
    ground = points[0].stability == STABLE
    excited = sum(1 for p in points[1:] if p.stability == STABLE)
    if ground and excited:
        code = COEXISTENCE
    elif ground:
        code = GROUND_ONLY
    elif excited:
        code = EXCITED_ONLY
    else:
        code = NO_STABLE
    return code, int(ground) + excited


def sweep_pump_detuning(model: RwaModel, eps_values, delta_values) -> StabilityDiagram:
    """Region label and stable-state count on a pump x detuning grid.

    ``eps_values`` are pump magnitudes (the phase of ``model.epsilon`` is
    kept) or complex coefficients.
    """
    eps_values = np.asarray(eps_values)
    delta_values = np.asarray(delta_values, dtype=float)
    if eps_values.size == 0 or delta_values.size == 0:
        raise ValueError("sweep grids must be non-empty")
    phase = cmath.exp(1j * cmath.phase(model.epsilon)) if model.epsilon != 0 else 1.0
    regions = np.empty((delta_values.size, eps_values.size), dtype=np.int64)
    counts = np.empty_like(regions)
    for i, d in enumerate(delta_values):
        for j, e in enumerate(eps_values):
            eps = complex(e) if np.iscomplexobj(eps_values) else float(e) * phase
            cell = replace(model, delta=float(d), epsilon=eps, probe=None)
            regions[i, j], counts[i, j] = classify_region(cell)
    return StabilityDiagram(eps_values, delta_values, regions, counts)
