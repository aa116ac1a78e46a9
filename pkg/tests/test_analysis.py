import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from periodmult.analysis import (COEXISTENCE, EXCITED_ONLY, GROUND_ONLY, NO_STABLE,
                                 angular_extents, angular_gaps, circular_spread, classify_region,
                                 detect_clusters, excited_family, multiplet_symmetry_metric,
                                 occupancy_asymmetry, occupancy_by_trajectory,
                                 probe_response_scan, sweep_pump_detuning)
from periodmult.errors import NoClusters, WrongMultiplicity
from periodmult.rwa import RwaModel
from periodmult.stochastic import Histogram2D, NoiseConfig, accumulate_histogram, stable_dt


def blobs(centers, n_each=4000, sigma=0.3, seed=0):
    rng = np.random.default_rng(seed)
    parts = [c + sigma * (rng.normal(size=n_each) + 1j * rng.normal(size=n_each))
             for c in centers]
    return np.concatenate(parts)


def ring(n, radius=3.0, phase=0.0):
    return [radius * cmath.exp(1j * (phase + 2 * math.pi * k / n)) for k in range(n)]


# -- clusters ---------------------------------------------------------------------

def test_single_central_blob():
    rep = detect_clusters(accumulate_histogram(blobs([0j]), 5.0, 101))
    assert len(rep.clusters) == 1 and rep.central_present
    assert rep.clusters[0].weight <= 1


def test_synthetic_quadruplet():
    centers = ring(4, phase=0.3)
    h = accumulate_histogram(blobs(centers), 5.0, 101)
    rep = detect_clusters(h)
    assert len(rep.clusters) == 4 and not rep.central_present
    np.testing.assert_allclose(rep.angular_spacings, math.pi / 2, atol=0.02)
    for c in rep.clusters:
        nearest = min(abs(c.centroid - z) for z in centers)
        assert nearest < 0.5 * h.bin_width
    assert sum(c.weight for c in rep.clusters) <= 1


@given(st.sampled_from([2, 3, 5]), st.floats(0, 2 * math.pi), st.integers(0, 1000))
@settings(max_examples=15)
def test_centroids_recovered(n, phase, seed):
    centers = ring(n, phase=phase)
    h = accumulate_histogram(blobs(centers, seed=seed), 5.0, 101)
    rep = detect_clusters(h)
    assert len(rep.non_central()) == n
    for z in centers:
        assert min(abs(c.centroid - z) for c in rep.clusters) < 0.5 * h.bin_width


def test_multiplet_with_center():
    rep = detect_clusters(accumulate_histogram(blobs([0j] + ring(3)), 5.0, 101))
    assert rep.central_present and len(rep.non_central()) == 3 and len(rep.central()) == 1


def test_no_clusters():
    with pytest.raises(NoClusters):
        detect_clusters(Histogram2D.empty(1.0, 11))
    sparse = accumulate_histogram(np.array([0j, 0.5 + 0.5j]), 1.0, 11)
    with pytest.raises(NoClusters):
        detect_clusters(sparse, min_bins=4)
    with pytest.raises(ValueError):
        detect_clusters(sparse, threshold_fraction=1.0)


# -- symmetry metrics -------------------------------------------------------------

def test_perfect_multiplet_metrics_zero():
    counts = np.zeros((41, 41), dtype=np.int64)
    counts[30:33, 19:22] = [[1, 3, 1], [3, 9, 3], [1, 3, 1]]
    for _ in range(3):
        counts = counts + np.rot90(counts)
    counts = np.where(counts > 0, 9, 0)
    h = Histogram2D(4.0, 41, counts)
    rep = detect_clusters(h)
    m = multiplet_symmetry_metric(rep, 4)
    assert m.spacing_error < 1e-12 and m.radius_spread < 1e-12 and m.weight_spread < 1e-12


def test_missing_cluster():
    rep = detect_clusters(accumulate_histogram(blobs(ring(3)[:2]), 5.0, 101))
    with pytest.raises(WrongMultiplicity):
        multiplet_symmetry_metric(rep, 3)


@given(st.floats(0, 2 * math.pi))
@settings(max_examples=10)
def test_metrics_rotation_invariant(angle):
    base = blobs(ring(5, radius=3.5), seed=1)
    ref = multiplet_symmetry_metric(detect_clusters(accumulate_histogram(base, 5.0, 101)), 5)
    rot = multiplet_symmetry_metric(
        detect_clusters(accumulate_histogram(base * cmath.exp(1j * angle), 5.0, 101)), 5)
    bin_angle = 0.1 / 3.5
    assert abs(rot.spacing_error - ref.spacing_error) < bin_angle
    assert abs(rot.radius_spread - ref.radius_spread) < 0.1 / 3.5
    assert abs(rot.weight_spread - ref.weight_spread) < 0.05


def test_angular_gaps():
    np.testing.assert_allclose(angular_gaps([0.1, 0.1 + math.pi]), [math.pi, math.pi])
    assert angular_gaps([1.0])[0] == pytest.approx(2 * math.pi)
    assert angular_gaps([]).size == 0


# -- occupancies ------------------------------------------------------------------

def test_occupancy_counts_trajectory_fractions():
    states = [1 + 0j, -1 + 0j]
    samples = np.array([[1, 1, -1, 0.0], [-1, -1, -1, -1]], dtype=complex)
    occ = occupancy_by_trajectory(samples, states, ground_radius=0.5)
    np.testing.assert_allclose(occ, [0.5, 1.25])
    assert occupancy_asymmetry(occ) == pytest.approx(0.6)
    assert occupancy_asymmetry([0, 0]) == 0.0
    assert occupancy_asymmetry([3, 3, 3]) == 0.0


def test_circular_spread():
    assert circular_spread(np.zeros(10)) == 0.0
    rng = np.random.default_rng(0)
    small = rng.normal(0, 0.05, 100_000)
    assert circular_spread(small) == pytest.approx(0.05, rel=0.02)
    assert circular_spread(small + 2 * math.pi) == pytest.approx(0.05, rel=0.02)


def test_angular_extents_per_state():
    states = ring(3)
    rng = np.random.default_rng(2)
    z = np.concatenate([s * np.exp(1j * rng.normal(0, w, 20_000))
                        for s, w in zip(states, (0.02, 0.05, 0.1))])
    np.testing.assert_allclose(angular_extents(z, states, 1.0), [0.02, 0.05, 0.1], rtol=0.03)


# -- probe response ------------------------------------------------------------------

PROBE_MODEL = RwaModel(3, -1.0, 1.0, 0.1, 0.6)


def test_excited_family():
    fam = excited_family(PROBE_MODEL)
    assert len(fam) == 3
    assert all(p.stability == "stable" for p in fam)
    assert excited_family(RwaModel(3, 0, 1, 0.1, 0.0)) == []


def test_probe_scan_unprobed_symmetric_then_locked():
    pts = probe_response_scan(PROBE_MODEL, NoiseConfig(seed=7), [0.0, 1.6], 0.0, n_traj=600,
                              t_total=40.0, dt=min(stable_dt(PROBE_MODEL), 0.01),
                              t_transient=20.0, stride=100)
    occ0 = pts[0].occupancies
    assert np.all(np.abs(occ0 - occ0.mean()) < 3 * np.sqrt(occ0.mean()))
    occ1 = pts[1].occupancies
    assert occ1.max() > 0.95 * occ1.sum()
    assert pts[1].asymmetry > pts[0].asymmetry


def test_probe_scan_needs_excited_states():
    with pytest.raises(ValueError):
        probe_response_scan(RwaModel(3, 0, 1, 0.1, 0.0), NoiseConfig(), [0.0], 0.0)


# -- sweeps -----------------------------------------------------------------------

def test_sweep_zero_pump_row():
    d = sweep_pump_detuning(RwaModel(3, 0, 1.0, 0.3, 1.0), [0.0], np.linspace(-3, 3, 7))
    assert np.all(d.regions == GROUND_ONLY) and np.all(d.n_stable == 1)


def test_sweep_n2_resonant_column():
    eps = np.linspace(0.0, 3.0, 301)
    d = sweep_pump_detuning(RwaModel(2, 0, 1.0, 0.3, 1.0), eps, [0.0])
    row = d.regions[0]
    assert np.all(row[eps < 1.0 - 1e-9] == GROUND_ONLY)
    assert np.all(row[eps > 1.0 + 1e-9] == EXCITED_ONLY)
    assert np.all(d.n_stable[0][eps > 1.0 + 1e-9] == 2)


def test_sweep_n2_threshold_curve():
    eps = np.linspace(0.0, 4.0, 41)
    delta = np.linspace(-3.0, 3.0, 31)
    d = sweep_pump_detuning(RwaModel(2, 0, 0.5, 0.3, 1.0), eps, delta)
    step = eps[1] - eps[0]
    for i, dl in enumerate(delta):
        th = math.hypot(dl, 0.5)
        for j, e in enumerate(eps):
            ground = d.regions[i, j] in (GROUND_ONLY, COEXISTENCE)
            if abs(e - th) > step:
                assert ground == (e < th)


def test_sweep_n3_never_excited_only():
    eps = np.linspace(0.0, 6.0, 25)
    delta = np.linspace(-4.0, 4.0, 17)
    m = RwaModel(3, 0, 1.0, 0.25, 1.0)
    d = sweep_pump_detuning(m, eps, delta)
    assert not np.any(d.regions == EXCITED_ONLY)
    assert not np.any(d.regions == NO_STABLE)
    assert np.any(d.regions == COEXISTENCE) and np.any(d.regions == GROUND_ONLY)
    for i, dl in enumerate(delta):
        for j, e in enumerate(eps):
            cell = RwaModel(3, dl, 1.0, 0.25, e)
            assert d.regions[i, j] == classify_region(cell)[0]


def test_sweep_keeps_pump_phase_and_rejects_empty():
    m = RwaModel(3, 0, 1.0, 0.25, cmath.rect(1.0, 0.7))
    d = sweep_pump_detuning(m, [3.0], [0.0])
    assert d.regions[0, 0] == classify_region(RwaModel(3, 0, 1.0, 0.25, cmath.rect(3.0, 0.7)))[0]
    with pytest.raises(ValueError):
        sweep_pump_detuning(m, [], [0.0])
