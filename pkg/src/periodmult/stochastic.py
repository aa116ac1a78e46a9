"""Langevin simulation of the slow-amplitude equation, quadrature readout,
IQ histograms and switching statistics.

Noise model: additive complex white noise with increment variance
2 Gamma1 (n_th + 1/2) dt, so the undriven linear oscillator relaxes to
<|a|^2> = n_th + 1/2. Every trajectory draws from its own Philox substream
keyed by (seed, trajectory index), which makes ensembles bit-reproducible
regardless of how they are split into blocks or workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._em import em_chunk
from .dynamics import _kernel_args
from .errors import IncompatibleHistograms, IoFailure, StepTooLarge
from .rwa import RwaModel, eom_rhs

CHUNK = 256
BLOCK = 512
TRANSIT = -1


@dataclass(frozen=True)
class NoiseConfig:
    """Thermal occupation, seed and readout noise.

    ``langevin_scale`` multiplies the Langevin term; 0 gives the
    deterministic Euler scheme.
    """

    n_th: float = 0.0
    seed: int = 0
    measurement_sigma: float = 0.0
    langevin_scale: float = 1.0

    def __post_init__(self):
        if not self.n_th >= 0:
            raise ValueError(f"n_th must be >= 0, got {self.n_th}")
        if not self.measurement_sigma >= 0:
            raise ValueError(f"measurement_sigma must be >= 0, got {self.measurement_sigma}")
        if not self.langevin_scale >= 0:
            raise ValueError("langevin_scale must be >= 0")


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0, index))))


def readout_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(1,))))


def noise_amplitude(model: RwaModel, noise: NoiseConfig, dt: float) -> float:
    return noise.langevin_scale * math.sqrt(2 * model.gamma1 * (noise.n_th + 0.5) * dt)


def _check_dt(model: RwaModel, dt: float):
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if dt * model.gamma1 >= 0.1:
        raise StepTooLarge(f"dt*Gamma1 = {dt * model.gamma1:.3g} >= 0.1")


def sde_step(a, dt: float, model: RwaModel, noise: NoiseConfig, rng: np.random.Generator,
             t: float = 0.0):
    """One Euler-Maruyama step; works on scalars or arrays of amplitudes."""
    _check_dt(model, dt)
    xi = rng.standard_normal(np.shape(a) + (2,))
    dw = noise_amplitude(model, noise, dt) * (xi[..., 0] + 1j * xi[..., 1]) / math.sqrt(2)
    out = a + eom_rhs(a, t, model) * dt + dw
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Ensemble:
    times: np.ndarray
    samples: np.ndarray  # (n_traj, n_times)
    diverged: np.ndarray  # (n_traj,) bool

    @property
    def n_traj(self) -> int:
        return self.samples.shape[0]

    def flat(self) -> np.ndarray:
        return self.samples[~self.diverged].ravel()


def _run_block(args):
    (model, noise, start, stop, n_steps, dt, record, a0, kick, kick_phases,
     escape_radius) = args
    kargs = _kernel_args(model)
    amp = noise_amplitude(model, noise, dt)
    gens = [trajectory_rng(noise.seed, i) for i in range(start, stop)]
    size = stop - start
    a = np.array(a0[start:stop], dtype=np.complex128)
    if kick:
        if kick_phases is None:
            phases = 2 * np.pi * np.array([g.random() for g in gens])
        else:
            phases = np.array([kick_phases[g.integers(len(kick_phases))] for g in gens])
        a += kick * np.exp(1j * phases)
    alive = np.ones(size, dtype=np.bool_)
    out = np.empty((size, len(record)), dtype=np.complex128)
    rec_pos = 0
    xi = np.empty((size, CHUNK, 2))
    path = np.empty((size, CHUNK), dtype=np.complex128)
    for c0 in range(0, n_steps, CHUNK):
        c = min(CHUNK, n_steps - c0)
        for b, g in enumerate(gens):
            xi[b, :c] = g.standard_normal((c, 2))
        em_chunk(a, alive, c0 * dt, dt, xi[:, :c], amp, *kargs, escape_radius, path[:, :c])
        # step k (1-based) ends at time k*dt
        while rec_pos < len(record) and record[rec_pos] <= c0 + c:
            out[:, rec_pos] = path[:, record[rec_pos] - c0 - 1]
            rec_pos += 1
    return out, ~alive


def simulate_ensemble(model: RwaModel, noise: NoiseConfig, n_traj: int, t_total: float,
                      dt: float, t_transient: float = 0.0, stride: int = 1, a0=0j,
                      kick: float = 0.0, kick_phases=None, escape_radius: float = 0.0,
                      workers: int = 1) -> Ensemble:
    """Independent Langevin trajectories started from ``a0`` (default origin).

    Samples after ``t_transient`` are kept every ``stride`` steps. A nonzero
    ``kick`` displaces each start by ``kick`` in a direction drawn uniformly
    from the trajectory's own substream, either from the full circle or from
    ``kick_phases`` (to seed specific basins). With ``escape_radius > 0``
    trajectories that leave that radius are frozen and marked diverged.
    """
    if not t_transient < t_total:
        raise ValueError("t_transient must be smaller than t_total")
    _check_dt(model, dt)
    n_steps = int(round(t_total / dt))
    first = max(1, int(math.ceil(t_transient / dt - 1e-9)))
    record = np.arange(first, n_steps + 1, stride)
    times = record * dt
    if n_traj == 0:
        return Ensemble(times, np.empty((0, len(record)), complex), np.empty(0, bool))
    a0 = np.broadcast_to(np.asarray(a0, dtype=np.complex128), (n_traj,))
    if kick_phases is not None:
        kick_phases = np.asarray(kick_phases, dtype=float)
    jobs = [(model, noise, s, min(s + BLOCK, n_traj), n_steps, dt, record, a0, kick,
             kick_phases, escape_radius)
            for s in range(0, n_traj, BLOCK)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(j) for j in jobs]
    samples = np.concatenate([p[0] for p in parts])
    diverged = np.concatenate([p[1] for p in parts])
    return Ensemble(times, samples, diverged)


def output_scale(model: RwaModel, gain: float) -> float:
    return gain * math.sqrt(2 * model.gamma1)


def sample_output_quadratures(a, model: RwaModel, noise: NoiseConfig, gain: float = 1.0,
                              rng: np.random.Generator | None = None):
    """I + iQ = g sqrt(2 Gamma1) a + measurement_sigma (eta1 + i eta2)."""
    if not gain > 0:
        raise ValueError(f"gain must be positive, got {gain}")
    field_out = output_scale(model, gain) * np.asarray(a, dtype=np.complex128)
    if noise.measurement_sigma > 0:
        if rng is None:
            rng = readout_rng(noise.seed)
        eta = rng.standard_normal(field_out.shape + (2,))
        field_out = field_out + noise.measurement_sigma * (eta[..., 0] + 1j * eta[..., 1])
    if field_out.ndim == 0:
        return float(field_out.real), float(field_out.imag)
    return field_out.real, field_out.imag


@dataclass(frozen=True)
class Histogram2D:
    """Square IQ histogram on [-extent, extent]^2; counts[i, j] is I-bin i, Q-bin j."""

    extent: float
    bins: int
    counts: np.ndarray
    discards: int = 0

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def bin_width(self) -> float:
        return 2 * self.extent / self.bins

    @property
    def centers(self) -> np.ndarray:
        return -self.extent + (np.arange(self.bins) + 0.5) * self.bin_width

    def __eq__(self, other):
        if not isinstance(other, Histogram2D):
            return NotImplemented
        return (self.extent == other.extent and self.bins == other.bins
                and self.discards == other.discards and np.array_equal(self.counts, other.counts))

    @classmethod
    def empty(cls, extent: float, bins: int) -> Histogram2D:
        return cls(float(extent), int(bins), np.zeros((bins, bins), dtype=np.int64), 0)


def accumulate_histogram(samples, extent: float, bins: int = 101) -> Histogram2D:
    """Bin complex samples (I + iQ), or an (I, Q) pair of arrays."""
    if isinstance(samples, tuple):
        i_vals, q_vals = (np.asarray(s, dtype=float).ravel() for s in samples)
    else:
        z = np.asarray(samples, dtype=np.complex128).ravel()
        i_vals, q_vals = z.real, z.imag
    if not extent > 0 or bins < 1:
        raise ValueError("histogram needs extent > 0 and bins >= 1")
    inside = (np.abs(i_vals) <= extent) & (np.abs(q_vals) <= extent)
    counts, _, _ = np.histogram2d(i_vals[inside], q_vals[inside], bins=bins,
                                  range=[[-extent, extent], [-extent, extent]])
    return Histogram2D(float(extent), int(bins), counts.astype(np.int64),
                       int(inside.size - inside.sum()))


def merge_histograms(h1: Histogram2D, h2: Histogram2D) -> Histogram2D:
    if h1.extent != h2.extent or h1.bins != h2.bins:
        raise IncompatibleHistograms(
            f"cannot merge extent/bins {h1.extent}/{h1.bins} with {h2.extent}/{h2.bins}")
    return Histogram2D(h1.extent, h1.bins, h1.counts + h2.counts, h1.discards + h2.discards)


def auto_extent(radii, model: RwaModel, noise: NoiseConfig, gain: float = 1.0) -> float:
    """1.5x the largest output radius among ``radii`` (amplitudes), with a
    noise-based floor for the ground-state-only case."""
    scale = output_scale(model, gain)
    r_max = max([0.0, *radii]) * scale
    floor = 4 * (scale * math.sqrt(noise.n_th + 0.5) + noise.measurement_sigma)
    return max(1.5 * r_max, floor)


# -- grid text format -------------------------------------------------------

def write_grid(path, counts: np.ndarray, header: dict):
    head = " ".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in header.items())
    lines = ["# " + head]
    lines += [" ".join(str(int(v)) for v in row) for row in np.asarray(counts)]
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_grid(path) -> tuple[np.ndarray, dict]:
    try:
        with open(path) as fh:
            text = fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    header = {}
    for token in text[0].lstrip("#").split():
        key, _, value = token.partition("=")
        header[key] = value
    counts = np.array([[int(v) for v in line.split()] for line in text[1:] if line.strip()],
                      dtype=np.int64)
    return counts, header


def write_histogram(path, hist: Histogram2D):
    write_grid(path, hist.counts, {"extent": float(hist.extent), "bins": hist.bins,
                                   "total": hist.total, "discards": hist.discards})


def read_histogram(path) -> Histogram2D:
    counts, header = read_grid(path)
    bins = int(header["bins"])
    if counts.shape != (bins, bins):
        raise IoFailure(f"{path}: expected {bins}x{bins} counts, found {counts.shape}")
    hist = Histogram2D(float(header["extent"]), bins, counts, int(header["discards"]))
    if hist.total != int(header["total"]):
        raise IoFailure(f"{path}: header total {header['total']} != sum {hist.total}")
    return hist


def write_samples_csv(path, traj, t, i_vals, q_vals, labels):
    rows = ["traj,t,I,Q,state_label"]
    for k, tt, ii, qq, ll in zip(traj, t, i_vals, q_vals, labels):
        rows.append(f"{int(k)},{float(tt)!r},{float(ii)!r},{float(qq)!r},{int(ll)}")
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(rows) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_samples_csv(path):
    """Returns (traj, t, I, Q, state_label) arrays."""
    try:
        data = np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding=None)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    data = np.atleast_1d(data)
    return (data["traj"].astype(np.int64), data["t"].astype(float), data["I"].astype(float),
            data["Q"].astype(float), data["state_label"].astype(np.int64))


# -- switching ----------------------------------------------------------------

def label_states(samples, states, capture_radius: float) -> np.ndarray:
    """Index of the nearest state within ``capture_radius``, else TRANSIT."""
    z = np.asarray(samples, dtype=np.complex128).ravel()
    st = np.asarray(states, dtype=np.complex128).ravel()
    if st.size == 0:
        return np.full(z.shape, TRANSIT)
    dist = np.abs(z[:, None] - st[None, :])
    nearest = np.argmin(dist, axis=1)
    return np.where(dist[np.arange(z.size), nearest] < capture_radius, nearest, TRANSIT)


@dataclass
class SwitchingStats:
    labels: np.ndarray
    transitions: np.ndarray  # (k, k), row = from
    dwell_times: list[list[float]] = field(default_factory=list)

    @property
    def departures(self) -> np.ndarray:
        return self.transitions.sum(axis=1)

    @property
    def arrivals(self) -> np.ndarray:
        return self.transitions.sum(axis=0)

    @property
    def total_transitions(self) -> int:
        return int(self.transitions.sum())


def switching_statistics(samples, states, capture_radius: float, dt: float = 1.0) -> SwitchingStats:
    """Dwell times and state-to-state transition counts for one sample stream.

    Transit samples are skipped when counting transitions, so a path
    A -> transit -> B counts as one A->B transition and A -> transit -> A as
    none. Dwell times are contiguous residence runs times ``dt``.
    """
    if capture_radius <= 0:
        raise ValueError("capture_radius must be positive")
    k = len(states)
    labels = label_states(samples, states, capture_radius)
    transitions = np.zeros((k, k), dtype=np.int64)
    dwell: list[list[float]] = [[] for _ in range(k)]
    prev_state = TRANSIT
    run_state, run_len = TRANSIT, 0
    for lab in labels:
        if lab == run_state:
            run_len += 1
        else:
            if run_state != TRANSIT:
                dwell[run_state].append(run_len * dt)
            run_state, run_len = lab, 1
        if lab != TRANSIT:
            if prev_state != TRANSIT and lab != prev_state:
                transitions[prev_state, lab] += 1
            prev_state = lab
    if run_state != TRANSIT:
        dwell[run_state].append(run_len * dt)
    return SwitchingStats(labels, transitions, dwell)


def stable_dt(model: RwaModel, points=None, accuracy: float = 0.1) -> float:
    """Euler-Maruyama step keeping the scheme's spurious anti-damping,
    |lambda|^2 dt / 2 for a linearization eigenvalue lambda, below
    ``accuracy`` times the damping at every stable fixed point."""
    from .dynamics import STABLE, find_fixed_points

    if points is None:
        points = find_fixed_points(model)
    dt = 0.05 / model.gamma1
    for p in points:
        if p.stability == STABLE:
            lam = max(abs(e) for e in p.eigenvalues)
            rate = min(-e.real for e in p.eigenvalues)
            dt = min(dt, 2 * accuracy * rate / lam**2)
    return dt
