"""Command-line entry point.

    periodmult COMMAND [--config PATH] [--set section.key=value ...] [--out DIR] [--seed N]

Every command writes its tables into the output directory together with
``manifest.toml``, which echoes the fully resolved configuration and seed.
Feeding the manifest back as ``--config`` reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import replace

import numpy as np
import tomli_w

from . import __version__, config
from .analysis import (REGION_NAMES, detect_clusters, excited_family, probe_response_scan,
                       sweep_pump_detuning)
from .device import GHZ, MHZ, solve_spectrum
from .dynamics import (STABLE, basin_sample, existence_boundary, find_fixed_points,
                       threshold_n2)
from .errors import (CommandUnknown, ConfigInvalid, IoFailure, NoClusters, PeriodMultError)
from .rwa import RwaModel, build_model, duffing_coefficient, pump_coefficient
from .stochastic import (accumulate_histogram, auto_extent, label_states, readout_rng,
                         sample_output_quadratures, simulate_ensemble, stable_dt,
                         switching_statistics, write_grid, write_histogram, write_samples_csv)

COMMANDS = ("spectrum", "coeffs", "fixed-points", "basins", "simulate", "histogram", "sweep",
            "probe-scan", "config-template")

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


# -- helpers ----------------------------------------------------------------

def _write_csv(path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _physical_model(cfg: config.RunConfig) -> RwaModel:
    """Model in rad/s, without probe."""
    pump = cfg.pump_config()
    if cfg.model.source == "direct":
        m = cfg.model
        eps = m.eps_mhz * MHZ * complex(math.cos(m.eps_phase), math.sin(m.eps_phase))
        return RwaModel(pump.n, pump.delta, cfg.gamma1, m.alpha_mhz * MHZ, eps)
    params = cfg.device_params()
    spectrum = solve_spectrum(params, cfg.frequency_scale)
    return build_model(params, spectrum, pump, cfg.gamma1, cfg.higher_mode_config(),
                       flux_factor=cfg.pump.flux_factor)


def scaled_model(cfg: config.RunConfig, probe: bool = True) -> RwaModel:
    """Model in units of Gamma1, with the configured probe attached."""
    model = _physical_model(cfg).scaled(cfg.gamma1)
    return replace(model, probe=cfg.probe_config() if probe else None)


def _step(interval: float, dt_max: float) -> tuple[float, int]:
    """Largest dt <= dt_max dividing ``interval`` evenly, and the stride."""
    stride = max(1, math.ceil(interval / dt_max - 1e-9))
    return interval / stride, stride


def _stable_states(model: RwaModel):
    return [p for p in find_fixed_points(replace(model, probe=None)) if p.stability == STABLE]


def _simulate(cfg: config.RunConfig):
    model = scaled_model(cfg)
    noise = cfg.noise_config()
    s = cfg.simulation
    states = _stable_states(model)
    dt_max = s.dt if s.dt > 0 else min(stable_dt(replace(model, probe=None)), 0.05)
    dt, stride = _step(s.sample_interval, dt_max)
    r_max = max([p.r for p in states] + [math.sqrt(noise.n_th + 0.5)])
    kick, phases = s.kick, None
    if s.kick_to_family:
        family = excited_family(replace(model, probe=None))
        if not family:
            raise ConfigInvalid("simulation.kick_to_family: model has no stable excited states")
        kick = kick or family[0].r
        phases = [p.theta for p in family]
    ens = simulate_ensemble(model, noise, s.n_traj, s.t_total, dt, s.t_transient, stride,
                            kick=kick, kick_phases=phases,
                            escape_radius=s.escape_factor * r_max, workers=s.workers)
    h = cfg.histogram
    extent = h.extent or auto_extent([p.r for p in states], model, noise, h.gain)
    kept = np.flatnonzero(~ens.diverged)
    i_vals, q_vals = sample_output_quadratures(ens.samples[kept].ravel(), model, noise, h.gain,
                                               readout_rng(noise.seed))
    hist = accumulate_histogram((i_vals, q_vals), extent, h.bins)
    return model, ens, kept, states, (i_vals, q_vals), hist, dt * stride


def _capture_radius(states) -> float:
    pts = np.array([p.a for p in states])
    if len(pts) < 2:
        return max(0.5 * abs(pts[0]), 1.0) if len(pts) else 1.0
    gaps = np.abs(pts[:, None] - pts[None, :])
    return 0.4 * float(gaps[gaps > 0].min())


# -- commands ---------------------------------------------------------------

def cmd_spectrum(cfg, out):
    spectrum = solve_spectrum(cfg.device_params(), cfg.frequency_scale)
    rows = [(m.index, m.kd, m.omega, m.beta, m.residual) for m in spectrum.modes]
    _write_csv(os.path.join(out, "modes.csv"), ("n", "kd", "omega", "beta", "residual"), rows)
    return ["modes.csv"]


def cmd_coeffs(cfg, out):
    model = _physical_model(cfg)
    rows = []
    if cfg.model.source == "device":
        params = cfg.device_params()
        spectrum = solve_spectrum(params, cfg.frequency_scale)
        pump = cfg.pump_config()
        eps = pump_coefficient(params, spectrum, pump, cfg.higher_mode_config(), cfg.pump.flux_factor)
        rows += [
            ("gamma", params.gamma, 0.0, "1"),
            ("kd_1", spectrum.mode(1).kd, 0.0, "1"),
            ("beta_1", spectrum.mode(1).beta, 0.0, "1"),
            (f"beta_near_{pump.n}", spectrum.mode_near(pump.n).beta, 0.0, "1"),
            ("omega_1", spectrum.mode(1).omega / GHZ, 0.0, "GHz"),
            ("alpha", duffing_coefficient(params, spectrum) / MHZ, 0.0, "MHz"),
            ("epsilon", eps.real / MHZ, eps.imag / MHZ, "MHz"),
        ]
    else:
        rows += [("alpha", model.alpha / MHZ, 0.0, "MHz"),
                 ("epsilon", model.epsilon.real / MHZ, model.epsilon.imag / MHZ, "MHz")]
    unit = cfg.gamma1
    scaled = model.scaled(unit)
    rows += [
        ("delta", model.delta / MHZ, 0.0, "MHz"),
        ("gamma1", model.gamma1 / MHZ, 0.0, "MHz"),
        ("alpha_over_gamma1", scaled.alpha, 0.0, "1"),
        ("epsilon_over_gamma1", scaled.epsilon.real, scaled.epsilon.imag, "1"),
        ("delta_over_gamma1", scaled.delta, 0.0, "1"),
        ("existence_boundary_over_gamma1", existence_boundary(scaled), 0.0, "1"),
    ]
    if model.n == 2:
        rows.append(("threshold_over_gamma1", threshold_n2(scaled.gamma1, scaled.delta), 0.0, "1"))
    _write_csv(os.path.join(out, "coeffs.csv"), ("quantity", "real", "imag", "unit"), rows)
    return ["coeffs.csv"]


def cmd_fixed_points(cfg, out):
    model = scaled_model(cfg, probe=False)
    rows = []
    for p in find_fixed_points(model):
        (e1, e2) = p.eigenvalues
        rows.append((p.family, p.r, p.theta, p.stability, p.residual, p.a.real, p.a.imag,
                     e1.real, e1.imag, e2.real, e2.imag))
    _write_csv(os.path.join(out, "fixed_points.csv"),
               ("family", "r", "theta", "stability", "residual", "re_a", "im_a",
                "eig1_re", "eig1_im", "eig2_re", "eig2_im"), rows)
    return ["fixed_points.csv"]


def cmd_basins(cfg, out):
    model = scaled_model(cfg, probe=False)
    b = cfg.basins
    extent = b.extent
    if extent == 0:
        extent = 1.5 * max([p.r for p in find_fixed_points(model)] + [1.0])
    bmap = basin_sample(model, extent, b.resolution, b.capture_radius, b.t_cap, workers=b.workers)
    rows = [(ix, iy, x, y, int(bmap.labels[iy, ix]))
            for iy, y in enumerate(bmap.y) for ix, x in enumerate(bmap.x)]
    _write_csv(os.path.join(out, "basins.csv"), ("ix", "iy", "x", "y", "label"), rows)
    shares = bmap.shares()
    _write_csv(os.path.join(out, "attractors.csv"), ("label", "r", "theta", "share"),
               [(k, p.r, p.theta, shares[k]) for k, p in enumerate(bmap.attractors)])
    return ["basins.csv", "attractors.csv"]


def cmd_simulate(cfg, out):
    model, ens, kept, states, (i_vals, q_vals), hist, t_sample = _simulate(cfg)
    files = ["histogram.txt", "switching.csv"]
    write_histogram(os.path.join(out, "histogram.txt"), hist)
    radius = _capture_radius(states) if states else 1.0
    points = [p.a for p in states]
    transitions = np.zeros((len(states), len(states)), dtype=np.int64)
    for row in ens.samples[kept]:
        if points:
            transitions += switching_statistics(row, points, radius, t_sample).transitions
    _write_csv(os.path.join(out, "switching.csv"), ("from", "to", "count"),
               [(i, j, int(transitions[i, j])) for i in range(len(states))
                for j in range(len(states))])
    if cfg.output.samples:
        n_t = ens.samples.shape[1]
        limit = len(kept) if cfg.simulation.max_samples_csv < 0 else cfg.simulation.max_samples_csv
        take = kept[:limit]
        count = len(take) * n_t
        traj = np.repeat(take, n_t)
        times = np.tile(ens.times * 1.0, len(take))
        labels = label_states(ens.samples[take].ravel(), points, radius) if points \
            else np.full(count, -1)
        write_samples_csv(os.path.join(out, "samples.csv"), traj, times, i_vals[:count],
                          q_vals[:count], labels)
        files.append("samples.csv")
    return files


def cmd_histogram(cfg, out):
    *_, hist, _ = _simulate(cfg)
    write_histogram(os.path.join(out, "histogram.txt"), hist)
    h = cfg.histogram
    try:
        report = detect_clusters(hist, h.threshold_fraction, h.min_bins)
        clusters = report.clusters
    except NoClusters:
        report, clusters = None, ()
    rows = [(c.centroid.real, c.centroid.imag, abs(c.centroid), math.atan2(c.centroid.imag,
             c.centroid.real), c.weight, c.rms_radius, c.n_bins,
             int(abs(c.centroid) <= report.central_radius)) for c in clusters]
    _write_csv(os.path.join(out, "clusters.csv"),
               ("I", "Q", "radius", "angle", "weight", "rms_radius", "n_bins", "central"), rows)
    return ["histogram.txt", "clusters.csv"]


def cmd_sweep(cfg, out):
    model = scaled_model(cfg, probe=False)
    s = cfg.sweep
    eps = np.linspace(s.eps_min, s.eps_max, s.eps_points)
    delta = np.linspace(s.delta_min, s.delta_max, s.delta_points)
    diagram = sweep_pump_detuning(model, eps, delta)
    rows = [(e, d, int(diagram.regions[i, j]), REGION_NAMES[int(diagram.regions[i, j])],
             int(diagram.n_stable[i, j]))
            for i, d in enumerate(delta) for j, e in enumerate(eps)]
    _write_csv(os.path.join(out, "sweep.csv"), ("eps", "delta", "region", "region_name",
                                                "n_stable"), rows)
    write_grid(os.path.join(out, "regions.txt"), diagram.regions,
               {"eps_min": float(s.eps_min), "eps_max": float(s.eps_max),
                "eps_points": s.eps_points, "delta_min": float(s.delta_min),
                "delta_max": float(s.delta_max), "delta_points": s.delta_points})
    return ["sweep.csv", "regions.txt"]


def cmd_probe_scan(cfg, out):
    model = scaled_model(cfg, probe=False)
    noise = cfg.noise_config()
    p = cfg.probe_scan
    dt, stride = _step(p.sample_interval, min(stable_dt(model), 0.05))
    h = cfg.histogram
    points = probe_response_scan(
        model, noise, p.amplitudes, p.detuning, n_traj=p.n_traj, t_total=p.t_total, dt=dt,
        t_transient=p.t_transient, stride=stride, probe_phase=cfg.probe.phase, gain=h.gain,
        bins=h.bins, extent=h.extent or None, n_batches=p.n_batches,
        workers=cfg.simulation.workers)
    k = len(points[0].occupancies)
    rows = []
    for pt in points:
        n_clusters = len(pt.report.clusters) if pt.report is not None else 0
        rows.append((pt.amplitude, pt.asymmetry, pt.asymmetry_sigma, pt.angular_extent,
                     pt.angular_extent_sigma, n_clusters, *pt.occupancies, *pt.extents))
    header = ("amplitude", "asymmetry", "asymmetry_sigma", "angular_extent",
              "angular_extent_sigma", "n_clusters", *[f"occupancy_{i}" for i in range(k)],
              *[f"extent_{i}" for i in range(k)])
    _write_csv(os.path.join(out, "probe_scan.csv"), header, rows)
    return ["probe_scan.csv"]


HANDLERS = {
    "spectrum": cmd_spectrum,
    "coeffs": cmd_coeffs,
    "fixed-points": cmd_fixed_points,
    "basins": cmd_basins,
    "simulate": cmd_simulate,
    "histogram": cmd_histogram,
    "sweep": cmd_sweep,
    "probe-scan": cmd_probe_scan,
}


def write_manifest(path, command: str, cfg: config.RunConfig, outputs):
    doc = {"run": {"command": command, "seed": cfg.noise.seed, "version": __version__,
                   "outputs": list(outputs)}}
    doc.update(cfg.to_dict())
    try:
        with open(path, "w") as fh:
            fh.write(tomli_w.dumps(doc))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def run(command: str, config_path=None, overrides=(), out=None, seed=None) -> list[str]:
    """Execute one command; returns the names of the files written."""
    if command not in COMMANDS:
        raise CommandUnknown(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    if command == "config-template":
        sys.stdout.write(config.template())
        return []
    cfg = config.load(config_path, overrides, seed)
    if out is not None:
        cfg.output.dir = str(out)
    out_dir = cfg.output.dir
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create output directory {out_dir}: {exc}") from exc
    files = HANDLERS[command](cfg, out_dir)
    write_manifest(os.path.join(out_dir, "manifest.toml"), command, cfg, files)
    return files + ["manifest.toml"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="periodmult",
                                     description="Period-multiplication simulator.")
    parser.add_argument("command", help=", ".join(COMMANDS))
    parser.add_argument("--config", metavar="PATH")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config key (repeatable)")
    parser.add_argument("--out", metavar="DIR")
    parser.add_argument("--seed", type=int)
    args = parser.parse_args(argv)
    try:
        files = run(args.command, args.config, args.overrides, args.out, args.seed)
    except (ConfigInvalid, CommandUnknown) as exc:
        print(f"periodmult: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IoFailure as exc:
        print(f"periodmult: error: IoFailure: {exc}", file=sys.stderr)
        return EXIT_IO
    except PeriodMultError as exc:
        print(f"periodmult: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for name in files:
        print(name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
