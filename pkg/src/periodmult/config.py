"""Run configuration: a TOML document with one table per section.

Frequencies cross the boundary in GHz (device energies, as E/h) or MHz
(rates, detunings) and are converted to rad/s here. Simulation times,
sweep grids and probe-scan amplitudes are dimensionless, in units of the
damping rate Gamma1 (times in 1/Gamma1).
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field, fields

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .device import DEFAULT_FREQUENCY_SCALE, GHZ, MHZ, DeviceParams
from .errors import ConfigInvalid, IoFailure, PeriodMultError
from .rwa import HigherModeConfig, ProbeConfig, PumpConfig
from .stochastic import NoiseConfig


def _doc(text, **kw):
    return field(metadata={"doc": text}, **kw)


@dataclass
class DeviceSection:
    e_plus_ghz: float = _doc("Josephson sum energy (E_J1+E_J2)/2 as E/h, GHz", default=1000.0)
    e_minus_ghz: float = _doc("Josephson difference energy (E_J1-E_J2)/2 as E/h, GHz", default=20.0)
    z0_ohm: float = _doc("line impedance, ohm", default=50.0)
    el_cav_ghz: float = _doc("cavity inductive energy as E/h, GHz", default=92.1)
    static_flux: float = _doc("normalized DC flux 2 pi Phi/Phi0, rad", default=0.8)
    n_modes: int = _doc("number of eigenmodes to solve for", default=3)
    frequency_scale_ghz: float = _doc("v/d as f = omega/2pi, GHz",
                                      default=DEFAULT_FREQUENCY_SCALE / GHZ)


@dataclass
class PumpSection:
    n: int = _doc("multiplication order, 2..5", default=3)
    delta_f0: float = _doc("flux modulation amplitude 2 pi Phi_ac/Phi0, rad", default=0.01)
    pump_phase: float = _doc("pump phase, rad", default=0.0)
    delta_mhz: float = _doc("detuning omega - omega_1, MHz", default=0.0)
    flux_factor: str = _doc("flux factor of the even pump term, 'cos' or 'sin'", default="cos")


@dataclass
class ModelSection:
    source: str = _doc("'device' derives alpha and eps from the device; 'direct' uses the "
                       "values below", default="device")
    gamma1_mhz: float = _doc("damping rate Gamma1, MHz", default=1.0)
    alpha_mhz: float = _doc("Duffing coefficient (direct source), MHz", default=0.0)
    eps_mhz: float = _doc("pump coefficient magnitude (direct source), MHz", default=0.0)
    eps_phase: float = _doc("pump coefficient phase (direct source), rad", default=0.0)


@dataclass
class HigherModeSection:
    kind: str = _doc("'none', 'amplitude' or 'drive'", default="none")
    amplitude_re: float = _doc("higher-mode amplitude, real part", default=0.0)
    amplitude_im: float = _doc("higher-mode amplitude, imaginary part", default=0.0)
    drive_mhz: float = _doc("drive strength feeding the higher mode, MHz", default=0.0)
    detuning_mhz: float = _doc("detuning of n omega from the higher mode, MHz", default=0.0)
    damping_mhz: float = _doc("higher-mode damping rate, MHz", default=1.0)


@dataclass
class ProbeSection:
    amplitude: float = _doc("probe strength |zeta| in units of Gamma1", default=0.0)
    phase: float = _doc("probe phase, rad", default=0.0)
    detuning: float = _doc("probe detuning Delta in units of Gamma1", default=0.0)


@dataclass
class NoiseSection:
    n_th: float = _doc("thermal occupation", default=0.0)
    seed: int = _doc("root seed of all random streams", default=0)
    measurement_sigma: float = _doc("readout noise per quadrature", default=0.0)


@dataclass
class SimulationSection:
    n_traj: int = _doc("number of trajectories", default=1000)
    dt: float = _doc("Euler-Maruyama step; 0 picks a stable step automatically", default=0.0)
    t_total: float = _doc("run length", default=12.0)
    t_transient: float = _doc("samples before this time are dropped", default=6.0)
    sample_interval: float = _doc("time between recorded samples", default=1.0)
    kick: float = _doc("initial displacement from the origin; 0 = none", default=0.0)
    kick_to_family: bool = _doc("kick towards the stable excited states (radius = their "
                                "amplitude when kick is 0)", default=False)
    escape_factor: float = _doc("freeze trajectories beyond this multiple of the largest "
                                "stable amplitude; 0 = never", default=10.0)
    workers: int = _doc("worker processes", default=1)
    max_samples_csv: int = _doc("trajectories written to samples.csv; -1 = all", default=-1)


@dataclass
class HistogramSection:
    extent: float = _doc("half-width of the IQ window; 0 = automatic", default=0.0)
    bins: int = _doc("bins per axis", default=101)
    gain: float = _doc("readout gain g", default=1.0)
    threshold_fraction: float = _doc("cluster threshold as a fraction of the peak", default=0.2)
    min_bins: int = _doc("smallest cluster kept, bins", default=4)


@dataclass
class BasinsSection:
    extent: float = _doc("half-width of the initial-condition grid; 0 = 1.5x largest "
                         "amplitude", default=0.0)
    resolution: int = _doc("grid points per axis", default=41)
    capture_radius: float = _doc("capture radius around attractors", default=1e-4)
    t_cap: float = _doc("integration time cap", default=50.0)
    workers: int = _doc("worker threads", default=1)


@dataclass
class SweepSection:
    eps_min: float = _doc("smallest |eps|, units of Gamma1", default=0.0)
    eps_max: float = _doc("largest |eps|, units of Gamma1", default=5.0)
    eps_points: int = _doc("points along |eps|", default=51)
    delta_min: float = _doc("smallest detuning, units of Gamma1", default=-5.0)
    delta_max: float = _doc("largest detuning, units of Gamma1", default=5.0)
    delta_points: int = _doc("points along the detuning", default=51)


@dataclass
class ProbeScanSection:
    amplitudes: list = _doc("probe strengths, units of Gamma1",
                            default_factory=lambda: [0.0, 0.1, 0.2, 0.4, 0.8, 1.6])
    detuning: float = _doc("probe detuning, units of Gamma1", default=0.0)
    n_traj: int = _doc("trajectories per amplitude", default=500)
    t_total: float = _doc("run length", default=40.0)
    t_transient: float = _doc("samples before this time are dropped", default=20.0)
    sample_interval: float = _doc("time between recorded samples", default=1.0)
    n_batches: int = _doc("batches for the error estimate", default=10)


@dataclass
class OutputSection:
    dir: str = _doc("output directory", default="out")
    samples: bool = _doc("write samples.csv from 'simulate'", default=True)


SECTIONS = {
    "device": DeviceSection,
    "pump": PumpSection,
    "model": ModelSection,
    "higher_mode": HigherModeSection,
    "probe": ProbeSection,
    "noise": NoiseSection,
    "simulation": SimulationSection,
    "histogram": HistogramSection,
    "basins": BasinsSection,
    "sweep": SweepSection,
    "probe_scan": ProbeScanSection,
    "output": OutputSection,
}

_CHOICES = {
    ("pump", "flux_factor"): ("cos", "sin"),
    ("model", "source"): ("device", "direct"),
    ("higher_mode", "kind"): ("none", "amplitude", "drive"),
}


@dataclass
class RunConfig:
    device: DeviceSection = field(default_factory=DeviceSection)
    pump: PumpSection = field(default_factory=PumpSection)
    model: ModelSection = field(default_factory=ModelSection)
    higher_mode: HigherModeSection = field(default_factory=HigherModeSection)
    probe: ProbeSection = field(default_factory=ProbeSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    simulation: SimulationSection = field(default_factory=SimulationSection)
    histogram: HistogramSection = field(default_factory=HistogramSection)
    basins: BasinsSection = field(default_factory=BasinsSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    probe_scan: ProbeScanSection = field(default_factory=ProbeScanSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    # -- physical objects -------------------------------------------------

    def device_params(self) -> DeviceParams:
        d = self.device
        return _checked("device", lambda: DeviceParams(
            d.e_plus_ghz * GHZ, d.e_minus_ghz * GHZ, d.z0_ohm, d.el_cav_ghz * GHZ,
            d.static_flux, d.n_modes))

    @property
    def frequency_scale(self) -> float:
        return self.device.frequency_scale_ghz * GHZ

    @property
    def gamma1(self) -> float:
        return self.model.gamma1_mhz * MHZ

    def pump_config(self) -> PumpConfig:
        p = self.pump
        return _checked("pump", lambda: PumpConfig(p.n, p.delta_f0, p.pump_phase,
                                                   p.delta_mhz * MHZ))

    def higher_mode_config(self) -> HigherModeConfig | None:
        h = self.higher_mode
        if h.kind == "none":
            return None
        if h.kind == "amplitude":
            return HigherModeConfig(amplitude=complex(h.amplitude_re, h.amplitude_im))
        return _checked("higher_mode", lambda: HigherModeConfig(
            drive_amplitude=h.drive_mhz * MHZ, detuning=h.detuning_mhz * MHZ,
            damping=h.damping_mhz * MHZ))

    def probe_config(self) -> ProbeConfig | None:
        p = self.probe
        if p.amplitude == 0:
            return None
        return ProbeConfig(p.amplitude * complex(math.cos(p.phase), math.sin(p.phase)), p.detuning)

    def noise_config(self) -> NoiseConfig:
        n = self.noise
        return _checked("noise", lambda: NoiseConfig(n.n_th, n.seed, n.measurement_sigma))


def _checked(section, build):
    try:
        return build()
    except PeriodMultError as exc:
        if isinstance(exc, ConfigInvalid):
            raise
        raise ConfigInvalid(f"{section}: {exc}") from exc
    except (ValueError, TypeError) as exc:
        raise ConfigInvalid(f"{section}: {exc}") from exc


def _coerce(section: str, key: str, value, default):
    where = f"{section}.{key}"
    kind = type(default)
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigInvalid(f"{where}: expected true/false, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigInvalid(f"{where}: expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigInvalid(f"{where}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigInvalid(f"{where}: must be finite")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigInvalid(f"{where}: expected a string, got {value!r}")
        choices = _CHOICES.get((section, key))
        if choices and value not in choices:
            raise ConfigInvalid(f"{where}: {value!r} not one of {choices}")
        return value
    if kind is list:
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigInvalid(f"{where}: expected a list of numbers, got {value!r}")
        return [float(v) for v in value]
    raise ConfigInvalid(f"{where}: unsupported type")


def _validate(cfg: RunConfig):
    s = cfg.simulation
    checks = [
        (cfg.model.gamma1_mhz > 0, "model.gamma1_mhz must be positive"),
        (cfg.device.frequency_scale_ghz > 0, "device.frequency_scale_ghz must be positive"),
        (s.n_traj >= 0, "simulation.n_traj must be >= 0"),
        (s.dt >= 0, "simulation.dt must be >= 0"),
        (s.t_total > 0, "simulation.t_total must be positive"),
        (0 <= s.t_transient < s.t_total, "simulation.t_transient must lie in [0, t_total)"),
        (s.sample_interval > 0, "simulation.sample_interval must be positive"),
        (s.kick >= 0, "simulation.kick must be >= 0"),
        (s.escape_factor >= 0, "simulation.escape_factor must be >= 0"),
        (s.workers >= 1, "simulation.workers must be >= 1"),
        (cfg.histogram.extent >= 0, "histogram.extent must be >= 0"),
        (cfg.histogram.bins >= 1, "histogram.bins must be >= 1"),
        (cfg.histogram.gain > 0, "histogram.gain must be positive"),
        (0 < cfg.histogram.threshold_fraction < 1, "histogram.threshold_fraction must lie in (0, 1)"),
        (cfg.basins.resolution >= 2, "basins.resolution must be >= 2"),
        (cfg.basins.capture_radius > 0, "basins.capture_radius must be positive"),
        (cfg.basins.t_cap > 0, "basins.t_cap must be positive"),
        (cfg.sweep.eps_points >= 1 and cfg.sweep.delta_points >= 1,
         "sweep grids must be non-empty"),
        (len(cfg.probe_scan.amplitudes) >= 1, "probe_scan.amplitudes must be non-empty"),
        (0 <= cfg.probe_scan.t_transient < cfg.probe_scan.t_total,
         "probe_scan.t_transient must lie in [0, t_total)"),
        (cfg.probe_scan.n_traj >= 1, "probe_scan.n_traj must be >= 1"),
        (cfg.probe_scan.n_batches >= 1, "probe_scan.n_batches must be >= 1"),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigInvalid(message)
    # module invariants, before any computation
    cfg.device_params()
    cfg.pump_config()
    cfg.higher_mode_config()
    cfg.noise_config()


def from_dict(data: dict) -> RunConfig:
    cfg = RunConfig()
    for section, values in data.items():
        if section == "run":
            continue  # provenance table written into manifests
        if section not in SECTIONS:
            raise ConfigInvalid(f"unknown section [{section}]")
        if not isinstance(values, dict):
            raise ConfigInvalid(f"[{section}] must be a table")
        target = getattr(cfg, section)
        known = {f.name for f in fields(target)}
        for key, value in values.items():
            if key not in known:
                raise ConfigInvalid(f"unknown key {section}.{key}")
            setattr(target, key, _coerce(section, key, value, getattr(SECTIONS[section](), key)))
    _validate(cfg)
    return cfg


def parse_override(text: str) -> tuple[str, str, object]:
    """'section.key=value' with a TOML value; bare words are taken as strings."""
    path, sep, raw = text.partition("=")
    section, dot, key = path.strip().partition(".")
    if not sep or not dot or not key:
        raise ConfigInvalid(f"override {text!r} is not of the form section.key=value")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return section, key, value


def load(path=None, overrides=(), seed: int | None = None) -> RunConfig:
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise IoFailure(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigInvalid(f"{path}: {exc}") from exc
    for text in overrides:
        section, key, value = parse_override(text)
        data.setdefault(section, {})
        if not isinstance(data[section], dict):
            raise ConfigInvalid(f"[{section}] must be a table")
        data[section][key] = value
    if seed is not None:
        data.setdefault("noise", {})["seed"] = seed
    return from_dict(data)


def dumps(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def template() -> str:
    """Every section and key with its default and a short description."""
    lines = ["# periodmult run configuration", ""]
    defaults = RunConfig()
    for name in SECTIONS:
        section = getattr(defaults, name)
        lines.append(f"[{name}]")
        for f in fields(section):
            value = tomli_w.dumps({"v": getattr(section, f.name)}).strip()[4:]
            lines.append(f"{f.name} = {value}  # {f.metadata['doc']}")
        lines.append("")
    return "\n".join(lines)
