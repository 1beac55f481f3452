"""Seeded Monte Carlo experiments: config parsing, method suite, CSV/PGM/manifest output.

A config is an INI file with the sections ``[radar]``, ``[experiment]``,
``[focuss]``, ``[ram]`` and ``[sdp]``. Every key is optional except that a
section or key not listed in :data:`SCHEMA` is an error. Run ``r`` uses the
seed ``base_seed + r`` for its snapshots, and loss curves and eigenspectra
are averaged in dB over the runs.
"""

import configparser
import hashlib
import json
import logging
import math
import os
import platform
import re
import tempfile
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .evaluation import (
    capon_spectrum, cutoff_index, default_doppler_grid, eigenspectrum,
    mean_loss_outside_notch, notch_center, sinr_loss_curve, SinrLossCurve)
from .gridless import RamSettings, anm_solve, ccm_from_toeplitz, ram_solve
from .ongrid import build_dictionary, focuss_solve, ongrid_ccm, uniform_grid
from .scene import RadarConfig, draw_snapshots, exact_ccm, make_clutter_scenario, smi_ccm

LOG = logging.getLogger(__name__)

METHODS = ("optimal", "smi", "focuss", "anm", "ram")
SPECTRUM_FLOOR_DB = -50.0


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the file, line and key."""


@dataclass(frozen=True)
class FocussOptions:
    rho_s: int = 6
    rho_d: int = 6
    reg: float = 1e-4
    p: float = 0.8
    max_iter: int = 30
    tol: float = 1e-4


@dataclass
class ExperimentConfig:
    radar: RadarConfig = field(default_factory=RadarConfig)
    methods: tuple = METHODS
    num_snapshots: int = 3
    monte_carlo_runs: int = 100
    base_seed: int = 0
    output_dir: str = "results"
    loading: float = None
    doppler_points: int = 101
    spectrum_points: int = 101
    focuss: FocussOptions = field(default_factory=FocussOptions)
    ram: RamSettings = field(default_factory=RamSettings)

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("methods must name at least one method")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        for name in ("num_snapshots", "monte_carlo_runs", "doppler_points", "spectrum_points"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def diagonal_loading(self):
        """Loading applied to estimated covariances; defaults to the noise power."""
        return self.radar.noise_power if self.loading is None else self.loading


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int(text):
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _parse_optional_float(text):
    return None if text.strip().lower() in ("", "none", "default") else float(text)


def _parse_methods(text):
    methods = tuple(m.strip().lower() for m in re.split(r"[,\s]+", text) if m.strip())
    if len(set(methods)) != len(methods):
        raise ValueError("methods are listed more than once")
    return methods


def _parse_degrees(text):
    return math.radians(float(text))


# section -> key -> value parser
SCHEMA = {
    "radar": {
        "num_pulses": _parse_int,
        "num_elements": _parse_int,
        "element_spacing": float,
        "wavelength": float,
        "prf": float,
        "platform_speed": float,
        "platform_height": float,
        "crab_angle_deg": _parse_degrees,
        "noise_power": float,
        "cnr_db": float,
        "num_patches": _parse_int,
        "range": float,
        "range_resolution": float,
    },
    "experiment": {
        "methods": _parse_methods,
        "num_snapshots": _parse_int,
        "monte_carlo_runs": _parse_int,
        "base_seed": _parse_int,
        "output_dir": str,
        "loading": _parse_optional_float,
        "doppler_points": _parse_int,
        "spectrum_points": _parse_int,
    },
    "focuss": {name: (_parse_int if f.type is int else float)
               for name, f in ((f.name, f) for f in fields(FocussOptions))},
    "ram": {
        "zeta": _parse_optional_float,
        "epsilon": _parse_optional_float,
        "max_mm_iterations": _parse_int,
        "mm_tolerance": float,
    },
    "sdp": {
        "rho": float,
        "max_iterations": _parse_int,
        "tolerance": float,
        "over_relaxation": float,
        "adaptive_rho": _parse_bool,
        "adapt_every": _parse_int,
    },
}


def _line_numbers(text):
    """Map (section, key) and section headers to 1-based line numbers."""
    lines = {}
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        header = re.match(r"\[([^\]]+)\]", stripped)
        if header:
            section = header.group(1).strip().lower()
            lines.setdefault((section, None), number)
            continue
        key = re.match(r"([^=:]+?)\s*[=:]", stripped)
        if key and section is not None:
            lines.setdefault((section, key.group(1).strip().lower()), number)
    return lines


def parse_config(text, source="<config>"):
    """Parse and validate config text; raises :class:`ConfigError` with line diagnostics."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    lines = _line_numbers(text)

    def where(section, key=None):
        line = lines.get((section, key), lines.get((section, None)))
        return f"{source}:{line}" if line else source

    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{where(section)}: unknown section [{section}]; "
                              f"expected one of {sorted(SCHEMA)}")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{where(section, key)}: unknown key '{key}' in [{section}]")
            try:
                values[section, key] = SCHEMA[section][key](raw)
            except ValueError as exc:
                raise ConfigError(f"{where(section, key)}: {section}.{key}: {exc}") from exc

    def group(section):
        return {key: value for (sec, key), value in values.items() if sec == section}

    def build(section, factory, **extra):
        try:
            return factory(**group(section), **extra)
        except (TypeError, ValueError) as exc:
            key = _blamed_key(str(exc), group(section))
            raise ConfigError(f"{where(section, key)}: [{section}] {exc}") from exc

    radar_values = group("radar")
    if "crab_angle_deg" in radar_values:
        radar_values["crab_angle"] = radar_values.pop("crab_angle_deg")
    try:
        radar = RadarConfig(**radar_values)
    except (TypeError, ValueError) as exc:
        key = _blamed_key(str(exc), radar_values)
        key = "crab_angle_deg" if key == "crab_angle" else key
        raise ConfigError(f"{where('radar', key)}: [radar] {exc}") from exc
    sdp = build("sdp", lambda **kw: replace(RamSettings().sdp, **kw))
    ram = build("ram", RamSettings, sdp=sdp)
    focuss = build("focuss", FocussOptions)
    for key, checker in (("p", lambda v: 0 < v <= 1), ("reg", lambda v: v >= 0),
                         ("rho_s", lambda v: v >= 1), ("rho_d", lambda v: v >= 1),
                         ("max_iter", lambda v: v >= 1), ("tol", lambda v: v > 0)):
        if not checker(getattr(focuss, key)):
            raise ConfigError(f"{where('focuss', key)}: focuss.{key} is out of range: "
                              f"{getattr(focuss, key)}")
    experiment = group("experiment")
    loading = experiment.get("loading")
    if loading is not None and not (math.isfinite(loading) and loading >= 0):
        raise ConfigError(f"{where('experiment', 'loading')}: loading must be >= 0, got {loading}")
    try:
        return ExperimentConfig(radar=radar, focuss=focuss, ram=ram, **experiment)
    except ConfigError as exc:
        key = _blamed_key(str(exc), experiment)
        raise ConfigError(f"{where('experiment', key)}: {exc}") from exc


def _blamed_key(message, candidates):
    for key in sorted(candidates, key=len, reverse=True):
        if key in message:
            return key
    return None


def load_config(path):
    """Read and validate a config file. A missing or unreadable file raises ``OSError``."""
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), source=str(path))


def config_to_text(config):
    """Render a config (defaults filled in) in the same INI format ``parse_config`` reads."""
    radar = config.radar
    sdp = config.ram.sdp
    sections = {
        "radar": {
            "num_pulses": radar.num_pulses,
            "num_elements": radar.num_elements,
            "element_spacing": radar.element_spacing,
            "wavelength": radar.wavelength,
            "prf": radar.prf,
            "platform_speed": radar.platform_speed,
            "platform_height": radar.platform_height,
            "crab_angle_deg": round(math.degrees(radar.crab_angle), 12),
            "noise_power": radar.noise_power,
            "cnr_db": radar.cnr_db,
            "num_patches": radar.num_patches,
            "range": radar.range,
            "range_resolution": radar.range_resolution,
        },
        "experiment": {
            "methods": ", ".join(config.methods),
            "num_snapshots": config.num_snapshots,
            "monte_carlo_runs": config.monte_carlo_runs,
            "base_seed": config.base_seed,
            "output_dir": config.output_dir,
            "loading": "default" if config.loading is None else config.loading,
            "doppler_points": config.doppler_points,
            "spectrum_points": config.spectrum_points,
        },
        "focuss": {f.name: getattr(config.focuss, f.name) for f in fields(FocussOptions)},
        "ram": {
            "zeta": "default" if config.ram.zeta is None else config.ram.zeta,
            "epsilon": "default" if config.ram.epsilon is None else config.ram.epsilon,
            "max_mm_iterations": config.ram.max_mm_iterations,
            "mm_tolerance": config.ram.mm_tolerance,
        },
        "sdp": {
            "rho": sdp.rho,
            "max_iterations": sdp.max_iterations,
            "tolerance": sdp.tolerance,
            "over_relaxation": sdp.over_relaxation,
            "adaptive_rho": str(sdp.adaptive_rho).lower(),
            "adapt_every": sdp.adapt_every,
        },
    }
    out = []
    for name, entries in sections.items():
        out.append(f"[{name}]")
        out.extend(f"{key} = {value}" for key, value in entries.items())
        out.append("")
    return "\n".join(out)


def config_hash(config):
    return hashlib.sha256(config_to_text(config).encode("utf-8")).hexdigest()


# -- method suite ----------------------------------------------------------------


@dataclass
class MethodOutcome:
    covariance: np.ndarray
    loading: float
    diagnostics: dict = field(default_factory=dict)


def _estimate(method, config, scenario, snapshots, dictionary, R_exact):
    sigma2 = config.radar.noise_power
    loading = config.diagonal_loading
    if method == "optimal":
        return MethodOutcome(R_exact, 0.0)
    if method == "smi":
        return MethodOutcome(smi_ccm(snapshots), loading)
    if method == "focuss":
        opts = config.focuss
        profile = focuss_solve(dictionary, snapshots, opts.reg, opts.p, opts.max_iter, opts.tol)
        return MethodOutcome(ongrid_ccm(profile, dictionary, sigma2), loading,
                             {"iterations": profile.iterations, "converged": profile.converged})
    if method in ("anm", "ram"):
        solver = anm_solve if method == "anm" else ram_solve
        result = solver(snapshots, sigma2, config.ram)
        estimate = ccm_from_toeplitz(result, sigma2)
        return MethodOutcome(estimate.matrix, loading, {
            "converged": result.converged,
            "mm_iterations": result.mm_iterations,
            "sdp_iterations": [step.sdp_iterations for step in result.steps],
            "surrogate_objectives": [float(v) for v in result.surrogate_objectives],
            "clutter_rank_estimate": estimate.clutter_rank_estimate,
        })
    raise ValueError(f"unknown method {method!r}")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    doppler_grid: np.ndarray
    notch: float
    loss_db: dict
    eig_db: dict
    spectra: dict
    spectrum_grids: tuple
    seeds: list
    timings: dict
    diagnostics: dict
    failures: list

    def completed_runs(self, method):
        return len(self.loss_db.get(method, []))

    def mean_curve(self, method):
        """Loss curve averaged in dB over the completed runs."""
        return SinrLossCurve(self.doppler_grid, np.mean(self.loss_db[method], axis=0))

    def mean_eigenspectrum(self, method):
        return np.mean(self.eig_db[method], axis=0)

    def mean_loss_outside_notch(self, method, half_width=0.1):
        return mean_loss_outside_notch(self.mean_curve(method), self.notch, half_width)


def run_monte_carlo(config, progress=None):
    """Run every method on every seeded trial and keep the raw per-run results.

    A method that raises on one run is recorded in ``failures`` and skipped
    for that run only.
    """
    radar = config.radar
    N, M = radar.num_pulses, radar.num_elements
    scenario = make_clutter_scenario(radar)
    R_exact = exact_ccm(scenario, radar)
    grid = default_doppler_grid(config.doppler_points)
    spectrum_grid = uniform_grid(config.spectrum_points)
    dictionary = build_dictionary(radar, config.focuss.rho_s, config.focuss.rho_d) \
        if "focuss" in config.methods else None

    loss = {m: [] for m in config.methods}
    eig = {m: [] for m in config.methods}
    spectra = {}
    timings = {m: [] for m in config.methods}
    diagnostics = {m: [] for m in config.methods}
    failures = []
    seeds = [config.base_seed + r for r in range(config.monte_carlo_runs)]
    for run, seed in enumerate(seeds):
        snapshots = draw_snapshots(scenario, radar, config.num_snapshots, seed)
        for method in config.methods:
            start = time.perf_counter()
            try:
                outcome = _estimate(method, config, scenario, snapshots, dictionary, R_exact)
                curve = sinr_loss_curve(outcome.covariance, R_exact, radar, grid,
                                        loading=outcome.loading)
                eig_db = eigenspectrum(outcome.covariance)
                if run == 0:
                    spectra[method] = capon_spectrum(outcome.covariance, N, M, spectrum_grid,
                                                     spectrum_grid, loading=outcome.loading).power
            except Exception as exc:  # isolate one method's failure from the others
                LOG.warning("%s failed on seed %d: %s", method, seed, exc)
                failures.append({"method": method, "seed": seed,
                                 "error": f"{type(exc).__name__}: {exc}"})
                continue
            finally:
                timings[method].append(time.perf_counter() - start)
            if not np.all(np.isfinite(curve.loss_db)):
                failures.append({"method": method, "seed": seed, "error": "non-finite SINR loss"})
                continue
            loss[method].append(curve.loss_db)
            eig[method].append(eig_db)
            diagnostics[method].append({"seed": seed, **outcome.diagnostics})
        if progress is not None:
            progress(run + 1, len(seeds))

    loss = {m: v for m, v in loss.items() if v}
    eig = {m: v for m, v in eig.items() if v}
    return ExperimentResult(config, grid, notch_center(radar), loss, eig, spectra,
                            (spectrum_grid, spectrum_grid), seeds, timings, diagnostics, failures)


# -- artifact emission -------------------------------------------------------------


def _fmt(x):
    return f"{x:.6f}"


def _csv_text(header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def sinr_csv(result):
    methods = [m for m in result.config.methods if m in result.loss_db]
    curves = [result.mean_curve(m).loss_db for m in methods]
    rows = ([_fmt(f)] + [_fmt(c[i]) for c in curves] for i, f in enumerate(result.doppler_grid))
    return _csv_text(["doppler"] + [f"loss_db_{m}" for m in methods], rows)


def eigenspectrum_csv(result):
    methods = [m for m in result.config.methods if m in result.eig_db]
    spectra = [result.mean_eigenspectrum(m) for m in methods]
    size = len(spectra[0]) if spectra else 0
    rows = ([str(i + 1)] + [_fmt(s[i]) for s in spectra] for i in range(size))
    return _csv_text(["index"] + [f"eig_db_{m}" for m in methods], rows)


def spectrum_db(power):
    """Power map in dB relative to its maximum, clipped to [-50, 0]."""
    power = np.asarray(power, dtype=float)
    peak = power.max()
    if not peak > 0:
        return np.full(power.shape, SPECTRUM_FLOOR_DB)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(np.clip(power / peak, 0.0, None))
    return np.clip(db, SPECTRUM_FLOOR_DB, 0.0)


def spectrum_csv(power, doppler_grid, spatial_grid):
    """Dense grid: one row per Doppler bin, one column per spatial bin, values in clipped dB."""
    db = spectrum_db(power)
    header = ["doppler"] + [_fmt(f) for f in spatial_grid]
    rows = ([_fmt(f)] + [_fmt(v) for v in db[i]] for i, f in enumerate(doppler_grid))
    return _csv_text(header, rows)


def graymap_bytes(power):
    """Binary PGM: rows are Doppler bins, columns spatial bins; -50 dB -> 0, 0 dB -> 255."""
    db = spectrum_db(power)
    pixels = np.rint((db - SPECTRUM_FLOOR_DB) / -SPECTRUM_FLOOR_DB * 255.0).astype(np.uint8)
    height, width = pixels.shape
    return f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes()


def summary_csv(result):
    header = ["method", "runs_completed", "mean_loss_outside_notch_db", "min_loss_db",
              "cutoff_index"]
    rows = []
    for m in result.config.methods:
        if m not in result.loss_db:
            rows.append([m, "0", "", "", ""])
            continue
        curve = result.mean_curve(m)
        eig = result.mean_eigenspectrum(m)
        rows.append([m, str(result.completed_runs(m)), _fmt(result.mean_loss_outside_notch(m)),
                     _fmt(curve.loss_db.min()),
                     str(cutoff_index(eig, result.config.radar.noise_power))])
    return _csv_text(header, rows)


def _atomic_write(path, data):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _versions():
    import scipy
    import sklearn
    from . import __version__
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "scikit-learn": sklearn.__version__,
            "ramstap": __version__}


@dataclass
class RunArtifacts:
    output_dir: Path
    files: dict
    manifest: Path
    failures: list
    result: ExperimentResult


def write_artifacts(result, output_dir, wall_clock=None):
    """Write the CSV tables, spectrum maps and manifest.json into ``output_dir``."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    payloads = {
        "sinr_loss.csv": sinr_csv(result).encode(),
        "eigenspectrum.csv": eigenspectrum_csv(result).encode(),
        "summary.csv": summary_csv(result).encode(),
    }
    dop, spa = result.spectrum_grids
    for method in result.config.methods:
        if method in result.spectra:
            power = result.spectra[method]
            payloads[f"spectrum_{method}.csv"] = spectrum_csv(power, dop, spa).encode()
            payloads[f"spectrum_{method}.pgm"] = graymap_bytes(power)
    hashes = {}
    for name, data in payloads.items():
        _atomic_write(out / name, data)
        hashes[name] = hashlib.sha256(data).hexdigest()

    manifest = {
        "config": config_to_text(result.config),
        "config_sha256": config_hash(result.config),
        "seeds": result.seeds,
        "methods": list(result.config.methods),
        "runs_completed": {m: result.completed_runs(m) for m in result.config.methods},
        "averaging": "loss curves and eigenspectra are averaged in dB over runs; "
                     "spectrum maps show the first run (seed base_seed)",
        "notch_center": result.notch,
        "versions": _versions(),
        "wall_clock_seconds": {"total": wall_clock,
                               "per_solve": {m: v for m, v in result.timings.items()}},
        "diagnostics": result.diagnostics,
        "failures": result.failures,
        "files": hashes,
    }
    manifest_path = out / "manifest.json"
    _atomic_write(manifest_path, (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())
    return RunArtifacts(out, {name: out / name for name in payloads}, manifest_path,
                        result.failures, result)


def run_experiment(config, output_dir=None, progress=None):
    start = time.perf_counter()
    result = run_monte_carlo(config, progress=progress)
    return write_artifacts(result, output_dir or config.output_dir,
                           wall_clock=time.perf_counter() - start)


def with_overrides(config, runs=None, methods=None, seed=None, output_dir=None):
    changes = {}
    if runs is not None:
        changes["monte_carlo_runs"] = runs
    if methods is not None:
        changes["methods"] = tuple(methods)
    if seed is not None:
        changes["base_seed"] = seed
    if output_dir is not None:
        changes["output_dir"] = str(output_dir)
    return replace(config, **changes) if changes else config
