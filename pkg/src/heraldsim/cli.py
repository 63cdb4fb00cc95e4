"""Command-line front end: every run writes one deterministic CSV table.

Parameters come from a flat JSON file (``--config``) and are overridden by
flags. Exit status is 0 on success, 2 for configuration errors and 3 for
numerical failures; failures also print one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from heraldsim import __version__
from heraldsim.calibration import PumpSpec, calibrate
from heraldsim.constants import SPEED_OF_LIGHT
from heraldsim.crystal_bands import (
    BandPoint,
    CrystalSpec,
    EnergyRatio,
    band_point_energy_ratio,
    dispersion_roots,
    group_velocity,
)
from heraldsim.errors import ConfigError, HeraldSimError, RootCountError
from heraldsim.heralded_source import (
    SourceParams,
    click_distribution,
    g2_click,
    g2_perfect,
    herald_distribution,
    joint_probability,
)
from heraldsim.presets import PRESET_NAMES, preset

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

FLOAT_KEYS = (
    "alpha", "r", "eta", "k",
    "l_A", "l_B", "eps_rel_A", "eps_rel_B", "total_length",
    "radiant_flux", "beam_radius", "chi2_tilde", "refr_index_n", "lambda_s", "omega_s", "pump_phase",
    "zeta_target", "ratio",
    "r_start", "r_stop", "alpha_start", "alpha_stop", "eta_start", "eta_stop", "k_start", "k_stop",
)
INT_KEYS = ("na", "nb", "n", "band", "k_max", "r_steps", "alpha_steps", "eta_steps", "k_steps")
STR_KEYS = ("preset", "output")
KNOWN_KEYS = frozenset(FLOAT_KEYS + INT_KEYS + STR_KEYS)

DEFAULTS = {"preset": "paper", "eta": 1.0, "na": 1, "nb": 1, "n": 1, "band": 4, "k_max": 200, "zeta_target": 1.0}

COMMANDS = ("herald-prob", "herald-g2", "click", "bands", "vg", "energy-ratio", "calibrate", "reproduce-figure")


@dataclass(frozen=True)
class Recipe:
    command: str
    description: str
    params: dict


_R_FINE = {"r_start": 0.0, "r_stop": 1.5, "r_steps": 151}
_R_COARSE = {"r_start": 0.0, "r_stop": 1.5, "r_steps": 31}
_K_ZONE = {"k_start": 0.0, "k_stop": math.pi, "k_steps": 101}

FIGURES = {
    "3a": Recipe("herald-prob", "P(1,1) over r and alpha", {**_R_COARSE, "alpha_start": 0.0, "alpha_stop": 0.5, "alpha_steps": 11}),
    "3b": Recipe("herald-g2", "g2, perfect herald, over r and alpha", {**_R_COARSE, "alpha_start": 0.05, "alpha_stop": 0.5, "alpha_steps": 10}),
    "4a": Recipe("herald-prob", "P(1,1) over r at alpha=0.06", {**_R_FINE, "alpha": 0.06}),
    "4b": Recipe("herald-g2", "g2, perfect herald, over r at alpha=0.06", {**_R_FINE, "alpha": 0.06}),
    **{
        f"5{tag}": Recipe("click", f"P_click({n}) over r and eta at alpha=0.06",
                          {**_R_COARSE, "eta_start": 0.0, "eta_stop": 1.0, "eta_steps": 11, "alpha": 0.06, "n": n})
        for n, tag in enumerate("abcd")
    },
    "6a": Recipe("herald-g2", "g2, click herald, over r and eta at alpha=0.06",
                 {**_R_COARSE, "eta_start": 0.1, "eta_stop": 1.0, "eta_steps": 10, "alpha": 0.06}),
    "6b": Recipe("herald-g2", "g2, click herald, over r for eta in {0.7, 0.85, 1}",
                 {**_R_FINE, "eta_start": 0.7, "eta_stop": 1.0, "eta_steps": 3, "alpha": 0.06}),
    "7a": Recipe("bands", "bands 4 and 8 over L k in [0, pi]", {**_K_ZONE, "bands": (4, 8)}),
    "7b": Recipe("vg", "group velocity of band 4 over L k in [0, pi]", {**_K_ZONE, "band": 4}),
}


class NumericalFailure(Exception):
    def __init__(self, error: HeraldSimError, gridpoint: dict):
        super().__init__(str(error))
        self.error = error
        self.gridpoint = gridpoint


# ---------------------------------------------------------------------------
# configuration


def _coerce(key, value):
    if key in STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if key in INT_KEYS:
        if value != int(value):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite, got {value!r}")
    return float(value)


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a flat JSON object")
    return validate_keys(data)


def validate_keys(data: dict) -> dict:
    unknown = sorted(set(data) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return {key: _coerce(key, value) for key, value in data.items()}


def resolve(recipe_params: dict, file_cfg: dict, flags: dict) -> dict:
    """Defaults < preset < figure recipe < config file < flags."""
    merged = dict(DEFAULTS)
    chosen = flags.get("preset", file_cfg.get("preset", merged["preset"]))
    merged.update(preset(chosen))
    merged["preset"] = chosen
    merged.update(recipe_params)
    merged.update(file_cfg)
    merged.update(flags)
    return merged


def axis(cfg: dict, name: str) -> np.ndarray:
    """Grid for ``name``: ``name_steps`` points from ``name_start`` to ``name_stop``, else the scalar."""
    steps_key = f"{name}_steps"
    if steps_key in cfg:
        steps = cfg[steps_key]
        if steps < 1:
            raise ConfigError(f"{name} grid is empty ({steps_key}={steps})")
        try:
            start, stop = cfg[f"{name}_start"], cfg[f"{name}_stop"]
        except KeyError as exc:
            raise ConfigError(f"{name} grid needs {name}_start and {name}_stop") from exc
        if steps == 1:
            return np.array([start])
        if not stop > start:
            raise ConfigError(f"{name} grid must have {name}_stop > {name}_start")
        return np.linspace(start, stop, steps)
    if name in cfg:
        return np.array([cfg[name]])
    raise ConfigError(f"missing parameter {name!r} (or {name}_start/{name}_stop/{name}_steps)")


def crystal_from(cfg: dict) -> CrystalSpec:
    try:
        return CrystalSpec(cfg["l_A"], cfg["l_B"], cfg["eps_rel_A"], cfg["eps_rel_B"], cfg["total_length"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid crystal parameters: {exc}") from exc


def pump_from(cfg: dict) -> PumpSpec:
    omega_s = cfg.get("omega_s")
    if omega_s is None:
        if "lambda_s" not in cfg or not cfg["lambda_s"] > 0:
            raise ConfigError("need omega_s or a positive lambda_s")
        omega_s = 2 * math.pi * SPEED_OF_LIGHT / cfg["lambda_s"]
    try:
        return PumpSpec(
            radiant_flux=cfg["radiant_flux"],
            beam_radius=cfg["beam_radius"],
            omega_s=omega_s,
            chi2_tilde=cfg["chi2_tilde"],
            refr_index_n=cfg["refr_index_n"],
            pump_phase=cfg.get("pump_phase", 0.0),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid pump parameters: {exc}") from exc


# ---------------------------------------------------------------------------
# evaluation


def thread_count() -> int:
    try:
        n = int(os.environ.get("HERALD_SIM_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _evaluate(points: list[dict], fn) -> list:
    """Apply ``fn`` to every grid point in order; the first failure aborts."""

    def guarded(point):
        try:
            return fn(point), None
        except HeraldSimError as exc:
            return None, NumericalFailure(exc, point)

    threads = min(thread_count(), len(points))
    if threads <= 1:
        results = [guarded(p) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(guarded, points))
    for _, failure in results:
        if failure is not None:
            raise failure
    return [value for value, _ in results]


def _source_points(cfg: dict, second: str) -> list[dict]:
    """Grid over r and ``second`` with the remaining source parameters fixed."""
    fixed = {name: cfg[name] for name in ("alpha", "eta") if name != second and name in cfg}
    points = []
    for r, s in product(axis(cfg, "r"), axis(cfg, second)):
        point = {"r": float(r), second: float(s), **fixed}
        try:
            SourceParams(point["alpha"], point["r"], point.get("eta", 1.0), k_max=cfg["k_max"])
        except KeyError as exc:
            raise ConfigError(f"missing parameter {exc.args[0]!r}") from exc
        except ValueError as exc:
            raise ConfigError(f"invalid source parameters at {point}: {exc}") from exc
        points.append(point)
    return points


def _params(point: dict, cfg: dict) -> SourceParams:
    return SourceParams(point["alpha"], point["r"], point.get("eta", 1.0), k_max=cfg["k_max"])


def _log10(value: float) -> float:
    return math.log10(value) if value > 0 else math.nan


def run_herald_prob(cfg):
    na, nb = cfg["na"], cfg["nb"]
    points = _source_points(cfg, "alpha")

    def fn(point):
        p = _params(point, cfg)
        return joint_probability(na, nb, p), herald_distribution(p).leakage

    rows = [
        (pt["r"], pt["alpha"], na, nb, v, _log10(v), leak)
        for pt, (v, leak) in zip(points, _evaluate(points, fn))
    ]
    return ("r", "alpha", "n_a", "n_b", "value", "log10_value", "leakage"), rows


def run_herald_g2(cfg):
    second = "eta" if "eta_steps" in cfg else "alpha"
    points = _source_points(cfg, second)

    def fn(point):
        p = _params(point, cfg)
        if p.eta == 1.0:
            return g2_perfect(p), herald_distribution(p).leakage
        return g2_click(p), click_distribution(p).leakage

    rows = [
        (pt["r"], pt["alpha"], pt.get("eta", 1.0), v, _log10(v), leak)
        for pt, (v, leak) in zip(points, _evaluate(points, fn))
    ]
    return ("r", "alpha", "eta", "value", "log10_value", "leakage"), rows


def run_click(cfg):
    n = cfg["n"]
    if n < 0:
        raise ConfigError(f"photon number n must be >= 0, got {n}")
    points = _source_points(cfg, "eta")

    def fn(point):
        dist = click_distribution(_params(point, cfg))
        if n >= dist.p.size:
            raise ConfigError(f"n={n} beyond the Fock cutoff {dist.p.size - 1}")
        return float(dist.p[n]), dist.leakage

    rows = [
        (pt["r"], pt["alpha"], pt["eta"], n, v, _log10(v), leak)
        for pt, (v, leak) in zip(points, _evaluate(points, fn))
    ]
    return ("r", "alpha", "eta", "n", "value", "log10_value", "leakage"), rows


def _band_rows(cfg, bands, with_omega: bool):
    spec = crystal_from(cfg)
    if any(b < 1 for b in bands):
        raise ConfigError("band indices count from 1")
    k_lambda = axis(cfg, "k")
    if np.any(k_lambda < 0) or np.any(k_lambda > math.pi * (1 + 1e-12)):
        raise ConfigError("k (in units of 1/L) must lie in [0, pi]")
    points = [{"k": float(x)} for x in k_lambda]

    def fn(point):
        k = min(point["k"], math.pi) / spec.period
        roots = dispersion_roots(k, spec)
        if roots.size < max(bands):
            raise RootCountError(f"only {roots.size} roots below the scan ceiling")
        out = []
        for b in bands:
            bp = BandPoint(k, float(roots[b - 1]), b)
            out.append((b, float(spec.reduced_frequency(bp.omega)), group_velocity(spec, bp) / SPEED_OF_LIGHT))
        return out

    rows = []
    per_k = _evaluate(points, fn)
    for j, b in enumerate(bands):
        for pt, entries in zip(points, per_k):
            _, nu, vg = entries[j]
            rows.append((b, pt["k"], nu, vg) if with_omega else (b, pt["k"], vg))
    return rows


def run_bands(cfg):
    bands = tuple(cfg.get("bands", (cfg["band"],)))
    return ("band_index", "k_lambda", "reduced_omega", "vg_over_c"), _band_rows(cfg, bands, True)


def run_vg(cfg):
    return ("band_index", "k_lambda", "vg_over_c"), _band_rows(cfg, (cfg["band"],), False)


def run_energy_ratio(cfg):
    spec = crystal_from(cfg)
    k_lambda = cfg.get("k", 0.0)
    if not 0 <= k_lambda <= math.pi:
        raise ConfigError("k (in units of 1/L) must lie in [0, pi]")
    gridpoint = {"band": cfg["band"], "k": k_lambda}
    try:
        point, ratio = band_point_energy_ratio(spec, cfg["band"], k_lambda / spec.period)
    except HeraldSimError as exc:
        raise NumericalFailure(exc, gridpoint) from exc
    row = (cfg["band"], point.k * spec.period, float(spec.reduced_frequency(point.omega)), ratio.p_A, ratio.p_B, ratio.ratio)
    return ("band_index", "k_lambda", "reduced_omega", "p_A", "p_B", "ratio"), [row]


def run_calibrate(cfg):
    pump = pump_from(cfg)
    if not cfg["zeta_target"] > 0:
        raise ConfigError("zeta_target must be positive")
    if "ratio" in cfg:
        if not cfg["ratio"] > 0:
            raise ConfigError("ratio (p_B / p_A) must be positive")
        ratio = EnergyRatio(1.0, cfg["ratio"])
    else:
        spec = crystal_from(cfg)
        try:
            _, ratio = band_point_energy_ratio(spec, cfg["band"], 0.0)
        except HeraldSimError as exc:
            raise NumericalFailure(exc, {"band": cfg["band"], "k": 0.0}) from exc
    report = calibrate(pump, cfg["total_length"], ratio, cfg["zeta_target"])
    rows = [("omega_s_per_s", pump.omega_s), ("energy_ratio_B_over_A", ratio.ratio), *report.rows()]
    return ("quantity", "value"), rows


RUNNERS = {
    "herald-prob": run_herald_prob,
    "herald-g2": run_herald_g2,
    "click": run_click,
    "bands": run_bands,
    "vg": run_vg,
    "energy-ratio": run_energy_ratio,
    "calibrate": run_calibrate,
}


# ---------------------------------------------------------------------------
# output


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    return "nan" if math.isnan(value) else "%.8e" % value


def render_csv(command: str, cfg: dict, header, rows, figure: str | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# heraldsim {__version__}\n")
    buf.write(f"# command: {command}" + (f" figure={figure}" if figure else "") + "\n")
    params = {key: (list(v) if isinstance(v, tuple) else v) for key, v in cfg.items() if key != "output"}
    buf.write("# params: " + json.dumps(params, sort_keys=True) + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".heraldsim-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# argument parsing


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def _figure_help() -> str:
    lines = ["figure recipes:"]
    for fid, recipe in FIGURES.items():
        lines.append(f"  {fid:<3} {recipe.command:<12} {recipe.description}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON file of parameters; flags override it")
    common.add_argument("-o", "--output", default=argparse.SUPPRESS, help="CSV path (default: stdout)")
    common.add_argument("--preset", default=argparse.SUPPRESS, help=f"parameter preset ({', '.join(PRESET_NAMES)})")
    for key in FLOAT_KEYS:
        help_text = "L k, in units of 1/L" if key in ("k", "k_start", "k_stop") else None
        common.add_argument(_flag(key), dest=key, type=float, default=argparse.SUPPRESS, help=help_text)
    for key in INT_KEYS:
        common.add_argument(_flag(key), dest=key, type=int, default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="heraldsim",
        description="Heralded single-photon source and photonic-crystal calibration tables.",
        epilog=_figure_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"heraldsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    descriptions = {
        "herald-prob": "joint probability P(na, nb) over r and alpha",
        "herald-g2": "g2 of the heralded mode (click detector when eta < 1)",
        "click": "P_click(n) over r and eta",
        "bands": "band frequencies and group velocities",
        "vg": "group velocity of one band",
        "energy-ratio": "field-energy split between layers A and B",
        "calibrate": "pump amplitude, required v_g and effective length",
    }
    for name, text in descriptions.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    fig = sub.add_parser(
        "reproduce-figure", parents=[common], help="regenerate the data behind a figure",
        epilog=_figure_help(), formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    fig.add_argument("figure", choices=sorted(FIGURES))
    return parser


def _emit_error(kind: str, message: str, gridpoint=None) -> None:
    record = {"error": kind, "message": message, "gridpoint": gridpoint}
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    flags = {key: value for key, value in vars(args).items() if key in KNOWN_KEYS}
    command, figure, recipe_params = args.command, None, {}
    try:
        if command == "reproduce-figure":
            figure = args.figure
            recipe = FIGURES[figure]
            command, recipe_params = recipe.command, dict(recipe.params)
        file_cfg = load_config(args.config) if args.config else {}
        validate_keys(flags)
        cfg = resolve(recipe_params, file_cfg, flags)
        header, rows = RUNNERS[command](cfg)
        text = render_csv(command, cfg, header, rows, figure)
        if "output" in cfg:
            write_atomic(cfg["output"], text)
        else:
            sys.stdout.write(text)
    except ConfigError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return EXIT_CONFIG
    except NumericalFailure as exc:
        _emit_error(type(exc.error).__name__, str(exc.error), exc.gridpoint)
        return EXIT_NUMERICAL
    except HeraldSimError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return EXIT_NUMERICAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())
