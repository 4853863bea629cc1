"""Command-line frontend: presets, sweeps, traces, spectra and validation.

Commands
--------
steady     observables of one steady-state point (symmetric numerics)
sweep      pump sweep of steady-state observables (symmetric or cumulant)
g1 / g2    two-time correlation traces of the output mode
spectrum   emission spectrum with narrow-peak/broad-structure separation
cumulant   cumulant fixed point and closed forms for one parameter point
validate   cross-check the symmetric solver against the brute-force
           reference at small N and exit nonzero on disagreement

Option resolution order: built-in defaults, then ``--preset``, then the
``--config`` YAML file, then explicit flags. The effective configuration
is echoed into every output header, so outputs are reproducible and
bit-identical across runs of the same build.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 validation failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .cumulant import (closed_form_linewidth, closed_form_photon,
                       cumulant_steady)
from .dynamics import SolverError, steady_state
from .liouvillian import build_liouvillian, trace_functional
from .model import ModelParams, coupling_from_kappa_tilde, validate
from .observables import (PoorFitError, correlation_times, effective_rabi,
                          expect_photon_number, expect_sigma_z,
                          expect_spin_spin, fit_linewidth, g1_trace, g2_trace,
                          power_spectrum)
from .oracle import (DEFAULT_HILBERT_CAP, hilbert_dim, oracle_expectations,
                     oracle_g1, oracle_g2, oracle_steady_state)
from .symbasis import enumerate_sector


class ConfigError(ValueError):
    pass


class ValidationFailure(RuntimeError):
    pass


COMMANDS = ("steady", "sweep", "g1", "g2", "spectrum", "cumulant", "validate")

DEFAULTS: Dict = {
    "n": 10,
    "m": 1,
    "g": None,
    "kappa": 1.0,
    "kappa_tilde": None,
    "w": 0.5,
    "w_unit": "rate",
    "gamma": 0.0,
    "gamma_d": 0.0,
    "engine": "symmetric",
    "w_min": None,
    "w_max": None,
    "w_steps": 20,
    "w_scale": "linear",
    "dt": 0.05,
    "t_dense": 30.0,
    "t_max": None,
    "n_tail": 0,
    "fit_t_min": None,
    "fit_t_max": None,
    "omega_max": None,
    "omega_points": 2001,
    "out": None,
    "format": "csv",
    "threads": 1,
    "seed": 1,
    "draws": 5,
    "trace_points": 100,
    "tol_obs": 1e-8,
    "tol_trace": 1e-6,
    "reltol": 1e-8,
    "abstol": 1e-10,
}

# parameter sets of the bundled reference figures; kappa is the rate unit
PRESETS: Dict[str, Dict] = {
    # pump sweep of the blockaded-cavity fixed point, large-N cumulant
    "fig2a-blockaded": {
        "command": "sweep", "engine": "cumulant",
        "n": 100000, "m": 1, "kappa": 1.0, "kappa_tilde": 0.25,
        "w_min": 0.05, "w_max": 4.0, "w_steps": 80, "w_scale": "linear",
        "w_unit": "kappa-over-n",
    },
    # same sweep for a normal bosonic mode (peak near w = N C gamma / 2)
    "fig2a-normal": {
        "command": "sweep", "engine": "cumulant-normal",
        "n": 100000, "m": 1, "kappa": 1.0, "kappa_tilde": 0.25,
        "w_min": 0.5, "w_max": 40.0, "w_steps": 81, "w_scale": "log",
        "w_unit": "kappa-over-n",
    },
    # desk-scale symmetric numerics for the same blockaded sweep
    "fig2a-numeric": {
        "command": "sweep", "engine": "symmetric",
        "n": 100, "m": 1, "kappa": 1.0, "kappa_tilde": 0.25,
        "w_min": 0.05, "w_max": 4.0, "w_steps": 40, "w_scale": "linear",
        "w_unit": "kappa-over-n",
    },
    # emission spectrum at kappa = N C gamma, w = 2 kappa / N (Mollow triplet)
    "fig2b": {
        "command": "spectrum", "engine": "symmetric",
        "n": 100, "m": 1, "kappa": 1.0, "g": 0.1,
        "w": 2.0, "w_unit": "kappa-over-n",
        "dt": 0.02, "t_dense": 50.0, "t_max": 1500.0, "n_tail": 120,
        "fit_t_min": 150.0, "fit_t_max": 1500.0,
        "omega_max": 10.0, "omega_points": 4001,
    },
    # correlation traces at kappa = 10 N C gamma, w = 1.05 kappa / N
    "fig2c": {
        "command": "g1", "engine": "symmetric",
        "n": 100, "m": 1, "kappa": 1.0, "g": 10.0 ** -1.5,
        "w": 1.05, "w_unit": "kappa-over-n",
        "dt": 0.05, "t_dense": 30.0, "t_max": 6000.0, "n_tail": 150,
        "fit_t_min": 30.0, "fit_t_max": 4500.0,
    },
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="blocklaser",
        description="steady-state superradiance with a photon-blockaded cavity")
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="action; may also come from --preset or --config")
    p.add_argument("--config", metavar="PATH", help="YAML key/value config file")
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="named figure parameter set")
    p.add_argument("--n", type=int, help="number of atoms N")
    p.add_argument("--m", type=int, help="photon cutoff M (1 = blockaded)")
    p.add_argument("--g", type=float, help="atom-cavity coupling g")
    p.add_argument("--kappa", type=float, help="cavity decay rate kappa")
    p.add_argument("--kappa-tilde", type=float, dest="kappa_tilde",
                   help="set g through kappa/(N g); conflicts with --g")
    p.add_argument("--w", type=float, help="pump rate (see --w-unit)")
    p.add_argument("--w-unit", dest="w_unit",
                   choices=("rate", "kappa-over-n", "cgamma", "ncgamma"),
                   help="unit of --w/--w-min/--w-max: absolute rate, "
                        "kappa/N, g^2/kappa or N g^2/kappa")
    p.add_argument("--gamma", type=float, help="spontaneous emission rate")
    p.add_argument("--gamma-d", type=float, dest="gamma_d", help="dephasing rate")
    p.add_argument("--engine", choices=("symmetric", "cumulant", "cumulant-normal"),
                   help="steady-state backend for steady/sweep/cumulant")
    p.add_argument("--w-min", type=float, dest="w_min")
    p.add_argument("--w-max", type=float, dest="w_max")
    p.add_argument("--w-steps", type=int, dest="w_steps")
    p.add_argument("--w-scale", choices=("linear", "log"), dest="w_scale")
    p.add_argument("--dt", type=float, help="dense time-grid spacing")
    p.add_argument("--t-dense", type=float, dest="t_dense",
                   help="end of the dense time grid")
    p.add_argument("--t-max", type=float, dest="t_max",
                   help="end of the (geometric) tail grid")
    p.add_argument("--n-tail", type=int, dest="n_tail", help="tail grid points")
    p.add_argument("--fit-t-min", type=float, dest="fit_t_min")
    p.add_argument("--fit-t-max", type=float, dest="fit_t_max")
    p.add_argument("--omega-max", type=float, dest="omega_max")
    p.add_argument("--omega-points", type=int, dest="omega_points")
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "structured"),
                   help="csv with '#' metadata header, or a JSON document")
    p.add_argument("--threads", type=int, help="worker threads for sweeps")
    p.add_argument("--seed", type=int, help="seed for randomized validation")
    p.add_argument("--draws", type=int, help="validate: random parameter draws")
    p.add_argument("--trace-points", type=int, dest="trace_points",
                   help="validate: points per correlation trace")
    p.add_argument("--tol-obs", type=float, dest="tol_obs",
                   help="validate: observable tolerance")
    p.add_argument("--tol-trace", type=float, dest="tol_trace",
                   help="validate: trace tolerance")
    p.add_argument("--reltol", type=float, help="integrator relative tolerance")
    p.add_argument("--abstol", type=float, help="integrator absolute tolerance")
    p.add_argument("--version", action="version", version=f"blocklaser {__version__}")
    return p


def _load_config_file(path: str) -> Dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must be a mapping")
    flat = {}
    for key, value in data.items():
        key = str(key).replace("-", "_")
        if isinstance(value, dict):
            for sub, subval in value.items():
                flat[f"{key}_{str(sub).replace('-', '_')}"] = subval
        else:
            flat[key] = value
    return flat


def resolve_config(argv: Sequence[str]) -> Dict:
    """Merge defaults, preset, config file and explicit flags."""
    parser = _build_parser()
    args = vars(parser.parse_args(argv))
    cfg = dict(DEFAULTS)
    cfg["command"] = None
    preset_name = args.get("preset")
    file_cfg = _load_config_file(args["config"]) if args.get("config") else {}
    if preset_name is None and "preset" in file_cfg:
        preset_name = file_cfg["preset"]
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(f"unknown preset {preset_name!r}")
        cfg.update(PRESETS[preset_name])
    for key, value in file_cfg.items():
        if key == "preset":
            continue
        if key not in cfg and key != "command":
            raise ConfigError(f"unknown config key {key!r}")
        cfg[key] = value
    for key, value in args.items():
        if key in ("config", "preset"):
            continue
        if value is not None:
            cfg[key] = value
    cfg["preset"] = preset_name
    if cfg.get("command") not in COMMANDS:
        raise ConfigError("no command given (positional argument, preset or config)")
    return cfg


def _params_from_config(cfg: Dict, w_override: Optional[float] = None) -> ModelParams:
    n, m = int(cfg["n"]), int(cfg["m"])
    kappa = float(cfg["kappa"])
    g = cfg.get("g")
    if cfg.get("kappa_tilde") is not None:
        if g is not None:
            raise ConfigError("give either g or kappa_tilde, not both")
        g = coupling_from_kappa_tilde(n, kappa, float(cfg["kappa_tilde"]))
    if g is None:
        raise ConfigError("coupling g is required (or kappa_tilde)")
    g = float(g)
    w_raw = float(cfg["w"]) if w_override is None else float(w_override)
    w = _convert_pump(w_raw, cfg["w_unit"], n, g, kappa)
    try:
        return validate(ModelParams(
            n_atoms=n, photon_cutoff=m, coupling=g, cavity_decay=kappa,
            pump=w, spont_emission=float(cfg["gamma"]),
            dephasing=float(cfg["gamma_d"])))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _convert_pump(value: float, unit: str, n: int, g: float, kappa: float) -> float:
    if unit == "rate":
        return value
    if unit == "kappa-over-n":
        return value * kappa / n
    if unit == "cgamma":
        return value * g * g / kappa
    if unit == "ncgamma":
        return value * n * g * g / kappa
    raise ConfigError(f"unknown pump unit {unit!r}")


def _coerce(value):
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


def _fmt(value) -> str:
    value = _coerce(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _metadata_lines(cfg: Dict) -> List[str]:
    lines = [f"blocklaser {__version__}", f"command: {cfg['command']}"]
    if cfg.get("preset"):
        lines.append(f"preset: {cfg['preset']}")
    for key in sorted(k for k in cfg if k not in ("command", "preset", "out")):
        value = cfg[key]
        if value is None:
            continue
        lines.append(f"{key}: {_fmt(value)}")
    return lines


def _write_table(cfg: Dict, columns: List[str], rows: List[List],
                 extra_meta: Optional[Dict] = None) -> None:
    meta = _metadata_lines(cfg)
    for key, value in (extra_meta or {}).items():
        meta.append(f"{key}: {_fmt(value)}")
    buf = io.StringIO()
    if cfg["format"] == "csv":
        for line in meta:
            buf.write(f"# {line}\n")
        buf.write(",".join(columns) + "\n")
        for row in rows:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
    else:
        doc = {
            "tool": "blocklaser",
            "version": __version__,
            "metadata": meta,
            "columns": columns,
            "data": [[_coerce(v) for v in row] for row in rows],
        }
        buf.write(json.dumps(doc, indent=1, sort_keys=True))
        buf.write("\n")
    if cfg.get("out"):
        with open(cfg["out"], "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _steady_tol(cfg: Dict) -> float:
    # steady-state residuals are held two digits tighter than the
    # requested integration tolerance
    return float(cfg["reltol"]) * 1e-2


def _steady_point(params: ModelParams, engine: str, tol: float):
    """(sz, spsm, nb) from the requested backend."""
    if engine == "symmetric":
        sector = enumerate_sector(params.n_atoms, params.photon_cutoff, 0)
        L = build_liouvillian(params, sector)
        ss = steady_state(L, trace_functional(sector), tol=tol)
        spsm = expect_spin_spin(ss) if params.n_atoms >= 2 else math.nan
        return expect_sigma_z(ss), spsm, expect_photon_number(ss)
    blockaded = engine != "cumulant-normal"
    cu = cumulant_steady(params, blockaded=blockaded)
    return cu.sz, cu.spsm, cu.nb


def _symmetric_steady(params: ModelParams, tol: float = 1e-10):
    sector = enumerate_sector(params.n_atoms, params.photon_cutoff, 0)
    L = build_liouvillian(params, sector)
    return steady_state(L, trace_functional(sector), tol=tol)


def _cmd_steady(cfg: Dict) -> int:
    params = _params_from_config(cfg)
    sz, spsm, nb = _steady_point(params, cfg["engine"], _steady_tol(cfg))
    wt = params.pump * params.n_atoms / params.cavity_decay
    _write_table(cfg, ["w", "w_tilde", "nb", "spsm", "sz"],
                 [[params.pump, wt, nb, spsm, sz]])
    return 0


def _sweep_values(cfg: Dict) -> np.ndarray:
    if cfg["w_min"] is None or cfg["w_max"] is None:
        raise ConfigError("sweep needs w_min and w_max")
    lo, hi, steps = float(cfg["w_min"]), float(cfg["w_max"]), int(cfg["w_steps"])
    if steps < 1 or hi <= lo:
        raise ConfigError("sweep range must be non-empty and increasing")
    if cfg["w_scale"] == "log":
        if lo <= 0:
            raise ConfigError("log sweep needs positive w_min")
        return np.geomspace(lo, hi, steps)
    return np.linspace(lo, hi, steps)


def _cmd_sweep(cfg: Dict) -> int:
    values = _sweep_values(cfg)
    engine = cfg["engine"]
    tol = _steady_tol(cfg)

    def point(wval: float):
        params = _params_from_config(cfg, w_override=wval)
        sz, spsm, nb = _steady_point(params, engine, tol)
        wt = params.pump * params.n_atoms / params.cavity_decay
        return [params.pump, wt, nb, spsm, sz]

    threads = int(cfg["threads"])
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(point, values))
    else:
        rows = [point(v) for v in values]
    _write_table(cfg, ["w", "w_tilde", "nb", "spsm", "sz"], rows)
    return 0


def _trace_grid(cfg: Dict) -> np.ndarray:
    t_max = None if cfg["t_max"] is None else float(cfg["t_max"])
    return correlation_times(dt_dense=float(cfg["dt"]),
                             t_dense=float(cfg["t_dense"]),
                             t_max=t_max, n_tail=int(cfg["n_tail"]))


def _maybe_fit(cfg: Dict, trace):
    if cfg["fit_t_min"] is None or cfg["fit_t_max"] is None:
        return None
    return fit_linewidth(trace, (float(cfg["fit_t_min"]), float(cfg["fit_t_max"])))


def _cmd_g1(cfg: Dict) -> int:
    params = _params_from_config(cfg)
    ss = _symmetric_steady(params, _steady_tol(cfg))
    trace = g1_trace(params, ss, _trace_grid(cfg))
    meta = {"nb": trace.normalization}
    try:
        fit = _maybe_fit(cfg, trace)
    except PoorFitError as exc:
        print(f"warning: tail fit rejected: {exc}", file=sys.stderr)
        fit = None
    if fit is not None:
        meta.update(fit_rate=fit.rate, fit_amplitude=fit.amplitude,
                    fit_log_residual_rms=fit.log_residual_rms)
    rows = [[t, v.real, v.imag, abs(v)]
            for t, v in zip(trace.times, trace.values)]
    _write_table(cfg, ["t", "re", "im", "abs"], rows, meta)
    return 0


def _cmd_g2(cfg: Dict) -> int:
    params = _params_from_config(cfg)
    ss = _symmetric_steady(params, _steady_tol(cfg))
    trace = g2_trace(params, ss, _trace_grid(cfg))
    rows = [[t, float(v)] for t, v in zip(trace.times, trace.values)]
    _write_table(cfg, ["t", "g2"], rows, {"nb_squared": trace.normalization})
    return 0


def _cmd_spectrum(cfg: Dict) -> int:
    params = _params_from_config(cfg)
    ss = _symmetric_steady(params, _steady_tol(cfg))
    trace = g1_trace(params, ss, _trace_grid(cfg))
    fit = _maybe_fit(cfg, trace)
    omega_max = cfg["omega_max"]
    if omega_max is None:
        freqs = None
    else:
        freqs = np.linspace(-float(omega_max), float(omega_max),
                            int(cfg["omega_points"]))
    spec = power_spectrum(trace, freqs=freqs, tail_fit=fit)
    meta = dict(spec.metadata)
    meta["nb"] = trace.normalization
    if params.n_atoms >= 2:
        meta["omega_eff"] = effective_rabi(params, expect_spin_spin(ss))
    rows = [[w, v] for w, v in zip(spec.freqs, spec.values)]
    _write_table(cfg, ["omega", "s"], rows, meta)
    return 0


def _cmd_cumulant(cfg: Dict) -> int:
    params = _params_from_config(cfg)
    blockaded = cfg["engine"] != "cumulant-normal"
    cu = cumulant_steady(params, blockaded=blockaded)
    wt = params.pump * params.n_atoms / params.cavity_decay
    columns = ["w", "w_tilde", "sz", "spsm", "nb", "im_bdsm",
               "nb_closed_form", "linewidth_closed_form"]
    closed_nb = closed_form_photon(params) if blockaded else math.nan
    closed_lw = closed_form_linewidth(params) if blockaded else math.nan
    _write_table(cfg, columns,
                 [[params.pump, wt, cu.sz, cu.spsm, cu.nb, cu.bdsm.imag,
                   closed_nb, closed_lw]])
    return 0


def _draw_params(rng: np.random.Generator, n: int, m: int) -> ModelParams:
    return ModelParams(
        n_atoms=n, photon_cutoff=m,
        coupling=rng.uniform(0.2, 1.5),
        cavity_decay=rng.uniform(0.3, 2.0),
        pump=rng.uniform(0.05, 1.5),
        spont_emission=rng.uniform(0.0, 0.5),
        dephasing=rng.uniform(0.0, 0.5),
    )


def validation_report(n: int, m: int, seed: int, draws: int,
                      trace_points: int = 100) -> List[Dict]:
    """Per-draw maximum deviations between the symmetric solver and the
    full-space reference."""
    if hilbert_dim(n, m) > DEFAULT_HILBERT_CAP:
        raise ConfigError(
            f"validation needs 2^N (M+1) <= {DEFAULT_HILBERT_CAP}")
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(draws):
        params = _draw_params(rng, n, m)
        sector = enumerate_sector(n, m, 0)
        ss = steady_state(build_liouvillian(params, sector),
                          trace_functional(sector))
        rho = oracle_steady_state(params)
        ref = oracle_expectations(params, rho)
        d_obs = max(
            abs(expect_sigma_z(ss) - ref["sz"]) / (1 + abs(ref["sz"])),
            abs(expect_photon_number(ss) - ref["nb"]) / (1 + abs(ref["nb"])),
        )
        if n >= 2:
            d_obs = max(d_obs, abs(expect_spin_spin(ss) - ref["spsm"])
                        / (1 + abs(ref["spsm"])))
        times = np.linspace(0.0, 5.0 / params.cavity_decay, trace_points)
        d_g1 = np.abs(g1_trace(params, ss, times).values
                      - oracle_g1(params, times, rho_ss=rho)).max()
        d_g2 = np.abs(g2_trace(params, ss, times).values
                      - oracle_g2(params, times, rho_ss=rho)).max()
        rows.append({"draw": k, "d_obs": float(d_obs),
                     "d_g1": float(d_g1), "d_g2": float(d_g2)})
    return rows


def _cmd_validate(cfg: Dict) -> int:
    rows = validation_report(int(cfg["n"]), int(cfg["m"]), int(cfg["seed"]),
                             int(cfg["draws"]), int(cfg["trace_points"]))
    table = [[r["draw"], r["d_obs"], r["d_g1"], r["d_g2"]] for r in rows]
    worst_obs = max(r["d_obs"] for r in rows)
    worst_trace = max(max(r["d_g1"], r["d_g2"]) for r in rows)
    meta = {"max_observable_deviation": worst_obs,
            "max_trace_deviation": worst_trace}
    _write_table(cfg, ["draw", "d_obs", "d_g1", "d_g2"], table, meta)
    if worst_obs > float(cfg["tol_obs"]) or worst_trace > float(cfg["tol_trace"]):
        raise ValidationFailure(
            f"max observable deviation {worst_obs:.3e} (tol {cfg['tol_obs']}), "
            f"max trace deviation {worst_trace:.3e} (tol {cfg['tol_trace']})")
    return 0


_HANDLERS = {
    "steady": _cmd_steady,
    "sweep": _cmd_sweep,
    "g1": _cmd_g1,
    "g2": _cmd_g2,
    "spectrum": _cmd_spectrum,
    "cumulant": _cmd_cumulant,
    "validate": _cmd_validate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = resolve_config(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _HANDLERS[cfg["command"]](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValidationFailure as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return 4
    except (SolverError, PoorFitError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
