"""Command-line front end: ``randnls <subcommand> --config FILE --out DIR``.

Every run writes ``results.json`` (deterministic for a given config and
version), ``manifest.json`` (timestamps, paths, worker count) and, where it
makes sense, CSV tables and field snapshots.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .evolution import (EvolveParams, NumericalAbort, conserved_series, evolve_nls, evolve_perturbed,
                        write_trajectory)
from .experiments import (ExperimentConfig, SuccessCriteria, STATISTICS, bilinear_scan, content_hash,
                          estimate_tail, make_profile, strichartz_ratios, dilation_pipeline,
                          write_csv, write_json)
from .grid import Field, make_grid, write_snapshot
from .norms import (besov_norm, critical_indices, exponent, lebesgue_norm, modulation_norm,
                    sobolev_norm)
from .pvariation import StepFunction, vp_norm
from .randomization import RandomizationSpec, discarded_energy_fraction, randomize_dilated

log = logging.getLogger("randnls")

SUBCOMMANDS = ("norms", "randomize", "evolve", "tail", "strichartz", "bilinear", "pvar", "dilate")

EXIT_OK, EXIT_UNKNOWN, EXIT_INVALID, EXIT_ABORT = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# schemas

_NUM = {"type": "number"}
_EXP = {"anyOf": [{"type": "number", "minimum": 1}, {"type": "string", "enum": ["inf", "Infinity", "oo"]}]}
_POS_INT = {"type": "integer", "minimum": 1}

GRID = {
    "type": "object",
    "required": ["d", "points_per_axis", "box_length"],
    "properties": {"d": {"type": "integer", "minimum": 1, "maximum": 4},
                   "points_per_axis": {"type": "integer", "minimum": 8},
                   "box_length": {"type": "number", "exclusiveMinimum": 0}},
    "additionalProperties": False,
}
PROFILE = {
    "type": "object",
    "required": ["name"],
    "properties": {"name": {"enum": ["gaussian_bump", "power_law", "plane_wave"]}},
}
RANDOMIZATION = {
    "type": "object",
    "required": ["seed"],
    "properties": {"dist": {"enum": ["complex_gaussian", "rademacher", "uniform", "ones"]},
                   "seed": {"type": "integer", "minimum": 0},
                   "mu": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                   "lattice_radius": {"type": ["integer", "null"], "minimum": 0},
                   "window_kind": {"enum": ["raised_cosine", "smoothstep"]}},
    "additionalProperties": False,
}
EVOLVE = {
    "type": "object",
    "required": ["dt", "t_end"],
    "properties": {"sign": {"enum": ["defocusing", "focusing"]},
                   "dt": {"type": "number", "exclusiveMinimum": 0},
                   "t_end": {"type": "number", "exclusiveMinimum": 0},
                   "sample_every": _POS_INT},
    "additionalProperties": False,
}
NORMS = {
    "type": "object",
    "properties": {"q": _EXP, "r": _EXP, "T": {"type": "number", "exclusiveMinimum": 0},
                   "s": _NUM, "n_times": _POS_INT},
    "additionalProperties": False,
}


def _obj(required, properties):
    return {"type": "object", "required": list(required), "properties": properties}


_EXPERIMENT = {"grid": GRID, "profile": PROFILE, "randomization": RANDOMIZATION, "norms": NORMS,
               "n_samples": _POS_INT, "eta2": _NUM, "eps": _NUM}

SCHEMAS = {
    "norms": _obj(["grid", "profile", "requests"], {
        "grid": GRID, "profile": PROFILE,
        "requests": {"type": "array", "minItems": 1, "items": _obj(["kind"], {
            "kind": {"enum": ["lebesgue", "sobolev", "homogeneous_sobolev", "modulation", "besov"]},
            "p": _EXP, "q": _EXP, "s": _NUM})}}),
    "randomize": _obj(["grid", "profile", "randomization"], {
        "grid": GRID, "profile": PROFILE, "randomization": RANDOMIZATION,
        "n_samples": _POS_INT, "s": _NUM, "snapshots": {"type": "boolean"}}),
    "evolve": _obj(["grid", "profile", "evolve"], {
        "grid": GRID, "profile": PROFILE, "evolve": EVOLVE, "randomization": RANDOMIZATION,
        "perturbed": {"type": "boolean"}}),
    "tail": _obj(["grid", "profile", "randomization", "statistic"], {
        **_EXPERIMENT, "statistic": {"enum": list(STATISTICS)}}),
    "strichartz": _obj(["grid", "family", "q", "r", "T"], {
        "grid": GRID, "q": _EXP, "r": _EXP, "T": {"type": "number", "exclusiveMinimum": 0},
        "n_times": _POS_INT,
        "family": _obj(["count", "kmax", "seed"], {"count": _POS_INT, "kmax": {"type": "number", "exclusiveMinimum": 0},
                                                   "seed": {"type": "integer", "minimum": 0}})}),
    "bilinear": _obj(["grid", "pairs", "samples", "T", "seed"], {
        "grid": GRID, "samples": _POS_INT, "T": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0}, "n_times": _POS_INT,
        "pairs": {"type": "array", "minItems": 1,
                  "items": {"type": "array", "items": _POS_INT, "minItems": 2, "maxItems": 2}}}),
    "pvar": _obj(["p"], {
        "p": {"type": "number", "minimum": 1},
        "fixture": {"type": "string"},
        "step_function": _obj(["knots", "values"], {"knots": {"type": "array", "minItems": 2},
                                                    "vanishes_at_infinity": {"type": "boolean"}})}),
    "dilate": _obj(["grid", "profile", "randomization", "evolve", "mu_list"], {
        **_EXPERIMENT, "evolve": EVOLVE,
        "mu_list": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}},
        "success": _obj([], {"mass_tol": {"type": "number", "exclusiveMinimum": 0},
                             "require_small_data": {"type": "boolean"}})}),
}


def _error_path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        if missing:
            parts.append(missing[0])
    return ".".join(parts) or "<root>"


def validate_config(subcommand: str, config: dict) -> None:
    """Raise :class:`ConfigError` naming the first offending field."""
    validator = jsonschema.Draft202012Validator(SCHEMAS[subcommand])
    errors = sorted(validator.iter_errors(config), key=lambda e: ([str(p) for p in e.absolute_path], e.message))
    if errors:
        err = errors[0]
        raise ConfigError(f"invalid config field '{_error_path(err)}': {err.message}")


def bundled_config(name: str) -> dict:
    text = resources.files("randnls").joinpath("configs", f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def bundled_fixture(name: str) -> dict:
    text = resources.files("randnls").joinpath("fixtures", f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def load_config(subcommand: str, path: str | None) -> tuple[dict, str]:
    """Read a config file, or the bundled default when ``path`` is None or ``builtin:NAME``."""
    if path is None:
        return bundled_config(subcommand), f"builtin:{subcommand}"
    if path.startswith("builtin:"):
        return bundled_config(path.split(":", 1)[1]), path
    try:
        return json.loads(Path(path).read_text(encoding="utf-8")), str(Path(path).resolve())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def apply_seed_override(subcommand: str, config: dict, seed: int | None) -> dict:
    if seed is None:
        return config
    config = copy.deepcopy(config)
    if subcommand in ("strichartz",):
        config.setdefault("family", {})["seed"] = seed
    elif subcommand == "bilinear":
        config["seed"] = seed
    elif "randomization" in config or subcommand in ("randomize", "tail", "dilate"):
        config.setdefault("randomization", {})["seed"] = seed
    return config


# ---------------------------------------------------------------------------
# runners; each returns (results dict, csv tables {name: (header, rows)})


def _grid(cfg):
    g = cfg["grid"]
    return make_grid(g["d"], g["points_per_axis"], float(g["box_length"]))


def _profile(grid, cfg):
    prof = dict(cfg["profile"])
    return make_profile(grid, prof.pop("name"), **prof)


def run_norms(cfg, out: Path, workers: int):
    grid = _grid(cfg)
    phi = _profile(grid, cfg)
    rows = []
    for req in cfg["requests"]:
        kind = req["kind"]
        p, q, s = req.get("p", 2), req.get("q", 2), float(req.get("s", 0.0))
        if kind == "lebesgue":
            val = lebesgue_norm(phi, p)
        elif kind == "sobolev":
            val = sobolev_norm(phi, s)
        elif kind == "homogeneous_sobolev":
            val = sobolev_norm(phi, s, homogeneous=True)
        elif kind == "modulation":
            val = modulation_norm(phi, p, q, s)
        else:
            val = besov_norm(phi, p, q, s)
        rows.append({"kind": kind, "p": str(exponent(p)), "q": str(exponent(q)), "s": s, "value": val})
    ci = critical_indices(grid.d)
    res = {"norms": rows, "critical_indices": asdict(ci)}
    table = (["kind", "p", "q", "s", "value"], [[r["kind"], r["p"], r["q"], r["s"], r["value"]] for r in rows])
    return res, {"norms": table}


def run_randomize(cfg, out: Path, workers: int):
    grid = _grid(cfg)
    phi = _profile(grid, cfg)
    spec = RandomizationSpec.from_dict(cfg["randomization"])
    n = int(cfg.get("n_samples", 1))
    s = float(cfg.get("s", 0.0))
    rows = []
    for i in range(n):
        u = randomize_dilated(phi, spec, i)
        rows.append([i, lebesgue_norm(u, 2), sobolev_norm(u, s)])
        if cfg.get("snapshots", False):
            write_snapshot(u, out / "fields" / f"sample_{i:05d}.rnls")
    res = {"discarded_energy_fraction": discarded_energy_fraction(phi, spec),
           "l2_norm_data": lebesgue_norm(phi, 2), "hs_norm_data": sobolev_norm(phi, s),
           "samples": [{"sample_index": r[0], "l2": r[1], "hs": r[2]} for r in rows]}
    return res, {"samples": (["sample_index", "l2", "hs"], rows)}


def run_evolve(cfg, out: Path, workers: int):
    grid = _grid(cfg)
    phi = _profile(grid, cfg)
    if "randomization" in cfg:
        phi = randomize_dilated(phi, RandomizationSpec.from_dict(cfg["randomization"]))
    params = EvolveParams(**cfg["evolve"])
    if cfg.get("perturbed", False):
        z, v = evolve_perturbed(phi, params)
        traj = z + v
        write_trajectory(v, out / "v_trajectory", params.sign)
    else:
        traj = evolve_nls(phi, params)
    write_trajectory(traj, out / "trajectory", params.sign)
    series = conserved_series(traj, params.sign)
    rows = [[float(t), c.mass, c.hamiltonian] + [float(m) for m in c.momentum] for t, c in zip(traj.times, series)]
    header = ["time", "mass", "hamiltonian"] + [f"momentum_{k}" for k in range(grid.d)]
    m0 = series[0].mass
    res = {"n_samples": len(traj.times), "t_end": float(traj.times[-1]),
           "max_relative_mass_drift": max(abs(c.mass - m0) for c in series) / m0 if m0 else 0.0,
           "conserved": [c.to_dict() for c in series]}
    return res, {"conserved": (header, rows)}


def _experiment(cfg, workers):
    return ExperimentConfig.from_dict(cfg, workers=workers)


def run_tail(cfg, out: Path, workers: int):
    exp = _experiment(cfg, workers)
    est = estimate_tail(exp, cfg["statistic"])
    res = {"statistic": cfg["statistic"], "tail": est.to_dict()}
    rows = [[i, x] for i, x in enumerate(est.samples)]
    curve = [[lam, s] for lam, s in zip(est.thresholds, est.survival)]
    return res, {"samples": (["sample_index", "statistic"], rows),
                 "survival": (["threshold", "survival"], curve)}


def run_strichartz(cfg, out: Path, workers: int):
    grid = _grid(cfg)
    fam = cfg["family"]
    band = grid.xi_abs <= float(fam["kmax"])
    fields = []
    for i in range(fam["count"]):
        rng = np.random.default_rng([fam["seed"], i])
        spec = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * band
        fields.append(Field(grid, spec, "frequency"))
    ratios = strichartz_ratios(fields, cfg["q"], cfg["r"], float(cfg["T"]), int(cfg.get("n_times", 32)))
    res = {"sup_ratio": max(ratios) if ratios else 0.0, "ratios": ratios}
    return res, {"ratios": (["datum_index", "ratio"], [[i, r] for i, r in enumerate(ratios)])}


def run_bilinear(cfg, out: Path, workers: int):
    grid = _grid(cfg)
    table = bilinear_scan(grid, [tuple(p) for p in cfg["pairs"]], int(cfg["samples"]), float(cfg["T"]),
                          int(cfg["seed"]), int(cfg.get("n_times", 32)))
    rows = [[n1, n2, r] for (n1, n2), r in table.items()]
    return {"table": [{"N1": a, "N2": b, "max_ratio": r} for a, b, r in rows]}, \
        {"table": (["N1", "N2", "max_ratio"], rows)}


def run_pvar(cfg, out: Path, workers: int):
    if "step_function" in cfg:
        sf = cfg["step_function"]
        u = StepFunction.from_dict(sf)
    else:
        u = StepFunction.from_dict(bundled_fixture(cfg.get("fixture", "step_010")))
    val = vp_norm(u, float(cfg["p"]))
    return {"p": float(cfg["p"]), "vp_norm": val, "n_values": int(len(u.values))}, {}


def run_dilate(cfg, out: Path, workers: int):
    exp = _experiment(cfg, workers)
    phi = exp.make_data()
    sc = cfg.get("success", {})
    criteria = SuccessCriteria(eta2=exp.eta2, mass_tol=float(sc.get("mass_tol", 1e-6)),
                               require_small_data=bool(sc.get("require_small_data", False)))
    reports = dilation_pipeline(phi, cfg["mu_list"], exp, criteria)
    rows = [[r["mu"], i, x] for r in reports for i, x in enumerate(r["statistics"])]
    summary = [[r["mu"], r["hdot_norm"], r["hdot_predicted"], r["small_fraction"], r["success_fraction"]]
               for r in reports]
    return {"reports": reports}, {
        "samples": (["mu", "sample_index", "statistic"], rows),
        "summary": (["mu", "hdot_norm", "hdot_predicted", "small_fraction", "success_fraction"], summary)}


RUNNERS = {"norms": run_norms, "randomize": run_randomize, "evolve": run_evolve, "tail": run_tail,
           "strichartz": run_strichartz, "bilinear": run_bilinear, "pvar": run_pvar, "dilate": run_dilate}


# ---------------------------------------------------------------------------
# driver


@dataclass
class RunManifest:
    config_path: str
    config: dict
    version: str
    started: str
    finished: str
    out_dir: str
    input_hash: str
    workers: int
    status: str


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="randnls", description="Randomized-data NLS experiments.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON config file, or builtin:NAME (default: bundled config)")
    ap.add_argument("--out", help="output directory (default: randnls-out/<subcommand>)")
    ap.add_argument("--workers", type=int, help="worker processes (default: $RANDNLS_WORKERS or 1)")
    ap.add_argument("--seed-override", type=int, help="replace the config's random seed")
    ap.add_argument("--quiet", action="store_true", help="suppress progress and summary output")
    ap.add_argument("--version", action="version", version=f"randnls {__version__}")
    return ap


def _workers(flag: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("RANDNLS_WORKERS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"RANDNLS_WORKERS must be an integer, got {env!r}") from None
    return 1


def _summary(subcommand: str, res: dict) -> str:
    if subcommand == "pvar":
        return repr(float(res['vp_norm']))
    if subcommand == "tail":
        fit = res["tail"]["fit"]
        if fit["valid"]:
            return f"slope={fit['slope']:.6g} r_squared={fit['r_squared']:.4f}"
        return "fit invalid"
    if subcommand == "dilate":
        return " ".join(f"mu={r['mu']:g}:success={r['success_fraction']:.3f}" for r in res["reports"])
    return "ok"


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and not argv[0].startswith("-") and argv[0] not in SUBCOMMANDS:
        print(f"randnls: unknown subcommand {argv[0]!r}; expected one of {', '.join(SUBCOMMANDS)}",
              file=sys.stderr)
        return EXIT_UNKNOWN
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    started = _now()
    try:
        workers = _workers(args.workers)
        if workers < 1:
            raise ConfigError("--workers must be >= 1")
        config, config_path = load_config(args.subcommand, args.config)
        config = apply_seed_override(args.subcommand, config, args.seed_override)
        validate_config(args.subcommand, config)
        out = Path(args.out or Path("randnls-out") / args.subcommand)
        out.mkdir(parents=True, exist_ok=True)
        input_hash = content_hash({"subcommand": args.subcommand, "config": config}, __version__)
        res, tables = RUNNERS[args.subcommand](config, out, workers)
        if "randomization" in config:
            # resolved spec, so defaults such as the window kind are always on record
            res["randomization"] = RandomizationSpec.from_dict(config["randomization"]).to_dict()
    except (ConfigError, ValueError) as exc:
        print(f"randnls: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalAbort as exc:
        print(f"randnls: numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    write_json(out / "results.json", {"subcommand": args.subcommand, "version": __version__,
                                      "input_hash": input_hash, "config": config, "results": res})
    for name, (header, rows) in tables.items():
        write_csv(out / f"{name}.csv", header, rows)
    manifest = RunManifest(config_path, config, __version__, started, _now(), str(out.resolve()),
                           input_hash, workers, "ok")
    write_json(out / "manifest.json", asdict(manifest))
    if not args.quiet:
        print(_summary(args.subcommand, res))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
