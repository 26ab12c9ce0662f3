"""Command-line front end: ``qrobust <command> CONFIG.json``.

Configs are JSON, validated against a schema before any computation.
Grid outputs are CSV (comma, '.', LF, 17 significant digits); scalar and
verdict outputs are JSON.  Every output file starts with a '#' line carrying
the config hash and master seed.  Exit codes: 0 ok, 2 config error,
3 computation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import measures, metrics, models
from .estimators import Estimator
from .functionals import DISTRIBUTION_FORM, QUANTILE_AVERAGE, Functional, avar
from .measures import DiscreteMeasure, GaugeFunction
from .robustness import (DEFAULT_DEPTH_EXPONENT, DEFAULT_IOR_GRID, ARShift, MixtureDirac, classify,
                         cramer_rao_check, ior_estimate, path_from_dict, robustness_surface)
from .seeding import MASK64, SeedSpec

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class ConfigError(Exception):
    pass


# --- schemas ---------------------------------------------------------------

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}
_SEED = {"type": "integer", "minimum": 0, "maximum": MASK64}
_NUM_LIST = {"type": "array", "items": _NUM, "minItems": 1}
_INT_LIST = {"type": "array", "items": _POS_INT, "minItems": 1}
_OUT = {"type": "string"}

MEASURE = {
    "oneOf": [
        {"type": "object", "required": ["dim", "atoms", "masses"], "additionalProperties": False,
         "properties": {"dim": _POS_INT, "atoms": {"type": "array"}, "masses": _NUM_LIST}},
        {"type": "object", "required": ["file"], "additionalProperties": False,
         "properties": {"file": {"type": "string"}}},
        {"type": "object", "required": ["uniform"], "additionalProperties": False,
         "properties": {"uniform": {
             "type": "object", "required": ["low", "high", "points"], "additionalProperties": False,
             "properties": {"low": _NUM, "high": _NUM, "points": _POS_INT}}}},
    ]
}

INNOVATION = {
    "type": "object", "required": ["kind"], "additionalProperties": False,
    "properties": {"kind": {"enum": ["normal", "uniform", "discrete"]}, "scale": _NUM, "measure": MEASURE,
                   "recenter": {"type": "boolean"}, "contamination_weight": _NUM, "contamination_atom": _NUM},
}

FUNCTIONAL = {
    "type": "object", "required": ["kind"], "additionalProperties": False,
    "properties": {"kind": {"enum": list(Functional.KINDS)}, "p": _NUM, "s": _NUM, "alpha": _NUM,
                   "n": _POS_INT, "atom_cap": _POS_INT},
}

ESTIMATOR = {
    "type": "object", "required": ["kind"], "additionalProperties": False,
    "properties": {"kind": {"enum": ["plug_in", "mle", "yule_walker", "premium"]}, "functional": FUNCTIONAL,
                   "family": {"enum": list(models.FAMILIES)}, "alpha": _NUM, "atom_cap": _POS_INT,
                   "mc_fallback_size": _POS_INT},
}

PATH = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["kind", "family", "theta"],
         "properties": {"kind": {"const": "param_shift"}, "family": {"enum": list(models.FAMILIES)},
                        "theta": _NUM, "sigma2": _NUM, "direction": _NUM,
                        "delta_max": {"oneOf": [_NUM, {"const": "inf"}]}}},
        {"type": "object", "additionalProperties": False, "required": ["kind", "base"],
         "properties": {"kind": {"const": "mixture_dirac"}, "base": MEASURE, "c": _NUM, "K": _NUM,
                        "delta_max": _NUM}},
        {"type": "object", "additionalProperties": False, "required": ["kind", "a", "innovation"],
         "properties": {"kind": {"const": "ar_shift"}, "a": _NUM, "innovation": INNOVATION,
                        "shift_coefficient": {"type": "boolean"}, "contamination_atom": _NUM,
                        "delta_max": {"oneOf": [_NUM, {"const": "inf"}]}}},
    ]
}


def _schema(command, required, props):
    props = dict(props, command={"const": command}, output=_OUT)
    return {"type": "object", "additionalProperties": False, "required": ["command", *required],
            "properties": props}


SURFACE_COMMON = {"delta_grid": _NUM_LIST, "n_grid": _INT_LIST, "R": {"type": "integer", "minimum": 2},
                  "master_seed": _SEED, "eps_target": _NUM, "n0": _POS_INT, "verdict_output": _OUT}

SCHEMAS = {
    "metric": _schema("metric", ["mu1", "mu2"], {
        "mu1": MEASURE, "mu2": MEASURE, "psi_p": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "tol": _NUM}),
    "avar": _schema("avar", ["measure", "alphas"], {"measure": MEASURE, "alphas": _NUM_LIST}),
    "premium-experiment": _schema("premium-experiment", ["base", "alpha", "K", "c", "delta_grid", "n_grid", "R",
                                                         "master_seed"], {
        **SURFACE_COMMON, "base": MEASURE, "alpha": _NUM, "K": _NUM, "c": _NUM,
        "unbounded_multiple": _NUM, "bounded_multiple": _NUM}),
    "surface": _schema("surface", ["path", "estimator", "delta_grid", "n_grid", "R", "master_seed"], {
        **SURFACE_COMMON, "path": PATH, "estimator": ESTIMATOR}),
    "ior": _schema("ior", ["functional"], {
        "functional": FUNCTIONAL, "grid": _NUM_LIST, "base": MEASURE,
        "depth_exponent": {"type": "integer", "minimum": 1, "maximum": 1000}}),
    "parametric": _schema("parametric", ["master_seed"], {
        "master_seed": _SEED,
        "checks": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["family", "theta", "n", "R"],
            "properties": {"family": {"enum": list(models.FAMILIES)}, "theta": _NUM, "sigma2": _NUM,
                           "n": _POS_INT, "R": {"type": "integer", "minimum": 2}}}},
        "l1_sweep": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["family", "theta", "deltas"],
            "properties": {"family": {"enum": list(models.FAMILIES)}, "theta": _NUM, "sigma2": _NUM,
                           "deltas": _NUM_LIST}}}}),
    "yw-experiment": _schema("yw-experiment", ["a", "innovation", "delta_grid", "n_grid", "R", "master_seed"], {
        **SURFACE_COMMON, "a": _NUM, "innovation": INNOVATION}),
}


# --- helpers ---------------------------------------------------------------

def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    return f"{float(x):.17g}"


def csv_text(header: list[str], rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


class Writer:
    """Writes outputs with the provenance header; stdout when no path is given."""

    def __init__(self, cfg: dict, base_dir: Path, override: str | None = None):
        seed = cfg.get("master_seed")
        self.header = f"# config_sha256={config_hash(cfg)} master_seed={'none' if seed is None else seed}\n"
        out = override or cfg.get("output")
        self.path = None if out is None else (base_dir / out)
        self.base_dir = base_dir
        self.cfg = cfg

    def write(self, text: str, key: str = "output", suffix: str | None = None):
        path = self.path
        if key != "output":
            explicit = self.cfg.get(key)
            if explicit is not None:
                path = self.base_dir / explicit
            elif path is not None:
                path = path.with_suffix(suffix)
        if path is None:
            sys.stdout.write(self.header + text)
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(self.header + text)


def load_measure(spec: dict, base_dir: Path) -> DiscreteMeasure:
    if "file" in spec:
        with open(base_dir / spec["file"]) as fh:
            return DiscreteMeasure.from_dict(json.load(fh))
    if "uniform" in spec:
        u = spec["uniform"]
        if not u["high"] > u["low"]:
            raise ConfigError("uniform needs high > low")
        k = u["points"]
        # midpoints of k equal cells
        return measures.empirical(u["low"] + (np.arange(k) + 0.5) * (u["high"] - u["low"]) / k)
    return DiscreteMeasure.from_dict(spec)


def _resolve_measures(d, base_dir):
    """Replace every nested measure spec that is not inline by an inline one."""
    if isinstance(d, dict):
        if "file" in d or "uniform" in d:
            return load_measure(d, base_dir).to_dict()
        return {k: _resolve_measures(v, base_dir) for k, v in d.items()}
    return d


# --- commands --------------------------------------------------------------

def cmd_metric(cfg, base_dir, threads, w: Writer):
    mu1, mu2 = load_measure(cfg["mu1"], base_dir), load_measure(cfg["mu2"], base_dir)
    if mu1.dim != mu2.dim:
        raise ConfigError("measures live in different dimensions")
    tol = cfg.get("tol", 1e-9)
    ps = cfg.get("psi_p", [])
    rho = metrics.prohorov(mu1, mu2, tol)
    header = ["prohorov", "wasserstein1"] + [f"psi_{p:g}" for p in ps]
    row = [rho, metrics.wasserstein1(mu1, mu2) if mu1.dim == 1 else None]
    row += [metrics.psi_distance(mu1, mu2, GaugeFunction(p), tol, weak=rho) for p in ps]
    w.write(csv_text(header, [row]))


def cmd_avar(cfg, base_dir, threads, w: Writer):
    mu = load_measure(cfg["measure"], base_dir)
    rows = [[a, avar(mu, a, QUANTILE_AVERAGE), avar(mu, a, DISTRIBUTION_FORM)] for a in cfg["alphas"]]
    w.write(csv_text(["alpha", "quantile_average", "distribution_form"], rows))


def _surface_outputs(cfg, surface, w: Writer, summary=None):
    w.write(surface.to_csv())
    if "eps_target" in cfg:
        verdict = classify(surface, cfg["eps_target"], cfg.get("n0"))
        payload = verdict.to_dict()
        payload.update(summary or {})
        w.write(json_text(payload), key="verdict_output", suffix=".verdict.json")
    elif summary is not None:
        w.write(json_text(summary), key="verdict_output", suffix=".verdict.json")


def _surface_summary(surface):
    return {"config_master_seed": surface.master_seed, "boundary_hits": surface.boundary_hits,
            "fallback_runs": surface.fallback_runs, "noise_floor": list(surface.noise_floor)}


def cmd_surface(cfg, base_dir, threads, w: Writer):
    path = path_from_dict(_resolve_measures(cfg["path"], base_dir))
    est = Estimator.from_dict(cfg["estimator"])
    surface = robustness_surface(path, est, cfg["delta_grid"], cfg["n_grid"], cfg["R"],
                                 SeedSpec(cfg["master_seed"]), threads)
    _surface_outputs(cfg, surface, w, summary=_surface_summary(surface))


def premium_signature(cfg, base: DiscreteMeasure, threads: int = 1) -> dict:
    """Run the unbounded (K / delta) and bounded (constant c) mixture paths on a shared grid."""
    est = Estimator("premium", alpha=cfg["alpha"])
    seed = SeedSpec(cfg["master_seed"])
    grids = (cfg["delta_grid"], cfg["n_grid"], cfg["R"])
    unb = robustness_surface(MixtureDirac(base, K=cfg["K"]), est, *grids, seed, threads)
    bnd = robustness_surface(MixtureDirac(base, c=cfg["c"]), est, *grids, seed, threads)
    hi, lo = cfg.get("unbounded_multiple", 5.0), cfg.get("bounded_multiple", 2.0)
    pos = [i for i, d in enumerate(unb.delta_grid) if d > 0]
    smallest = min(pos, key=lambda i: unb.delta_grid[i])
    unb_ratio = unb.eps_hat[pos] / unb.noise_floor
    bnd_ratio = bnd.eps_hat[smallest] / bnd.noise_floor
    return {
        "unbounded": unb, "bounded": bnd,
        "unbounded_min_ratio": float(unb_ratio.min()),
        "bounded_ratio_at_smallest_delta": [float(r) for r in bnd_ratio],
        "smallest_delta": unb.delta_grid[smallest],
        "unbounded_ok": bool(np.all(unb_ratio >= hi)),
        "bounded_ok": bool(np.all(bnd_ratio <= lo)),
        "unbounded_multiple": hi, "bounded_multiple": lo,
    }


def cmd_premium(cfg, base_dir, threads, w: Writer):
    sig = premium_signature(cfg, load_measure(cfg["base"], base_dir), threads)
    rows = []
    for name in ("unbounded", "bounded"):
        rows += [(name, *r) for r in sig[name].rows()]
    w.write(csv_text(["path", "delta", "n", "eps_hat", "noise_floor", "R", "master_seed"], rows))
    summary = {k: v for k, v in sig.items() if k not in ("unbounded", "bounded")}
    summary["signature_ok"] = summary["unbounded_ok"] and summary["bounded_ok"]
    w.write(json_text(summary), key="verdict_output", suffix=".verdict.json")


def cmd_ior(cfg, base_dir, threads, w: Writer):
    fn = Functional.from_dict(cfg["functional"])
    base = load_measure(cfg["base"], base_dir) if "base" in cfg else None
    res = ior_estimate(fn, cfg.get("grid", DEFAULT_IOR_GRID), base,
                       cfg.get("depth_exponent", DEFAULT_DEPTH_EXPONENT))
    w.write(json_text(res.to_dict()))


def cmd_parametric(cfg, base_dir, threads, w: Writer):
    seed = SeedSpec(cfg["master_seed"])
    header = ["row", "family", "theta", "n", "R", "delta", "value", "reference", "ratio", "se"]
    rows = []
    for i, c in enumerate(cfg.get("checks", [])):
        fam = models.ParametricFamily(c["family"], c["theta"], c.get("sigma2", 1.0))
        rep = cramer_rao_check(fam, c["theta"], c["n"], c["R"], seed.spawn(i), threads)
        rows.append(["cramer_rao", fam.kind, c["theta"], c["n"], c["R"], None, rep.variance, rep.bound,
                     rep.ratio, rep.ratio_se])
    for s in cfg.get("l1_sweep", []):
        fam = models.ParametricFamily(s["family"], s["theta"], s.get("sigma2", 1.0))
        for d in s["deltas"]:
            rows.append(["l1_distance", fam.kind, s["theta"], None, None, d,
                         models.l1_density_distance(fam, s["theta"], s["theta"] + d), None, None, None])
    w.write(csv_text(header, rows))


def cmd_yw(cfg, base_dir, threads, w: Writer):
    law = models.innovation_from_dict(_resolve_measures(cfg["innovation"], base_dir))
    path = ARShift(cfg["a"], law)
    surface = robustness_surface(path, Estimator("yule_walker"), cfg["delta_grid"], cfg["n_grid"], cfg["R"],
                                 SeedSpec(cfg["master_seed"]), threads)
    summary = _surface_summary(surface)
    summary["mean_estimate"] = {str(n): float(m) for n, m in zip(surface.n_grid, surface.reference_mean)}
    summary["innovations_absolutely_continuous"] = law.absolutely_continuous
    if not law.absolutely_continuous:
        summary["note"] = "discrete or contaminated innovations: outside the consistency hypotheses"
    _surface_outputs(cfg, surface, w, summary=summary)


COMMANDS = {
    "metric": cmd_metric, "avar": cmd_avar, "premium-experiment": cmd_premium, "surface": cmd_surface,
    "ior": cmd_ior, "parametric": cmd_parametric, "yw-experiment": cmd_yw,
}


def load_config(path: str, command: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if isinstance(cfg, dict) and "command" not in cfg:
        cfg = dict(cfg, command=command)
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config does not match the {command} schema: {exc.message}") from exc
    return cfg


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qrobust", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", help="JSON experiment config")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (wall time only)")
        sp.add_argument("--output", help="override the config's output path")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    base_dir = Path(args.config).resolve().parent
    writer = Writer(cfg, Path.cwd() if args.output else base_dir, args.output)
    try:
        COMMANDS[args.command](cfg, base_dir, args.threads, writer)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError, TypeError) as exc:
        # raised while building objects from a schema-valid config, e.g. theta out of range
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
