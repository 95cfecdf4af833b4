"""Command-line experiment driver.

``rotsync <command> --config cfg.json --seed S --out DIR [--workers W]``

Each run writes ``report.json`` (the validated config plus results) and CSV
data files into ``DIR``. Exit status: 0 on success, 1 when the config does
not validate, 2 when the computation itself fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import BACKEND, __version__
from .circle import Word
from .classifier import Inconclusive, decide, rotation_spectrum
from .dynamics import (Direction, estimate_stationary, sample_word, stationarity_ks, sync_statistic)
from .fixtures import emit_fixtures, resolve_system
from .reconstruct import (ActionPair, ReconstructParams, build_conjugacy, build_conjugacy_factorizable)
from .rotnum import c_value, translation_number, word_translation_number
from . import rng

COMMANDS = ("rotnum", "arar", "sync", "measure", "classify", "reconstruct", "fixtures")

# name -> (type, default, low, high); None default means required
SCHEMA = {
    "rotnum": {"system": (object, None, None, None), "words": (list, [], None, None),
               "tol": (float, 1e-4, 1e-12, 0.5), "grid": (int, 4096, 8, 1 << 16),
               "q_max": (int, 64, 1, 4096)},
    "arar": {"system": (object, "arar", None, None), "f": (int, 1, 1, None), "g": (int, 2, 1, None),
             "tol": (float, 1e-4, 1e-12, 0.5)},
    "sync": {"system": (object, None, None, None), "n": (int, 200, 1, 10**6), "m": (int, 16, 3, 10**6),
             "samples": (int, 100, 1, 10**6)},
    "measure": {"system": (object, None, None, None), "direction": (str, "forward", None, None),
                "n_burn": (int, 1000, 1, 10**7), "M": (int, 10_000, 1, 10**8), "B": (int, 1024, 1, 10**7)},
    "classify": {"system": (object, None, None, None), "N": (int, 200, 1, 10**6),
                 "M": (int, 10_000, 1, 10**8)},
    "reconstruct": {"first": (object, None, None, None), "second": (object, None, None, None),
                    "type": (str, "synchronizing", None, None), "l": (int, 2, 2, 12),
                    "stationary_M": (int, 100_000, 100, 10**8), "delta_M": (int, 2000, 10, 10**7),
                    "m_good": (int, 64, 1, 10**5), "route_b": (bool, True, None, None)},
    "fixtures": {},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    seed: int
    output_dir: Path
    params: dict = field(default_factory=dict)
    workers: int = 1

    def to_dict(self) -> dict:
        return {"command": self.command, "seed": self.seed, "workers": self.workers, "params": self.params}


def _check(name, value, spec):
    typ, _, lo, hi = spec
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number")
        value = float(value)
    elif typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer")
    elif typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false")
    elif typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string")
    elif typ is list:
        if not isinstance(value, list):
            raise ConfigError(f"{name} must be a list")
    if lo is not None and value < lo:
        raise ConfigError(f"{name} must be >= {lo}")
    if hi is not None and value > hi:
        raise ConfigError(f"{name} must be <= {hi}")
    return value


def validate(command: str, raw: dict, seed, output_dir, workers: int = 1) -> ExperimentConfig:
    """Fill defaults, check types and ranges, and resolve systems (which validates them)."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if seed is None:
        raise ConfigError("a seed is required")
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if workers < 1:
        raise ConfigError("workers must be positive")
    schema = SCHEMA[command]
    unknown = set(raw) - set(schema) - {"command", "seed"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    params = {}
    for name, spec in schema.items():
        if name in raw:
            params[name] = _check(name, raw[name], spec)
        elif spec[1] is None:
            raise ConfigError(f"missing required key {name!r}")
        else:
            params[name] = spec[1]
    for key in ("system", "first", "second"):
        if key in params:
            try:
                resolve_system(params[key])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"invalid {key}: {exc}") from exc
    if command == "measure" and params["direction"] not in ("forward", "inverse"):
        raise ConfigError("direction must be forward or inverse")
    if command == "reconstruct" and params["type"] not in ("synchronizing", "factorizable"):
        raise ConfigError("type must be synchronizing or factorizable")
    if command == "arar":
        k = resolve_system(params["system"]).k
        if params["f"] > k or params["g"] > k:
            raise ConfigError(f"generator index out of range 1..{k}")
    if command == "rotnum":
        k = resolve_system(params["system"]).k
        for w in params["words"]:
            if not isinstance(w, list) or not all(isinstance(i, int) and 1 <= i <= k for i in w):
                raise ConfigError(f"words are lists of letters in 1..{k}")
    return ExperimentConfig(command, int(seed), Path(output_dir), params, workers)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _tn_dict(t) -> dict:
    return {"value": t.value, "error_bound": t.error_bound, "kind": t.kind.value,
            "p": t.p if t.exact else None, "q": t.q if t.exact else None}


def run_rotnum(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    sys_ = resolve_system(p["system"])
    kw = dict(grid=p["grid"], q_max=p["q_max"])
    gens = [_tn_dict(translation_number(g, p["tol"], **kw)) for g in sys_.generators]
    words = [_tn_dict(word_translation_number(sys_, Word(w), p["tol"], **kw)) for w in p["words"]]
    _write_csv(cfg.output_dir / "translation_numbers.csv", ["item", "kind", "value", "error_bound"],
               [[f"f{i + 1}", d["kind"], d["value"], d["error_bound"]] for i, d in enumerate(gens)]
               + [[" ".join(map(str, w)), d["kind"], d["value"], d["error_bound"]]
                  for w, d in zip(p["words"], words)])
    return {"generators": gens, "words": words}


def run_arar(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    sys_ = resolve_system(p["system"])
    f, g = sys_.generators[p["f"] - 1], sys_.generators[p["g"] - 1]
    return {"c": c_value(f, g, p["tol"])}


def run_sync(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    sys_ = resolve_system(p["system"])
    spreads = []
    for s in range(p["samples"]):
        w = sample_word(sys_.nu, p["n"], rng.derive(cfg.seed, "sync"), s)
        spreads.append(sync_statistic(sys_, w, p["m"]).spread)
    spreads = np.array(spreads)
    _write_csv(cfg.output_dir / "spreads.csv", ["sample", "spread"], enumerate(spreads.tolist()))
    return {"median_spread": float(np.median(spreads)), "p95_spread": float(np.percentile(spreads, 95))}


def run_measure(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    sys_ = resolve_system(p["system"])
    mu = estimate_stationary(sys_, Direction(p["direction"]), p["n_burn"], p["M"], cfg.seed)
    mu.to_csv(cfg.output_dir / "samples.csv")
    mu.histogram(p["B"]).to_csv(cfg.output_dir / "histogram.csv")
    return {"ks_to_uniform": mu.ks_uniform(), "stationarity_ks": stationarity_ks(sys_, mu, p["direction"])}


def run_classify(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    sys_ = resolve_system(p["system"])
    spec = rotation_spectrum(sys_, p["N"], p["M"], cfg.seed)
    _write_csv(cfg.output_dir / "spectrum.csv", ["rotation_number"], ([v] for v in spec.samples.tolist()))
    report = decide(spec, p["N"])
    report.seed = cfg.seed
    if report.verdict is None:
        raise Inconclusive(report)
    return report.to_dict()


def run_reconstruct(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    pair = ActionPair(resolve_system(p["first"]), resolve_system(p["second"]))
    params = ReconstructParams(seed=cfg.seed, stationary_M=p["stationary_M"], delta_M=p["delta_M"],
                               m_good=p["m_good"], good_budget=20 * p["m_good"], route_b=p["route_b"])
    if p["type"] == "factorizable":
        rec = build_conjugacy_factorizable(pair, p["l"], params)
    else:
        rec = build_conjugacy(pair, params)
    rec.table.to_csv(cfg.output_dir / "conjugacy.csv")
    return json.loads(rec.to_json())


def run_fixtures(cfg: ExperimentConfig) -> dict:
    paths = emit_fixtures(cfg.output_dir / "fixtures")
    return {"files": [str(p.relative_to(cfg.output_dir)) for p in paths]}


RUNNERS = {"rotnum": run_rotnum, "arar": run_arar, "sync": run_sync, "measure": run_measure,
           "classify": run_classify, "reconstruct": run_reconstruct, "fixtures": run_fixtures}


def _error_report(exc: BaseException) -> dict:
    out = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, Inconclusive):
        out["report"] = exc.report.to_dict()
    return out


def run(cfg: ExperimentConfig) -> int:
    """Execute a validated config; returns the exit status."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    report = {"config": cfg.to_dict(), "version": __version__, "backend": BACKEND}
    try:
        report["results"] = RUNNERS[cfg.command](cfg)
        status = 0
    except Exception as exc:  # module failures become a structured report
        report["error"] = _error_report(exc)
        status = 2
    (cfg.output_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rotsync", description="Rotation-number experiments on circle actions.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="JSON file with the command's parameters")
    ap.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides the config)")
    ap.add_argument("--out", type=Path, required=True, help="output directory")
    ap.add_argument("--workers", type=int, default=1, help="parallelism cap; results do not depend on it")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = json.loads(args.config.read_text()) if args.config else {}
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        if raw.get("command", args.command) != args.command:
            raise ConfigError("config command does not match the command line")
        seed = args.seed if args.seed is not None else raw.get("seed")
        cfg = validate(args.command, raw, seed, args.out, args.workers)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"rotsync: {exc}", file=sys.stderr)
        return 1
    status = run(cfg)
    if status:
        print(f"rotsync: {cfg.command} failed, see {cfg.output_dir / 'report.json'}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
