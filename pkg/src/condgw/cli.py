"""Command-line front end.

    condgw <command> --config run.json [--out PATH] [--seed N] [--reps N]

Commands: survival, sample, check, cost, simulate, curve, optimize, infinite.
Tables are CSV (comma, header row, LF); summaries are JSON. Every float is
printed with 12 significant digits so reruns are byte-identical.

Config document (JSON), all keys optional unless a command needs them::

    {
      "k": 10, "K": 10.0, "seed": 1, "reps": 100000,
      "schedule": {
        "default": {"kind": "poisson", "mu": 1.5},
        "levels": {"0": {"kind": "table", "weights": {"0": 1, "2": 1}}},
        "tail_tol": 1e-12
      },
      "system": "height-band",
      "sample":   {"mode": "survive", "count": 10, "level": 0},
      "check":    {"max_children": 2, "systems": ["height-band"], "corrupt_p0": 0.0},
      "optimize": {"bracket": [0.05, 100.0], "tol": 1e-4},
      "curve":    {"mu_min": 0.5, "mu_max": 5.0, "points": 91,
                   "sweep_K": [0.5, 1, 2, 4, 8, 16], "sweep_k": [4, 8, 16, 32],
                   "sweep_k_range": [1, 40], "sweep_K_range": [0.5, 1000, 25]},
      "infinite": {"mu": 2.0}
    }

Exit codes: 0 ok, 2 config error, 3 numeric/conditioning error, 4 check failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import warnings
from pathlib import Path
from typing import Any

import numpy as np

from . import cost, multitype, poisson, survival, trees
from .errors import CondGWError, DistributionError
from .offspring import DEFAULT_TAIL_TOL, OffspringSchedule, Pmf, pmf_from_weights, poisson_pmf

CHECK_THRESHOLD = 1e-8
EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 2, 3, 4


class ConfigError(Exception):
    pass


class CheckFailed(Exception):
    pass


# ---------------------------------------------------------------- config

@dataclasses.dataclass
class RunConfig:
    raw: dict
    k: int
    K: float
    seed: int | None
    reps: int
    out: Path | None

    def section(self, name: str) -> dict:
        value = self.raw.get(name, {})
        if not isinstance(value, dict):
            raise ConfigError(f"'{name}' must be an object")
        return value

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("a seed is required for sampling commands (--seed or \"seed\")")
        return self.seed

    def schedule(self, depth: int | None = None) -> OffspringSchedule:
        return parse_schedule(self.raw.get("schedule"), self.k if depth is None else depth)


def _fmt(x: Any) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def _rounded(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return obj
    if isinstance(obj, float):
        return float(format(obj, ".12g")) if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


def parse_law(doc: Any, where: str, tail_tol: float) -> Pmf:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError(f"{where}: offspring law must be an object with a 'kind'")
    try:
        if doc["kind"] == "poisson":
            return poisson_pmf(float(doc["mu"]), tail_tol)
        if doc["kind"] == "table":
            weights = doc["weights"]
            if not isinstance(weights, dict):
                raise ConfigError(f"{where}: 'weights' must map counts to weights")
            return pmf_from_weights({int(n): float(w) for n, w in weights.items()})
    except (KeyError, TypeError, ValueError, DistributionError) as exc:
        raise ConfigError(f"{where}: invalid offspring law: {exc}") from None
    raise ConfigError(f"{where}: unknown kind {doc['kind']!r} (expected poisson or table)")


def parse_schedule(doc: Any, depth: int) -> OffspringSchedule:
    if not isinstance(doc, dict):
        raise ConfigError("'schedule' must be an object with 'default' and/or 'levels'")
    tail_tol = float(doc.get("tail_tol", DEFAULT_TAIL_TOL))
    default = doc.get("default")
    default_law = parse_law(default, "schedule.default", tail_tol) if default is not None else None
    overrides = {}
    for key, law in (doc.get("levels") or {}).items():
        try:
            level = int(key)
        except ValueError:
            raise ConfigError(f"schedule.levels: level key {key!r} is not an integer") from None
        overrides[level] = parse_law(law, f"schedule.levels[{level}]", tail_tol)
    for level in range(depth):
        if level not in overrides and default_law is None:
            raise ConfigError(f"schedule: level {level} has no offspring law and no default")
    return OffspringSchedule.from_levels(depth, default_law, overrides)


def load_config(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    try:
        k = int(raw.get("k", 1))
        K = float(raw.get("K", 1.0))
        seed = args.seed if args.seed is not None else raw.get("seed")
        seed = None if seed is None else int(seed)
        reps = int(args.reps if args.reps is not None else raw.get("reps", 1000))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scalar in config: {exc}") from None
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    if K < 0:
        raise ConfigError(f"K must be >= 0, got {K}")
    name = raw.get("system")
    if name is not None and name not in multitype.BUILTIN_SYSTEMS:
        raise ConfigError(f"unknown system {name!r}; choose from {sorted(multitype.BUILTIN_SYSTEMS)}")
    return RunConfig(raw, k, K, seed, reps, Path(args.out) if args.out else None)


# ---------------------------------------------------------------- output

def _csv_text(header: list[str], rows, comments: list[str] = ()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(_rounded(obj), indent=2, sort_keys=True) + "\n"


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        cfg.out.parent.mkdir(parents=True, exist_ok=True)
        with open(cfg.out, "w", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------- commands

def cmd_survival(cfg: RunConfig) -> None:
    table = survival.build_survival_table(cfg.schedule(), cfg.k)
    _emit(cfg, _csv_text(["l", "p_lk"], enumerate(table.p)))


def cmd_sample(cfg: RunConfig) -> None:
    opts = cfg.section("sample")
    mode = opts.get("mode", "unconditioned")
    count = int(opts.get("count", 1))
    level = int(opts.get("level", 0))
    rng = np.random.default_rng(cfg.require_seed())
    sched = cfg.schedule()
    if mode == "unconditioned":
        draw = lambda: trees.sample_unconditioned(sched, level, cfg.k, rng)
    elif mode in ("survive", "extinct", "mixture"):
        table = survival.build_survival_table(sched, cfg.k)
        fn = {"survive": survival.sample_q, "extinct": survival.sample_r,
              "mixture": survival.sample_p}[mode]
        draw = lambda: fn(table, level, rng)
    elif mode.startswith("type:"):
        name = cfg.raw.get("system")
        if name is None:
            raise ConfigError("mode 'type:i' needs a 'system' in the config")
        try:
            i = int(mode.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad sample mode {mode!r}") from None
        table = multitype.build_type_table(multitype.get_system(name), sched, cfg.k)
        draw = lambda: multitype.sample_type(table, level, i, rng)
    else:
        raise ConfigError(f"unknown sample mode {mode!r}")
    _emit(cfg, "".join(trees.serialize(draw()) + "\n" for _ in range(count)))


def cmd_check(cfg: RunConfig) -> None:
    opts = cfg.section("check")
    b = int(opts.get("max_children", 2))
    sched = cfg.schedule()
    results = []
    table = survival.build_survival_table(sched, cfg.k)
    delta = float(opts.get("corrupt_p0", 0.0))
    if delta:
        p = list(table.p)
        p[0] = min(max(p[0] + delta, 0.0), 1.0)
        table = dataclasses.replace(table, p=tuple(p))
    tv, dev = survival.equivalence_stats(sched, cfg.k, b, table=table)
    results.append({"check": "survival", "k": cfg.k, "tv": tv, "max_abs_dev": dev})
    names = opts.get("systems")
    if names is None:
        names = [cfg.raw["system"]] if cfg.raw.get("system") else []
    for name in names:
        system = multitype.get_system(name)
        tv, dev = multitype.equivalence_stats(system, sched, cfg.k, b)
        results.append({"check": name, "k": cfg.k, "tv": tv, "max_abs_dev": dev})
    ok = all(r["tv"] <= CHECK_THRESHOLD for r in results)
    _emit(cfg, _json_text({"threshold": CHECK_THRESHOLD, "ok": ok, "results": results}))
    if not ok:
        raise CheckFailed("equivalence check exceeded threshold")


def cmd_cost(cfg: RunConfig) -> None:
    table = cost.build_cost_table(cfg.schedule(), cfg.k, cfg.K)
    rows = [(l, table.D[l], table.E[l] if l < table.k else "") for l in range(table.k + 1)]
    comments = [f"k={table.k}", f"K={_fmt(table.K)}", f"p_0k={_fmt(table.p[0])}",
                f"C_k={_fmt(table.C)}"]
    _emit(cfg, _csv_text(["l", "D", "E"], rows, comments))


def cmd_simulate(cfg: RunConfig) -> None:
    sched = cfg.schedule()
    records: list | None = [] if cfg.section("simulate").get("records") else None
    mean, stderr = cost.monte_carlo_cost(sched, cfg.k, cfg.K, cfg.reps, cfg.require_seed(),
                                         records=records)
    exact = cost.build_cost_table(sched, cfg.k, cfg.K).C
    summary = {"k": cfg.k, "K": cfg.K, "reps": cfg.reps, "seed": cfg.seed, "mean": mean,
               "stderr": stderr, "C_exact": exact,
               "z": (mean - exact) / stderr if stderr > 0 else 0.0}
    if records is not None:
        path = Path(cfg.section("simulate").get("records_path", "records.csv"))
        if cfg.out is not None and not path.is_absolute():
            path = cfg.out.parent / path
        path.write_text(_csv_text(["rep", "cost", "restarts"],
                                  ((r, o.total_cost, o.restarts) for r, o in enumerate(records))))
        summary["records_path"] = str(path)
    _emit(cfg, _json_text(summary))


def cmd_optimize(cfg: RunConfig) -> None:
    opts = cfg.section("optimize")
    bracket = tuple(opts.get("bracket", poisson.DEFAULT_BRACKET))
    opt = poisson.optimize_mu(cfg.k, cfg.K, bracket, float(opts.get("tol", 1e-4)))
    _emit(cfg, _json_text({"k": cfg.k, "K": cfg.K, "mu_opt": opt.mu, "C_opt": opt.cost,
                           "at_boundary": opt.at_boundary}))


def cmd_infinite(cfg: RunConfig) -> None:
    opts = cfg.section("infinite")
    mu = opts.get("mu", cfg.raw.get("mu"))
    if mu is None:
        raise ConfigError("infinite needs 'mu' (top level or in 'infinite')")
    res = poisson.infinite_cost(float(mu), cfg.K)
    _emit(cfg, _json_text(dataclasses.asdict(res)))


def cmd_curve(cfg: RunConfig) -> None:
    opts = cfg.section("curve")
    grid = np.linspace(float(opts.get("mu_min", 0.5)), float(opts.get("mu_max", 5.0)),
                       int(opts.get("points", 91)))
    curve = poisson.cost_curve(cfg.k, cfg.K, grid)
    curve_csv = _csv_text(["mu", "C", "asym_large", "asym_small"], curve.rows(),
                     [f"k={cfg.k}", f"K={_fmt(cfg.K)}", f"mu_opt={_fmt(curve.mu_opt)}",
                      f"C_opt={_fmt(curve.C_opt)}"])
    if cfg.out is None:
        sys.stdout.write(curve_csv)
        return
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "cost_curve.csv").write_text(curve_csv)
    k_lo, k_hi = opts.get("sweep_k_range", [1, 40])
    rows = []
    for K in opts.get("sweep_K", [0.5, 1, 2, 4, 8, 16]):
        for k in range(int(k_lo), int(k_hi) + 1):
            rows.append((K, k, _quiet_opt(k, float(K)).mu))
    (out / "mu_opt_vs_k.csv").write_text(_csv_text(["K", "k", "mu_opt"], rows))
    K_lo, K_hi, n = opts.get("sweep_K_range", [0.5, 1000, 25])
    rows = []
    for k in opts.get("sweep_k", [4, 8, 16, 32]):
        for K in np.geomspace(float(K_lo), float(K_hi), int(n)):
            rows.append((k, K, _quiet_opt(int(k), float(K)).mu))
    (out / "mu_opt_vs_K.csv").write_text(_csv_text(["k", "K", "mu_opt"], rows))


def _quiet_opt(k: int, K: float) -> poisson.Optimum:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return poisson.optimize_mu(k, K)


COMMANDS = {
    "survival": cmd_survival,
    "sample": cmd_sample,
    "check": cmd_check,
    "cost": cmd_cost,
    "simulate": cmd_simulate,
    "curve": cmd_curve,
    "optimize": cmd_optimize,
    "infinite": cmd_infinite,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="condgw", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", help="output file (directory for 'curve')")
    parser.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    parser.add_argument("--reps", type=int, help="Monte Carlo replications (overrides config)")
    return parser


def _fail(kind: str, msg: str, code: int) -> int:
    sys.stderr.write(f"condgw: error[{kind}]: {' '.join(str(msg).split())}\n")
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except CheckFailed as exc:
        return _fail("check", exc, EXIT_CHECK)
    except (CondGWError, ValueError, OverflowError) as exc:
        return _fail("numeric", exc, EXIT_NUMERIC)
    return 0


if __name__ == "__main__":
    sys.exit(main())
