"""
Command-line scenario runner.

A scenario file is TOML with the raw constants at top level (cost rates in
$/h, capacity in veh/min) and optionally a ``budgets`` list and a ``[sweep]``
table::

    alpha = 6.4
    beta = 3.9
    gamma = 15.21
    n_commuters = 9000
    capacity = 60
    delta_bar = 20
    budgets = [0, 8660, "star"]

    [sweep]
    min = 0
    max = "star"
    count = 20

``"star"`` stands for the budget that removes congestion entirely.  For every
budget the runner writes ``queue_<budget>.csv`` and ``price_<budget>.csv``;
``report.csv`` holds one row per budget, ``sweep.csv`` the sweep summary and
``schema.csv`` documents every column written.
"""

from __future__ import annotations

import argparse
import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import io
import logging
import math
from pathlib import Path
import re
import sys

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .core import ModelError, ScenarioParams, TimeGrid, canonical_params
from .dynamics import evolve_queue
from .limited import LimitedBudgetSolution, budget_star, solve_limited, tstt_constants
from .numerics import BracketError, MonotonicityError
from .oracle import best_response_dynamics

log = logging.getLogger("pev_bottleneck")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ORACLE = 0, 1, 2, 3

_PARAM_KEYS = ("alpha", "beta", "gamma", "n_commuters", "capacity", "delta_bar")
_KNOWN_KEYS = set(_PARAM_KEYS) | {"p_bar", "grid_dt", "budgets", "sweep", "out_dir", "seed"}

SCHEMA = [
    ("queue_<budget>.csv", "t", "min", "departure time on the grid"),
    ("queue_<budget>.csv", "queue", "veh", "queue length Q(t)"),
    ("queue_<budget>.csv", "waiting", "min", "waiting time Q(t)/s"),
    ("price_<budget>.csv", "t", "min", "departure time on the grid"),
    ("price_<budget>.csv", "discount", "$/min", "electricity price discount p(t)"),
    ("price_<budget>.csv", "charging_time", "min", "optimal charging duration"),
    ("price_<budget>.csv", "departure_rate", "veh/min", "equilibrium departure rate r(t)"),
    ("report.csv / sweep.csv", "m_dollars", "$", "nominal budget M$"),
    ("report.csv / sweep.csv", "m_perceived", "$", "perceived budget Mper"),
    ("report.csv / sweep.csv", "gap", "$", "nominal inefficiency gap M$ - Mper"),
    ("report.csv / sweep.csv", "gap_ratio", "1", "gap / M$ (empty at M$ = 0)"),
    ("report.csv / sweep.csv", "tstt", "min^2", "integral of the waiting time over the rush hour"),
    ("report.csv / sweep.csv", "tstt_ratio", "1", "tstt / tstt without incentive"),
    ("report.csv / sweep.csv", "t_ell", "min", "start of the congestion window"),
    ("report.csv / sweep.csv", "t_dblprime", "min", "time of the queue peak"),
    ("report.csv / sweep.csv", "t_r", "min", "end of the congestion window"),
    ("report.csv / sweep.csv", "queue_peak", "veh", "largest simulated queue"),
    ("report.csv / sweep.csv", "m_spent", "$", "cash paid out when every commuter charges optimally"),
    ("report.csv / sweep.csv", "equilibrium_cost", "$", "common commuter cost"),
    ("report.csv / sweep.csv", "flags", "-", "';'-separated flags, e.g. over_budget"),
    ("report.csv", "oracle_converged", "-", "best-response run converged (with --with-oracle)"),
    ("report.csv", "oracle_max_improvement", "$", "largest gain an agent could still obtain"),
    ("report.csv", "oracle_tstt", "min^2", "tstt of the best-response departure profile"),
    ("report.csv", "oracle_tstt_dev", "min^2", "oracle_tstt - tstt"),
]

REPORT_COLUMNS = ["m_dollars", "m_perceived", "gap", "gap_ratio", "tstt", "tstt_ratio", "t_ell",
                  "t_dblprime", "t_r", "queue_peak", "m_spent", "equilibrium_cost", "flags"]
ORACLE_COLUMNS = ["oracle_converged", "oracle_max_improvement", "oracle_tstt", "oracle_tstt_dev"]


class ConfigError(ValueError):
    """Invalid scenario file; ``line`` is 1-based when it can be located."""

    def __init__(self, message: str, path: str = "<config>", line: int | None = None):
        self.path, self.line = path, line
        where = f"{path}:{line}" if line else path
        super().__init__(f"{where}: {message}")


@dataclass
class ScenarioConfig:
    alpha: float
    beta: float
    gamma: float
    n_commuters: float
    capacity: float
    delta_bar: float
    p_bar: float = 0.0
    grid_dt: float = 0.01
    budgets: list = field(default_factory=list)
    sweep: tuple | None = None   # (min, max, count); min/max may be "star"
    out_dir: str = "out"
    seed: int = 0

    @property
    def params(self) -> ScenarioParams:
        return canonical_params(self.alpha, self.beta, self.gamma, self.n_commuters,
                                self.capacity, self.delta_bar, self.p_bar)


def _key_line(text: str, key: str) -> int | None:
    m = re.search(rf"^\s*{re.escape(key)}\s*=", text, re.M)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _budget_value(v, key, where):
    if isinstance(v, str):
        if v.strip().lower() == "star":
            return "star"
        raise ConfigError(f"{key}: unknown budget {v!r} (use a number or \"star\")", *where)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: budget must be a number, got {v!r}", *where)
    if not math.isfinite(v) or v < 0:
        raise ConfigError(f"{key}: budget must be finite and non-negative, got {v}", *where)
    return float(v)


def parse_config(text: str, path: str = "<config>") -> ScenarioConfig:
    """Parse and validate scenario TOML; every error names the offending line."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", path, int(m.group(1)) if m else None) from None

    for key in raw:
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", path, _key_line(text, key))
    missing = [k for k in _PARAM_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}", path)

    vals = {}
    for key in (*_PARAM_KEYS, "p_bar", "grid_dt"):
        if key not in raw:
            continue
        v = raw[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{key} must be a finite number, got {v!r}", path, _key_line(text, key))
        vals[key] = float(v)
    if vals.get("grid_dt", 0.01) <= 0:
        raise ConfigError("grid_dt must be positive", path, _key_line(text, "grid_dt"))

    budgets = raw.get("budgets", [])
    if not isinstance(budgets, list):
        raise ConfigError("budgets must be a list", path, _key_line(text, "budgets"))
    budgets = [_budget_value(b, "budgets", (path, _key_line(text, "budgets"))) for b in budgets]

    sweep = None
    if "sweep" in raw:
        tbl = raw["sweep"]
        m = re.search(r"^\s*\[sweep\]", text, re.M)
        line = text.count("\n", 0, m.start()) + 1 if m else None
        if not isinstance(tbl, dict) or set(tbl) != {"min", "max", "count"}:
            raise ConfigError("[sweep] needs exactly the keys min, max, count", path, line)
        cnt = tbl["count"]
        if isinstance(cnt, bool) or not isinstance(cnt, int) or cnt < 2:
            raise ConfigError("sweep count must be an integer >= 2", path, _key_line(text, "count") or line)
        lo = _budget_value(tbl["min"], "sweep.min", (path, _key_line(text, "min") or line))
        hi = _budget_value(tbl["max"], "sweep.max", (path, _key_line(text, "max") or line))
        sweep = (lo, hi, cnt)

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed must be an integer", path, _key_line(text, "seed"))
    out_dir = raw.get("out_dir", "out")
    if not isinstance(out_dir, str):
        raise ConfigError("out_dir must be a string", path, _key_line(text, "out_dir"))

    cfg = ScenarioConfig(budgets=budgets, sweep=sweep, seed=seed, out_dir=out_dir, **vals)
    try:
        cfg.params
    except ModelError as exc:
        line = min(filter(None, (_key_line(text, k) for k in ("alpha", "beta", "gamma"))), default=None)
        raise ConfigError(str(exc), path, line) from None
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, str(path))


def _resolve(b, params) -> float:
    return budget_star(params) if b == "star" else float(b)


def sweep_budgets(cfg: ScenarioConfig) -> list:
    if cfg.sweep is None:
        return []
    p = cfg.params
    lo, hi, n = cfg.sweep
    return [float(x) for x in np.linspace(_resolve(lo, p), _resolve(hi, p), n)]


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return f"{float(x):.10g}"


def budget_label(m: float) -> str:
    return f"{m:.2f}".rstrip("0").rstrip(".")


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_bytes(buf.getvalue().encode("utf-8"))


@dataclass(frozen=True)
class BudgetRun:
    m_dollars: float
    solution: LimitedBudgetSolution
    times: np.ndarray
    queue: np.ndarray
    waiting: np.ndarray

    def row(self, params: ScenarioParams) -> dict:
        rep, sol = self.solution.report, self.solution
        nu = tstt_constants(params)[1]
        m = self.m_dollars
        return {
            "m_dollars": m,
            "m_perceived": rep.m_perceived,
            "gap": m - rep.m_perceived if "over_budget" not in rep.flags else float("nan"),
            "gap_ratio": (m - rep.m_perceived) / m if m > 0 and "over_budget" not in rep.flags else float("nan"),
            "tstt": rep.tstt,
            "tstt_ratio": rep.tstt / nu if nu > 0 else float("nan"),
            "t_ell": sol.t_ell,
            "t_dblprime": sol.t_dblprime,
            "t_r": sol.t_r,
            "queue_peak": float(np.max(self.queue)),
            "m_spent": rep.m_dollars,
            "equilibrium_cost": rep.c_e,
            "flags": ";".join(rep.flags),
        }


def run_budget(m_dollars: float, params: ScenarioParams, dt: float) -> BudgetRun:
    sol = solve_limited(m_dollars, params, dt)
    grid = TimeGrid.over_horizon(params, dt)
    traj = evolve_queue(sol.profile, params, grid)
    return BudgetRun(m_dollars, sol, traj.times, traj.queue, traj.waiting)


def _run_all(budgets, params, dt):
    # budget points are independent; map keeps the input order
    with ThreadPoolExecutor() as pool:
        return list(pool.map(lambda m: run_budget(m, params, dt), budgets))


def sweep_report(cfg: ScenarioConfig, runs=None) -> list:
    """
    Summary rows of the budget sweep, ordered by budget.

    Logs a warning when the relative inefficiency gap fails to decrease with
    the budget; that is a check on the results, not an error.
    """
    if cfg.sweep is None:
        raise ConfigError("no [sweep] table in the scenario")
    params = cfg.params
    if runs is None:
        runs = _run_all(sweep_budgets(cfg), params, cfg.grid_dt)
    rows = sorted((r.row(params) for r in runs), key=lambda r: r["m_dollars"])
    ratios = [r["gap_ratio"] for r in rows if not math.isnan(r["gap_ratio"])]
    if any(b > a * (1 + 1e-9) for a, b in zip(ratios, ratios[1:])):
        log.warning("relative inefficiency gap is not decreasing over the sweep")
    return rows


def _oracle_columns(run: BudgetRun, params, seed) -> dict:
    pop, rep = best_response_dynamics(run.solution.schedule, params, seed=seed)
    otstt = pop.tstt(params.capacity)
    return {
        "oracle_converged": rep.converged,
        "oracle_max_improvement": rep.max_improvement,
        "oracle_tstt": otstt,
        "oracle_tstt_dev": otstt - run.solution.report.tstt,
    }


def run_scenario(cfg: ScenarioConfig, out_dir=None, with_oracle: bool = False):
    """
    Write all output files for a scenario; returns ``(paths, exit_status)``.

    Without budgets and sweep only the no-incentive equilibrium is written.
    """
    params = cfg.params
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    budgets = [_resolve(b, params) for b in cfg.budgets]
    if not budgets and cfg.sweep is None:
        budgets = [0.0]
    sweep = sweep_budgets(cfg)
    unique = sorted(set(budgets) | set(sweep))
    runs = dict(zip(unique, _run_all(unique, params, cfg.grid_dt)))

    paths = []
    for m in budgets:
        run = runs[m]
        lab = budget_label(m)
        p = out / f"queue_{lab}.csv"
        _write_csv(p, ["t", "queue", "waiting"], zip(run.times, run.queue, run.waiting))
        paths.append(p)
        sched, prof = run.solution.schedule, run.solution.profile
        p = out / f"price_{lab}.csv"
        _write_csv(p, ["t", "discount", "charging_time", "departure_rate"],
                   zip(run.times, sched.price(run.times), sched.charging_time(run.times),
                       prof.rate_at(run.times)))
        paths.append(p)

    status = EXIT_OK
    if budgets:
        cols = list(REPORT_COLUMNS)
        rows = [runs[m].row(params) for m in budgets]
        if with_oracle:
            cols += ORACLE_COLUMNS
            for m, r in zip(budgets, rows):
                r.update(_oracle_columns(runs[m], params, cfg.seed))
                if not r["oracle_converged"]:
                    status = EXIT_ORACLE
        p = out / "report.csv"
        _write_csv(p, cols, ([r[c] for c in cols] for r in rows))
        paths.append(p)

    if cfg.sweep is not None:
        rows = sweep_report(cfg, [runs[m] for m in sweep])
        p = out / "sweep.csv"
        _write_csv(p, REPORT_COLUMNS, ([r[c] for c in REPORT_COLUMNS] for r in rows))
        paths.append(p)

    p = out / "schema.csv"
    _write_csv(p, ["file", "column", "unit", "description"], SCHEMA)
    paths.append(p)
    return paths, status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pev-bottleneck",
                                 description="Optimal charging-discount policies for a bottleneck scenario.")
    ap.add_argument("config", help="scenario TOML file")
    ap.add_argument("--out-dir", help="output directory (overrides out_dir in the config)")
    ap.add_argument("--grid-dt", type=float, help="time step in min (overrides grid_dt)")
    ap.add_argument("--seed", type=int, help="seed of the best-response oracle (overrides seed)")
    ap.add_argument("--with-oracle", action="store_true",
                    help="run the best-response oracle for every budget (slow)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.grid_dt is not None:
            if not args.grid_dt > 0:
                raise ConfigError("--grid-dt must be positive", "<command line>")
            cfg.grid_dt = args.grid_dt
        if args.seed is not None:
            cfg.seed = args.seed
        paths, status = run_scenario(cfg, args.out_dir, args.with_oracle)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MonotonicityError, BracketError, ModelError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for p in paths:
        log.info("wrote %s", p)
    if status == EXIT_ORACLE:
        print("best-response oracle did not converge", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
