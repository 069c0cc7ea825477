import csv
from pathlib import Path

import numpy as np
import pytest

import pev_bottleneck as pb
from pev_bottleneck import cli
from pev_bottleneck.numerics import MonotonicityError
from pev_bottleneck.oracle import AgentPopulation, ConvergenceReport

BASE = """\
alpha = 6.4
beta = 3.9
gamma = 15.21
n_commuters = 9000
capacity = 60
delta_bar = 20
"""

SCENARIO = Path(__file__).resolve().parents[1] / "scenarios" / "rush_hour.toml"


def _read(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def _write(tmp_path, text, name="s.toml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_parse_full_config():
    cfg = cli.load_config(SCENARIO)
    assert cfg.budgets == [0.0, 8660.0, "star"]
    assert cfg.sweep == (0.0, "star", 20)
    assert cfg.params.alpha == pytest.approx(6.4 / 60)
    assert cfg.grid_dt == 0.01 and cfg.seed == 0


@pytest.mark.parametrize("extra, line, fragment", [
    ("beta = 2\n", 7, "Cannot overwrite"),
    ("foo = 1\n", 7, "unknown key"),
    ("budgets = [0, -3]\n", 7, "non-negative"),
    ("budgets = [\"lots\"]\n", 7, "unknown budget"),
    ("grid_dt = -1\n", 7, "grid_dt"),
    ("seed = 1.5\n", 7, "seed"),
    ("[sweep]\nmin = 0\nmax = 100\n", 7, "exactly the keys"),
    ("[sweep]\nmin = 0\nmax = 100\ncount = 1\n", 10, "count"),
    ("gamma_x = \n", 7, "syntax"),
])
def test_config_errors_are_line_anchored(tmp_path, extra, line, fragment):
    p = _write(tmp_path, BASE + extra)
    with pytest.raises(cli.ConfigError) as exc:
        cli.load_config(p)
    assert exc.value.line == line
    assert f"{p}:{line}:" in str(exc.value)
    assert fragment.lower() in str(exc.value).lower()


def test_invalid_model_is_config_error(tmp_path):
    p = _write(tmp_path, BASE.replace("beta = 3.9", "beta = 9"))
    with pytest.raises(cli.ConfigError) as exc:
        cli.load_config(p)
    assert exc.value.line == 1
    missing = _write(tmp_path, "alpha = 6.4\n", "m.toml")
    with pytest.raises(cli.ConfigError, match="missing"):
        cli.load_config(missing)


def test_empty_budgets_classical_only(tmp_path):
    cfg = cli.parse_config(BASE)
    paths, status = cli.run_scenario(cfg, tmp_path)
    assert status == 0
    names = sorted(p.name for p in paths)
    assert names == ["price_0.csv", "queue_0.csv", "report.csv", "schema.csv"]
    rep = _read(tmp_path / "report.csv")
    assert len(rep) == 1
    assert float(rep[0]["t_ell"]) == 0 and float(rep[0]["t_r"]) == 150
    assert float(rep[0]["tstt_ratio"]) == pytest.approx(1.0, rel=0.005)
    price = _read(tmp_path / "price_0.csv")
    assert all(float(r["discount"]) == 0 for r in price)


def test_run_scenario_outputs(tmp_path):
    cfg = cli.load_config(SCENARIO)
    paths, status = cli.run_scenario(cfg, tmp_path)
    assert status == 0
    for p in paths:
        data = p.read_bytes()
        assert b"\r" not in data
        data.decode("utf-8")
        assert data.endswith(b"\n")
    rep = {r["m_dollars"]: r for r in _read(tmp_path / "report.csv")}
    r = rep["8660"]
    assert float(r["t_r"]) - float(r["t_ell"]) == pytest.approx(78.2, abs=0.5)
    assert float(rep["0"]["t_r"]) - float(rep["0"]["t_ell"]) == pytest.approx(150.0)
    star = [v for k, v in rep.items() if k not in ("0", "8660")][0]
    assert float(star["tstt"]) == 0 and star["flags"] == "discount_exceeds_base_price"
    # queue series: peak ratio between budgets
    q0 = max(float(x["queue"]) for x in _read(tmp_path / "queue_0.csv"))
    q1 = max(float(x["queue"]) for x in _read(tmp_path / "queue_8660.csv"))
    assert q1 / q0 == pytest.approx(0.53, abs=0.03)
    schema = _read(tmp_path / "schema.csv")
    documented = {row["column"] for row in schema}
    for name in ("report.csv", "sweep.csv", "queue_0.csv", "price_0.csv"):
        with open(tmp_path / name, encoding="utf-8") as f:
            assert set(f.readline().strip().split(",")) <= documented


def test_outputs_byte_identical(tmp_path):
    cfg = cli.load_config(SCENARIO)
    a, b = tmp_path / "a", tmp_path / "b"
    cli.run_scenario(cfg, a)
    cli.run_scenario(cfg, b)
    for p in sorted(a.iterdir()):
        assert p.read_bytes() == (b / p.name).read_bytes(), p.name


def test_sweep_report():
    cfg = cli.load_config(SCENARIO)
    rows = cli.sweep_report(cfg)
    assert len(rows) == 20
    m = [r["m_dollars"] for r in rows]
    assert m == sorted(m)
    tstt = [r["tstt"] for r in rows]
    assert all(b < a for a, b in zip(tstt, tstt[1:]))
    gap = [r["gap"] for r in rows]
    assert all(b > a for a, b in zip(gap, gap[1:]))
    ratio = [r["gap_ratio"] for r in rows[1:]]
    assert all(b < a for a, b in zip(ratio, ratio[1:]))
    last = rows[-1]
    assert last["tstt"] == 0.0
    assert last["t_ell"] == pytest.approx(pb.reference_scenario().t_star)
    assert last["t_r"] == pytest.approx(last["t_ell"])
    with pytest.raises(cli.ConfigError):
        cli.sweep_report(cli.parse_config(BASE))


def test_sweep_warning_on_non_decreasing_ratio(monkeypatch, caplog):
    cfg = cli.parse_config(BASE + "[sweep]\nmin = 1000\nmax = 5000\ncount = 3\n")
    runs = cli._run_all([1000.0, 3000.0, 5000.0], cfg.params, cfg.grid_dt)
    real_row = cli.BudgetRun.row

    def row(self, params):
        out = real_row(self, params)
        out["gap_ratio"] = self.m_dollars  # increasing on purpose
        return out

    monkeypatch.setattr(cli.BudgetRun, "row", row)
    with caplog.at_level("WARNING", logger="pev_bottleneck"):
        cli.sweep_report(cfg, runs)
    assert "not decreasing" in caplog.text


def test_over_budget_row_is_flagged(tmp_path):
    cfg = cli.parse_config(BASE + "budgets = [50000]\n")
    cli.run_scenario(cfg, tmp_path)
    row = _read(tmp_path / "report.csv")[0]
    assert "over_budget" in row["flags"].split(";")
    assert float(row["tstt"]) == 0
    assert row["gap"] == ""


def test_main_exit_codes(tmp_path, monkeypatch):
    good = _write(tmp_path, BASE + "budgets = [8660]\n")
    assert cli.main([str(good), "--out-dir", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "queue_8660.csv").exists()
    bad = _write(tmp_path, BASE + "alpha = 1\n", "bad.toml")
    assert cli.main([str(bad), "--out-dir", str(tmp_path / "o")]) == 1
    assert cli.main([str(tmp_path / "missing.toml")]) == 1
    assert cli.main([str(good), "--grid-dt", "0", "--out-dir", str(tmp_path / "o")]) == 1

    def boom(*a, **k):
        raise MonotonicityError("probe left the bracket")

    monkeypatch.setattr(cli, "solve_limited", boom)
    assert cli.main([str(good), "--out-dir", str(tmp_path / "o2")]) == 2


def test_with_oracle_columns_and_exit_3(tmp_path, monkeypatch):
    good = _write(tmp_path, BASE + "budgets = [0]\n")

    def fake(schedule, params, seed=0, **kw):
        pop = AgentPopulation(900, 10.0, 0.1, 1500, np.arange(900), np.zeros(900))
        return pop, ConvergenceReport(1, 0.5, 0.5, converged=seed == 42)

    monkeypatch.setattr(cli, "best_response_dynamics", fake)
    assert cli.main([str(good), "--out-dir", str(tmp_path / "o"), "--with-oracle"]) == 3
    row = _read(tmp_path / "o" / "report.csv")[0]
    assert row["oracle_converged"] == "false"
    assert float(row["oracle_max_improvement"]) == 0.5
    assert cli.main([str(good), "--out-dir", str(tmp_path / "o"), "--with-oracle", "--seed", "42"]) == 0
