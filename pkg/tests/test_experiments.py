import csv
import json

import numpy as np
import pytest

from ris_fd_opt import cli
from ris_fd_opt import experiments as ex

TINY = {"sizes": {"N_t": 2, "N_r": 2, "K": 3, "M": 2, "N": 1}, "drops": 3,
        "sweep": {"M_values": [1, 2], "N_values": [1], "gamma_U_db_values": [5.0],
                  "d_values_m": [60, 80], "K_values": [2], "ratios": [[2, 1]]},
        "fris": {"gamma_U_db": -5.0}}


def _write(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def test_config_defaults_and_validation():
    e = ex.Experiment()
    assert e.sizes.K == 16 and e.power.P_max == 1.0
    assert ex.Experiment({"power": {"P_max_dbm": 30.0}}).power.P_max == pytest.approx(1.0)
    for bad in ({"bogus": 1}, {"drops": 0}, {"fris": {"nope": 1}}, {"channel": {"beta": 2.0}},
                {"channel": {"pathloss_convention": "x"}}, {"sizes": {"N_t": 0}}, [1, 2]):
        with pytest.raises(ex.ConfigError):
            ex.Experiment(bad)


def test_hash_tracks_config():
    a, b = ex.Experiment(TINY), ex.Experiment(TINY)
    assert a.hash == b.hash
    assert a.with_overrides(seed=9).hash != a.hash
    assert a.with_overrides(**{"sizes.K": 5}).sizes.K == 5


def test_drop_seeds_are_order_independent():
    seeds = [ex.drop_seed(7, i) for i in range(100)]
    assert len(set(seeds)) == 100
    assert ex.drop_seed(7, 42) == seeds[42]
    assert 0 <= min(seeds) and max(seeds) < 2 ** 63


def test_workers_resolution(monkeypatch):
    monkeypatch.delenv("RIS_FD_OPT_WORKERS", raising=False)
    assert ex.resolve_workers() == 1
    monkeypatch.setenv("RIS_FD_OPT_WORKERS", "3")
    assert ex.resolve_workers() == 3
    assert ex.resolve_workers(2) == 2


def test_parallel_matches_serial():
    e = ex.Experiment(TINY)
    serial = ex.run_batch(e, 1)
    par = ex.run_batch(e, 2)
    strip = lambda rows: json.dumps([{k: v for k, v in r["row"].items() if k != "wall_time_s"} for r in rows])
    assert strip(serial) == strip(par)
    assert all(r["row"]["status"] != "infeasible" for r in serial)


def test_statistics_helpers():
    m, se, n = ex.mean_se([1.0, 2.0, 3.0, float("nan")])
    assert (m, n) == (2.0, 3) and se == pytest.approx(1 / np.sqrt(3))
    t = ex.sign_test([2, 2, 2, 2, 2, 2, 1], [1, 1, 1, 1, 1, 1, 1])
    assert (t["wins"], t["losses"], t["ties"]) == (6, 0, 1)
    assert t["p_value"] == pytest.approx(0.5 ** 6)
    assert ex.improvement([1.1], [1.0]) == pytest.approx(0.1)
    rows = [{"g": 1, "v": 1.0}, {"g": 1, "v": 3.0}, {"g": 2, "v": 5.0}]
    s = ex.summarize(rows, ["g"], "v")
    assert s[0]["v_mean"] == 2.0 and s[1]["n"] == 1


def test_cli_run_outputs_and_determinism(tmp_path):
    cfg = _write(tmp_path, TINY)
    for out in ("a", "b"):
        assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / out)]) == 0
    rows = [list(csv.DictReader(open(tmp_path / o / "results.csv"))) for o in ("a", "b")]
    for r in rows:
        for row in r:
            row.pop("wall_time_s")
    assert rows[0] == rows[1] and len(rows[0]) == 3
    rec = json.loads((tmp_path / "a" / "result.json").read_text())
    assert rec["config_hash"] == rows[0][0]["config_hash"]


def test_cli_sweeps_and_benchmark(tmp_path):
    cfg = _write(tmp_path, {**TINY, "drops": 2})
    for cmd, fig in (("sweep-users", "fig2"), ("sweep-distance", "fig3"), ("benchmark", "fig4")):
        out = tmp_path / cmd
        assert cli.main([cmd, "--config", cfg, "--out", str(out)]) == 0
        for name in ("results.csv", "summary.csv", "result.json", f"{fig}.gp"):
            assert (out / name).exists()
    rows = list(csv.DictReader(open(tmp_path / "benchmark" / "results.csv")))
    assert {r["seed"] for r in rows} == {str(ex.drop_seed(1, 0)), str(ex.drop_seed(1, 1))}


def test_cli_config_errors_exit_2(tmp_path, capsys):
    assert cli.main(["run", "--config", _write(tmp_path, {"bogus": 1})]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    assert cli.main(["run", "--drops", "0"]) == 2
    assert "invalid config" in capsys.readouterr().err


def test_selftest_passes_and_detects_fault():
    assert cli.main(["selftest"]) == 0
    assert cli.main(["selftest", "--inject-fault", "omega-sign"]) != 0
