import json

import pytest

from tickmoments import cli, pipeline
from tickmoments.events import ingest
from tickmoments.reporting import read_report

EVENTS = "time,investor_id,side,price,volume\n" + "".join(
    f"{t},{'ab'[t % 2]},{'B' if t < 6 else 'S'},{10 + t},{2}\n" for t in range(10)
)


@pytest.fixture
def events(tmp_path):
    path = tmp_path / "events.csv"
    path.write_text(EVENTS)
    return path


@pytest.fixture
def sim_config(tmp_path):
    path = tmp_path / "sim.conf"
    path.write_text("# small market\nseed = 7\ntick_count = 600\ninvestor_count = 5\nwindow = 200\n")
    return path


class TestRun:
    def test_csv_to_stdout(self, events, capsys):
        assert cli.main(["run", str(events), "--window", "5", "--tau", "1t"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("window,anchor_time,family")
        assert "actual_market" in out

    def test_json_file(self, events, tmp_path):
        out = tmp_path / "r.json"
        assert cli.main(["run", str(events), "--window", "5", "--format", "json", "--out", str(out)]) == 0
        rows = json.loads(out.read_text())
        assert {r["family"] for r in rows} >= {"price", "actual_sale"}

    def test_oracle_columns(self, events, tmp_path):
        out = tmp_path / "r.csv"
        assert cli.main(["run", str(events), "--window", "10", "--oracle", "--out", str(out)]) == 0
        rows = read_report(out)
        assert all(r.oracle_delta_rel is not None for r in rows if r.status == "ok")

    def test_oracle_gate(self, events, monkeypatch, capsys):
        monkeypatch.setattr(pipeline, "ORACLE_RTOL", -1.0)
        assert cli.main(["run", str(events), "--window", "10", "--oracle"]) == 3
        assert "oracle gate failed" in capsys.readouterr().err

    def test_simulated(self, sim_config, capsys):
        assert cli.main(["run", "--sim", str(sim_config), "--policy", "lifo"]) == 0
        out = capsys.readouterr().out
        assert out.count("\n") > 3

    def test_config_file_with_override(self, events, tmp_path, capsys):
        conf = tmp_path / "run.conf"
        conf.write_text("window = 5\nformat = json\n")
        assert cli.main(["run", str(events), "--config", str(conf), "--format", "csv"]) == 0
        assert capsys.readouterr().out.startswith("window,")

    def test_seed_determinism(self, sim_config, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            assert cli.main(["run", "--sim", str(sim_config), "--seed", "99", "--out", str(path)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_skipped_summary(self, tmp_path, capsys):
        path = tmp_path / "e.csv"
        path.write_text("time,investor_id,side,price,volume\n0,a,B,1,1\n1,a,S,1,3\n")
        assert cli.main(["run", str(path), "--window", "2"]) == 0
        assert "skipped 1 unit" in capsys.readouterr().err


class TestExitCodes:
    def test_parse_error(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("time,investor_id,side,price,volume\n1,alice,B,-10.0,5\n")
        assert cli.main(["run", str(path)]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_ordering_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,investor_id,side,price,volume\n2,a,B,1,1\n1,a,B,1,1\n")
        assert cli.main(["run", str(path)]) == 2

    def test_bad_window(self, events):
        assert cli.main(["run", str(events), "--window", "0"]) == 1

    def test_bad_tau(self, events):
        assert cli.main(["run", str(events), "--tau", "later"]) == 1

    def test_no_input(self):
        assert cli.main(["run"]) == 1

    def test_missing_file(self, tmp_path):
        assert cli.main(["run", str(tmp_path / "nope.csv")]) == 1

    def test_usage(self):
        with pytest.raises(SystemExit) as err:
            cli.main(["run", "--policy", "hifo"])
        assert err.value.code == 1

    def test_bad_config_line(self, tmp_path, events):
        conf = tmp_path / "c.conf"
        conf.write_text("window 5\n")
        assert cli.main(["run", str(events), "--config", str(conf)]) == 1


class TestOtherCommands:
    def test_simulate_round_trips(self, sim_config, tmp_path):
        out = tmp_path / "log.csv"
        assert cli.main(["simulate", "--sim", str(sim_config), "--ticks", "300", "--out", str(out)]) == 0
        log = ingest(out)
        assert len(log) == 300
        assert log.to_csv_text() == out.read_text()

    def test_stress(self, tmp_path):
        out = tmp_path / "s.csv"
        assert cli.main(["stress", "one_sale_per_investor", "--out", str(out)]) == 0
        assert len(ingest(out)) == 16

    def test_sweep(self, events, capsys):
        assert cli.main(["sweep", str(events), "--window", "5", "--taus", "1t,2t"]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0].startswith("window,anchor_time,tau")
