import json
import math
import shutil
from pathlib import Path

import numpy as np
import pytest

from wdmpairlab import io
from wdmpairlab.cli import main
from wdmpairlab.spectral import Tabulated

DEMO_CONFIG = Path(__file__).resolve().parents[1] / "demos" / "dg_flattop.json"


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestFilterCsv:
    def test_linear(self, tmp_path):
        f = write(tmp_path / "a.csv", "frequency_thz,transmission\n192.3,0.5\n192.4,1.0\n192.5,0.5\n")
        c = io.load_filter_csv(f)
        assert isinstance(c, Tabulated) and c.peak == 1.0

    def test_db_peak(self, tmp_path):
        f = write(tmp_path / "b.csv", "# measured\nfrequency_thz,transmission_db\n192.3,-20\n192.4,-0.86\n192.5,-20\n")
        assert io.load_filter_csv(f).peak == pytest.approx(0.82, abs=0.001)

    @pytest.mark.parametrize(
        "body",
        [
            "frequency_thz,transmission\n192.3,0.5\n192.4,1.2\n192.5,0.5\n",
            "frequency_thz,transmission_db\n192.3,-3\n192.4,0.5\n192.5,-3\n",
            "frequency_thz,transmission\n192.3,0.5\n192.5,1.0\n192.4,0.5\n",
            "frequency_thz,transmission\n192.3,0.5\n192.4,1.0\n",
            "freq,t\n192.3,0.5\n192.4,1.0\n192.5,0.5\n",
            "frequency_thz,transmission\n192.3,0.5\n192.4,x\n192.5,0.5\n",
            "",
        ],
    )
    def test_rejects(self, tmp_path, body):
        with pytest.raises(io.FilterFormatError):
            io.load_filter_csv(write(tmp_path / "bad.csv", body))

    @pytest.mark.parametrize("db", [False, True])
    def test_round_trip(self, tmp_path, db):
        c = Tabulated(np.linspace(192.2, 192.6, 41), np.linspace(0.01, 0.8, 41))
        io.write_filter_csv(tmp_path / "c.csv", c, db=db)
        back = io.load_filter_csv(tmp_path / "c.csv")
        np.testing.assert_allclose(back.transmission, c.transmission, rtol=1e-12)
        np.testing.assert_array_equal(back.frequency_thz, c.frequency_thz)


class TestConfig:
    def test_demo_config(self):
        cfg = io.load_config(DEMO_CONFIG)
        assert cfg.pump_thz == 384.8
        assert cfg.pair == (23, 25) and cfg.channel == 24
        assert cfg.demux.channel(23).curve.peak == 0.8
        assert cfg.demux.delays[(21, 27)] == 10.0

    def test_digest_tracks_content(self, tmp_path):
        doc = json.loads(DEMO_CONFIG.read_text())
        a = io.config_from_dict(doc).digest
        doc["source"]["p_inband"] = 0.06
        assert io.config_from_dict(doc).digest != a

    def test_seed_precedence(self, tmp_path, monkeypatch):
        monkeypatch.delenv(io.SEED_ENV, raising=False)
        assert io.load_config(DEMO_CONFIG).montecarlo["seed"] == 2024
        monkeypatch.setenv(io.SEED_ENV, "5")
        assert io.load_config(DEMO_CONFIG).montecarlo["seed"] == 5
        cfg = io.load_config(DEMO_CONFIG, seed_override=9)
        assert cfg.montecarlo["seed"] == 9
        assert cfg.digest != io.load_config(DEMO_CONFIG).digest

    def test_missing_sections(self):
        with pytest.raises(io.ConfigError):
            io.config_from_dict({"demux": {}})

    def test_invalid_values(self):
        doc = json.loads(DEMO_CONFIG.read_text())
        doc["source"]["p_inband"] = 0.9
        with pytest.raises(io.ConfigError):
            io.config_from_dict(doc)

    def test_tabulated_channel(self, tmp_path):
        write(tmp_path / "ch23.csv", "frequency_thz,transmission\n192.25,0\n192.3,0.7\n192.35,0\n")
        doc = json.loads(DEMO_CONFIG.read_text())
        doc["demux"]["channels"][2] = {"itu": 23, "csv": "ch23.csv"}
        path = write(tmp_path / "cfg.json", json.dumps(doc))
        cfg = io.load_config(path)
        assert isinstance(cfg.demux.channel(23).curve, Tabulated)


class TestResultTable:
    def test_round_trip(self, tmp_path):
        t = io.ResultTable(("a", "b", "c"), [(0.1, "x", True), (1 / 3, "y", False)], {"k": "v"})
        t.write(tmp_path / "t.csv")
        head, cols, rows = io.read_result_csv(tmp_path / "t.csv")
        assert head == {"k": "v"} and cols == ["a", "b", "c"]
        assert rows[1] == {"a": 1 / 3, "b": "y", "c": False}


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestCli:
    def test_integrals_gaussian(self, capsys):
        code, out, _ = run(["integrals", "--channel-a", 23, "--channel-b", 25, "--shape", "gaussian"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["i2_over_i1"] == pytest.approx(1 / math.sqrt(2), rel=1e-9)
        assert doc["i1_a_thz"] == pytest.approx(0.1 * math.sqrt(math.pi / (4 * math.log(2))), rel=1e-9)

    def test_sweep_rows(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        code, _, _ = run(["sweep", "--config", DEMO_CONFIG, "--out", out], capsys)
        assert code == 0
        head, cols, rows = io.read_result_csv(out)
        assert cols == list(io.SWEEP_COLUMNS)
        for mode in ("deterministic", "statistical"):
            ps = [r["p"] for r in rows if r["mode"] == mode]
            assert len(ps) == 18 and ps[0] == 0.01 and ps[-1] == 0.18
        assert head["config_sha256"] == io.load_config(DEMO_CONFIG).digest

    def test_montecarlo_deterministic_output(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert run(["montecarlo", "--config", DEMO_CONFIG, "--out", out, "--seed", 3], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()
        head, _, rows = io.read_result_csv(a)
        assert head["seed"] == "3"
        assert {r["quantity"] for r in rows} >= {"singles_s", "coincidences", "delayed_coincidences"}

    def test_detuning(self, tmp_path, capsys):
        out = tmp_path / "d.csv"
        assert run(["detuning", "--config", DEMO_CONFIG, "--range", 50, "--points", 21, "--out", out], capsys)[0] == 0
        _, _, rows = io.read_result_csv(out)
        best = max(rows, key=lambda r: r["i2_thz"])
        assert best["detuning_ghz"] == 0.0

    def test_delay_plan_awg_unmeasured(self, capsys):
        code, _, err = run(["delay-plan", "--filter", "AWG", "--pairs", "21-27"], capsys)
        assert code != 0
        doc = json.loads(err.strip())
        assert doc["error"] == "UnmeasuredDelayError"

    def test_delay_plan_dg(self, capsys):
        code, out, _ = run(["delay-plan", "--filter", "DG", "--pairs", "23-25,22-26"], capsys)
        assert code == 0
        steps = json.loads(out)["steps"]
        assert [s["pump_thz"] for s in steps] == [384.8, 384.8]

    def test_allocate(self, capsys):
        code, out, _ = run(["allocate", "--requests", 3, "--pump", 384.8], capsys)
        assert code == 0
        assert [a["pair"] for a in json.loads(out)["assignments"]] == [[23, 25], [22, 26], [21, 27]]
        code, _, err = run(["allocate", "--requests", 4, "--pump", 384.8], capsys)
        assert code == 1 and json.loads(err)["error"] == "InsufficientChannelsError"

    @pytest.mark.parametrize("argv", [[], ["bogus"], ["sweep"]])
    def test_usage_errors(self, argv, capsys):
        code, _, err = run(argv, capsys)
        assert code == 2
        assert json.loads(err)["error"] == "UsageError"

    def test_missing_config(self, tmp_path, capsys):
        code, _, err = run(["sweep", "--config", tmp_path / "nope.json", "--out", tmp_path / "x.csv"], capsys)
        assert code == 1 and "error" in json.loads(err)

    def test_failed_run_leaves_no_partial_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        shutil.copy(DEMO_CONFIG, bad)
        doc = json.loads(bad.read_text())
        doc["sweep"]["pair"] = "23-26"
        bad.write_text(json.dumps(doc))
        out = tmp_path / "s.csv"
        code, _, _ = run(["sweep", "--config", bad, "--out", out], capsys)
        assert code == 1 and not out.exists()
        assert list(tmp_path.iterdir()) == [bad]
