import json
import math

import pytest

from strip_radius import __version__
from strip_radius.cli import ROW_HEADER, ConfigError, dispatch, load_config, parse_config


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def _stderr_error(capsys):
    err = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(err)["error"]


NON_HERMITIAN = {
    "case": "custom",
    "system": {"n": 2, "A": [["0", "1"], ["0", "0"]]},
    "u0": ["exp(-x^2)", "0"],
    "grid": {"L": 2 * math.pi, "M": 32},
}


class TestCompare:
    def test_example1_csv(self, tmp_path):
        out = tmp_path / "rows.csv"
        assert dispatch(["compare", "--case", "example1", "--times", "0,0.5,1", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == ROW_HEADER
        assert len(lines) == 4
        cols = [line.split(",") for line in lines[1:]]
        assert [float(c[0]) for c in cols] == [0.0, 0.5, 1.0]
        assert [float(c[1]) for c in cols] == [1.0, math.exp(-0.5), math.exp(-1)]
        assert all(c[-1] == "true" for c in cols)

    def test_svg_and_json(self, tmp_path):
        svg, js = tmp_path / "c.svg", tmp_path / "c.json"
        assert dispatch(["compare", "--case", "example1", "--out", str(tmp_path / "r.csv"),
                         "--svg", str(svg), "--json", str(js)]) == 0
        assert svg.read_text().startswith("<svg")
        report = json.loads(js.read_text())
        assert report["version"] == __version__
        assert report["passed"] is True
        assert report["config"]["analysis"]["N_max"] == 24

    def test_stdout_when_no_out(self, capsys):
        assert dispatch(["compare", "--case", "example1", "--times", "0"]) == 0
        assert capsys.readouterr().out.splitlines()[0] == ROW_HEADER


class TestConfigErrors:
    def test_unknown_key(self, tmp_path, capsys):
        path = _write(tmp_path / "bad.json", {"case": "example1", "grid": {"L": 10.0, "Mx": 64}})
        assert dispatch(["compare", "--config", path]) == 2
        err = _stderr_error(capsys)
        assert "Mx" in err["message"]
        assert err["pointer"] == "/grid/Mx"

    def test_bad_value_pointer(self):
        with pytest.raises(ConfigError) as info:
            parse_config({"case": "example1", "grid": {"M": 100}})
        assert info.value.pointer == "/grid/M"

    def test_missing_file(self, capsys):
        assert dispatch(["validate", "--config", "/nonexistent/cfg.json"]) == 2
        assert _stderr_error(capsys)["type"] == "config"

    def test_usage_error(self, capsys):
        assert dispatch(["frobnicate"]) == 2
        assert dispatch(["compare", "--case", "example1,example2"]) == 2

    def test_custom_needs_system(self):
        with pytest.raises(ConfigError):
            parse_config({"case": "custom", "grid": {"L": 1.0, "M": 8}})

    def test_bad_expression(self, tmp_path, capsys):
        cfg = dict(NON_HERMITIAN, u0=["exp(-x^2", "0"])
        assert dispatch(["validate", "--config", _write(tmp_path / "c.json", cfg)]) == 2


class TestValidate:
    def test_non_hermitian_is_a_result(self, tmp_path):
        out = tmp_path / "v.json"
        assert dispatch(["validate", "--config", _write(tmp_path / "c.json", NON_HERMITIAN), "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["report"]["pass"] is False

    def test_example1_flagged_not_periodic(self, tmp_path):
        out = tmp_path / "v.json"
        assert dispatch(["validate", "--case", "example1", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["box_compatible"] is False


class TestDefaults:
    def test_minimal_config(self, tmp_path):
        cfg = load_config(_write(tmp_path / "c.json", {"case": "example1"})).resolved()
        assert cfg.analysis.s == 2.0
        assert cfg.analysis.N_max == 24
        assert cfg.analysis.oversample == 4
        assert cfg.grid.M == 4096 and cfg.times == [0.0, 0.5, 1.0]

    def test_roundtrip(self, tmp_path):
        cfg = load_config(_write(tmp_path / "c.json", {"case": "transport_sinx", "times": [0, 0.1]})).resolved()
        again = load_config(_write(tmp_path / "d.json", cfg.to_dict()))
        assert again == cfg
        assert again.resolved() == cfg

    def test_emitted_config_reloads(self, tmp_path):
        js = tmp_path / "r.json"
        assert dispatch(["compare", "--case", "example1", "--times", "0", "--out", str(tmp_path / "r.csv"),
                         "--json", str(js)]) == 0
        emitted = json.loads(js.read_text())["config"]
        cfg = load_config(_write(tmp_path / "e.json", emitted))
        assert cfg.to_dict() == emitted


class TestNumericalFailures:
    def test_cfl_violation(self, tmp_path, capsys):
        cfg = {"case": "transport_sinx", "times": [0.0, 0.5], "solver": {"dt": 1.0}}
        path = _write(tmp_path / "c.json", cfg)
        load_config(path)  # parsing succeeds
        assert dispatch(["solve", "--config", path, "--out", str(tmp_path / "s.csv")]) == 1
        assert _stderr_error(capsys)["type"] == "numerical"

    def test_blowup_solve(self, tmp_path, capsys):
        cfg = {
            "case": "custom", "system": {"n": 1, "nonlinearity": [[0, [2], "1"]]}, "u0": "1",
            "grid": {"L": 2 * math.pi, "M": 8}, "solver": {"T": 1.2, "dt": 1e-3, "stride": 100},
        }
        out = tmp_path / "s.csv"
        assert dispatch(["solve", "--config", _write(tmp_path / "c.json", cfg), "--out", str(out)]) == 1
        assert out.read_text().startswith("t,linf,hs,I_conservative,I_example")
        assert "blow-up" in _stderr_error(capsys)["message"]

    def test_example1_not_solvable(self, capsys):
        assert dispatch(["solve", "--case", "example1"]) == 2


class TestOtherCommands:
    def test_radius(self, tmp_path):
        out = tmp_path / "r.json"
        assert dispatch(["radius", "--case", "transport_sinx", "--times", "0,1", "--out", str(out)]) == 0
        radii = json.loads(out.read_text())["radii"]
        assert radii[1]["fit"]["value"] == pytest.approx(radii[1]["exact"], rel=0.02)

    def test_bounds(self, tmp_path):
        out, js = tmp_path / "b.csv", tmp_path / "b.json"
        assert dispatch(["bounds", "--case", "example2", "--out", str(out), "--json", str(js)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,I,epsilon,phi"
        eps = [float(line.split(",")[2]) for line in lines[1:]]
        assert eps[0] == 1.0 and all(b <= a for a, b in zip(eps, eps[1:]))
        assert json.loads(js.read_text())["A"] == 0.5

    def test_report_embeds_version(self, tmp_path):
        out = tmp_path / "rep.json"
        assert dispatch(["report", "--case", "example1,example2", "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["version"] == __version__
        assert [c["case"] for c in rep["cases"]] == ["example1", "example2"]
        assert all("config" in c for c in rep["cases"])
        assert rep["passed"] is True


def test_determinism(tmp_path, monkeypatch):
    outputs = []
    for run in range(2):
        if run:
            monkeypatch.setenv("STRIP_RADIUS_THREADS", "2")
        d = tmp_path  # same paths both times: the embedded config records them
        assert dispatch(["compare", "--case", "transport_sinx", "--times", "0,0.2", "--seed", "7",
                         "--out", str(d / "r.csv"), "--json", str(d / "r.json")]) == 0
        assert dispatch(["report", "--case", "example1,transport_sinx", "--times", "0,0.2",
                         "--out", str(d / "rep.json")]) == 0
        outputs.append([(d / n).read_bytes() for n in ("r.csv", "r.json", "rep.json")])
    assert outputs[0] == outputs[1]


def test_bad_thread_env(monkeypatch, capsys):
    monkeypatch.setenv("STRIP_RADIUS_THREADS", "zero")
    assert dispatch(["compare", "--case", "example1", "--times", "0"]) == 2
