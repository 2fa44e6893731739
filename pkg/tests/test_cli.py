import json

import pytest

from twistlab import cli, suite


def run(argv, monkeypatch, out=None):
    monkeypatch.delenv("TWISTLAB_OUT", raising=False)
    if out is not None:
        argv = argv + ["--out", str(out)]
    return cli.main(argv)


def test_katok_outputs_and_manifest(tmp_path, monkeypatch, capsys):
    assert run(["katok"], monkeypatch, tmp_path) == 0
    text = capsys.readouterr().out
    assert "[PASS] katok-values" in text and "[PASS] katok-fixed-points" in text
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["passes"] and man["command"] == "katok"
    vals = json.loads((tmp_path / "katok-values.json").read_text())["summary"]
    assert vals["K_p1"] == pytest.approx(1 / 11, abs=1e-12)
    assert vals["K_p2"] == pytest.approx(-1 / 9, abs=1e-12)
    assert (tmp_path / "katok-fixed-points.fixed_points.csv").exists()


def test_csv_outputs_are_deterministic(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["extend"], monkeypatch, d) == 0
    for name in ("extension-exactness.extension.csv", "extension-exactness.profile.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_env_overrides_out(tmp_path, monkeypatch):
    monkeypatch.setenv("TWISTLAB_OUT", str(tmp_path / "env"))
    assert cli.main(["degenerate", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "env" / "manifest.json").exists()
    assert not (tmp_path / "flag").exists()


def test_config_parse_error_reports_position(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "seed": 1,\n  "smoothing": {"compact": 0.99,}\n}\n')
    assert run(["smooth", "--config", str(cfg)], monkeypatch, tmp_path) == 2
    assert "bad.json:3:" in capsys.readouterr().err


@pytest.mark.parametrize("cfg", [{"nonsense": {}}, {"smoothing": {"bogus": 1}}, {"tol": -1.0},
                                 {"action_growth": {"tol": 0}}])
def test_invalid_config_rejected(tmp_path, monkeypatch, cfg):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert run(["smooth", "--config", str(path)], monkeypatch, tmp_path) == 2


def test_negative_tol_flag(tmp_path, monkeypatch):
    assert run(["degenerate", "--tol", "-1"], monkeypatch, tmp_path) == 2


def test_config_hash_and_kwargs(tmp_path, monkeypatch):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"seed": 7, "degeneration_roundtrip": {"n": 64}}))
    assert run(["degenerate", "--config", str(path)], monkeypatch, tmp_path / "o") == 0
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    import hashlib
    assert man["config_sha256"] == hashlib.sha256(path.read_bytes()).hexdigest()
    assert cli.check_kwargs("action_growth", {"seed": 7}, 1e-9) == {"seed": 7, "tol": 1e-9}


def test_failing_check_sets_exit_code(tmp_path, monkeypatch):
    def broken(**kw):
        return suite.CheckResult("broken", False, {"why": "forced"})

    monkeypatch.setitem(cli.CHECKS, "katok_values", broken)
    assert run(["katok"], monkeypatch, tmp_path) == 1
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert not man["passes"]


def test_parallel_jobs(tmp_path, monkeypatch):
    assert run(["katok", "--jobs", "2"], monkeypatch, tmp_path) == 0


def test_table_csv_union_of_columns():
    text = cli.table_csv([{"a": 1, "b": 0.5}, {"a": 2, "c": True, "b": None}])
    assert text.splitlines() == ["a,b,c", "1,0.5,", "2,,True"]
