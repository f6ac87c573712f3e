import json

import pytest

from fbm_lab.cli import main
from fbm_lab.parallel import set_threads
from fbm_lab.tables import read_table

TINY = """
hurst = 0.3
dt = 0.25
delta = 1.0
n_list = [2, 4, 16]
t_list = [2.0]
replicas = 200
chunk = 50
r_list = [0.0, 1.0]
lambda_list = []
"""


@pytest.fixture(autouse=True)
def _reset_threads():
    yield
    set_threads(None)


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "tiny.toml"
    p.write_text(TINY)
    return p


def run(*argv):
    return main([str(a) for a in argv])


def test_usage_errors(tmp_path, capsys):
    assert run() == 2
    assert run("explode") == 2
    assert run("sample", "--threads", "0") == 2
    assert run("sample", "--config", tmp_path / "missing.toml") == 2
    assert run("verify", "--criteria", "99", "--out", tmp_path / "v") == 2
    assert run("report", "--out", tmp_path / "nothing") == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("hurst = 2.0\n")
    assert run("bounds", "--config", bad, "--out", tmp_path / "b") == 2
    assert "error:" in capsys.readouterr().err


def test_sample_and_integrate(tmp_path, cfg_file):
    out = tmp_path / "s"
    assert run("integrate", "--config", cfg_file, "--paths", 3, "--out", out) == 0
    fbm = read_table(out / "fbm_paths.csv")
    sde = read_table(out / "sde_paths.csv")
    assert len(fbm.rows) == 3 * (16 * 4 + 1)
    assert fbm.columns == ("stream", "t", "comp_0")
    assert sde.rows[0]["comp_0"] == 0.0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "integrate"
    assert manifest["config"]["hurst"] == 0.3
    assert manifest["streams"]["paths"] == [0, 3]


def test_seed_override_changes_paths(tmp_path, cfg_file):
    run("sample", "--config", cfg_file, "--seed", 1, "--out", tmp_path / "a")
    run("sample", "--config", cfg_file, "--seed", 2, "--out", tmp_path / "b")
    a = (tmp_path / "a" / "fbm_paths.csv").read_bytes()
    b = (tmp_path / "b" / "fbm_paths.csv").read_bytes()
    assert a != b


def test_bounds_json(tmp_path, cfg_file):
    out = tmp_path / "b"
    assert run("bounds", "--config", cfg_file, "--format", "json", "--out", out) == 0
    tab = read_table(out / "bounds.json")
    modes = set(tab.column("mode"))
    assert modes == {"discrete", "continuous"}
    assert (out / "plots" / "bounds.svg").exists()


def test_run_threads_identical(tmp_path, cfg_file):
    a, b = tmp_path / "t1", tmp_path / "t3"
    assert run("run", "--config", cfg_file, "--threads", 1, "--out", a) == 0
    assert run("run", "--config", cfg_file, "--threads", 3, "--out", b) == 0
    for name in ("tails_discrete.csv", "tails_continuous.csv", "exponents.csv", "oracle_variance.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert json.loads((b / "manifest.json").read_text())["threads"] == 3


def test_report_regenerates_from_tables(tmp_path, cfg_file, capsys):
    out = tmp_path / "r"
    assert run("run", "--config", cfg_file, "--out", out) == 0
    svg = out / "plots" / "tails_discrete.svg"
    first = svg.read_bytes()
    svg.unlink()
    (out / "summary.md").unlink()
    assert run("report", "--out", out) == 0
    assert svg.read_bytes() == first
    assert (out / "summary.md").exists()


def test_diagnose(tmp_path, cfg_file):
    out = tmp_path / "d"
    assert run("diagnose", "--config", cfg_file, "--out", out) == 0
    sup = read_table(out / "sup_tails.csv")
    assert len(sup.rows) == 5 + 6
    assert len(read_table(out / "holder.csv").rows) == 5 * 136


def test_verify_single_criterion(tmp_path):
    out = tmp_path / "v"
    code = run("verify", "--criteria", "1", "--out", out)
    assert code == 0
    acc = read_table(out / "acceptance.csv")
    assert set(acc.column("criterion")) == {1}
    assert (out / "repro_threads_8" / "acceptance.csv").read_bytes() == (out / "acceptance.csv").read_bytes()
    assert json.loads((out / "manifest.json").read_text())["criteria"]["10"]["passed"]
