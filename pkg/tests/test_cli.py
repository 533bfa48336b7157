import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from dipolelets.cli import main
from dipolelets.io import read_volume, write_volume

ROOT = Path(__file__).resolve().parents[1]
DEFAULT = ROOT / "configs" / "default.json"


def _run(*args):
    return CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("runs")
    results = [_run("pipeline", "--config", DEFAULT, "--output", base / name, "--quiet")
               for name in ("a", "b")]
    return base, results


def _manifest(d):
    return json.loads((d / "manifest.json").read_text())


def test_pipeline_default_config(runs):
    base, results = runs
    assert all(r.exit_code == 0 for r in results), [r.output for r in results]
    m = _manifest(base / "a")
    assert len(m["artifacts"]) >= 10
    assert {"library_version", "config_hash", "seed", "metrics"} <= set(m)
    assert any(a["path"].endswith(".png") for a in m["artifacts"])
    assert any(a["path"].endswith("_report.json") for a in m["artifacts"])
    assert (base / "a" / "metrics.json").exists()


def test_manifest_matches_directory(runs):
    base, _ = runs
    d = base / "a"
    listed = {a["path"] for a in _manifest(d)["artifacts"]}
    on_disk = {p.relative_to(d).as_posix() for p in d.rglob("*") if p.is_file()} - {"manifest.json"}
    assert listed == on_disk


def test_rerun_is_identical(runs):
    base, _ = runs
    a, b = base / "a", base / "b"
    assert (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()
    sha = lambda d: {x["path"]: x["sha256"] for x in _manifest(d)["artifacts"]
                     if x["path"].endswith(".dpv")}
    assert sha(a) == sha(b)
    assert _manifest(a)["config_hash"] == _manifest(b)["config_hash"]


def test_unknown_key_is_named(tmp_path):
    cfg = json.loads(DEFAULT.read_text())
    cfg["solver"]["tv"]["lamda"] = 0.1
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(cfg))
    r = CliRunner().invoke(main, ["pipeline", "--config", str(p), "--output", str(tmp_path / "o")])
    assert r.exit_code != 0
    err = json.loads(r.stderr.strip().splitlines()[-1])
    assert "lamda" in err["message"]
    assert err["error"] == "configuration" and err["stage"]
    assert not (tmp_path / "o").exists()


def test_missing_config_file(tmp_path):
    r = CliRunner().invoke(main, ["phantom", "--config", str(tmp_path / "nope.json"),
                                  "--output", str(tmp_path / "o")])
    assert r.exit_code != 0
    assert json.loads(r.stderr.strip().splitlines()[-1])["stage"] == "phantom"


@pytest.fixture
def small_cfg(tmp_path):
    cfg = json.loads(DEFAULT.read_text())
    cfg["grid"]["shape"] = [16, 16, 16]
    cfg["bands"]["radial"]["J"] = 2
    cfg["solver"]["tv"]["max_iters"] = 5
    cfg["solver"]["bandreg"]["max_iters"] = 5
    p = tmp_path / "small.json"
    p.write_text(json.dumps(cfg))
    return p


def test_standalone_stages(tmp_path, small_cfg):
    c = ("--config", small_cfg, "--quiet")
    assert _run("phantom", *c, "--output", tmp_path / "ph").exit_code == 0
    assert _run("forward", *c, "--chi33", tmp_path / "ph" / "chi33.dpv",
                "--output", tmp_path / "psi.dpv").exit_code == 0
    assert _run("corrupt", *c, "--input", tmp_path / "psi.dpv",
                "--output", tmp_path / "bad.dpv").exit_code == 0
    assert _run("decompose", *c, "--input", tmp_path / "bad.dpv",
                "--output", tmp_path / "bands").exit_code == 0
    bands = json.loads((tmp_path / "bands" / "manifest.json").read_text())
    total = sum(read_volume(tmp_path / "bands" / b["file"]).data for b in bands["bands"])
    # bands are stored as float32, so the sum matches to single precision
    np.testing.assert_allclose(total, read_volume(tmp_path / "bad.dpv").data, atol=1e-5)
    assert _run("weights", *c, "--input", tmp_path / "bad.dpv",
                "--output", tmp_path / "w").exit_code == 0
    for method in ("tkd", "tv"):
        assert _run("recon", *c, "--input", tmp_path / "bad.dpv", "--weight",
                    tmp_path / "w" / "weight.dpv", "--method", method,
                    "--output", tmp_path / "rec").exit_code == 0
    r = _run("metrics", *c, "--estimate", tmp_path / "rec" / "tv.dpv",
             "--truth", tmp_path / "ph" / "chi33.dpv", "--roi", tmp_path / "ph" / "mask.dpv",
             "--output", tmp_path / "m.json")
    assert r.exit_code == 0
    rep = json.loads((tmp_path / "m.json").read_text())
    assert set(rep) == {"rmse_percent", "xsim", "streak_energy", "roi_voxels"}


def test_seed_override_changes_noise(tmp_path, small_cfg):
    write_volume(np.zeros((16, 16, 16)), tmp_path / "z.dpv")
    outs = []
    for seed in (1, 2, 1):
        out = tmp_path / f"c{len(outs)}.dpv"
        assert _run("corrupt", "--config", small_cfg, "--seed", seed, "--input", tmp_path / "z.dpv",
                    "--output", out).exit_code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[2] and outs[0] != outs[1]


def test_stage_failure_reports_stage(tmp_path, small_cfg):
    write_volume(np.zeros((16, 16, 16)), tmp_path / "z.dpv")
    write_volume(np.ones((8, 8, 8)), tmp_path / "w8.dpv")
    r = CliRunner().invoke(main, ["recon", "--config", str(small_cfg), "--input", str(tmp_path / "z.dpv"),
                                  "--weight", str(tmp_path / "w8.dpv"), "--output", str(tmp_path / "r")])
    assert r.exit_code == 2
    err = json.loads(r.stderr.strip().splitlines()[-1])
    assert err["stage"] == "recon" and err["error"] == "configuration"
