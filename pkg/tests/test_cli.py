import pytest

from voronoi_complex.cli import main
from voronoi_complex.config import RunConfig, load_config, parse_config


def test_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# defaults\nout_dir = results\nthreads=2\nwalk_max_iter = 50\n")
    cfg = load_config(p)
    assert cfg.out == "results" and cfg.threads == 2 and cfg.walk_max_iter == 50
    assert cfg.with_overrides(threads=None, rank=4).rank == 4


def test_config_errors():
    with pytest.raises(ValueError):
        parse_config("nonsense")
    with pytest.raises(ValueError):
        parse_config("colour = red")
    with pytest.raises(ValueError):
        RunConfig(group="PGL")


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["bogus"])
    assert e.value.code == 2
    assert main(["--rank", "12", "homology", "--out", str(tmp_path)]) == 2
    assert main(["homology", "--complex", str(tmp_path / "missing.vcx")]) == 2


def test_pipeline_rank3(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["perfect-forms", "--rank", "3", "--out", out]) == 0
    assert (tmp_path / "forms_3.txt").exists()
    assert main(["complex", "--rank", "3", "--out", out]) == 0
    assert (tmp_path / "GL3.vcx").exists()
    assert main(["differentials", "--complex", str(tmp_path / "GL3.vcx"), "--out-dir", str(tmp_path / "d")]) == 0
    assert (tmp_path / "d" / "summary.csv").exists()
    assert main(["homology", "--rank", "3", "--out", out]) == 0
    for check in ("mass", "chain", "topclass", "primes"):
        assert main(["validate", check, "--rank", "3", "--out", out]) == 0
    assert main(["report", "--rank", "3", "--out", out]) == 0
    text = capsys.readouterr().out
    assert "total\t0" in text


def test_sl4_report(tmp_path, capsys):
    assert main(["--rank", "4", "--group", "SL", "--out", str(tmp_path), "report"]) == 0
    text = capsys.readouterr().out
    assert "d_9,2,2,1,1,1,2(1)" in text


def test_splitting_failure_exit_code(tmp_path):
    # GL4 -> GL5 is not a direct factor: the inflated cell is not orientable
    assert main(["validate", "splitting", "--rank", "5", "--out", str(tmp_path)]) == 1
