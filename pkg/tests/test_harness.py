import json
from fractions import Fraction

import pytest

from relapprox.cli import main
from relapprox.harness import ExperimentConfig, generate_points, in_convex_position, run


def test_generators():
    pts = generate_points("convex_circle", 3, 5)
    assert in_convex_position(pts.points)
    assert generate_points("clustered", 30, 1, dim=3) == generate_points("clustered", 30, 1, dim=3)
    grid = generate_points("grid", 9, 0)
    assert sorted(grid.points) == [(Fraction(x), Fraction(y)) for x in range(3) for y in range(3)]
    cube = generate_points("uniform_cube", 10, 2)
    assert cube.dim == 3
    for p in cube:
        for c in p:
            assert (c * 10 ** 6).denominator == 1
    with pytest.raises(ValueError):
        generate_points("spiral", 5, 0)
    with pytest.raises(ValueError):
        generate_points("grid", 0, 0)


def test_convex_circle_large():
    assert in_convex_position(generate_points("convex_circle", 200, 9).points)


def _config(tmp_path, **kw):
    base = dict(generator="uniform_square", n=60, family="halfplanes2d", p="1/16", eps="1/2", seeds=[1, 2],
                out_dir=str(tmp_path))
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def test_empty_seeds(tmp_path):
    with pytest.raises(ValueError, match="no seeds"):
        run(_config(tmp_path, seeds=[]))


def test_degenerate_run_exact_zero(tmp_path):
    report = run(_config(tmp_path, seeds=[4]))
    assert report.passed
    rec = report.seeds[0]
    assert rec["verify_X"]["max_multiplicative_error"] == "0"
    assert rec["verify_X"]["max_additive_error"] == "0"
    for name in ("report.json", "violations.csv", "comparison.csv", "checks.csv", "profile.csv"):
        data = (tmp_path / name).read_bytes()
        assert b"\r\n" not in data
    checks = (tmp_path / "checks.csv").read_text().splitlines()
    assert len(checks) == 1 + 1 * 4


def test_reports_reproducible(tmp_path):
    a = run(_config(tmp_path / "a", constants={"core_on_whole_set": True}, n=200))
    b = run(_config(tmp_path / "b", constants={"core_on_whole_set": True}, n=200))
    da, db = a.to_dict(), b.to_dict()
    for d in (da, db):
        d.pop("timing")
        d.pop("out_dir")
    assert json.dumps(da, sort_keys=True) == json.dumps(db, sort_keys=True)
    assert a.reproducibility_hash == b.reproducibility_hash


def test_stage_failure_recorded(tmp_path):
    report = run(_config(tmp_path, family="rects2d", n=50, p="1/32", eps="1/4",
                         constants={"core_on_whole_set": True}))
    assert not report.passed
    assert report.summary["errors"] == {"moser_tardos": 2}
    assert all(s["error"]["stage"] == "moser_tardos" for s in report.seeds)


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        _config(tmp_path, generator="uniform_cube")
    with pytest.raises(ValueError):
        _config(tmp_path, constants={"Z": 1})
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"bogus": 1})


def test_cli_run_profile_compare(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(dict(generator="uniform_square", n=40, family="rects2d", p="1/16", eps="1/2",
                                   seeds=[0], profile_ks=[1, 2])))
    assert main(["run", "--config", str(cfg), "--out-dir", str(tmp_path / "r"), "--seed", "3,4"]) == 0
    rep = json.loads((tmp_path / "r" / "report.json").read_text())
    assert [s["seed"] for s in rep["seeds"]] == [3, 4]
    assert (tmp_path / "r" / "profile.csv").read_text().startswith("k,count,bound,exceeds,ratio\n")

    assert main(["profile", "--family", "halfplanes2d", "--n", "30", "--ks", "1,5", "--out-dir",
                 str(tmp_path / "p")]) == 0
    assert len((tmp_path / "p" / "profile.csv").read_text().splitlines()) == 3

    assert main(["compare", "--family", "halfplanes2d", "--n", "30", "--p", "1/4", "--eps", "1/2",
                 "--seed", "1,2", "--out-dir", str(tmp_path / "c")]) == 0
    assert len((tmp_path / "c" / "comparison.csv").read_text().splitlines()) == 3

    assert main(["profile", "--family", "boxes3d", "--n", "100", "--ks", "1"]) == 2
    assert "force_large_n" in capsys.readouterr().err


def test_cli_run_failure_exit_code(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(dict(generator="uniform_square", n=50, family="rects2d", p="1/32", eps="1/4",
                                   seeds=[0], constants={"core_on_whole_set": True})))
    assert main(["run", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 1
