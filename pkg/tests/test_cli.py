import json
import math

import numpy as np
import pytest

from kpv.cli import (EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, EXIT_VERIFY_FAILED,
                     ExperimentSpec, main, run)
from kpv.configurations import is_expansion, load_configuration

from conftest import two_disk_union


@pytest.fixture
def two_disks(tmp_path):
    path = tmp_path / "two.json"
    path.write_text(json.dumps(
        {"dimension": 2, "points": [[0.0, 0.0], [1.0, 0.0]], "label": "pair"}))
    return str(path)


def test_volume_report_two_disks(two_disks, tmp_path):
    out = tmp_path / "report.json"
    code = main(["volume", "--config", two_disks, "--r", "1.0",
                 "--method", "voronoi_ode", "--out", str(out)])
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    row = report["results"]["volumes"][0]
    assert row["union"] == pytest.approx(two_disk_union(1.0, 1.0), rel=1e-6)
    assert report["parameters"]["method"] == "voronoi_ode"
    assert report["version"]


def test_reports_are_byte_identical(two_disks, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code = main(["verify", "csikos", "--config", two_disks,
                     "--seed", "7", "--out", str(path)])
        assert code == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_malformed_input_exits_2_no_partial_output(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "never.json"
    code = main(["volume", "--config", str(bad), "--r", "1.0", "--out", str(out)])
    assert code == EXIT_INPUT
    assert not out.exists()


def test_missing_config_exits_2(tmp_path):
    code = main(["volume", "--r", "1.0"])
    assert code == EXIT_INPUT


def test_verify_failure_exit_code(two_disks, tmp_path):
    out = tmp_path / "rep.json"
    code = main(["verify", "csikos", "--config", two_disks,
                 "--tol", "1e-30", "--out", str(out)])
    assert code == EXIT_VERIFY_FAILED
    report = json.loads(out.read_text())
    assert report["results"]["all_pass"] is False
    assert out.exists()                  # report written even on failed checks


def test_boundary_at_breakpoint_exits_3(two_disks):
    # r = 0.5 is the bisector distance, a breakpoint of both region profiles
    code = main(["boundary", "--config", two_disks, "--r", "0.5"])
    assert code == EXIT_NUMERICAL


def test_generate_roundtrip(two_disks, tmp_path):
    prefix = str(tmp_path / "pair")
    code = main(["generate", "--config", two_disks, "--seed", "5",
                 "--magnitude", "0.25", "--out", prefix])
    assert code == EXIT_OK
    p = load_configuration(prefix + "_p.json")
    q = load_configuration(prefix + "_q.json")
    assert is_expansion(p, q, tol=0.0)
    meta = json.loads((tmp_path / "pair_q.json").read_text())["metadata"]
    assert meta["seed"] == 5 and meta["magnitude"] == 0.25


def test_generate_zero_magnitude_identity(two_disks, tmp_path):
    prefix = str(tmp_path / "same")
    main(["generate", "--config", two_disks, "--seed", "1",
          "--magnitude", "0.0", "--out", prefix])
    p = load_configuration(prefix + "_p.json")
    q = load_configuration(prefix + "_q.json")
    assert np.array_equal(p.points, q.points)


def test_generate_deterministic(two_disks, tmp_path):
    for name in ("g1", "g2"):
        main(["generate", "--config", two_disks, "--seed", "42",
              "--magnitude", "0.3", "--out", str(tmp_path / name)])
    q1 = (tmp_path / "g1_q.json").read_text()
    q2 = (tmp_path / "g2_q.json").read_text()
    assert q1 == q2


def test_csv_and_json_contain_identical_values(two_disks, tmp_path):
    jpath, cpath = tmp_path / "m.json", tmp_path / "m.csv"
    main(["meanwidth", "--config", two_disks, "--method", "exact2d",
          "--out", str(jpath)])
    main(["meanwidth", "--config", two_disks, "--method", "exact2d",
          "--out", str(cpath), "--format", "csv"])
    value_json = json.loads(jpath.read_text())["results"]["value"]
    rows = dict(line.split(",", 1) for line in
                cpath.read_text().strip().splitlines()[1:])
    assert float(rows["results.value"]) == value_json == 2.0


def test_threshold_command(two_disks, tmp_path):
    qpath = tmp_path / "expanded.json"
    qpath.write_text(json.dumps(
        {"dimension": 2, "points": [[0.0, 0.0], [1.3, 0.0]]}))
    out = tmp_path / "thr.json"
    code = main(["threshold", "--config", two_disks, "--config", str(qpath),
                 "--r-grid", "1.0:300.0:8", "--out", str(out)])
    assert code == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["results"]["all_hold"] is True
    assert rep["results"]["strictness_margin"] > 0


def test_meanwidth_quadrature_command(two_disks, tmp_path):
    out = tmp_path / "q.json"
    code = main(["meanwidth", "--config", two_disks, "--method", "quadrature",
                 "--nodes", "2048", "--out", str(out)])
    assert code == EXIT_OK
    res = json.loads(out.read_text())["results"]
    assert res["value"] == pytest.approx(2.0, abs=3 * res["stderr"])


def test_asymptotics_command(two_disks, tmp_path):
    out = tmp_path / "a.json"
    code = main(["asymptotics", "--config", two_disks,
                 "--window", "10:1000:24", "--out", str(out)])
    assert code == EXIT_OK
    res = json.loads(out.read_text())["results"]
    assert res["union"]["coefficients"][0] == pytest.approx(math.pi, rel=1e-3)
    assert res["union"]["coefficients"][1] == pytest.approx(2.0, rel=0.02)
    assert res["intersection"]["coefficients"][1] == pytest.approx(-2.0, rel=0.02)


def test_run_with_spec_object(two_disks):
    spec = ExperimentSpec(command="meanwidth", inputs=[two_disks],
                          parameters={"method": "exact2d"})
    assert run(spec) == EXIT_OK


def test_unknown_command_rejected():
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_report_replayable_from_embedded_parameters(two_disks, tmp_path):
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    main(["meanwidth", "--config", two_disks, "--method", "quadrature",
          "--out", str(out1)])
    rep = json.loads(out1.read_text())
    params = rep["parameters"]
    # defaults are resolved into the report, so the replay is explicit
    main(["meanwidth", "--config", params["inputs"][0],
          "--method", params["method"], "--nodes", str(params["nodes"]),
          "--seed", str(params["seed"]), "--out", str(out2)])
    assert json.loads(out2.read_text())["results"] == rep["results"]
