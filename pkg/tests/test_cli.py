import json

import pytest

from isofield import cli, harness
from isofield import io as fio
from isofield.groups import RotationGroup
from isofield.spectral import PowerSpectrum, sample_gaussian


def write_config(tmp_path, **doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


def run(tmp_path, command, **doc):
    out = tmp_path / command
    code = cli.main([command, "--config", write_config(tmp_path, **doc), "--out", str(out)])
    return code, out


def test_verify_passes_and_writes_manifest(tmp_path):
    code, out = run(tmp_path, "verify", group="circle", band=4, replicates=500, seed=3)
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert [t["test"] for t in report["tests"]] == [
        "orthonormality", "round_trip", "uncorrelatedness", "convergence", "isotropy_functionals"
    ]
    assert all(t["pass"] for t in report["tests"])
    assert "started_at" not in report
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["exit_code"] == 0 and manifest["config"]["seed"] == 3
    assert {f["name"] for f in manifest["files"]} == {"report.json"}


def test_verify_sphere_suites(tmp_path):
    code, out = run(tmp_path, "verify", group="sphere", band=5)
    assert code == 0
    names = [t["test"] for t in json.loads((out / "report.json").read_text())["tests"]]
    assert names == ["orthonormality", "round_trip", "lift"]


def test_under_banded_quadrature_is_a_failing_negative_control(tmp_path):
    code, out = run(tmp_path, "verify", group="so3", band=6, quadrature_band=3, suites=["round_trip"])
    assert code == 1
    test = json.loads((out / "report.json").read_text())["tests"][0]
    assert not test["pass"] and test["detail"]["aliased"]
    assert "aliasing" in test["detail"]["diagnostic"][0]


def test_transform_aliasing_exit_code(tmp_path):
    code, out = run(tmp_path, "transform", group="so3", band=5, quadrature_band=2)
    assert code == 3
    assert json.loads((out / "summary.json").read_text())["aliased"]


def test_simulate_outputs(tmp_path):
    code, out = run(tmp_path, "simulate", group="so3", band=3, replicates=200, seed=1)
    assert code == 0
    for name in ["coefficients_summary.csv", "covariance.csv", "points.csv", "replicate0_grid.csv", "manifest.json"]:
        assert (out / name).exists()
    lines = (out / "coefficients_summary.csv").read_text().splitlines()
    assert lines[0] == "replicate,label,power" and len(lines) == 1 + 200 * 4


def test_simulate_is_byte_reproducible(tmp_path):
    outs = []
    for run_dir in ("a", "b"):
        (tmp_path / run_dir).mkdir()
        code, out = run(tmp_path / run_dir, "simulate", group="circle", band=3, replicates=100, seed=4)
        assert code == 0
        outs.append(out)
    for name in ["coefficients_summary.csv", "covariance.csv", "replicate0_grid.csv"]:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_modulus_command(tmp_path):
    code, out = run(tmp_path, "modulus", group="so3", band=1, spectrum="delta 1", deltas=[0.5, 0.01, 0.1])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["sphere_lift_max_difference"] < 1e-9 and summary["nondecreasing"]
    assert (out / "modulus.csv").read_text().startswith("delta,modulus\n0.01,")


def test_nugget_command(tmp_path):
    code, out = run(tmp_path, "nugget", group="so3", band=4, nugget={"variance": 1, "off_diagonal": 0})
    assert code == 0
    doc = json.loads((out / "nugget.json").read_text())
    assert doc["realizable"] is False and doc["defect"] == 1.0


def test_transform_reads_coefficient_file(tmp_path):
    coeffs = sample_gaussian(PowerSpectrum.geometric(RotationGroup(), 0.5, 3), 2).coefficients
    fio.save_coefficients(coeffs, tmp_path / "in.json", "base64")
    code, out = run(tmp_path, "transform", group="so3", band=3, coefficients_file="in.json")
    assert code == 0
    assert json.loads((out / "summary.json").read_text())["round_trip_error"] < 1e-9


def test_spectrum_file_source(tmp_path):
    fio.save_spectrum(PowerSpectrum.geometric(RotationGroup(), 0.5, 2), tmp_path / "spec.json")
    code, _ = run(tmp_path, "verify", group="so3", band=2, spectrum={"file": "spec.json"}, suites=["round_trip"])
    assert code == 0


@pytest.mark.parametrize(
    "doc",
    [
        {"group": "torus"},
        {"group": "cyclic"},
        {"group": "so3", "colour": "red"},
        {"group": "so3", "schema_version": 2},
        {"group": "so3", "band": 0},
        {"group": "so3", "spectrum": "wavy 2"},
        {"group": "so3", "spectrum": "geometric"},
        {"group": "so3", "band": 2, "spectrum": {"file": "missing.json"}},
        {"group": "so3", "suites": ["lift"]},
        {"group": "so3", "replicates": 50},
        {"group": "so3", "workers": 0},
        {"group": "so3", "band": "six"},
    ],
)
def test_config_errors_exit_2(tmp_path, doc):
    code, _ = run(tmp_path, "verify", **doc)
    assert code == 2


def test_invalid_json_config_exit_2(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{")
    assert cli.main(["verify", "--config", str(path)]) == 2


def test_command_line_overrides(tmp_path):
    cfg = harness.load_config(write_config(tmp_path, group="so3", seed=1, replicates=500), {"seed": 9, "replicates": None})
    assert cfg.seed == 9 and cfg.replicates == 500


def test_unknown_command_is_rejected():
    with pytest.raises(SystemExit):
        cli.main(["explode", "--config", "x.json"])
