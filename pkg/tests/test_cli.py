"""Command-line interface: subcommands, exit codes, determinism."""

import json

import pytest

from tractor_forge.cli import main

BUMPY = ["--preset", "bumpy", "--param", "eps=0.1"]
POINT = ["--point", "0.1,-0.2,0.15"]


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_tensors_json(capsys):
    code, out, _ = run(capsys, ["tensors", "--preset", "sphere"] + POINT)
    assert code == 0
    data = json.loads(out)
    assert data["at_base"]["scalar_curvature"] == pytest.approx(6.0)
    assert data["conformally_flat"] is True
    assert data["signature"] == [3, 0]


def test_tensors_text_format(capsys):
    code, out, _ = run(capsys, ["tensors", "--preset", "flat", "--format", "text"])
    assert code == 0
    assert "scalar_curvature: 0.0" in out


def test_tractor_normality_exit_codes(capsys):
    code, out, _ = run(capsys, ["tractor", "--preset", "ppwave"])
    assert code == 0
    data = json.loads(out)
    assert data["normality_pass"] is True
    assert set(data["variants"]) == {"induced", "paper"}


def test_ambient_singular_point_exit_two(capsys):
    code, _, err = run(capsys, ["ambient", "--preset", "sphere",
                                "--s", "2.0", "--q", "1.0"] + POINT)
    assert code == 2
    assert "-0.5" in err
    assert "singular" in err


def test_ambient_regular_point(capsys):
    code, out, _ = run(capsys, ["ambient"] + BUMPY + POINT +
                       ["--s", "0.2", "--q", "1.1"])
    assert code == 0
    data = json.loads(out)
    assert data["pass"] is True
    assert data["torsion_vs_cotton_york"] < 1e-7


def test_holonomy_variants_and_csv(capsys, tmp_path):
    code, out, _ = run(capsys, ["holonomy", "--preset", "flat",
                                "--loops", "4"] + POINT)
    assert code == 0
    data = json.loads(out)
    assert data["dimension"] == 0
    assert len(data["fixed_vectors"]) == 5

    csv_path = tmp_path / "loops.csv"
    code, _, _ = run(capsys, ["holonomy", "--preset", "flat", "--loops", "4",
                              "--variant", "levi-civita", "--format", "csv",
                              "--out", str(csv_path)] + POINT)
    assert code == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0].startswith("loop,kind,metric_drift")
    assert len(lines) == 5  # header + 4 loops


def test_config_file_source(capsys, tmp_path):
    cfg = tmp_path / "metric.cfg"
    cfg.write_text("preset = sphere\n")
    code, out, _ = run(capsys, ["tensors", "--config", str(cfg)] + POINT)
    assert code == 0
    assert json.loads(out)["at_base"]["scalar_curvature"] == pytest.approx(6.0)


def test_bad_config_exit_two(capsys, tmp_path):
    code, _, err = run(capsys, ["tensors", "--preset", "nope"])
    assert code == 2 and "error" in err
    code, _, err = run(capsys, ["tensors", "--config", str(tmp_path / "missing.cfg")])
    assert code == 2
    code, _, err = run(capsys, ["tensors", "--preset", "sphere",
                                "--point", "0.1,0.2"])
    assert code == 2
    code, _, err = run(capsys, ["tensors", "--preset", "sphere",
                                "--param", "radius"])
    assert code == 2


def test_verify_flat_passes_and_deterministic(capsys, tmp_path):
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    args = ["verify", "--preset", "flat", "--seed", "42", "--loops", "5",
            "--samples", "4"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    capsys.readouterr()

    def strip_seconds(path):
        data = json.loads(path.read_text())
        for c in data["checks"]:
            c["seconds"] = 0.0
        return json.dumps(data, sort_keys=True)

    assert strip_seconds(out1) == strip_seconds(out2)
    data = json.loads(out1.read_text())
    assert data["summary"]["pass"] is True
    assert data["schema_version"] == 1
