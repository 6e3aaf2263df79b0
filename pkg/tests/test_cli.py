"""CLI behaviour: outputs, exit codes, determinism, CSV/SVG pairing."""

import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from hyperglue.cli import main


def run_cli(*argv) -> int:
    return main(list(argv))


def run_subprocess(*argv):
    return subprocess.run(
        [sys.executable, "-m", "hyperglue.cli", *argv],
        capture_output=True,
        text=True,
    )


def read_csv(path: Path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestForms:
    def test_family_csv(self, tmp_path, capsys):
        out = tmp_path / "fam"
        assert run_cli("forms", "family", "--n", "3", "--field", "Q", "--out", str(out)) == 0
        rows = read_csv(out / "family.csv")
        assert len(rows) == 7  # header + six forms
        assert all(r[3] == "true" for r in rows[1:])
        certs = read_csv(out / "certificates.csv")
        assert len(certs) == 16  # header + 15 pairs
        assert all(r[2] == "non-equivalent" for r in certs[1:])
        assert (out / "manifest.json").exists()

    def test_family_sqrt2(self, tmp_path):
        out = tmp_path / "fam2"
        assert run_cli("forms", "family", "--n", "2", "--field", "Q(sqrt2)", "--out", str(out)) == 0
        rows = read_csv(out / "family.csv")
        assert len(rows) == 7

    def test_check_flag_value_with_leading_dash(self, capsys):
        assert run_cli("forms", "check", "--coeffs", "-1,1,1", "--field", "Q") == 0
        assert "admissible=true" in capsys.readouterr().out

    def test_check_non_admissible(self, capsys):
        assert run_cli("forms", "check", "--coeffs", "1,1,1", "--field", "Q") == 0
        assert "admissible=false" in capsys.readouterr().out

    def test_missing_required_flag_exits_2(self):
        result = run_subprocess("forms", "family", "--field", "Q")
        assert result.returncode == 2


class TestGeomCommands:
    def test_nesting_orthogonal_regime(self, tmp_path, capsys):
        out = tmp_path / "n"
        code = run_cli(
            "geom", "nesting", "--angle", "90", "--lenH", "1", "--lenV", "6",
            "--out", str(out),
        )
        assert code == 0
        assert "no nesting, Poincare pass" in capsys.readouterr().out
        rows = read_csv(out / "nesting.csv")
        verdicts = {r[2] for r in rows[1:] if r[0].startswith("H")}
        assert verdicts == {"disjoint-not-nested"}

    def test_nesting_oblique_regime(self, tmp_path, capsys):
        out = tmp_path / "n2"
        code = run_cli(
            "geom", "nesting", "--angle", "60", "--lenH", "0.3", "--lenV", "8",
            "--out", str(out),
        )
        assert code == 0
        assert "nested pair found" in capsys.readouterr().out
        rows = read_csv(out / "nesting.csv")
        assert any(r[2] == "nested" for r in rows[1:])
        assert any(r[0] == "poincare" and r[2] == "fail" for r in rows[1:])

    def test_shrink_table(self, tmp_path, capsys):
        out = tmp_path / "s"
        assert run_cli("geom", "shrink", "--R", "2,4,8", "--out", str(out)) == 0
        rows = read_csv(out / "shrink.csv")
        radii = [float(r[2]) for r in rows[1:]]
        assert radii == sorted(radii, reverse=True)

    def test_admissible_demo(self, tmp_path, capsys):
        out = tmp_path / "a"
        assert run_cli("geom", "admissible", "--seed", "3", "--out", str(out)) == 0
        text = capsys.readouterr().out
        assert "violation found" in text and "admissible" in text

    def test_extension_demo(self, tmp_path, capsys):
        out = tmp_path / "e"
        assert run_cli("geom", "extension", "--out", str(out)) == 0
        assert "two conformal copies" in capsys.readouterr().out

    def test_unknown_demo_exits_2(self):
        result = run_subprocess("geom", "spin")
        assert result.returncode == 2

    def test_every_svg_has_sibling_csv(self, tmp_path):
        jobs = [
            ("geom", "admissible", "--seed", "0"),
            ("geom", "nesting", "--angle", "90", "--lenH", "1", "--lenV", "6"),
            ("geom", "shrink", "--R", "2,4"),
            ("geom", "extension"),
        ]
        for k, job in enumerate(jobs):
            out = tmp_path / f"job{k}"
            assert run_cli(*job, "--out", str(out)) == 0
            svgs = list(out.glob("*.svg"))
            assert svgs
            for svg in svgs:
                assert svg.with_suffix(".csv").exists()


class TestCount:
    def test_table_and_checks(self, tmp_path, capsys):
        out = tmp_path / "c"
        code = run_cli(
            "count", "--m-max", "7", "--mode", "free", "--check-assemblies",
            "--out", str(out),
        )
        assert code == 0
        rows = read_csv(out / "counts.csv")
        assert [r[1] for r in rows[1:]] == ["1", "15", "465"]
        text = capsys.readouterr().out
        assert "all passed" in text
        assert "growth fit" in text

    def test_empty_table_below_five(self, tmp_path, capsys):
        out = tmp_path / "c4"
        assert run_cli("count", "--m-max", "4", "--out", str(out)) == 0
        rows = read_csv(out / "counts.csv")
        assert len(rows) == 1  # header only
        assert "warning" in capsys.readouterr().out

    def test_too_large_refused(self, tmp_path):
        out = tmp_path / "big"
        assert run_cli("count", "--m-max", "12", "--out", str(out)) == 2


class TestDeterminism:
    @pytest.mark.parametrize(
        "job",
        [
            ("geom", "admissible", "--seed", "7"),
            ("geom", "nesting", "--angle", "90", "--lenH", "1", "--lenV", "6"),
            ("geom", "nesting", "--angle", "60", "--lenH", "0.3", "--lenV", "8"),
            ("geom", "shrink", "--R", "2,4,8,16"),
            ("geom", "extension", "--seed", "5"),
            ("forms", "family", "--n", "3", "--field", "Q"),
            ("count", "--m-max", "6", "--mode", "free"),
        ],
    )
    def test_byte_identical_reruns(self, tmp_path, job):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert run_cli(*job, "--out", str(out1)) == 0
        assert run_cli(*job, "--out", str(out2)) == 0
        files1 = sorted(p.name for p in out1.iterdir())
        files2 = sorted(p.name for p in out2.iterdir())
        assert files1 == files2
        for name in files1:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


class TestConfigFile:
    def test_config_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 9}))
        out1 = tmp_path / "o1"
        out2 = tmp_path / "o2"
        assert run_cli("geom", "admissible", "--config", str(cfg), "--out", str(out1)) == 0
        assert run_cli("geom", "admissible", "--seed", "9", "--out", str(out2)) == 0
        assert (out1 / "admissible.csv").read_bytes() == (out2 / "admissible.csv").read_bytes()
