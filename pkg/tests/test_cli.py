import json
import subprocess
import sys
from pathlib import Path

import pytest

GOLDEN = Path(__file__).parent / "golden" / "two_atom.json"


def run_cli(*args, **kw):
    return subprocess.run(
        [sys.executable, "-m", "matmoments.cli", *args],
        capture_output=True, text=True, **kw,
    )


@pytest.fixture(scope="module")
def two_atom_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "two_atom.json"
    proc = run_cli("generate", "--family", "two-atom", "--count", "33",
                   "--output", str(path))
    assert proc.returncode == 0, proc.stderr
    return path


@pytest.fixture(scope="module")
def lognormal_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "lognormal.json"
    proc = run_cli("generate", "--family", "lognormal", "--count", "127",
                   "--output", str(path))
    assert proc.returncode == 0, proc.stderr
    return path


def test_generate_matches_golden(two_atom_file):
    assert two_atom_file.read_bytes() == GOLDEN.read_bytes()


def test_validate_solvable(two_atom_file):
    proc = run_cli("validate", "--input", str(two_atom_file))
    assert proc.returncode == 0
    report = json.loads(proc.stdout)
    assert report["verdict"] == "solvable-within-tolerance"


def test_validate_rejected(tmp_path):
    path = tmp_path / "indef.json"
    path.write_text(json.dumps({
        "N": 1,
        "moments": [[[[1, 0]]], [[[0, 0]]], [[[-1, 0]]]],
    }))
    proc = run_cli("validate", "--input", str(path))
    assert proc.returncode == 2
    report = json.loads(proc.stdout)
    assert report["rejected_order"] == 1


def test_validate_malformed(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{oops")
    proc = run_cli("validate", "--input", str(path))
    assert proc.returncode == 1
    err = json.loads(proc.stderr)
    assert err["error"] == "io-format"


def test_missing_flag_maps_to_io_exit():
    proc = run_cli("validate")
    assert proc.returncode == 1


def test_determinacy_exit_codes(two_atom_file, lognormal_file, tmp_path):
    zero_path = tmp_path / "zero.json"
    run_cli("generate", "--family", "zero", "--count", "6", "--output", str(zero_path))
    proc = run_cli("determinacy", "--input", str(zero_path))
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["zero_branch"]

    proc = run_cli("determinacy", "--input", str(two_atom_file), "--max-section", "16")
    assert proc.returncode == 0

    proc = run_cli("determinacy", "--input", str(lognormal_file))
    assert proc.returncode == 3
    verdict = json.loads(proc.stdout)
    assert verdict["verdict"] == "indeterminate"
    assert verdict["residual_history"]["a"]


def test_determinacy_inconclusive_gaussian(tmp_path):
    path = tmp_path / "gauss.json"
    run_cli("generate", "--family", "gaussian", "--count", "65", "--output", str(path))
    proc = run_cli("determinacy", "--input", str(path), "--max-section", "16")
    assert proc.returncode == 4
    verdict = json.loads(proc.stdout)
    assert any("precision" in note for note in verdict["notes"])


def test_coeffs_csv_shapes(lognormal_file, tmp_path):
    out = tmp_path / "coeffs.csv"
    proc = run_cli("coeffs", "--input", str(lognormal_file), "--grid", "2i",
                   "--output", str(out))
    assert proc.returncode == 0, proc.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == "# shapes A:1x1 B:1x1 C:1x1 D:1x1"
    assert lines[1].startswith("z_re,z_im,A_0_0_re")
    assert len(lines) == 3


def test_transform_excluded_point(lognormal_file):
    proc = run_cli("transform", "--input", str(lognormal_file), "--grid", "i")
    assert proc.returncode == 5
    err = json.loads(proc.stderr)
    assert err["error"] == "excluded-point"
    assert "excluded" in err["message"]


def test_transform_determinate_input(two_atom_file):
    proc = run_cli("transform", "--input", str(two_atom_file), "--grid", "2i",
                   "--max-section", "16")
    assert proc.returncode == 5
    assert json.loads(proc.stderr)["error"] == "determinate-input"


def test_transform_deterministic_bytes(lognormal_file, tmp_path):
    out1 = tmp_path / "t1.csv"
    out2 = tmp_path / "t2.csv"
    for out in (out1, out2):
        proc = run_cli(
            "transform", "--input", str(lognormal_file), "--grid", "2i,1+1i",
            "--max-section", "32", "--output", str(out),
        )
        assert proc.returncode == 0, proc.stderr
    assert out1.read_bytes() == out2.read_bytes()
    header = out1.read_text().splitlines()[0]
    assert header == "z_re,z_im,S_0_0_re,S_0_0_im"


def test_transform_schur_flag(lognormal_file, tmp_path):
    out = tmp_path / "t.csv"
    proc = run_cli(
        "transform", "--input", str(lognormal_file), "--grid", "2i",
        "--max-section", "32", "--schur", "constant:[[0.5]]",
        "--output", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    proc2 = run_cli(
        "transform", "--input", str(lognormal_file), "--grid", "2i",
        "--max-section", "32", "--schur", "moebius:[[1.0]]",
    )
    assert proc2.returncode == 0, proc2.stderr
    bad = run_cli(
        "transform", "--input", str(lognormal_file), "--grid", "2i",
        "--schur", "constant:[[2.0]]",
    )
    assert bad.returncode == 5
    assert json.loads(bad.stderr)["error"] == "contraction-violation"


def test_density_outputs(lognormal_file, tmp_path):
    out = tmp_path / "dens.csv"
    proc = run_cli(
        "density", "--input", str(lognormal_file), "--interval", "0:4",
        "--step", "0.5", "--epsilon", "0.01", "--max-section", "32",
        "--output", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    cum = tmp_path / "dens_cumulative.csv"
    assert cum.exists()
    dens_lines = out.read_text().splitlines()
    assert dens_lines[0] == "lambda,M_0_0_re,M_0_0_im"
    assert len(dens_lines) == 10  # 9 grid points on [0, 4] with step 0.5


def test_bad_grid_and_schur(lognormal_file):
    proc = run_cli("transform", "--input", str(lognormal_file), "--grid", "nope")
    assert proc.returncode == 1
    proc = run_cli("transform", "--input", str(lognormal_file), "--grid", "2i",
                   "--schur", "whatever")
    assert proc.returncode == 1
    proc = run_cli("transform", "--input", str(lognormal_file), "--grid", "2i",
                   "--max-section", "33")
    assert proc.returncode == 1


def test_rect_grid(lognormal_file, tmp_path):
    out = tmp_path / "rect.csv"
    proc = run_cli(
        "transform", "--input", str(lognormal_file),
        "--grid", "rect:-1:1:2:3:1", "--max-section", "32",
        "--output", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    # 3 re-points x 2 im-points
    assert len(out.read_text().splitlines()) == 1 + 6


def test_precision_override(two_atom_file):
    proc = run_cli("validate", "--input", str(two_atom_file),
                   "--precision-bits", "100")
    assert proc.returncode == 0
    proc = run_cli("validate", "--input", str(two_atom_file),
                   "--precision-bits", "10")
    assert proc.returncode == 1
