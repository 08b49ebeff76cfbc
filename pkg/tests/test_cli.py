"""Command-line interface: subcommands, printed contracts, exit codes."""

import math

import numpy as np
import pytest

from phasechain import RealField, make_axis, read_field, sample_real, write_field
from phasechain.cli import main
from phasechain.fields import ComplexField


@pytest.fixture(scope="module")
def psi_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "psi.fld"
    assert main(["gen-ho", "--out", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def w4_path(psi_path, tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "w4.fld"
    assert main(["wigner", "--in", str(psi_path), "--rank", "4", "--out", str(path)]) == 0
    return path


def test_gen_ho_defaults(psi_path, capsys):
    field = read_field(psi_path)
    assert isinstance(field, ComplexField)
    assert field.data.shape == (64, 64)
    assert field.axes[0].min == -8.0 and field.axes[0].step == 0.25
    # center node value sqrt(1/pi) + 0i
    assert field.data[32, 32] == pytest.approx(math.sqrt(1.0 / math.pi), rel=1e-6)
    assert abs(field.data[32, 32].imag) < 1e-15


def test_gen_ho_is_deterministic(tmp_path, psi_path):
    other = tmp_path / "again.fld"
    assert main(["gen-ho", "--out", str(other)]) == 0
    assert other.read_bytes() == psi_path.read_bytes()


def test_wigner_rank4(w4_path, psi_path, capsys, tmp_path):
    again = tmp_path / "w4b.fld"
    assert main(["wigner", "--in", str(psi_path), "--out", str(again)]) == 0
    out = capsys.readouterr().out
    assert "dual axis vdot: [-6.28318531, 6.28318531) step 0.196349541, n = 64" in out
    assert "dual axis vddot" in out
    w4 = read_field(w4_path)
    assert tuple(a.name for a in w4.axes) == ("x", "v", "vdot", "vddot")
    assert w4.data[32, 32, 32, 32] == pytest.approx(1.0 / math.pi**2, abs=1e-9)
    assert again.read_bytes() == w4_path.read_bytes()  # deterministic


def test_wigner_reduced_ranks(psi_path, tmp_path, capsys):
    out3 = tmp_path / "w3.fld"
    assert main(["wigner", "--in", str(psi_path), "--rank", "3", "--out", str(out3)]) == 0
    printed = capsys.readouterr().out
    assert "real rank-3 field on (x x v x vdot)" in printed
    w3 = read_field(out3)
    assert w3.data[32, 32, 32] == pytest.approx(0.17959, rel=1e-4)
    out24 = tmp_path / "w24.fld"
    assert main(["wigner", "--in", str(psi_path), "--rank", "24", "--out", str(out24)]) == 0
    assert tuple(a.name for a in read_field(out24).axes) == ("x", "v", "vddot")


def test_wigner_rejects_real_input(w4_path, tmp_path, capsys):
    out = tmp_path / "nope.fld"
    assert main(["wigner", "--in", str(w4_path), "--out", str(out)]) == 1
    assert "error:" in capsys.readouterr().err


def test_marginal(w4_path, tmp_path, capsys):
    out = tmp_path / "w123.fld"
    assert main(["marginal", "--in", str(w4_path), "--axis", "vddot", "--out", str(out)]) == 0
    w123 = read_field(out)
    assert tuple(a.name for a in w123.axes) == ("x", "v", "vdot")
    assert w123.data[32, 32, 32] == pytest.approx(math.pi**-1.5, abs=1e-8)
    # the axis is already gone in the reduced field
    assert main(["marginal", "--in", str(out), "--axis", "vddot", "--out", str(out)]) == 1
    assert "error:" in capsys.readouterr().err


def test_fluxes_writes_values_and_mask(w4_path, tmp_path, capsys):
    # the transform fixes the traced axis range at +-2 pi, so the moment is
    # slightly truncated where the density is weakest; a 1e-2 mask keeps the
    # flux clean to 1e-6
    out = tmp_path / "flux123.fld"
    assert main(["fluxes", "--in", str(w4_path), "--which", "123",
                 "--mask-threshold", "1e-2", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "123-accel flux on (x x v x vdot)" in printed
    vals = read_field(out)
    mask = read_field(str(out) + ".mask")
    assert vals.data.shape == mask.data.shape
    assert set(np.unique(mask.data)) <= {0.0, 1.0}
    sel = mask.data > 0
    v = vals.axes[1].points()[None, :, None]
    assert np.abs(vals.data - v)[sel].max() < 1e-6
    frac = 1.0 - sel.sum() / sel.size
    assert f"masked fraction {frac:.4f}" in printed


def test_fluxes_12_lands_on_xv(w4_path, tmp_path):
    out = tmp_path / "flux12.fld"
    assert main(["fluxes", "--in", str(w4_path), "--which", "12", "--out", str(out)]) == 0
    vals = read_field(out)
    assert tuple(a.name for a in vals.axes) == ("x", "v")


def potential_file(tmp_path, text):
    path = tmp_path / "u.txt"
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_residual_psi_moyal(w4_path, tmp_path, capsys):
    pot = potential_file(tmp_path, "0 2 1.5\n2 0 -0.5\n")
    report = tmp_path / "report.txt"
    code = main(["residual", "--in", str(w4_path), "--potential", pot,
                 "--mode", "psi-moyal", "--report", str(report)])
    assert code == 0
    out = capsys.readouterr().out
    lines = [ln for ln in out.splitlines() if ln]
    assert lines[0].startswith("max|residual|       = ")
    assert lines[1].startswith("max|residual|/peak  = ")
    assert lines[2].startswith("masked fraction     = ")
    assert report.read_text() == "\n".join(lines) + "\n"


@pytest.mark.parametrize("mode", ["vlasov123", "vlasov124", "vlasov12"])
def test_residual_chain_modes(w4_path, tmp_path, capsys, mode):
    # the chain closures need the governing potential, including its v^2 part
    pot = potential_file(tmp_path, "0 2 1.5\n2 0 -0.5\n")
    code = main(["residual", "--in", str(w4_path), "--potential", pot,
                 "--mode", mode, "--mask-threshold", "1e-2"])
    assert code == 0
    out = capsys.readouterr().out
    rel = float(out.splitlines()[1].split("=")[1])
    assert rel < 0.05  # coarse-grid stencil error only


def test_residual_with_empty_mask_is_numeric_failure(w4_path, tmp_path, capsys):
    pot = potential_file(tmp_path, "2 0 0.5\n")
    code = main(["residual", "--in", str(w4_path), "--potential", pot,
                 "--mode", "vlasov12", "--mask-threshold", "1.5"])
    assert code == 3
    assert "numeric failure:" in capsys.readouterr().err


def test_fluxes_with_empty_mask_is_numeric_failure(w4_path, tmp_path, capsys):
    out = tmp_path / "flux.fld"
    code = main(["fluxes", "--in", str(w4_path), "--which", "123",
                 "--mask-threshold", "1.5", "--out", str(out)])
    assert code == 3
    assert "numeric failure:" in capsys.readouterr().err
    assert not out.exists()  # nothing extracted, nothing written


def test_export_csv(w4_path, tmp_path, capsys):
    out = tmp_path / "slice.csv"
    code = main(["export-csv", "--in", str(w4_path),
                 "--slice", "vdot=0,vddot=0", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "4096 rows over (x, v), pinned vdot = 0, vddot = 0" in printed
    lines = out.read_text().splitlines()
    assert lines[0] == "x,v,value"
    assert len(lines) == 1 + 64 * 64
    # re-ingesting the text reproduces the stored samples exactly
    w4 = read_field(w4_path)
    vals = np.array([float(ln.rsplit(",", 1)[1]) for ln in lines[1:]])
    assert vals.tobytes() == w4.data[:, :, 32, 32].copy().tobytes()


def test_export_csv_bad_slice(w4_path, tmp_path, capsys):
    out = tmp_path / "slice.csv"
    assert main(["export-csv", "--in", str(w4_path), "--slice", "vdot=0", "--out", str(out)]) == 1
    assert "error:" in capsys.readouterr().err


def test_check_suite_passes_and_warns_on_odd_hbar2(capsys):
    code = main(["check", "--suite", "ho", "--hbar2", "2.0"])
    captured = capsys.readouterr()
    assert code == 0
    assert "warning: --hbar2 2.0 is not the consistent value" in captured.err
    lines = captured.out.splitlines()
    assert len([ln for ln in lines if ln.startswith("[")]) == 7
    assert "all checks passed: 7/7" in lines[-1]


def test_flag_errors_exit_1(capsys):
    for argv in (
        [],
        ["no-such-command"],
        ["gen-ho"],  # --out missing
        ["wigner", "--in", "x.fld", "--rank", "5", "--out", "y.fld"],
        ["check", "--suite", "xy"],
    ):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 1
    assert "error:" in capsys.readouterr().err


def test_io_errors_exit_2(tmp_path, capsys, w4_path):
    missing = tmp_path / "absent.fld"
    assert main(["wigner", "--in", str(missing), "--out", str(tmp_path / "o.fld")]) == 2
    corrupt = tmp_path / "corrupt.fld"
    corrupt.write_bytes(b"JUNKJUNKJUNK")
    assert main(["marginal", "--in", str(corrupt), "--axis", "vdot",
                 "--out", str(tmp_path / "o.fld")]) == 2
    pot = tmp_path / "missing_potential.txt"
    assert main(["residual", "--in", str(w4_path), "--potential", str(pot),
                 "--mode", "psi-moyal"]) == 2
    assert capsys.readouterr().err.count("i/o error:") == 3


def test_validation_errors_exit_1(tmp_path, capsys):
    assert main(["gen-ho", "--m", "-1.0", "--out", str(tmp_path / "x.fld")]) == 1
    # rank-4 commands demand canonical axes
    axes = (make_axis("x", -1.0, 1.0, 4), make_axis("v", -1.0, 1.0, 4))
    small = sample_real(lambda x, v: np.exp(-x * x - v * v), axes)
    path = tmp_path / "small.fld"
    write_field(small, path)
    assert main(["fluxes", "--in", str(path), "--which", "123",
                 "--out", str(tmp_path / "f.fld")]) == 1
    assert capsys.readouterr().err.count("error:") == 2
