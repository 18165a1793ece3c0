import subprocess
import sys

import pytest

from bindeblur import io
from bindeblur.cli import (EXIT_BUDGET, EXIT_INCONSISTENT, EXIT_OK, EXIT_PARSE, EXIT_UNSUPPORTED,
                           main)
from bindeblur.spectral import Band, BandedSpectrum, BinaryMatrix, dft_on


def write_model(tmp_path, dims, popcount, seed=0):
    x = BinaryMatrix.random(*dims, popcount, seed)
    path = tmp_path / "x.pbm"
    io.write_pbm(x, path)
    return x, path


def test_blur_then_recover(tmp_path, capsys):
    x, img = write_model(tmp_path, (17, 17), 144)
    coeffs, blurred = tmp_path / "c.txt", tmp_path / "b.pgm"
    assert main(["blur", str(img), "--band", "4", "--coeff-out", str(coeffs),
                 "--image-out", str(blurred)]) == EXIT_OK
    assert blurred.read_text().startswith("P2")
    out_img, report = tmp_path / "y.pbm", tmp_path / "r.txt"
    code = main(["recover", str(coeffs), "--image-out", str(out_img), "--report-out", str(report)])
    assert code == EXIT_OK
    assert io.read_pbm(out_img) == x
    assert io.read_report(report)["status"] == "recovered"


def test_recover_prints_report(tmp_path, capsys):
    x, img = write_model(tmp_path, (3, 5), 7)
    coeffs = tmp_path / "c.txt"
    main(["blur", str(img), "--band", "rect4", "--coeff-out", str(coeffs)])
    capsys.readouterr()
    assert main(["recover", str(coeffs)]) == EXIT_OK
    assert "status = recovered" in capsys.readouterr().out


def test_inconsistent_exit(tmp_path):
    spec = dft_on(BinaryMatrix.random(3, 5, 7, 0), Band.four_coefficient())
    vals = dict(spec.values)
    vals[(1, 1)] += 0.5
    vals[(-1, -1)] = vals[(1, 1)].conjugate()
    path = tmp_path / "c.txt"
    io.write_coefficients(BandedSpectrum(3, 5, spec.band, vals), path)
    assert main(["recover", str(path)]) == EXIT_INCONSISTENT


def test_budget_exit(tmp_path):
    spec = dft_on(BinaryMatrix.random(11, 13, 71, 0), Band.four_coefficient())
    path = tmp_path / "c.txt"
    io.write_coefficients(spec, path)
    assert main(["recover", str(path), "--time-limit", "1"]) == EXIT_BUDGET


def test_unsupported_exit(tmp_path):
    path = tmp_path / "c.txt"
    io.write_coefficients(dft_on(BinaryMatrix.zeros(6, 6), Band.square(1)), path)
    assert main(["recover", str(path)]) == EXIT_UNSUPPORTED


def test_parse_exit(tmp_path, capsys):
    path = tmp_path / "c.txt"
    path.write_text("dims 3 5\ncount 9\n")
    assert main(["recover", str(path)]) == EXIT_PARSE
    assert "parse error" in capsys.readouterr().err
    assert main(["recover", str(tmp_path / "missing.txt")]) == EXIT_PARSE
    bad = tmp_path / "bad.pbm"
    bad.write_text("P1\n2 2\n1 0 2 0\n")
    assert main(["blur", str(bad), "--band", "1", "--coeff-out", str(path)]) == EXIT_PARSE


def test_bad_band_flag(capsys):
    with pytest.raises(SystemExit):
        main(["blur", "x.pbm", "--band", "wide", "--coeff-out", "c.txt"])


def test_noisy_blur_is_seeded(tmp_path):
    _, img = write_model(tmp_path, (7, 7), 20)
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for out in (a, b):
        main(["blur", str(img), "--band", "2", "--coeff-out", str(out), "--noise", "1e-4",
              "--seed", "3"])
    assert a.read_text() == b.read_text()


def test_trials_table(tmp_path, capsys):
    out = tmp_path / "t.tsv"
    assert main(["trials", "--dims", "3", "5", "--band", "rect4", "--popcount", "7",
                 "--trials", "5", "--oracle", "--out", str(out)]) == EXIT_OK
    header, row = out.read_text().splitlines()
    fields = dict(zip(header.split("\t"), row.split("\t")))
    assert fields["success_pct"] == "100.0" and fields["oracle_agreement_pct"] == "100.0"


def test_stability_and_counts(capsys):
    main(["stability", "29", "29", "2"])
    assert "digits_rounded = 11" in capsys.readouterr().out
    main(["counts", "38", "7", "11"])
    assert capsys.readouterr().out.strip() == "1,528,688"
    main(["counts", "--column-sums", "1", "1", "--rows", "2"])
    assert capsys.readouterr().out.strip() == "4"


def test_gen_and_audit(tmp_path, capsys):
    path = tmp_path / "q.pbm"
    assert main(["gen", "qr-like", "--dims", "25", "25", "--popcount", "287", "--out", str(path)]) == 0
    assert io.read_pbm(path).popcount == 287
    capsys.readouterr()
    main(["audit", "--dims", "4", "4", "--band", "1", "--show", "1"])
    out = capsys.readouterr().out
    assert "collision_pairs = " in out and "pair:" in out
    main(["audit", "--dims", "5", "5", "--band", "2", "--sampled", "500"])
    assert "collision_pairs = 0" in capsys.readouterr().out
    assert main(["audit", "--dims", "6", "6", "--band", "1"]) == EXIT_UNSUPPORTED


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "bindeblur", "stability", "13", "11", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "digits_rounded = 7" in res.stdout
