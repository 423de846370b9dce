"""Command-line entry points, exit codes and output bundles."""

import shutil
import subprocess
import sys
from importlib.resources import files

import numpy as np
import pytest

from qspeckle.cli import main
from qspeckle.io import read_records, write_records
from qspeckle.report import read_scatter

CONFIGS = files("qspeckle") / "data" / "configs"
MINIMAL = str(CONFIGS / "single_photon_minimal.ini")


@pytest.fixture
def run_dir(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", MINIMAL, "-o", str(out)]) == 0
    return out


def test_simulate_bundle(run_dir):
    names = {p.name for p in run_dir.iterdir()}
    assert {"records.csv", "records.provenance.ini", "features.txt", "gof.txt",
            "hist_intensity.svg", "hist_coincidence.svg", "hist_g2.svg"} <= names
    rs = read_records(run_dir / "records.csv")
    assert len(rs) == 100
    # a heralded single photon has no genuine coincidences
    assert rs.g2[rs.g2_valid].mean() == pytest.approx(1.0, abs=1e-9)
    assert not any(p.name.startswith(".") for p in run_dir.parent.iterdir())


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", MINIMAL, "-o", str(a)]) == 0
    assert main(["simulate", MINIMAL, "-o", str(b)]) == 0
    assert (a / "records.csv").read_bytes() == (b / "records.csv").read_bytes()
    assert (a / "features.txt").read_text() == (b / "features.txt").read_text()
    assert (a / "hist_intensity.svg").read_bytes() == (b / "hist_intensity.svg").read_bytes()


def test_gof_flags_neglog_normalization(tmp_path):
    cfg = tmp_path / "dist.ini"
    cfg.write_text("[run]\nN = 200\n[source]\nkind = BiphotonPair\nx = 0\n[detector]\npreset = bright\n"
                   "[report]\nfigures = false\n[analysis]\nbootstrap = 0\n")
    assert main(["simulate", str(cfg), "-o", str(tmp_path / "run")]) == 0
    rows = [l.split("\t") for l in (tmp_path / "run" / "gof.txt").read_text().splitlines()[1:]]
    neglog = [r for r in rows if r[1] == "G2NegLog"]
    assert len(neglog) == 2
    assert all("2/pi" in r[-1] for r in neglog)


def test_analyze_reproduces_simulate_features(run_dir, tmp_path, capsys):
    rep = tmp_path / "report"
    assert main(["analyze", str(run_dir / "records.csv"), "-o", str(rep)]) == 0
    assert (rep / "features.txt").read_text() == (run_dir / "features.txt").read_text()
    assert (rep / "gof.txt").read_text() == (run_dir / "gof.txt").read_text()
    assert "report written" in capsys.readouterr().out


def test_features_file_layout(run_dir):
    lines = (run_dir / "features.txt").read_text().splitlines()
    assert lines[0] == "# dark_subtracted\tfalse"
    assert "feature\tvalue\tstd_error\tci95_low\tci95_high" in lines
    rows = {l.split("\t")[0]: l.split("\t") for l in lines if not l.startswith("#")}
    assert set(rows) >= {"V_I", "V_C", "V_g2", "mean_g2", "d_hat", "purity", "D_hat", "corr_C_g2"}
    assert all(len(r) == 5 for r in rows.values())


def test_malformed_config_exits_2_without_output(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    out = tmp_path / "out"
    bad.write_text(f"[run]\nN = 10\noutput = {out}\n[source]\nkind = Bogus\n")
    assert main(["simulate", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "bad.ini:5: [source.kind]" in err
    assert not out.exists()
    assert [p.name for p in tmp_path.iterdir()] == ["bad.ini"]


def test_missing_config_exits_2(tmp_path):
    assert main(["simulate", str(tmp_path / "none.ini")]) == 2


def test_empty_records_exit_2(tmp_path, capsys):
    p = tmp_path / "records.csv"
    p.write_text("setting_index,I1,I2,C,R,g2,g2_valid\n")
    assert main(["analyze", str(p)]) == 2
    assert "no records" in capsys.readouterr().err
    assert not (tmp_path / "records_report").exists()


def test_too_few_records_exit_2(run_dir, tmp_path):
    rs = read_records(run_dir / "records.csv").subset(np.arange(10))
    p = tmp_path / "few.csv"
    write_records(rs, p)
    assert main(["analyze", str(p)]) == 2


def test_bad_arguments_exit_2(capsys):
    assert main(["analyze"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["--help"]) == 0


def test_scatter_accumulates(run_dir, tmp_path):
    scatter = tmp_path / "scatter.csv"
    for label in ("first", "second"):
        rc = main(["analyze", str(run_dir / "records.csv"), "-o", str(tmp_path / label),
                   "--scatter", str(scatter), "--label", label, "--bootstrap", "0"])
        assert rc == 0
    rows = read_scatter(scatter)
    assert [r["label"] for r in rows] == ["first", "second"]
    assert rows[0]["source"] == "HeraldedSinglePhoton"
    assert (tmp_path / "scatter.svg").is_file()


def test_analyze_without_provenance(run_dir, tmp_path):
    bare = tmp_path / "bare.csv"
    shutil.copy(run_dir / "records.csv", bare)
    assert main(["analyze", str(bare), "--no-figures", "--bootstrap", "0"]) == 0
    rep = tmp_path / "bare_report"
    assert {p.name for p in rep.iterdir()} == {"features.txt", "gof.txt"}


def test_analyze_corrections_flagged(tmp_path):
    cfg = tmp_path / "pair.ini"
    cfg.write_text("[run]\nN = 300\n[source]\nkind = BiphotonPair\n[detector]\npreset = lab\n"
                   "[report]\nfigures = false\n[analysis]\nbootstrap = 0\n")
    assert main(["simulate", str(cfg), "-o", str(tmp_path / "run")]) == 0
    out = tmp_path / "rep"
    assert main(["analyze", str(tmp_path / "run" / "records.csv"), "-o", str(out), "--dark-subtracted",
                 "--accidental-corrected", "--bootstrap", "0", "--no-figures"]) == 0
    text = (out / "features.txt").read_text()
    assert "# dark_subtracted\ttrue" in text and "# accidental_corrected\ttrue" in text


def test_single_photon_accidental_correction_is_degenerate(run_dir, tmp_path, capsys):
    # a heralded single photon has C == R exactly, leaving nothing after correction
    assert main(["analyze", str(run_dir / "records.csv"), "-o", str(tmp_path / "rep"),
                 "--accidental-corrected", "--bootstrap", "0", "--no-figures"]) == 2
    assert "zero mean" in capsys.readouterr().err


def test_roster_train_classify(tmp_path, capsys):
    labeled = tmp_path / "labeled"
    assert main(["roster", str(labeled), "--ensembles", "6", "--settings", "100", "--preset", "bright"]) == 0
    assert len(list(labeled.iterdir())) == 9
    model = tmp_path / "model.ini"
    assert main(["train", str(labeled), "-o", str(model)]) == 0
    assert model.is_file()
    capsys.readouterr()
    probe = labeled / "IndistBiphoton" / "ensemble_0000.csv"
    assert main(["classify", str(probe), "-m", str(model)]) == 0
    label, score = capsys.readouterr().out.split()
    assert label == "IndistBiphoton" and 0 < float(score) <= 1
    rep = tmp_path / "rep"
    assert main(["analyze", str(probe), "-m", str(model), "-o", str(rep), "--bootstrap", "0",
                 "--no-figures"]) == 0
    assert (rep / "classification.txt").read_text().startswith("label\tscore\nIndistBiphoton\t")


def test_train_errors(tmp_path):
    assert main(["train", str(tmp_path / "missing"), "-o", str(tmp_path / "m.ini")]) == 2
    (tmp_path / "NotAClass").mkdir()
    assert main(["train", str(tmp_path), "-o", str(tmp_path / "m.ini")]) == 2


def test_classify_bad_model(run_dir, tmp_path):
    bad = tmp_path / "model.ini"
    bad.write_text("[model]\nversion = 9\n")
    assert main(["classify", str(run_dir / "records.csv"), "-m", str(bad)]) == 2


def test_validate_ensemble(capsys):
    assert main(["validate-ensemble", MINIMAL, "-n", "2000"]) == 0
    out = capsys.readouterr().out
    assert "amplitude_ks" in out and out.strip().endswith("PASS")


def test_console_script_entry(tmp_path):
    res = subprocess.run([sys.executable, "-m", "qspeckle", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "simulate" in res.stdout
