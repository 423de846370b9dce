"""records.csv schema, atomic output, run configurations and provenance."""

from importlib.resources import files

import numpy as np
import pytest

from qspeckle.config import (
    DETECTOR_PRESETS,
    detector_preset,
    dumps_provenance,
    load_config,
    load_provenance,
    parse_config,
)
from qspeckle.errors import ConfigError, SchemaError, ValidationError
from qspeckle.io import RECORD_COLUMNS, atomic_directory, fmt_num, provenance_path, read_records, write_records
from qspeckle.measurement import DetectorConfig, NoiseMode, RecordSet
from qspeckle.sources import SourceKind

CONFIGS = files("qspeckle") / "data" / "configs"
HEADER = ",".join(RECORD_COLUMNS)


def sample_records(n=20, seed=0):
    rng = np.random.default_rng(seed)
    g2 = 1 + rng.random(n)
    valid = np.ones(n, bool)
    valid[3] = False
    g2[3] = np.nan
    return RecordSet(np.arange(n), rng.random(n) * 1e7, rng.random(n) * 1e7, rng.random(n) * 1e5,
                     rng.random(n) * 1e3, g2, valid)


def write(tmp_path, text, name="records.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_fmt_num():
    assert fmt_num(1 / 3) == "0.333333333333"
    assert fmt_num(12345678.9) == "12345678.9"
    assert fmt_num(float("nan")) == "nan"
    assert fmt_num(2.0) == "2"


def test_round_trip(tmp_path):
    rs = sample_records()
    p = tmp_path / "records.csv"
    write_records(rs, p)
    assert p.read_text().splitlines()[0] == HEADER
    back = read_records(p)
    assert np.array_equal(back.setting_index, rs.setting_index)
    assert np.array_equal(back.g2_valid, rs.g2_valid)
    for k in ("I1", "I2", "C", "R"):
        assert np.allclose(getattr(back, k), getattr(rs, k), rtol=1e-11, atol=0)
    assert np.isnan(back.g2[3])
    # a second pass is a fixed point
    q = tmp_path / "again.csv"
    write_records(back, q)
    assert q.read_text() == p.read_text()


def test_rows_sorted_and_blank_lines_ignored(tmp_path):
    p = write(tmp_path, HEADER + "\n1,2,2,1,0,1.5,1\n\n0,1,1,1,0,1.2,0\n")
    rs = read_records(p)
    assert list(rs.setting_index) == [0, 1]
    assert list(rs.I1) == [1.0, 2.0]
    assert list(rs.g2_valid) == [False, True]


@pytest.mark.parametrize("text,fragment", [
    ("", "header row missing"),
    ("a,b,c\n0,1,1,1,0,1,1\n", "line 1"),
    (HEADER + "\n", "no records"),
    (HEADER + "\n0,1,1,1,0,1\n", "line 2: expected 7 fields"),
    (HEADER + "\n0,1,1,1,0,1,1\n1,x,1,1,0,1,1\n", "line 3: column I1"),
    (HEADER + "\n0,1,1,1,0,1,2\n", "g2_valid must be 0 or 1"),
    (HEADER + "\n0.5,1,1,1,0,1,1\n", "integer"),
    (HEADER + "\n0,1,1,1,0,1,1\n0,1,1,1,0,1,1\n", "setting_index"),
    (HEADER + "\n1,1,1,1,0,1,1\n", "setting_index"),
])
def test_schema_errors(tmp_path, text, fragment):
    p = write(tmp_path, text)
    with pytest.raises(SchemaError, match=fragment):
        read_records(p)


def test_missing_file(tmp_path):
    with pytest.raises(SchemaError):
        read_records(tmp_path / "nope.csv")


def test_provenance_path():
    assert provenance_path("out/records.csv").name == "records.provenance.ini"


def test_atomic_directory_success(tmp_path):
    target = tmp_path / "out"
    target.mkdir()
    (target / "old.txt").write_text("old")
    with atomic_directory(target) as stage:
        (stage / "new.txt").write_text("new")
        assert not (target / "new.txt").exists()
    assert sorted(p.name for p in target.iterdir()) == ["new.txt"]
    assert [p.name for p in tmp_path.iterdir()] == ["out"]


def test_atomic_directory_failure_leaves_nothing(tmp_path):
    target = tmp_path / "out"
    with pytest.raises(RuntimeError):
        with atomic_directory(target) as stage:
            (stage / "partial.txt").write_text("x")
            raise RuntimeError("boom")
    assert list(tmp_path.iterdir()) == []


@pytest.mark.parametrize("name", ["single_photon_minimal", "biphoton_lab", "incoherent_d2_reference",
                                  "spectral_biphoton"])
def test_packaged_configs_load(name):
    cfg = load_config(CONFIGS / f"{name}.ini")
    assert cfg.N >= 100
    if cfg.source.is_spectral:
        assert cfg.interferometer.n_spectral_bins == cfg.source.n_spectral_bins


def test_minimal_config_defaults():
    cfg = parse_config("[run]\nN = 100\n[source]\nkind = HeraldedSinglePhoton\ninput_modes = 0\n")
    assert cfg.source.kind is SourceKind.HERALDED_SINGLE_PHOTON
    assert cfg.detector == DetectorConfig()
    assert cfg.interferometer.m == 400
    assert cfg.analysis.bootstrap == 500
    assert cfg.report.figures


def test_preset_with_override():
    cfg = parse_config("[run]\n[source]\nkind = BiphotonPair\n[detector]\npreset = lab\nT = 5\n")
    assert cfg.detector.T == 5
    assert cfg.detector.dark1 == 2500
    assert cfg.detector.noise_mode is NoiseMode.POISSON


@pytest.mark.parametrize("text,line,field", [
    ("[run]\nN = 10\n[source]\nkind = Bogus\n", 4, "source.kind"),
    ("[run]\nN = ten\n[source]\nkind = BiphotonPair\n", 2, "run.N"),
    ("[run]\n[source]\nkind = BiphotonPair\ncolour = red\n", 4, "source.colour"),
    ("[run]\n[source]\nkind = BiphotonPair\n[extra]\na = 1\n", 4, "extra"),
    ("[run]\n[source]\nkind = BiphotonPair\nx = 1.5\n", 4, "source.x"),
    ("[run]\n[source]\nkind = BiphotonPair\n[detector]\npreset = moon\n", 5, "detector.preset"),
    ("[run]\n[source]\nkind = BiphotonPair\n[interferometer]\nm = 0\n", 5, "interferometer.m"),
    ("[run]\n[source]\nkind = BiphotonPair\n[detector]\nT = -1\n", 5, "detector.T"),
    ("[run]\n[source]\nkind = BiphotonPair\n[report]\nfigure_format = gif\n", 5, "report.figure_format"),
])
def test_config_errors_carry_line_and_field(text, line, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "run.ini")
    err = info.value
    assert err.line == line
    assert err.field == field
    assert str(err).startswith(f"run.ini:{line}: [{field}]: ")


def test_config_missing_section_and_syntax():
    with pytest.raises(ConfigError, match=r"missing section \[source\]"):
        parse_config("[run]\nN = 5\n")
    with pytest.raises(ConfigError):
        parse_config("N = 5\n")


def test_load_config_unreadable(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.ini")


def test_detector_presets():
    assert set(DETECTOR_PRESETS) == {"noiseless", "lab", "bright", "dim"}
    lab = detector_preset("lab")
    assert lab.eta_s == pytest.approx(10.0)
    assert detector_preset("dim").eta_s == pytest.approx(10.0)
    assert detector_preset("bright").eta_s > 1e3
    assert detector_preset("lab", dark1=0).dark1 == 0
    with pytest.raises(ValidationError):
        detector_preset("nope")


def test_provenance_round_trip(tmp_path):
    cfg = load_config(CONFIGS / "spectral_biphoton.ini")
    text = dumps_provenance(cfg.provenance, N=cfg.N, label="demo")
    p = tmp_path / "records.provenance.ini"
    p.write_text(text)
    prov = load_provenance(p)
    assert prov.source == cfg.source
    assert prov.interferometer == cfg.interferometer
    assert prov.detector == cfg.detector
    assert prov.master_seed == cfg.master_seed
