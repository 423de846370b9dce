"""INI run configurations and detector presets.

A run file has the sections ``[run]``, ``[source]``, ``[interferometer]``,
``[detector]`` and optionally ``[analysis]`` and ``[report]``::

    [run]
    N = 10000
    master_seed = 7
    output = out/biphoton

    [source]
    kind = BiphotonPair
    input_modes = 0, 1
    x = 1.0

    [interferometer]
    m = 400

    [detector]
    preset = lab

Unknown sections or keys are errors, reported with the line they sit on.
"""

from __future__ import annotations

import configparser
import io
import re
import warnings
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from qspeckle.errors import ConfigError, QSpeckleError, ValidationError
from qspeckle.interferometer import InterferometerConfig
from qspeckle.measurement import DetectorConfig, Provenance
from qspeckle.sources import DEFAULT_JSA, SourceModel, jsa_gaussian

DETECTOR_PRESETS = {
    # ideal rates, no shot noise or darks
    "noiseless": dict(),
    # laboratory scale: 10 MHz singles, eta_S = 10, 15 s integration, dark counts
    "lab": dict(T=15.0, singles_rate=1.0e7, pair_rate=2.5e6, dark1=2500.0, dark2=2500.0,
                     noise_mode="Poisson"),
    # quantum part dominates g2 by four orders of magnitude
    "bright": dict(singles_rate=1.0e7, pair_rate=2.5e9),
    # ~100 coincidence counts per setting at 15 s, eta_S = 10
    "dim": dict(T=15.0, singles_rate=5.0e6, pair_rate=6.25e5, noise_mode="Poisson"),
}

_SOURCE_KEYS = {"kind", "input_modes", "x", "d_incoherent", "D_mixture", "n_spectral_bins", "dephasing_mode"}
_JSA_KEYS = set(DEFAULT_JSA)
_SECTIONS = {
    "run": {"N", "master_seed", "output", "label"},
    "source": _SOURCE_KEYS | _JSA_KEYS,
    "interferometer": {"m", "p", "n", "ensemble", "n_spectral_bins"},
    "detector": {"preset", "tau_c", "T", "singles_rate", "pair_rate", "dark1", "dark2", "noise_mode"},
    "analysis": {"dark_subtracted", "accidental_corrected", "bootstrap", "bootstrap_seed"},
    "report": {"bins", "figures", "figure_format", "scatter"},
}
_REQUIRED = ("run", "source")


@dataclass(frozen=True)
class AnalysisOptions:
    dark_subtracted: bool = False
    accidental_corrected: bool = False
    bootstrap: int = 500
    bootstrap_seed: int = 0


@dataclass(frozen=True)
class ReportOptions:
    bins: int = 50
    figures: bool = True
    figure_format: str = "svg"
    scatter: Path | None = None


@dataclass(frozen=True)
class RunConfig:
    source: SourceModel
    interferometer: InterferometerConfig
    detector: DetectorConfig
    N: int = 10_000
    master_seed: int = 0
    output: Path = Path("out")
    label: str | None = None
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)
    report: ReportOptions = field(default_factory=ReportOptions)

    @property
    def provenance(self) -> Provenance:
        return Provenance(self.source, self.interferometer, self.detector, self.master_seed)


def _line_index(text: str) -> dict:
    """``(section, key) -> line`` and ``(section, None) -> line``."""
    index, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), no)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip()), no)
    return index


class _Reader:
    def __init__(self, path, text):
        self.path = path
        self.lines = _line_index(text)
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(path, str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None
        self.cp = cp

    def error(self, section, key, message):
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        return ConfigError(self.path, message, line, f"{section}.{key}" if key else section)

    def check_layout(self, required=_REQUIRED):
        for section in self.cp.sections():
            if section not in _SECTIONS:
                raise self.error(section, None, f"unknown section [{section}]")
            for key in self.cp[section]:
                if key not in _SECTIONS[section]:
                    raise self.error(section, key, f"unknown key {key!r}")
        for section in required:
            if not self.cp.has_section(section):
                raise ConfigError(self.path, f"missing section [{section}]")

    def section(self, name) -> dict:
        return dict(self.cp[name]) if self.cp.has_section(name) else {}

    def get(self, section, key, conv, default=None):
        sec = self.section(section)
        if key not in sec:
            return default
        raw = sec[key].strip()
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            raise self.error(section, key, f"invalid value {raw!r}: {exc}") from None


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


def _int(text):
    value = float(text)
    if value != int(value):
        raise ValueError("expected an integer")
    return int(value)


def _int_list(text):
    return tuple(_int(t) for t in text.split(",") if t.strip())


def _build(reader, section, fn):
    """Run a constructor and map field-level validation errors to config lines."""
    try:
        return fn()
    except ValidationError as exc:
        key = exc.field if exc.field in _SECTIONS.get(section, ()) else None
        raise reader.error(section, key, str(exc)) from None
    except QSpeckleError as exc:
        raise reader.error(section, None, str(exc)) from None


def _source(r: _Reader) -> SourceModel:
    s = "source"
    values = {}
    if "kind" not in r.section(s):
        raise r.error(s, None, "missing key 'kind'")
    values["kind"] = r.get(s, "kind", str)
    for key, conv in (("input_modes", _int_list), ("x", float), ("d_incoherent", _int),
                      ("D_mixture", _int), ("n_spectral_bins", _int), ("dephasing_mode", str)):
        v = r.get(s, key, conv)
        if v is not None:
            values[key] = v
    jsa_kw = {k: r.get(s, k, _int if k == "grid_size" else float) for k in _JSA_KEYS if k in r.section(s)}
    if jsa_kw:
        values["jsa"] = _build(r, s, lambda: jsa_gaussian(**jsa_kw))
    return _build(r, s, lambda: SourceModel(**values))


def _interferometer(r: _Reader, source: SourceModel, seed: int) -> InterferometerConfig:
    s = "interferometer"
    values = {k: r.get(s, k, _int) for k in ("m", "p", "n", "n_spectral_bins") if k in r.section(s)}
    if "ensemble" in r.section(s):
        values["ensemble"] = r.get(s, "ensemble", str)
    if source.is_spectral:
        values.setdefault("n_spectral_bins", source.n_spectral_bins)
    values["master_seed"] = seed
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return _build(r, s, lambda: InterferometerConfig(**values))


def _detector(r: _Reader) -> DetectorConfig:
    s = "detector"
    values = {}
    preset = r.get(s, "preset", str)
    if preset is not None:
        if preset not in DETECTOR_PRESETS:
            raise r.error(s, "preset", f"unknown preset {preset!r}; choose from {', '.join(DETECTOR_PRESETS)}")
        values.update(DETECTOR_PRESETS[preset])
    for key in ("tau_c", "T", "singles_rate", "pair_rate", "dark1", "dark2"):
        v = r.get(s, key, float)
        if v is not None:
            values[key] = v
    if "noise_mode" in r.section(s):
        values["noise_mode"] = r.get(s, "noise_mode", str)
    return _build(r, s, lambda: DetectorConfig(**values))


def detector_preset(name: str, **overrides) -> DetectorConfig:
    if name not in DETECTOR_PRESETS:
        raise ValidationError("preset", f"unknown preset {name!r}")
    return DetectorConfig(**{**DETECTOR_PRESETS[name], **overrides})


def parse_config(text: str, path="<config>", base_dir=None, required=_REQUIRED) -> RunConfig:
    r = _Reader(path, text)
    r.check_layout(required)
    base_dir = Path(base_dir) if base_dir is not None else Path(".")

    N = r.get("run", "N", _int, 10_000)
    if N < 1:
        raise r.error("run", "N", "must be a positive integer")
    seed = r.get("run", "master_seed", _int, 0)
    if not 0 <= seed < 2**64:
        raise r.error("run", "master_seed", "must be a non-negative 64-bit integer")
    output = r.get("run", "output", str, "out")
    label = r.get("run", "label", str)

    source = _source(r)
    icfg = _interferometer(r, source, seed)
    dcfg = _detector(r)

    analysis = AnalysisOptions(
        dark_subtracted=r.get("analysis", "dark_subtracted", _bool, False),
        accidental_corrected=r.get("analysis", "accidental_corrected", _bool, False),
        bootstrap=r.get("analysis", "bootstrap", _int, 500),
        bootstrap_seed=r.get("analysis", "bootstrap_seed", _int, 0),
    )
    if analysis.bootstrap < 0:
        raise r.error("analysis", "bootstrap", "must be non-negative")
    bins = r.get("report", "bins", _int, 50)
    if bins < 2:
        raise r.error("report", "bins", "need at least 2 bins")
    fmt = r.get("report", "figure_format", str, "svg")
    if fmt not in ("png", "svg", "pdf"):
        raise r.error("report", "figure_format", f"unsupported format {fmt!r}")
    scatter = r.get("report", "scatter", str)
    report = ReportOptions(
        bins=bins,
        figures=r.get("report", "figures", _bool, True),
        figure_format=fmt,
        scatter=base_dir / scatter if scatter else None,
    )
    return RunConfig(source, icfg, dcfg, N, seed, base_dir / output, label, analysis, report)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(path, f"cannot read: {exc.strerror}") from None
    return parse_config(text, path, path.parent)


def load_provenance(path) -> Provenance:
    """Read a provenance sidecar written by :func:`dumps_provenance`."""
    path = Path(path)
    cfg = parse_config(path.read_text(), path, path.parent)
    return cfg.provenance


def dumps_provenance(prov: Provenance, N: int | None = None, label: str | None = None) -> str:
    """Fully resolved run description (no presets) in the run-file format.

    A custom JSA is not persisted; only its spectral bin count is.
    """
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    run = {"master_seed": str(prov.master_seed)}
    if N is not None:
        run["N"] = str(N)
    if label:
        run["label"] = label
    cp["run"] = run
    src = prov.source
    sec = {"kind": src.kind.value, "input_modes": ", ".join(map(str, src.input_modes)), "x": repr(src.x)}
    if src.d_incoherent is not None:
        sec["d_incoherent"] = str(src.d_incoherent)
    if src.D_mixture is not None:
        sec["D_mixture"] = str(src.D_mixture)
    sec["n_spectral_bins"] = str(src.n_spectral_bins)
    sec["dephasing_mode"] = src.dephasing_mode.value
    cp["source"] = sec
    ic = prov.interferometer
    cp["interferometer"] = {"m": str(ic.m), "p": str(ic.p), "n": str(ic.n),
                            "ensemble": ic.ensemble.value, "n_spectral_bins": str(ic.n_spectral_bins)}
    dc = prov.detector
    cp["detector"] = {f.name: (dc.noise_mode.value if f.name == "noise_mode" else repr(getattr(dc, f.name)))
                      for f in fields(DetectorConfig)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def with_output(cfg: RunConfig, output) -> RunConfig:
    return replace(cfg, output=Path(output))
