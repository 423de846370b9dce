"""Two-output photodetection through random interferometer settings.

Per setting the pipeline is: draw a transmission realization, turn the source
into ideal fractional fluxes (``ideal_outcome``), then apply the rate-level
detector model (``detect``). ``run_ensemble`` repeats this over independent
settings.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from qspeckle.errors import SelectionError, ValidationError
from qspeckle.interferometer import (
    InterferometerConfig,
    SpectralTransmission,
    TransmissionMatrix,
    derive_seed,
    sample_spectral_tm,
)
from qspeckle.sources import (
    DephasingMode,
    SourceKind,
    SourceModel,
    jsa_gaussian,
    spectral_pair_weights,
)

WORKERS_ENV = "QSPECKLE_WORKERS"


class NoiseMode(str, enum.Enum):
    NOISELESS = "Noiseless"
    POISSON = "Poisson"


@dataclass(frozen=True)
class IdealOutcome:
    s1: float
    s2: float
    c_pair: float


@dataclass(frozen=True)
class DetectorConfig:
    """Rates in counts/s, times in seconds.

    ``singles_rate`` scales the per-arm flux entering the interferometer and
    ``pair_rate`` the pair flux, so the detected singles are
    ``singles_rate * s_i + dark_i`` and true coincidences ``pair_rate * c_pair``.
    """

    tau_c: float = 2.5e-9
    T: float = 15.0
    singles_rate: float = 1.0e7
    pair_rate: float = 2.5e6
    dark1: float = 0.0
    dark2: float = 0.0
    noise_mode: NoiseMode = NoiseMode.NOISELESS

    def __post_init__(self):
        try:
            object.__setattr__(self, "noise_mode", NoiseMode(self.noise_mode))
        except ValueError:
            raise ValidationError("noise_mode", f"unknown noise mode {self.noise_mode!r}") from None
        for name in ("tau_c", "T"):
            if not getattr(self, name) > 0:
                raise ValidationError(name, "must be positive")
        for name in ("singles_rate", "pair_rate", "dark1", "dark2"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ValidationError(name, "must be a finite non-negative rate")

    @property
    def eta_s(self) -> float:
        """Brightness diagnostic ``pair_rate / (tau_c * singles_rate**2)``."""
        if self.singles_rate == 0:
            return math.inf
        return self.pair_rate / (self.tau_c * self.singles_rate**2)


@dataclass(frozen=True)
class MeasurementRecord:
    I1: float
    I2: float
    C: float
    R: float
    g2: float
    setting_index: int
    g2_valid: bool = True


@dataclass(frozen=True)
class Provenance:
    source: SourceModel | None = None
    interferometer: InterferometerConfig | None = None
    detector: DetectorConfig | None = None
    master_seed: int | None = None


@dataclass(eq=False)
class RecordSet:
    """Column-oriented ensemble of measurement records."""

    setting_index: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    C: np.ndarray
    R: np.ndarray
    g2: np.ndarray
    g2_valid: np.ndarray
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self):
        self.setting_index = np.asarray(self.setting_index, dtype=np.int64)
        for name in ("I1", "I2", "C", "R", "g2"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.g2_valid = np.asarray(self.g2_valid, dtype=bool)
        n = len(self.setting_index)
        if any(len(getattr(self, k)) != n for k in ("I1", "I2", "C", "R", "g2", "g2_valid")):
            raise ValidationError("records", "all columns must have the same length")
        if n and not np.array_equal(np.sort(self.setting_index), np.arange(n)):
            raise ValidationError("setting_index", "indices must be unique and contiguous from 0")

    @classmethod
    def from_records(cls, records, provenance=None) -> "RecordSet":
        records = list(records)
        cols = {k: [getattr(r, k) for r in records] for k in ("setting_index", "I1", "I2", "C", "R", "g2", "g2_valid")}
        return cls(**cols, provenance=provenance or Provenance())

    def __len__(self):
        return len(self.setting_index)

    def __getitem__(self, i) -> MeasurementRecord:
        return MeasurementRecord(
            float(self.I1[i]), float(self.I2[i]), float(self.C[i]), float(self.R[i]),
            float(self.g2[i]), int(self.setting_index[i]), bool(self.g2_valid[i]),
        )

    @property
    def records(self) -> list:
        return [self[i] for i in range(len(self))]

    def subset(self, index) -> "RecordSet":
        """Records at ``index``, renumbered from 0."""
        index = np.asarray(index)
        return RecordSet(
            np.arange(len(index)), self.I1[index], self.I2[index], self.C[index],
            self.R[index], self.g2[index], self.g2_valid[index], self.provenance,
        )


def _as_matrix(tm) -> np.ndarray:
    if isinstance(tm, TransmissionMatrix):
        return tm.entries
    if isinstance(tm, SpectralTransmission):
        return tm.bins[0].entries
    return np.asarray(tm, dtype=complex)


def _check_modes(t: np.ndarray, modes):
    if t.ndim != 2 or t.shape[0] < 2:
        raise SelectionError("two output rows are required")
    for k in modes:
        if not 0 <= k < t.shape[1]:
            raise SelectionError(f"input mode {k} outside the {t.shape[1]} matrix columns")


def _kernel(t1a, t2b, t1b, t2a, x):
    direct = t1a * t2b
    exchange = t1b * t2a
    return np.abs(direct) ** 2 + np.abs(exchange) ** 2 + 2 * x * np.real(direct * np.conj(exchange))


def pair_coincidence_kernel(tm, modes, x: float) -> float:
    """Coincidence kernel of one photon in ``a`` and one in ``b`` with overlap ``x``.

    ``x = 1`` gives ``|t1a t2b + t1b t2a|**2``; ``x = 0`` drops the exchange
    interference term.
    """
    t = _as_matrix(tm)
    a, b = modes
    if a == b:
        raise SelectionError("pair kernel needs two distinct input modes")
    _check_modes(t, (a, b))
    if not 0.0 <= x <= 1.0:
        raise ValidationError("x", "must lie in [0, 1]")
    value = _kernel(t[0, a], t[1, b], t[0, b], t[1, a], x)
    return max(0.0, float(value))


def noon_coincidence_kernel(tm, modes, dephasing_mode, phase: float = 0.0) -> float:
    t = _as_matrix(tm)
    a, b = modes
    if a == b:
        raise SelectionError("N00N kernel needs two distinct input modes")
    _check_modes(t, (a, b))
    A = t[0, a] * t[1, a]
    B = t[0, b] * t[1, b]
    base = abs(A) ** 2 + abs(B) ** 2
    if DephasingMode(dephasing_mode) is DephasingMode.FULL_AVERAGE:
        return float(base)
    return max(0.0, float(base + math.sqrt(2) * abs(A) * abs(B) * math.cos(phase)))


def _stack(tm_or_spectral) -> np.ndarray:
    """Bins x rows x cols amplitude array."""
    if isinstance(tm_or_spectral, SpectralTransmission):
        return np.stack([b.entries for b in tm_or_spectral.bins])
    return _as_matrix(tm_or_spectral)[None]


def default_pair_weights(source: SourceModel, n_bins: int) -> list:
    jsa = source.jsa if source.jsa is not None else jsa_gaussian()
    return spectral_pair_weights(jsa, n_bins)


def ideal_outcome(source: SourceModel, tm, rng=None, pair_weights=None) -> IdealOutcome:
    """Fractional singles fluxes and pair-coincidence kernel for one setting.

    ``rng`` is only consumed by the dephased N00N source (one uniform phase).
    ``pair_weights`` can be precomputed with :func:`default_pair_weights` to
    avoid re-binning the JSA for every setting.
    """
    kind = source.kind
    modes = source.input_modes
    stack = _stack(tm)
    t = stack[0]
    _check_modes(t, modes)
    p2 = np.abs(t[:2]) ** 2

    if kind is SourceKind.HERALDED_SINGLE_PHOTON:
        k = modes[0]
        return IdealOutcome(p2[0, k], p2[1, k], 0.0)

    if kind is SourceKind.TWO_PHOTON_FOCK:
        k = modes[0]
        return IdealOutcome(2 * p2[0, k], 2 * p2[1, k], 2 * p2[0, k] * p2[1, k])

    if kind is SourceKind.BIPHOTON_PAIR:
        a, b = modes
        c = pair_coincidence_kernel(t, (a, b), source.x)
        return IdealOutcome(p2[0, a] + p2[0, b], p2[1, a] + p2[1, b], c)

    if kind is SourceKind.NOON2:
        a, b = modes
        phase = 0.0
        if source.dephasing_mode is DephasingMode.RMS_RESIDUAL:
            if rng is None:
                raise ValidationError("rng", "the RmsResidual N00N model needs a setting-local rng")
            phase = rng.uniform(0.0, 2 * np.pi)
        c = noon_coincidence_kernel(t, (a, b), source.dephasing_mode, phase)
        return IdealOutcome(p2[0, a] + p2[0, b], p2[1, a] + p2[1, b], c)

    if kind is SourceKind.INCOHERENT_MIXTURE:
        cols = list(modes)
        return IdealOutcome(p2[0, cols].mean(), p2[1, cols].mean(), 0.0)

    if kind is SourceKind.MIXED_BIPHOTON:
        pairs = [(modes[2 * i], modes[2 * i + 1]) for i in range(source.D_mixture)]
        D = len(pairs)
        s1 = sum(p2[0, a] + p2[0, b] for a, b in pairs) / D
        s2 = sum(p2[1, a] + p2[1, b] for a, b in pairs) / D
        c = sum(pair_coincidence_kernel(t, pair, 1.0) for pair in pairs) / D
        return IdealOutcome(s1, s2, c)

    n_bins = stack.shape[0]
    for b in range(1, n_bins):
        _check_modes(stack[b], modes)

    if kind is SourceKind.SPECTRAL_BIPHOTON:
        a, b = modes
        if pair_weights is None:
            pair_weights = default_pair_weights(source, n_bins)
        bs = np.array([w[0] for w in pair_weights])
        bi = np.array([w[1] for w in pair_weights])
        w = np.array([w[2] for w in pair_weights])
        if bs.max() >= n_bins or bi.max() >= n_bins:
            raise SelectionError(f"pair weights reference bins beyond the {n_bins} available")
        sig = stack[bs][:, :2, a]  # signal amplitudes to outputs 1, 2
        idl = stack[bi][:, :2, b]
        c = np.sum(w * _kernel(sig[:, 0], idl[:, 1], idl[:, 0], sig[:, 1], source.x))
        s1 = np.sum(w * (np.abs(sig[:, 0]) ** 2 + np.abs(idl[:, 0]) ** 2))
        s2 = np.sum(w * (np.abs(sig[:, 1]) ** 2 + np.abs(idl[:, 1]) ** 2))
        return IdealOutcome(float(s1), float(s2), max(0.0, float(c)))

    if kind is SourceKind.INCOHERENT_DISPERSIVE:
        sel = np.abs(stack[:, :2, list(modes)]) ** 2
        d = sel.shape[0] * sel.shape[2]
        return IdealOutcome(float(sel[:, 0].sum() / d), float(sel[:, 1].sum() / d), 0.0)

    raise ValidationError("kind", f"unsupported source kind {kind}")


def detect(ideal: IdealOutcome, cfg: DetectorConfig, rng=None, setting_index: int = 0) -> MeasurementRecord:
    lam1 = cfg.singles_rate * ideal.s1 + cfg.dark1
    lam2 = cfg.singles_rate * ideal.s2 + cfg.dark2
    mu = cfg.pair_rate * ideal.c_pair + cfg.tau_c * lam1 * lam2
    if cfg.noise_mode is NoiseMode.POISSON:
        if rng is None:
            raise ValidationError("rng", "Poisson detection needs an rng")
        counts = rng.poisson([lam1 * cfg.T, lam2 * cfg.T, mu * cfg.T])
        I1, I2, C = (float(k) / cfg.T for k in counts)
    else:
        I1, I2, C = float(lam1), float(lam2), float(mu)
    R = cfg.tau_c * I1 * I2
    if R > 0:
        return MeasurementRecord(I1, I2, C, R, C / R, setting_index, True)
    return MeasurementRecord(I1, I2, C, R, float("nan"), setting_index, False)


def _effective_interferometer(source: SourceModel, icfg: InterferometerConfig) -> InterferometerConfig:
    if source.is_spectral:
        if icfg.n_spectral_bins != source.n_spectral_bins:
            raise ValidationError(
                "n_spectral_bins",
                f"source uses {source.n_spectral_bins} spectral bins, interferometer {icfg.n_spectral_bins}",
            )
        return icfg
    if icfg.n_spectral_bins != 1:
        return replace(icfg, n_spectral_bins=1, bin_centers=None)
    return icfg


def _run_settings(source, icfg, dcfg, master_seed, indices, pair_weights):
    rows = []
    for i in indices:
        tm = sample_spectral_tm(icfg, master_seed, i)
        rng = np.random.default_rng(derive_seed(master_seed, i))
        ideal = ideal_outcome(source, tm, rng, pair_weights)
        r = detect(ideal, dcfg, rng, i)
        rows.append((r.I1, r.I2, r.C, r.R, r.g2, r.g2_valid))
    return rows


def worker_count(workers=None) -> int:
    if workers is None:
        workers = os.environ.get(WORKERS_ENV, "1")
    try:
        workers = int(workers)
    except ValueError:
        raise ValidationError(WORKERS_ENV, f"not an integer: {workers!r}") from None
    return max(1, workers)


def run_ensemble(
    source: SourceModel,
    icfg: InterferometerConfig,
    dcfg: DetectorConfig,
    N: int,
    master_seed: int | None = None,
    workers: int | None = None,
) -> RecordSet:
    """Simulate ``N`` independent random-measurement settings.

    Setting ``i`` depends only on ``(master_seed, i)``, so the result does not
    depend on ``workers``.
    """
    if int(N) != N or N < 1:
        raise ValidationError("N", "must be a positive integer")
    if master_seed is None:
        master_seed = icfg.master_seed
    icfg = _effective_interferometer(source, icfg)
    if icfg.p < 2:
        raise SelectionError("two-output detection needs p >= 2")
    if max(source.input_modes) >= icfg.n:
        raise SelectionError(f"source modes {list(source.input_modes)} exceed n={icfg.n} input modes")
    pair_weights = None
    if source.kind is SourceKind.SPECTRAL_BIPHOTON:
        pair_weights = default_pair_weights(source, icfg.n_spectral_bins)

    workers = worker_count(workers)
    indices = np.arange(int(N))
    if workers == 1 or N < 2 * workers:
        rows = _run_settings(source, icfg, dcfg, master_seed, indices, pair_weights)
    else:
        chunks = np.array_split(indices, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(
                _run_settings,
                *zip(*[(source, icfg, dcfg, master_seed, c, pair_weights) for c in chunks]),
            )
            rows = [row for part in parts for row in part]
    cols = np.array(rows, dtype=float).T if rows else np.zeros((6, 0))
    return RecordSet(
        indices, cols[0], cols[1], cols[2], cols[3], cols[4], cols[5].astype(bool),
        Provenance(source, icfg, dcfg, int(master_seed)),
    )
