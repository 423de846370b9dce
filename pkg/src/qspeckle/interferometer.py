"""Random interferometer ensembles.

Haar unitaries, truncations of them, the i.i.d. circular complex Gaussian
approximation of a truncation, and stacks of independent draws standing in
for the spectral correlation cells of a dispersive fiber.

Every draw is keyed by ``(seed, setting_index, bin_index)`` through
:func:`derive_seed`, so any setting can be regenerated in isolation and
ensembles can be split across workers without sharing RNG state.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from qspeckle.errors import (
    DimensionError,
    InsufficientDataError,
    SelectionError,
    ValidationError,
)


class Ensemble(str, enum.Enum):
    HAAR_TRUNCATED = "HaarTruncated"
    COMPLEX_GAUSSIAN = "ComplexGaussian"


class RegimeWarning(UserWarning):
    """The Gaussian approximation is used outside ``p <= m**(1/6)``."""


def derive_seed(seed, *keys) -> np.random.SeedSequence:
    """Child seed sequence for ``seed`` at position ``keys``.

    ``seed`` may be an int or a :class:`numpy.random.SeedSequence`; in the
    latter case the keys are appended to its spawn key.
    """
    keys = tuple(int(k) for k in keys)
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key + keys)
    seed = int(seed)
    if seed < 0:
        raise ValidationError("master_seed", "must be non-negative")
    return np.random.SeedSequence(seed, spawn_key=keys)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(derive_seed(seed))


@dataclass(frozen=True)
class InterferometerConfig:
    m: int = 400
    p: int = 2
    n: int = 2
    ensemble: Ensemble = Ensemble.COMPLEX_GAUSSIAN
    n_spectral_bins: int = 1
    master_seed: int = 0
    bin_centers: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "ensemble", Ensemble(self.ensemble))
        for name in ("m", "p", "n", "n_spectral_bins"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValidationError(name, f"must be a positive integer, got {value!r}")
        if self.p > self.m:
            raise ValidationError("p", f"p={self.p} exceeds m={self.m}")
        if self.n > self.m:
            raise ValidationError("n", f"n={self.n} exceeds m={self.m}")
        if self.master_seed < 0 or self.master_seed >= 2**64:
            raise ValidationError("master_seed", "must fit in an unsigned 64-bit integer")
        if self.bin_centers is not None and len(self.bin_centers) != self.n_spectral_bins:
            raise ValidationError("bin_centers", "length must equal n_spectral_bins")
        if self.ensemble is Ensemble.COMPLEX_GAUSSIAN and self.p > self.m ** (1 / 6):
            warnings.warn(
                f"p={self.p} > m**(1/6)={self.m ** (1 / 6):.3f}: truncation correlations "
                "are not negligible for the Gaussian approximation",
                RegimeWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class TransmissionMatrix:
    """Complex ``p x n`` amplitudes from input modes (columns) to outputs (rows)."""

    entries: np.ndarray
    variance_scale: float

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2:
            raise DimensionError("transmission matrix must be two-dimensional")
        if not np.all(np.isfinite(entries)):
            raise ValidationError("entries", "non-finite amplitude")
        if not self.variance_scale > 0:
            raise ValidationError("variance_scale", "must be positive")
        object.__setattr__(self, "entries", entries)

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class SpectralTransmission:
    bins: tuple
    bin_centers: np.ndarray = field(default=None)

    def __post_init__(self):
        if not self.bins:
            raise DimensionError("at least one spectral bin is required")
        first = self.bins[0]
        for tm in self.bins[1:]:
            if tm.entries.shape != first.entries.shape or tm.variance_scale != first.variance_scale:
                raise DimensionError("spectral bins must share shape and variance_scale")
        centers = self.bin_centers
        if centers is None:
            centers = np.arange(len(self.bins), dtype=float)
        object.__setattr__(self, "bins", tuple(self.bins))
        object.__setattr__(self, "bin_centers", np.asarray(centers, dtype=float))

    def __len__(self):
        return len(self.bins)

    def __getitem__(self, i) -> TransmissionMatrix:
        return self.bins[i]


@dataclass(frozen=True)
class EnsembleReport:
    amplitude_gof: float
    phase_gof: float
    entry_correlation_max: float
    n_samples: int
    degenerate: bool = False


def _check_dims(**dims):
    for name, value in dims.items():
        if int(value) != value or value < 1:
            raise DimensionError(f"{name} must be a positive integer, got {value!r}")


def _phase_fixed_qr(z: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(z)
    d = np.diag(r).copy()
    d[d == 0] = 1.0
    return q * (d / np.abs(d))


def sample_haar_unitary(m: int, seed) -> np.ndarray:
    """Haar-distributed ``m x m`` unitary (Ginibre QR with phase-corrected diagonal)."""
    _check_dims(m=m)
    rng = _rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    return _phase_fixed_qr(z)


def sample_haar_isometry(m: int, n: int, seed) -> np.ndarray:
    """First ``n`` columns of a Haar unitary, without building the full matrix.

    Gram-Schmidt acts column by column, so the phase-fixed QR of an ``m x n``
    Ginibre block has exactly the law of ``n`` columns of a Haar unitary.
    """
    _check_dims(m=m, n=n)
    if n > m:
        raise DimensionError(f"n={n} exceeds m={m}")
    rng = _rng(seed)
    z = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2)
    return _phase_fixed_qr(z)


def truncate_unitary(U, out_rows, in_cols) -> TransmissionMatrix:
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise DimensionError("U must be square")
    m = U.shape[0]
    for name, idx in (("out_rows", out_rows), ("in_cols", in_cols)):
        idx = list(idx)
        if not idx:
            raise SelectionError(f"{name} is empty")
        if len(set(idx)) != len(idx):
            raise SelectionError(f"{name} has repeated indices: {idx}")
        if any(i < 0 or i >= m for i in idx):
            raise SelectionError(f"{name} out of range for m={m}: {idx}")
    return TransmissionMatrix(U[np.ix_(list(out_rows), list(in_cols))], 1.0 / m)


def sample_gaussian_tm(p: int, n: int, m: int, seed) -> TransmissionMatrix:
    _check_dims(p=p, n=n, m=m)
    rng = _rng(seed)
    z = rng.standard_normal((p, n)) + 1j * rng.standard_normal((p, n))
    return TransmissionMatrix(z * np.sqrt(0.5 / m), 1.0 / m)


def sample_truncated_haar_tm(p: int, n: int, m: int, seed) -> TransmissionMatrix:
    """Top-left ``p x n`` block of a Haar unitary of size ``m``."""
    _check_dims(p=p, n=n, m=m)
    if p > m:
        raise DimensionError(f"p={p} exceeds m={m}")
    iso = sample_haar_isometry(m, n, seed)
    return TransmissionMatrix(iso[:p], 1.0 / m)


def sample_tm(config: InterferometerConfig, seed) -> TransmissionMatrix:
    if config.ensemble is Ensemble.HAAR_TRUNCATED:
        return sample_truncated_haar_tm(config.p, config.n, config.m, seed)
    return sample_gaussian_tm(config.p, config.n, config.m, seed)


def sample_spectral_tm(config: InterferometerConfig, seed=None, setting_index: int = 0) -> SpectralTransmission:
    """Independent draws, one per spectral bin, for one measurement setting.

    Bin ``b`` of setting ``i`` is drawn from ``derive_seed(seed, i, b)``.
    """
    if seed is None:
        seed = config.master_seed
    bins = [sample_tm(config, derive_seed(seed, setting_index, b)) for b in range(config.n_spectral_bins)]
    return SpectralTransmission(tuple(bins), config.bin_centers)


def ensemble_stats(tms, min_samples: int = 100) -> EnsembleReport:
    """Amplitude, phase and independence diagnostics of an ensemble of draws.

    ``amplitude_gof`` and ``phase_gof`` are Kolmogorov-Smirnov distances of the
    pooled entries against the Rayleigh law implied by ``variance_scale`` and
    against the uniform law on ``(-pi, pi]``.
    """
    tms = list(tms)
    if len(tms) < min_samples:
        raise InsufficientDataError(f"need at least {min_samples} matrices, got {len(tms)}")
    shape = tms[0].entries.shape
    if any(tm.entries.shape != shape for tm in tms):
        raise DimensionError("all matrices in an ensemble must share a shape")
    scale = tms[0].variance_scale
    stack = np.stack([tm.entries.ravel() for tm in tms])  # samples x entries
    pooled = stack.ravel()

    amp = np.abs(pooled)
    amplitude_gof = stats.kstest(amp, lambda r: 1.0 - np.exp(-(r**2) / scale)).statistic
    phase_gof = stats.kstest(np.angle(pooled), stats.uniform(loc=-np.pi, scale=2 * np.pi).cdf).statistic

    centered = stack - stack.mean(axis=0)
    sd = np.sqrt(np.mean(np.abs(centered) ** 2, axis=0))
    # relative floor: a constant ensemble leaves only rounding residue
    if np.any(sd <= 1e-12 * max(float(np.abs(stack).max()), np.finfo(float).tiny)):
        return EnsembleReport(float(amplitude_gof), float(phase_gof), float("nan"), len(tms), degenerate=True)
    k = stack.shape[1]
    if k == 1:
        corr_max = 0.0
    else:
        cov = centered.T @ centered.conj() / len(tms)
        corr = np.abs(cov / np.outer(sd, sd))
        corr_max = float(corr[~np.eye(k, dtype=bool)].max())
    return EnsembleReport(float(amplitude_gof), float(phase_gof), corr_max, len(tms))
