"""Ground-truth light sources and their spectral model."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from qspeckle.errors import DegenerateInputError, ValidationError

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Pump bandwidth tuned so the Schmidt number of the default JSA is ~7; the
# grid span plays the role of the 1.54 nm detection filter.
DEFAULT_JSA = {
    "pump_bandwidth": 0.09,
    "phasematch_bandwidth": 3.0,
    "center": 810.0,
    "grid_size": 64,
    "span": 1.54,
}

# Continuous-wave pump limit: the pump is far narrower than a grid step, so
# |Psi|^2 sits on the anti-diagonal; 63 points split evenly into 7 fiber cells.
CW_PUMP_JSA = {**DEFAULT_JSA, "pump_bandwidth": 0.005, "grid_size": 63}


class SourceKind(str, enum.Enum):
    HERALDED_SINGLE_PHOTON = "HeraldedSinglePhoton"
    TWO_PHOTON_FOCK = "TwoPhotonFock"
    BIPHOTON_PAIR = "BiphotonPair"
    NOON2 = "Noon2"
    INCOHERENT_MIXTURE = "IncoherentMixture"
    MIXED_BIPHOTON = "MixedBiphoton"
    SPECTRAL_BIPHOTON = "SpectralBiphoton"
    INCOHERENT_DISPERSIVE = "IncoherentDispersive"


class DephasingMode(str, enum.Enum):
    FULL_AVERAGE = "FullAverage"
    RMS_RESIDUAL = "RmsResidual"


SPECTRAL_KINDS = {SourceKind.SPECTRAL_BIPHOTON, SourceKind.INCOHERENT_DISPERSIVE}

_MODE_COUNT = {
    SourceKind.HERALDED_SINGLE_PHOTON: 1,
    SourceKind.TWO_PHOTON_FOCK: 1,
    SourceKind.BIPHOTON_PAIR: 2,
    SourceKind.NOON2: 2,
    SourceKind.SPECTRAL_BIPHOTON: 2,
}


@dataclass(frozen=True, eq=False)
class JointSpectralAmplitude:
    """Complex ``Psi(lambda_s, lambda_i)`` sampled on a wavelength grid (nm).

    Rows index the signal wavelength, columns the idler wavelength.
    """

    grid: np.ndarray
    signal_nm: np.ndarray
    idler_nm: np.ndarray

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.grid) ** 2

    def frequency_correlation(self) -> float:
        """Pearson correlation of (omega_s, omega_i) under ``|Psi|^2``."""
        p = self.intensity
        total = p.sum()
        if total == 0:
            raise DegenerateInputError("JSA is identically zero")
        p = p / total
        ws = 2 * np.pi * SPEED_OF_LIGHT / (self.signal_nm * 1e-9)
        wi = 2 * np.pi * SPEED_OF_LIGHT / (self.idler_nm * 1e-9)
        ps, pi = p.sum(axis=1), p.sum(axis=0)
        ms, mi = ps @ ws, pi @ wi
        vs, vi = ps @ (ws - ms) ** 2, pi @ (wi - mi) ** 2
        if vs == 0 or vi == 0:
            return 0.0
        cov = (ws - ms) @ p @ (wi - mi)
        return float(cov / math.sqrt(vs * vi))


@dataclass(frozen=True)
class SourceModel:
    kind: SourceKind
    input_modes: tuple = (0, 1)
    x: float = 1.0
    d_incoherent: int | None = None
    D_mixture: int | None = None
    n_spectral_bins: int = 1
    dephasing_mode: DephasingMode = DephasingMode.RMS_RESIDUAL
    jsa: JointSpectralAmplitude | None = field(default=None, compare=False)

    def __post_init__(self):
        try:
            kind = SourceKind(self.kind)
        except ValueError:
            raise ValidationError("kind", f"unknown source kind {self.kind!r}") from None
        try:
            dephasing = DephasingMode(self.dephasing_mode)
        except ValueError:
            raise ValidationError("dephasing_mode", f"unknown mode {self.dephasing_mode!r}") from None
        modes = tuple(int(k) for k in self.input_modes)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "dephasing_mode", dephasing)
        object.__setattr__(self, "input_modes", modes)
        object.__setattr__(self, "x", float(self.x))
        self._validate()

    def _validate(self):
        kind, modes = self.kind, self.input_modes
        if not modes:
            raise ValidationError("input_modes", "at least one input mode is required")
        if len(set(modes)) != len(modes):
            raise ValidationError("input_modes", f"mode indices must be distinct, got {list(modes)}")
        if min(modes) < 0:
            raise ValidationError("input_modes", "mode indices must be non-negative")
        if not 0.0 <= self.x <= 1.0:
            raise ValidationError("x", f"indistinguishability must lie in [0, 1], got {self.x}")
        if int(self.n_spectral_bins) != self.n_spectral_bins or self.n_spectral_bins < 1:
            raise ValidationError("n_spectral_bins", "must be a positive integer")

        expected = _MODE_COUNT.get(kind)
        if expected is not None and len(modes) != expected:
            raise ValidationError("input_modes", f"{kind.value} takes exactly {expected} mode(s), got {len(modes)}")

        if kind is SourceKind.MIXED_BIPHOTON:
            D = self.D_mixture
            if D is None or int(D) != D or D < 1:
                raise ValidationError("D_mixture", "MixedBiphoton needs a positive integer D_mixture")
            if len(modes) != 2 * D:
                raise ValidationError("input_modes", f"MixedBiphoton with D={D} needs {2 * D} modes, got {len(modes)}")

        if kind in (SourceKind.INCOHERENT_MIXTURE, SourceKind.INCOHERENT_DISPERSIVE):
            d = len(modes)
            if kind is SourceKind.INCOHERENT_DISPERSIVE:
                d *= self.n_spectral_bins
            if self.d_incoherent is None:
                object.__setattr__(self, "d_incoherent", d)
            elif self.d_incoherent != d:
                raise ValidationError(
                    "d_incoherent",
                    f"{kind.value} occupies {d} modes with the given inputs/bins, got d_incoherent={self.d_incoherent}",
                )

    @property
    def is_spectral(self) -> bool:
        return self.kind in SPECTRAL_KINDS

    @property
    def nominal_d(self) -> int:
        """Number of occupied modes seen by a single detector."""
        kind = self.kind
        if kind in (SourceKind.HERALDED_SINGLE_PHOTON, SourceKind.TWO_PHOTON_FOCK):
            return 1
        if kind in (SourceKind.BIPHOTON_PAIR, SourceKind.NOON2):
            return 2
        if kind is SourceKind.MIXED_BIPHOTON:
            return 2 * self.D_mixture
        if kind is SourceKind.SPECTRAL_BIPHOTON:
            return 2 * self.n_spectral_bins
        return self.d_incoherent


def make_source(spec=None, **kwargs) -> SourceModel:
    """Build and validate a :class:`SourceModel` from a model, a mapping or keywords.

    Unknown field names raise :class:`ValidationError` naming the field.
    """
    if isinstance(spec, SourceModel):
        return replace(spec, **kwargs)
    values = dict(spec or {})
    values.update(kwargs)
    known = {f.name for f in fields(SourceModel)}
    for key in values:
        if key not in known:
            raise ValidationError(key, "unknown source field")
    if "kind" not in values:
        raise ValidationError("kind", "missing")
    return SourceModel(**values)


def _nm_to_angular(bandwidth_nm, center_nm):
    return 2 * np.pi * SPEED_OF_LIGHT * bandwidth_nm * 1e-9 / (center_nm * 1e-9) ** 2


def jsa_gaussian(
    pump_bandwidth: float = DEFAULT_JSA["pump_bandwidth"],
    phasematch_bandwidth: float = DEFAULT_JSA["phasematch_bandwidth"],
    center: float = DEFAULT_JSA["center"],
    grid_size: int = DEFAULT_JSA["grid_size"],
    span: float = DEFAULT_JSA["span"],
) -> JointSpectralAmplitude:
    """Double-Gaussian JSA: pump envelope times phase-matching envelope.

    Bandwidths are Gaussian widths in nm, converted to angular frequency at
    ``center``. Both axes cover ``center +/- span/2`` (the detection filter).
    Infinite bandwidths are allowed and give a flat factor.
    """
    for name, value in (("pump_bandwidth", pump_bandwidth), ("phasematch_bandwidth", phasematch_bandwidth)):
        if not value > 0:
            raise ValidationError(name, f"must be positive, got {value}")
    if not center > 0 or not span > 0:
        raise ValidationError("center", "center and span must be positive")
    if int(grid_size) != grid_size or grid_size < 8:
        raise ValidationError("grid_size", "must be an integer >= 8")

    lam = center + np.linspace(-span / 2, span / 2, int(grid_size))
    omega = 2 * np.pi * SPEED_OF_LIGHT / (lam * 1e-9)
    omega0 = 2 * np.pi * SPEED_OF_LIGHT / (center * 1e-9)
    ws, wi = np.meshgrid(omega, omega, indexing="ij")
    sp = _nm_to_angular(pump_bandwidth, center)
    spm = _nm_to_angular(phasematch_bandwidth, center)
    with np.errstate(invalid="ignore"):
        log_psi = -((ws + wi - 2 * omega0) ** 2) / (2 * sp**2) - (ws - wi) ** 2 / (2 * spm**2)
    log_psi = np.nan_to_num(log_psi, nan=0.0)
    psi = np.exp(log_psi - log_psi.max()).astype(complex)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2))
    return JointSpectralAmplitude(psi, lam, lam.copy())


def spectral_pair_weights(jsa: JointSpectralAmplitude, n_bins: int) -> list:
    """Down-sample ``|Psi|^2`` onto ``n_bins`` equal-width fiber spectral cells.

    Returns ``(signal_bin, idler_bin, weight)`` triples with non-negligible
    weight; the weights sum to one.
    """
    if int(n_bins) != n_bins or n_bins < 1:
        raise ValidationError("n_bins", "must be a positive integer")
    p = jsa.intensity
    total = p.sum()
    if total == 0:
        raise DegenerateInputError("JSA is identically zero")
    rows = np.array_split(np.arange(p.shape[0]), n_bins)
    cols = np.array_split(np.arange(p.shape[1]), n_bins)
    w = np.array([[p[np.ix_(r, c)].sum() for c in cols] for r in rows]) / total
    keep = w > 1e-12 * w.max()
    w = np.where(keep, w, 0.0)
    w /= w.sum()
    return [(int(s), int(i), float(w[s, i])) for s, i in zip(*np.nonzero(keep))]


def effective_spectral_modes(jsa: JointSpectralAmplitude) -> float:
    """Schmidt number (participation ratio of squared singular values)."""
    sv = np.linalg.svd(np.asarray(jsa.grid), compute_uv=False)
    lam = sv**2
    total = lam.sum()
    if total == 0:
        raise DegenerateInputError("JSA is identically zero")
    lam = lam / total
    return float(1.0 / np.sum(lam**2))


def indistinguishability_from_delay(delay: float, coherence_length: float) -> float:
    """Gaussian two-photon overlap ``exp(-(delay / l_c)**2)``; both in seconds."""
    if not coherence_length > 0:
        raise ValidationError("coherence_length", "must be positive")
    return float(math.exp(-((delay / coherence_length) ** 2)))
