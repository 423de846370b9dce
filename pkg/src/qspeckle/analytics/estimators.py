"""Moment-based state-property estimators over an ensemble of records."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from qspeckle.analytics.pdfs import AnalyticPdf, Family
from qspeckle.errors import DegenerateInputError, DomainError, InsufficientDataError

FEATURE_FIELDS = ("V_I", "V_C", "V_g2", "mean_g2", "d_hat", "purity", "D_hat", "corr_C_g2")


def visibility(samples) -> float:
    """Unbiased sample variance over squared sample mean."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise InsufficientDataError("visibility needs at least 2 samples")
    mean = x.mean()
    if mean == 0:
        raise DegenerateInputError("visibility is undefined for zero mean")
    return float(x.var(ddof=1) / mean**2)


def purity(V_C: float, V_I: float) -> float:
    return V_C - 2.0 * V_I


def dimensionality(V_C: float) -> float:
    """Schmidt rank ``D`` of a pure maximally entangled pair from ``V_C = 1 + 1/D``."""
    return 1.0 / (V_C - 1.0) if V_C > 1.0 else math.inf


def truncated_vc(d: float, cutoff: float) -> float:
    """``V_C`` of the K-distribution restricted (and renormalized) to ``[0, cutoff]``."""
    if not cutoff > 0:
        raise DomainError(f"cutoff must be positive, got {cutoff}")
    if not d >= 1:
        raise DomainError(f"d must be >= 1, got {d}")
    pdf = AnalyticPdf(Family.COINCIDENCE_K, d)
    return pdf.visibility(None if math.isinf(cutoff) else cutoff)


@dataclass
class FeatureVector:
    V_I: float
    V_C: float
    V_g2: float | None
    mean_g2: float | None
    d_hat: float
    purity: float
    D_hat: float
    corr_C_g2: float | None
    uncertainties: dict = field(default_factory=dict)
    intervals: dict = field(default_factory=dict)
    dark_subtracted: bool = False
    accidental_corrected: bool = False
    n_records: int = 0
    n_g2_valid: int = 0

    @property
    def has_g2(self) -> bool:
        return self.V_g2 is not None

    def as_dict(self) -> dict:
        return asdict(self)


def _vis_rows(x, mask=None):
    """Row-wise ``Var/mean^2`` (ddof=1) of a 2-D array, optionally masked."""
    if mask is None:
        n = x.shape[1]
        mean = x.mean(axis=1)
        var = ((x - mean[:, None]) ** 2).sum(axis=1) / (n - 1)
    else:
        n = mask.sum(axis=1)
        xm = np.where(mask, x, 0.0)
        mean = xm.sum(axis=1) / n
        var = (np.where(mask, x - mean[:, None], 0.0) ** 2).sum(axis=1) / (n - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return var / mean**2, mean


def _corr_rows(a, b, mask):
    n = mask.sum(axis=1)
    ma = np.where(mask, a, 0.0).sum(axis=1) / n
    mb = np.where(mask, b, 0.0).sum(axis=1) / n
    da = np.where(mask, a - ma[:, None], 0.0)
    db = np.where(mask, b - mb[:, None], 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (da * db).sum(axis=1) / np.sqrt((da**2).sum(axis=1) * (db**2).sum(axis=1))


def _features_rows(I, C, g2, valid):
    """All feature values for each row of resampled columns (rows x records)."""
    V_I, _ = _vis_rows(I)
    V_C, _ = _vis_rows(C)
    g2_ok = valid.sum(axis=1) >= 2
    # rows without enough valid g2 yield nan here and are masked below
    with np.errstate(divide="ignore", invalid="ignore"):
        V_g2, mean_g2 = _vis_rows(np.where(valid, g2, 0.0), valid)
        corr = _corr_rows(C, np.where(valid, g2, 0.0), valid)
        d_hat = np.where(V_I > 0, 1.0 / V_I, np.inf)
        D_hat = np.where(V_C > 1, 1.0 / (V_C - 1.0), np.inf)
    out = {
        "V_I": V_I,
        "V_C": V_C,
        "V_g2": np.where(g2_ok, V_g2, np.nan),
        "mean_g2": np.where(g2_ok, mean_g2, np.nan),
        "d_hat": d_hat,
        "purity": V_C - 2.0 * V_I,
        "D_hat": D_hat,
        "corr_C_g2": np.where(g2_ok, corr, np.nan),
    }
    return out


def estimate_features(
    rs,
    dark_subtracted: bool = False,
    accidental_corrected: bool = False,
    dark_rate: float | None = None,
    n_boot: int = 500,
    seed: int = 0,
    min_records: int = 100,
) -> FeatureVector:
    """Visibilities and derived estimates of a :class:`~qspeckle.measurement.RecordSet`.

    ``dark_subtracted`` removes ``dark_rate`` (default: the detector's
    ``dark1`` from the record provenance) from every ``I1`` before the moments;
    ``accidental_corrected`` replaces ``C`` by ``C - R``. Uncertainties are
    bootstrap standard errors over ``n_boot`` resamples of the records, with
    95% percentile intervals alongside.
    """
    n = len(rs)
    if n < min_records:
        raise InsufficientDataError(f"need at least {min_records} records, got {n}")
    I = np.array(rs.I1, dtype=float)
    if dark_subtracted:
        if dark_rate is None:
            det = getattr(rs.provenance, "detector", None)
            dark_rate = det.dark1 if det is not None else 0.0
        I = I - dark_rate
    C = np.array(rs.C, dtype=float)
    if accidental_corrected:
        C = C - rs.R
    valid = np.asarray(rs.g2_valid, dtype=bool) & np.isfinite(rs.g2)
    g2 = np.where(valid, rs.g2, 0.0)

    if I.mean() == 0 or C.mean() == 0:
        raise DegenerateInputError("zero mean photocurrent or coincidence rate")

    point = {k: float(v[0]) for k, v in _features_rows(I[None], C[None], g2[None], valid[None]).items()}
    has_g2 = valid.sum() >= 2

    uncertainties, intervals = {}, {}
    if n_boot:
        rng = np.random.default_rng(seed)
        reps = {k: [] for k in FEATURE_FIELDS}
        batch = max(1, min(n_boot, 2_000_000 // n))
        done = 0
        while done < n_boot:
            b = min(batch, n_boot - done)
            idx = rng.integers(0, n, size=(b, n))
            rows = _features_rows(I[idx], C[idx], g2[idx], valid[idx])
            for k in FEATURE_FIELDS:
                reps[k].append(rows[k])
            done += b
        for k in FEATURE_FIELDS:
            r = np.concatenate(reps[k])
            r = r[np.isfinite(r)]
            if r.size >= 2 and math.isfinite(point[k]):
                uncertainties[k] = float(r.std(ddof=1))
                intervals[k] = (float(np.percentile(r, 2.5)), float(np.percentile(r, 97.5)))

    def g2_field(name):
        if not has_g2 or not math.isfinite(point[name]):
            return None
        return point[name]

    return FeatureVector(
        V_I=point["V_I"],
        V_C=point["V_C"],
        V_g2=g2_field("V_g2"),
        mean_g2=g2_field("mean_g2"),
        d_hat=point["d_hat"],
        purity=point["purity"],
        D_hat=point["D_hat"],
        corr_C_g2=g2_field("corr_C_g2"),
        uncertainties=uncertainties,
        intervals=intervals,
        dark_subtracted=dark_subtracted,
        accidental_corrected=accidental_corrected,
        n_records=n,
        n_g2_valid=int(valid.sum()),
    )
