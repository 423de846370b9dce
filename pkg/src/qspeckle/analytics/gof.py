"""Goodness-of-fit of samples against an :class:`AnalyticPdf`."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from qspeckle.analytics.pdfs import AnalyticPdf
from qspeckle.errors import DegenerateInputError, InsufficientDataError


class GofKind(str, enum.Enum):
    KS = "KS"
    CHI_SQUARE = "ChiSquare"


@dataclass(frozen=True)
class GofReport:
    statistic: float
    statistic_kind: GofKind
    p_value_or_threshold: float
    n_samples: int
    n_bins: int | None = None


def ks_distance(samples, cdf) -> float:
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def _chi_square(x, pdf: AnalyticPdf, min_expected: float):
    n = x.size
    lo, hi = pdf.support
    k = max(10, int(math.sqrt(n)))
    inner = np.linspace(x.min(), x.max(), k + 1)[1:-1]
    edges = np.concatenate([[lo], inner[(inner > lo) & (inner < hi)], [hi]])
    F = np.asarray(pdf.cdf(np.clip(edges, lo, 1e300)), dtype=float)
    expected = n * np.diff(F)
    # samples outside the support are counted in the nearest end bin
    hist_edges = np.where(np.isinf(edges), max(x.max(), lo) + 1.0, edges)
    observed = np.histogram(np.clip(x, lo, hist_edges[-1]), bins=hist_edges)[0].astype(float)

    # merge neighbours until every bin expects at least min_expected counts
    exp_m, obs_m = [], []
    acc_e = acc_o = 0.0
    for e, o in zip(expected, observed):
        acc_e += e
        acc_o += o
        if acc_e >= min_expected:
            exp_m.append(acc_e)
            obs_m.append(acc_o)
            acc_e = acc_o = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_m:
            exp_m[-1] += acc_e
            obs_m[-1] += acc_o
        else:
            exp_m.append(acc_e)
            obs_m.append(acc_o)
    exp_m, obs_m = np.array(exp_m), np.array(obs_m)
    chi2 = float(np.sum((obs_m - exp_m) ** 2 / exp_m))
    dof = max(len(exp_m) - 1, 1)
    return chi2, float(stats.chi2.sf(chi2, dof)), len(exp_m)


def goodness_of_fit(samples, pdf: AnalyticPdf, kind=GofKind.KS, min_samples: int = 100,
                    min_expected: float = 10.0) -> GofReport:
    """KS distance (with asymptotic p-value) or binned chi-square against ``pdf``.

    Samples must already be in the density's variable, e.g. ``C / mean(C)``
    for the K-distribution.
    """
    kind = GofKind(kind)
    x = np.asarray(samples, dtype=float)
    x = x[np.isfinite(x)]
    if x.size < min_samples:
        raise InsufficientDataError(f"need at least {min_samples} samples, got {x.size}")
    if np.ptp(x) == 0:
        raise DegenerateInputError("all samples are identical")
    if kind is GofKind.KS:
        D = ks_distance(x, pdf.cdf)
        return GofReport(D, kind, float(stats.kstwo.sf(D, x.size)), int(x.size))
    chi2, p, bins = _chi_square(x, pdf, min_expected)
    return GofReport(chi2, kind, p, int(x.size), bins)
