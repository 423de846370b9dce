"""Closed-form outcome distributions for random two-output measurements.

Families 1-3 are densities of a mean-normalized variable (``I/<I>``,
``C/<C>``, ``R/<R>``) with mode parameter ``d``; the two g2 families are
densities of ``g2`` itself with location ``mean``.

Densities at their integrable singular points return ``inf``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

from qspeckle.analytics.special import bessel_k
from qspeckle.errors import DomainError


class Family(str, enum.Enum):
    INTENSITY_GAMMA = "IntensityGamma"
    COINCIDENCE_K = "CoincidenceK"
    ACCIDENTAL_PRODUCT = "AccidentalProduct"
    G2_UNIFORM = "G2Uniform"
    G2_NEGLOG = "G2NegLog"


class Normalization(str, enum.Enum):
    EXACT = "Exact"
    PAPER_EQ3 = "PaperEq3"


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError("density argument must be non-negative")
    return x


def _scalar_or_array(out, x):
    return float(out) if np.ndim(x) == 0 else out


def pdf_intensity_gamma(x, d):
    """Gamma density of order ``d`` with unit mean."""
    if not d > 0:
        raise DomainError(f"d must be positive, got {d}")
    xa = _check_x(x)
    out = np.empty(xa.shape)
    pos = xa > 0
    with np.errstate(divide="ignore"):
        logp = d * math.log(d) - math.lgamma(d) + (d - 1) * np.log(xa[pos]) - d * xa[pos]
    out[pos] = np.exp(logp)
    out[~pos] = math.inf if d < 1 else (d if d == 1 else 0.0)
    return _scalar_or_array(out, x)


def pdf_coincidence_k(x, d):
    """K-distribution of two-fold coincidences for a pure ``d``-mode biphoton state."""
    if not d >= 1:
        raise DomainError(f"d must be >= 1, got {d}")
    xa = _check_x(x)
    out = np.empty(xa.shape)
    limit = math.inf if d == 1 else d / (d - 1)
    prefactor = math.log(2 * d) - math.lgamma(d)
    for idx in np.ndindex(xa.shape):
        xi = xa[idx]
        if xi == 0:
            out[idx] = limit
            continue
        k = bessel_k(d - 1, 2 * math.sqrt(d * xi))
        if math.isinf(k):
            out[idx] = limit
        elif k == 0:
            out[idx] = 0.0
        else:
            out[idx] = math.exp(prefactor + 0.5 * (d - 1) * math.log(d * xi) + math.log(k))
    return _scalar_or_array(out, x)


def pdf_accidental(x, d):
    """Density of ``R/<R>`` for the product of two independent gamma(d) intensities."""
    if not d >= 1:
        raise DomainError(f"d must be >= 1, got {d}")
    xa = _check_x(x)
    out = np.empty(xa.shape)
    prefactor = math.log(2.0) - 2 * math.lgamma(d) + 2 * d * math.log(d)
    for idx in np.ndindex(xa.shape):
        xi = xa[idx]
        if xi == 0:
            out[idx] = math.inf if d == 1 else 0.0
            continue
        k = bessel_k(0.0, 2 * d * math.sqrt(xi))
        out[idx] = 0.0 if k == 0 else math.exp(prefactor + (d - 1) * math.log(xi) + math.log(k))
    return _scalar_or_array(out, x)


def pdf_g2_indistinguishable(x, mean):
    """Uniform density on ``[0, 2 mean]``."""
    if not mean > 0:
        raise DomainError(f"mean must be positive, got {mean}")
    xa = np.asarray(x, dtype=float)
    out = np.where((xa >= 0) & (xa <= 2 * mean), 0.5 / mean, 0.0)
    return _scalar_or_array(out, x)


def pdf_g2_distinguishable(x, mean, normalization_mode=Normalization.EXACT):
    """Symmetric negative-log density on ``[0, 2 mean]``, singular at ``mean``.

    ``Exact`` uses the normalizing prefactor ``1/(2 mean)``; ``PaperEq3`` uses
    the alternative ``1/(pi mean)``, which integrates to only ``2/pi``.
    """
    if not mean > 0:
        raise DomainError(f"mean must be positive, got {mean}")
    scale = 2.0 if Normalization(normalization_mode) is Normalization.EXACT else math.pi
    xa = np.asarray(x, dtype=float)
    inside = (xa >= 0) & (xa <= 2 * mean)
    with np.errstate(divide="ignore"):
        val = -np.log(np.abs(xa / mean - 1.0)) / (scale * mean)
    out = np.where(inside, val, 0.0)
    return _scalar_or_array(out, x)


@dataclass(frozen=True)
class AnalyticPdf:
    family: Family
    d: float = 1.0
    mean: float = 1.0
    normalization_mode: Normalization = Normalization.EXACT

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "normalization_mode", Normalization(self.normalization_mode))
        if self.family in (Family.COINCIDENCE_K, Family.ACCIDENTAL_PRODUCT) and not self.d >= 1:
            raise DomainError(f"{self.family.value} needs d >= 1")
        if not self.d > 0 or not self.mean > 0:
            raise DomainError("d and mean must be positive")

    @property
    def on_half_line(self) -> bool:
        return self.family in (Family.INTENSITY_GAMMA, Family.COINCIDENCE_K, Family.ACCIDENTAL_PRODUCT)

    @property
    def support(self) -> tuple:
        if self.on_half_line:
            return (0.0, math.inf)
        return (0.0, 2.0 * self.mean)

    def pdf(self, x):
        f = self.family
        if f is Family.INTENSITY_GAMMA:
            return pdf_intensity_gamma(x, self.d)
        if f is Family.COINCIDENCE_K:
            return pdf_coincidence_k(x, self.d)
        if f is Family.ACCIDENTAL_PRODUCT:
            return pdf_accidental(x, self.d)
        if f is Family.G2_UNIFORM:
            return pdf_g2_indistinguishable(x, self.mean)
        return pdf_g2_distinguishable(x, self.mean, self.normalization_mode)

    __call__ = pdf

    def _integrate(self, fn, upper=None) -> float:
        """Integral of ``fn(x) * pdf(x)`` over the support (or ``[0, upper]``)."""
        if self.on_half_line:
            # u = sqrt(x) tames the x -> 0 singularities of the Bessel densities
            hi = math.inf if upper is None else math.sqrt(upper)
            val, _ = integrate.quad(
                lambda u: 2 * u * fn(u * u) * self.pdf(u * u), 0.0, hi,
                limit=400, epsabs=0.0, epsrel=1e-12,
            )
            return val
        lo, hi = self.support
        if upper is not None:
            hi = min(hi, upper)
        points = [self.mean] if lo < self.mean < hi else None
        val, _ = integrate.quad(
            lambda x: fn(x) * self.pdf(x), lo, hi, points=points, limit=400, epsabs=0.0, epsrel=1e-12
        )
        return val

    def moment(self, k: int, upper=None) -> float:
        return self._integrate(lambda x: x**k, upper)

    def total_mass(self) -> float:
        return self.moment(0)

    def visibility(self, upper=None) -> float:
        """``Var/mean^2`` of the (renormalized) density on its support or ``[0, upper]``."""
        m0 = self.moment(0, upper)
        m1 = self.moment(1, upper) / m0
        m2 = self.moment(2, upper) / m0
        return (m2 - m1 * m1) / (m1 * m1)

    @cached_property
    def _cdf_interp(self):
        lo, hi = self.support
        if self.on_half_line:
            hi = max(400.0 / math.sqrt(self.d), 60.0)
            singular = [lo]
            nodes = [np.linspace(0.0, math.sqrt(hi), 6001) ** 2]
        else:
            singular = [lo, self.mean, hi]
            nodes = [np.linspace(lo, hi, 6001)]
        for s in singular:
            offsets = np.geomspace(1e-12, 1e-2, 120) * max(hi - lo, 1.0)
            nodes.append(s + offsets)
            nodes.append(s - offsets)
        nodes = np.unique(np.clip(np.concatenate(nodes), lo, hi))
        gx, gw = np.polynomial.legendre.leggauss(8)
        a, b = nodes[:-1], nodes[1:]
        half = 0.5 * (b - a)
        pts = (0.5 * (a + b))[:, None] + half[:, None] * gx[None, :]
        vals = np.asarray(self.pdf(pts.ravel()), dtype=float).reshape(pts.shape)
        seg = half * (vals @ gw)
        cdf = np.concatenate([[0.0], np.cumsum(seg)])
        # the density is the exact slope; secants stand in at singular nodes
        slope = np.asarray(self.pdf(nodes), dtype=float)
        secant = np.diff(cdf) / np.diff(nodes)
        bad = ~np.isfinite(slope)
        slope[bad] = np.concatenate([secant, secant[-1:]])[bad]
        return nodes, CubicHermiteSpline(nodes, cdf, slope, extrapolate=False), cdf[-1]

    def cdf(self, x):
        """Numerically integrated CDF (accurate to ~1e-8 on the support)."""
        nodes, interp, total = self._cdf_interp
        xa = np.asarray(x, dtype=float)
        out = interp(np.clip(xa, nodes[0], nodes[-1]))
        out = np.where(xa >= nodes[-1], total if not self.on_half_line else 1.0, out)
        out = np.where(xa <= nodes[0], 0.0, out)
        return _scalar_or_array(out, x)


def pdf_for(family, d=1.0, mean=1.0, normalization_mode=Normalization.EXACT) -> AnalyticPdf:
    return AnalyticPdf(Family(family), d, mean, Normalization(normalization_mode))
