"""Outcome densities: normalization, moments, limits and independent oracles."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from qspeckle.analytics import (
    AnalyticPdf,
    Family,
    Normalization,
    bessel_k,
    pdf_accidental,
    pdf_coincidence_k,
    pdf_g2_distinguishable,
    pdf_g2_indistinguishable,
    pdf_intensity_gamma,
)
from qspeckle.errors import DomainError

HALF_LINE = [Family.INTENSITY_GAMMA, Family.COINCIDENCE_K, Family.ACCIDENTAL_PRODUCT]


@pytest.mark.parametrize("family", HALF_LINE)
@pytest.mark.parametrize("d", [1, 2, 5, 7, 14, 20])
def test_normalized_with_unit_mean(family, d):
    pdf = AnalyticPdf(family, d)
    assert pdf.total_mass() == pytest.approx(1.0, abs=1e-8)
    assert pdf.moment(1) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("d", [1, 2, 3.5, 10])
def test_gamma_matches_scipy(d):
    x = np.linspace(0.01, 5, 50)
    ref = stats.gamma(a=d, scale=1 / d).pdf(x)
    assert np.allclose(pdf_intensity_gamma(x, d), ref, rtol=1e-12)


@pytest.mark.parametrize("d", [1, 2, 5, 20])
def test_visibilities(d):
    assert AnalyticPdf(Family.INTENSITY_GAMMA, d).visibility() == pytest.approx(1 / d, rel=1e-7)
    assert AnalyticPdf(Family.COINCIDENCE_K, d).visibility() == pytest.approx(1 + 2 / d, rel=1e-7)
    assert AnalyticPdf(Family.ACCIDENTAL_PRODUCT, d).visibility() == pytest.approx((1 + 1 / d) ** 2 - 1, rel=1e-7)


def test_k_single_mode_identity():
    x = np.array([0.01, 0.3, 1.0, 4.0])
    assert np.allclose(pdf_coincidence_k(x, 1), 2 * bessel_k(0, 2 * np.sqrt(x)), rtol=1e-13)


def test_accidental_single_mode_equals_k_single_mode():
    x = np.array([0.05, 0.5, 2.0])
    assert np.allclose(pdf_accidental(x, 1), pdf_coincidence_k(x, 1), rtol=1e-13)


def test_frozen_high_precision_values():
    assert pdf_coincidence_k(0.5, 2) == pytest.approx(0.559463527266089709, rel=1e-11)
    assert pdf_accidental(0.5, 3) == pytest.approx(0.775818079399407610, rel=1e-11)


@pytest.mark.parametrize("d", [1, 3])
def test_k_matches_gamma_times_exponential(d):
    """Product of a unit-mean gamma(d) and a unit exponential has the K density."""
    rng = np.random.default_rng(11)
    z = rng.gamma(d, 1 / d, 200_000) * rng.exponential(1.0, 200_000)
    pdf = AnalyticPdf(Family.COINCIDENCE_K, d)
    assert stats.ks_1samp(z, pdf.cdf).statistic < 0.006


def test_accidental_matches_gamma_product():
    rng = np.random.default_rng(12)
    z = rng.gamma(2, 0.5, 200_000) * rng.gamma(2, 0.5, 200_000)
    pdf = AnalyticPdf(Family.ACCIDENTAL_PRODUCT, 2)
    assert stats.ks_1samp(z, pdf.cdf).statistic < 0.006


def test_k_limit_at_origin():
    assert pdf_coincidence_k(0.0, 3) == pytest.approx(1.5)
    assert math.isinf(pdf_coincidence_k(0.0, 1))
    assert pdf_coincidence_k(1e-14, 3) == pytest.approx(1.5, rel=1e-4)


def test_k_far_tail_underflows_to_zero():
    assert pdf_coincidence_k(1e6, 2) == 0.0


@pytest.mark.parametrize("mean", [0.3, 1.0, 2.5])
def test_g2_uniform(mean):
    pdf = AnalyticPdf(Family.G2_UNIFORM, mean=mean)
    assert pdf.total_mass() == pytest.approx(1.0, abs=1e-10)
    assert pdf.moment(1) == pytest.approx(mean, rel=1e-10)
    assert pdf.visibility() == pytest.approx(1 / 3, rel=1e-9)
    assert pdf_g2_indistinguishable(2 * mean + 1e-9, mean) == 0.0


@pytest.mark.parametrize("mean", [0.3, 1.0, 2.5])
def test_g2_neglog_exact(mean):
    pdf = AnalyticPdf(Family.G2_NEGLOG, mean=mean)
    assert pdf.total_mass() == pytest.approx(1.0, abs=1e-9)
    assert pdf.moment(1) == pytest.approx(mean, rel=1e-9)
    assert pdf.visibility() == pytest.approx(1 / 9, rel=1e-8)
    assert math.isinf(pdf_g2_distinguishable(mean, mean))


def test_g2_neglog_alternative_prefactor_mass():
    pdf = AnalyticPdf(Family.G2_NEGLOG, mean=1.0, normalization_mode=Normalization.PAPER_EQ3)
    assert pdf.total_mass() == pytest.approx(2 / math.pi, abs=1e-9)
    # the shape, and hence the visibility, is unchanged
    assert pdf.visibility() == pytest.approx(1 / 9, rel=1e-8)


@pytest.mark.parametrize("family,d,mean", [
    (Family.INTENSITY_GAMMA, 1, 1), (Family.INTENSITY_GAMMA, 4, 1),
    (Family.COINCIDENCE_K, 1, 1), (Family.COINCIDENCE_K, 2, 1), (Family.COINCIDENCE_K, 14, 1),
    (Family.ACCIDENTAL_PRODUCT, 1, 1), (Family.ACCIDENTAL_PRODUCT, 5, 1),
    (Family.G2_UNIFORM, 1, 0.7), (Family.G2_NEGLOG, 1, 0.7),
])
def test_cdf_against_direct_quadrature(family, d, mean):
    pdf = AnalyticPdf(family, d, mean)
    hi = 6.0 if pdf.on_half_line else 2 * mean
    for x in np.linspace(0.02, hi, 7):
        pts = [mean] if not pdf.on_half_line and x > mean else None
        ref, _ = integrate.quad(pdf.pdf, 0, x, points=pts, limit=200, epsabs=1e-13)
        assert pdf.cdf(x) == pytest.approx(ref, abs=1e-8)


def test_cdf_monotone_and_bounded():
    pdf = AnalyticPdf(Family.COINCIDENCE_K, 2)
    x = np.linspace(0, 50, 2001)
    F = pdf.cdf(x)
    assert F[0] == 0.0
    assert np.all(np.diff(F) >= -1e-12)
    tail, _ = integrate.quad(pdf.pdf, 50, np.inf, epsabs=1e-15)
    assert F[-1] == pytest.approx(1.0 - tail, abs=1e-9)
    assert pdf.cdf(1e9) == 1.0


@pytest.mark.parametrize("fn,args", [
    (pdf_intensity_gamma, (1.0, 0)),
    (pdf_intensity_gamma, (-1.0, 2)),
    (pdf_coincidence_k, (1.0, 0.5)),
    (pdf_accidental, (np.nan, 2)),
    (pdf_g2_indistinguishable, (1.0, 0)),
    (pdf_g2_distinguishable, (1.0, -1)),
])
def test_domain_errors(fn, args):
    with pytest.raises(DomainError):
        fn(*args)


def test_constructor_validation():
    with pytest.raises(DomainError):
        AnalyticPdf(Family.COINCIDENCE_K, 0.5)
    with pytest.raises(DomainError):
        AnalyticPdf(Family.G2_UNIFORM, mean=0)
    with pytest.raises(ValueError):
        AnalyticPdf("NoSuchFamily")


def test_array_shape_preserved():
    x = np.full((3, 4), 0.7)
    for family in HALF_LINE:
        assert AnalyticPdf(family, 2).pdf(x).shape == (3, 4)
