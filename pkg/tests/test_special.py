"""Bessel functions against independent high-precision mpmath oracles.

The grid oracle is mpmath's arbitrary-precision ``besselk``; a few moderate
points are also checked against direct quadrature of the integral
representation K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt.
"""

import math

import mpmath as mp
import numpy as np
import pytest

from qspeckle.analytics.special import bessel_i, bessel_k
from qspeckle.errors import DomainError

mp.mp.dps = 30

GRID = [(nu, z) for nu in (0, 0.5, 1, 2.5, 6, 13, 19, 30) for z in (1e-3, 0.1, 0.9, 2.0, 7.5, 25, 50)]


def k_quad(nu, z):
    nu, z = mp.mpf(nu), mp.mpf(z)
    # the tail beyond t = 8 is below exp(-z cosh 8 + nu 8), negligible for these points
    return mp.quad(lambda t: mp.exp(-z * mp.cosh(t)) * mp.cosh(nu * t), mp.linspace(0, 8, 9))


@pytest.mark.parametrize("nu,z", GRID)
def test_k_against_mpmath(nu, z):
    ref = float(mp.besselk(nu, z))
    assert abs(bessel_k(nu, z) / ref - 1) < 1e-10


@pytest.mark.parametrize("nu,z", [(0, 1.0), (1, 0.9), (2.5, 2.0), (6, 7.5)])
def test_k_against_quadrature(nu, z):
    ref = float(k_quad(nu, z))
    assert abs(bessel_k(nu, z) / ref - 1) < 1e-10


@pytest.mark.parametrize("nu,z,ref", [
    (0, 1.0, 0.421024438240708333),
    (5, 0.3, 157139.123371216713),
    (2.5, 10.0, 2.39313258646278889e-05),
])
def test_k_frozen(nu, z, ref):
    assert bessel_k(nu, z) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("nu,z", [(0, 0.5), (1, 2.0), (3.5, 10.0), (12, 30.0)])
def test_i_against_mpmath(nu, z):
    assert bessel_i(nu, z) == pytest.approx(float(mp.besseli(nu, z)), rel=1e-10)


def test_i1_frozen():
    assert bessel_i(1, 2.0) == pytest.approx(1.590636854637329063, rel=1e-12)


def test_half_integer_closed_form():
    z = 2.0
    assert bessel_k(0.5, z) == pytest.approx(math.sqrt(math.pi / (2 * z)) * math.exp(-z), rel=1e-13)


@pytest.mark.parametrize("nu,z", [(0, 1.0), (1.5, 0.3), (7, 12.0), (20, 40.0)])
def test_wronskian(nu, z):
    w = bessel_i(nu, z) * bessel_k(nu + 1, z) + bessel_i(nu + 1, z) * bessel_k(nu, z)
    assert abs(w * z - 1) < 1e-10


def test_recurrence():
    z = 3.3
    for nu in (1, 2.25, 8):
        lhs = bessel_k(nu + 1, z)
        rhs = bessel_k(nu - 1, z) + 2 * nu / z * bessel_k(nu, z)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_vectorized():
    z = np.array([0.5, 1.0, 2.0])
    out = bessel_k(1, z)
    assert out.shape == (3,)
    assert np.allclose(out, [bessel_k(1, v) for v in z], rtol=1e-15, atol=0)


@pytest.mark.parametrize("nu,z", [(0, 0.0), (0, -1.0), (-1, 1.0)])
def test_domain(nu, z):
    with pytest.raises(DomainError):
        bessel_k(nu, z)
