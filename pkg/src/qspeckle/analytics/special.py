"""Modified Bessel functions of real order and positive real argument.

``K_mu`` and ``K_{mu+1}`` for the fractional part ``|mu| <= 1/2`` come from
Temme's series when ``z < 2`` and from Steed's continued fraction otherwise;
integer steps in order use the (stable) upward recurrence
``K_{v+1} = K_{v-1} + (2v/z) K_v``. ``I_v`` is obtained from the continued
fraction for ``I_{v+1}/I_v`` and the Wronskian.
"""

from __future__ import annotations

import math

import numpy as np

from qspeckle.errors import DomainError

_EPS = 1e-16
_TINY = 1e-300
_MAXIT = 100_000
_EULER = 0.5772156649015329
# mu^3 Taylor coefficient of 1/Gamma(1+mu); near mu = 0, gam1 = -(EULER + A3 mu^2)
_A3 = -0.0420026350340952


def _gamma_terms(mu):
    """(gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu)) for |mu| <= 1/2."""
    gampl = 1.0 / math.gamma(1.0 + mu)
    gammi = 1.0 / math.gamma(1.0 - mu)
    gam2 = 0.5 * (gammi + gampl)
    if abs(mu) < 1e-3:
        gam1 = -(_EULER + _A3 * mu * mu)
    else:
        gam1 = (gammi - gampl) / (2.0 * mu)
    return gam1, gam2, gampl, gammi


def _k_temme(mu, z):
    """K_mu(z), K_{mu+1}(z) for z < 2 by Temme's series."""
    x2 = 0.5 * z
    pimu = math.pi * mu
    fact = 1.0 if abs(pimu) < _EPS else pimu / math.sin(pimu)
    d = -math.log(x2)
    e = mu * d
    fact2 = 1.0 if abs(e) < _EPS else math.sinh(e) / e
    gam1, gam2, gampl, gammi = _gamma_terms(mu)
    ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
    total = ff
    e = math.exp(e)
    p = 0.5 * e / gampl
    q = 0.5 / (e * gammi)
    c = 1.0
    d = x2 * x2
    total1 = p
    mu2 = mu * mu
    for i in range(1, _MAXIT):
        ff = (i * ff + p + q) / (i * i - mu2)
        c *= d / i
        p /= i - mu
        q /= i + mu
        delta = c * ff
        total += delta
        total1 += c * (p - i * ff)
        if abs(delta) < abs(total) * _EPS:
            break
    else:  # pragma: no cover
        raise ArithmeticError("Temme series failed to converge")
    return total, total1 * 2.0 / z


def _k_steed(mu, z):
    """K_mu(z), K_{mu+1}(z) for z >= 2 by Steed's continued fraction."""
    mu2 = mu * mu
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25 - mu2
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:  # pragma: no cover
        raise ArithmeticError("Steed continued fraction failed to converge")
    h *= a1
    kmu = math.sqrt(math.pi / (2.0 * z)) * math.exp(-z) / s
    k1 = kmu * (mu + z + 0.5 - h) / z
    return kmu, k1


def _k_pair(nu, z):
    """K_nu(z) and K_{nu+1}(z)."""
    nl = int(nu + 0.5)
    mu = nu - nl
    kmu, k1 = _k_temme(mu, z) if z < 2.0 else _k_steed(mu, z)
    for i in range(1, nl + 1):
        if math.isinf(k1):
            return math.inf, math.inf
        kmu, k1 = k1, (mu + i) * (2.0 / z) * k1 + kmu
    return kmu, k1


def _check(nu, z):
    if not nu >= 0:
        raise DomainError(f"order must be non-negative, got {nu}")
    if not z > 0:
        raise DomainError(f"argument must be positive, got {z}")


def bessel_k_scalar(nu: float, z: float) -> float:
    nu, z = float(nu), float(z)
    _check(nu, z)
    with np.errstate(over="ignore"):
        try:
            return _k_pair(nu, z)[0]
        except OverflowError:
            return math.inf


def bessel_i_scalar(nu: float, z: float) -> float:
    """I_nu(z) from the ratio continued fraction and the Wronskian with K."""
    nu, z = float(nu), float(z)
    _check(nu, z)
    # Lentz evaluation of f = I'_nu / I_nu
    xi = 1.0 / z
    h = max(nu * xi, _TINY)
    b = 2.0 * xi * nu
    d = 0.0
    c = h
    for _ in range(_MAXIT):
        b += 2.0 * xi
        d = 1.0 / (b + d)
        c = b + 1.0 / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    f = h
    k, k1 = _k_pair(nu, z)
    kp = nu * xi * k - k1  # K'_nu
    # Wronskian: I_nu K'_nu - I'_nu K_nu = -1/z
    return xi / (f * k - kp)


def bessel_k(nu, z):
    """``K_nu(z)`` for ``nu >= 0`` and ``z > 0``; broadcasts over arrays."""
    if np.ndim(nu) == 0 and np.ndim(z) == 0:
        return bessel_k_scalar(nu, z)
    nu_b, z_b = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(z, dtype=float))
    out = np.empty(nu_b.shape)
    for idx in np.ndindex(nu_b.shape):
        out[idx] = bessel_k_scalar(nu_b[idx], z_b[idx])
    return out


def bessel_i(nu, z):
    if np.ndim(nu) == 0 and np.ndim(z) == 0:
        return bessel_i_scalar(nu, z)
    nu_b, z_b = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(z, dtype=float))
    out = np.empty(nu_b.shape)
    for idx in np.ndindex(nu_b.shape):
        out[idx] = bessel_i_scalar(nu_b[idx], z_b[idx])
    return out
