"""Special functions used by the kernel evaluators.

Everything here works on numpy arrays.  The complex power uses the principal
branch with the cut on the closed negative real axis, and ``bessel_i`` is a
real-argument implementation of the modified Bessel function of the first
kind (power series below ``BESSEL_CROSSOVER``, Hankel asymptotics above).
"""

import math

import numpy as np
from scipy.special import roots_jacobi

BESSEL_CROSSOVER = 30.0


class BranchCutError(ValueError):
    """Raised when a principal power is requested on the cut."""


def cpow(z, nu, check=True):
    """Principal branch z**nu = exp(nu log z), with arg z in (-pi, pi].

    Points on the closed negative real axis (including 0) are rejected unless
    ``check`` is False, in which case numpy's principal log is used as is.
    """
    z = np.asarray(z, dtype=complex)
    if check:
        on_cut = (z.imag == 0.0) & (z.real <= 0.0)
        if np.any(on_cut):
            raise BranchCutError("cpow evaluated on the cut (-inf, 0]")
    return np.exp(nu * np.log(z))


def gamma(x):
    """Euler Gamma function for real x (thin wrapper over math.gamma)."""
    return math.gamma(x)


def _bessel_series(nu, x, terms=400):
    # I_nu(x) = (x/2)^nu sum_k (x^2/4)^k / (k! Gamma(nu+k+1)); summed with a
    # running ratio so no factorial ever overflows.
    x = np.asarray(x, dtype=float)
    q = 0.25 * x * x
    term = np.full_like(x, 1.0 / gamma(nu + 1.0))
    total = term.copy()
    for k in range(1, terms):
        term = term * q / (k * (nu + k))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    with np.errstate(divide="ignore", invalid="ignore"):
        at_zero = 1.0 if nu == 0 else (0.0 if nu > 0 else np.inf)
        pre = np.where(x > 0, (0.5 * x) ** nu, at_zero)
    return pre * total


def _bessel_asymptotic_scaled(nu, x, terms=60):
    # Hankel expansion I_nu(x) ~ e^x / sqrt(2 pi x) sum_k (-1)^k a_k(nu) / x^k,
    # truncated at the smallest term.  The exponentially small e^{-x} branch is
    # below double precision for x >= 30.
    x = np.asarray(x, dtype=float)
    mu = 4.0 * nu * nu
    term = np.ones_like(x)
    total = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    done = np.zeros(x.shape, dtype=bool)
    for k in range(1, terms):
        term = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        grow = np.abs(term) >= prev
        done = done | grow
        total = np.where(done, total, total + term)
        prev = np.where(done, prev, np.abs(term))
        if np.all(done | (np.abs(term) < 1e-17 * np.abs(total))):
            break
    return total / np.sqrt(2.0 * np.pi * x)


def bessel_i(nu, x):
    """Modified Bessel function I_nu(x) for real nu > -1 and x >= 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_i needs x >= 0")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    small = x < BESSEL_CROSSOVER
    if np.any(small):
        out[small] = _bessel_series(nu, x[small])
    if np.any(~small):
        xb = x[~small]
        out[~small] = np.exp(xb) * _bessel_asymptotic_scaled(nu, xb)
    return out[0] if scalar else out


def bessel_i_scaled(nu, x):
    """e^{-x} I_nu(x), safe for large x."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    small = x < BESSEL_CROSSOVER
    if np.any(small):
        out[small] = np.exp(-x[small]) * _bessel_series(nu, x[small])
    if np.any(~small):
        out[~small] = _bessel_asymptotic_scaled(nu, x[~small])
    return out[0] if scalar else out


def gauss_legendre(m):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    if m < 1:
        raise ValueError("need m >= 1")
    return np.polynomial.legendre.leggauss(m)


def gauss_jacobi_interval(m, a, b, beta):
    """Nodes/weights for int_a^b (y - a)^beta h(y) dy.

    The returned weights already contain (y - a)^beta, so that
    sum w_i h(y_i) approximates the weighted integral.
    """
    x, w = roots_jacobi(m, 0.0, beta)
    half = 0.5 * (b - a)
    return a + half * (1.0 + x), w * half ** (1.0 + beta)
