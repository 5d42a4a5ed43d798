import numpy as np
import pytest
import scipy.special as sp

from gbessel.kernels import (DEFAULT_GRIDS, KernelGrids, ProcessParams, chapman_kolmogorov_check,
                             density_integral, kernel_gb_single, kernel_gb_single_complex,
                             kernel_mt_H, kernel_mt_H_complex, kernel_mt_P, measure_conventions,
                             normalization_check, transition_density, transition_density_contour)


def brute_kernel(x, y, nu, tau, n=1600):
    """Double contour integral on a circle and a steeper wedge, dense Gauss-Legendre."""
    # s on the circle |s - 1/2| = 1/2 through angle phi (clockwise), tangent at 0
    g, w = np.polynomial.legendre.leggauss(n)
    phi = np.pi * (g + 1)             # (0, 2 pi)
    s = 0.5 - 0.5 * np.exp(-1j * phi)
    ds = 0.5j * np.exp(-1j * phi) * np.pi * w
    # t on a wedge x0 = 3, angle 0.7 pi, upward
    r = 200.0 / y * (g + 1) / 2
    wr = 200.0 / y * w / 2
    e1, e2 = np.exp(-0.7j * np.pi), np.exp(0.7j * np.pi)
    t = np.concatenate([3 + r[::-1] * e1, 3 + r * e2])
    # incoming ray traversed with r decreasing
    dt = np.concatenate([-e1 * wr[::-1], e2 * wr])
    E = np.exp(-x * s + 0.5 * (tau - 1 / s) ** 2) * s ** nu * ds
    F = np.exp(y * t - 0.5 * (tau - 1 / t) ** 2) * t ** (-nu) * dt
    E[~np.isfinite(E)] = 0.0
    return (E @ (1 / (s[:, None] - t[None, :])) @ F) / (2j * np.pi) ** 2


@pytest.mark.parametrize("nu,tau", [(0.5, 0.0), (0.0, -1.0), (1.0, 1.0)])
def test_single_kernel_against_brute_quadrature(nu, tau):
    p = ProcessParams(nu=nu, tau=tau)
    for x, y in [(0.4, 0.9), (1.3, 0.6), (2.0, 2.0)]:
        ref = brute_kernel(x, y, nu, tau)
        got = kernel_gb_single(x, y, p)
        assert abs(got - ref.real) < 1e-9 * max(1, abs(ref))
        assert abs(ref.imag) < 1e-9


def test_kernel_is_real_and_contour_independent():
    p = ProcessParams(nu=0.5, tau=0.3)
    x = np.array([0.1, 0.7, 1.9])
    y = np.array([0.05, 0.8, 2.5])
    K = kernel_gb_single_complex(x, y, p)
    assert np.max(np.abs(K.imag)) < 1e-13 * np.max(np.abs(K))
    K2 = kernel_gb_single_complex(x, y, p, KernelGrids(loop_c=0.4))
    K3 = kernel_gb_single_complex(x, y, p, s_kind="inverted_wedge")
    K4 = kernel_gb_single_complex(x, y, p, DEFAULT_GRIDS.doubled())
    for other in (K2, K3, K4):
        assert np.max(np.abs(other - K)) < 1e-11 * np.max(np.abs(K))


def test_transition_density_closed_form():
    x, y, d, nu = 0.7, 1.3, 0.25, 0.5
    ref = (y / x) ** (nu / 2) / (4 * d) * np.exp(-(x + y) / (4 * d)) * sp.iv(nu, np.sqrt(x * y) / (2 * d))
    assert abs(transition_density(x, y, d, nu) / ref - 1) < 1e-13


def test_transition_density_limits_and_dual():
    nu, d, y = 0.5, 0.3, 0.8
    p0 = transition_density(0.0, y, d, nu)
    assert abs(transition_density(1e-12, y, d, nu) / p0 - 1) < 1e-6
    for x, y, d in [(0.7, 1.3, 0.25), (2.0, 0.4, 0.1), (0.05, 3.0, 0.5)]:
        a = transition_density(x, y, d, nu)
        assert abs(transition_density_contour(x, y, d, nu) / a - 1) < 1e-10
    with pytest.raises(ValueError):
        transition_density(1.0, 1.0, 0.0, nu)


@pytest.mark.parametrize("nu", [0.0, 0.5, 2.0])
def test_density_normalization_and_chapman_kolmogorov(nu):
    for x, d in [(0.0, 0.3), (1.0, 0.25), (3.0, 1.0)]:
        assert normalization_check(x, d, nu) < 1e-12
    assert chapman_kolmogorov_check(0.7, 1.3, 0.2, 0.3, nu) < 1e-10
    # the first moment of BESQ: E[X_t] = x + 4 (nu + 1) delta
    x, d = 0.9, 0.2
    m1 = density_integral(x, d, nu, lambda z: z)
    assert abs(m1 - (x + 4 * (nu + 1) * d)) < 1e-10


def test_transition_part_is_strictly_upper():
    p = ProcessParams(nu=0.5, times=(0.2, 0.5))
    assert kernel_mt_P(1, 0, 0.5, 0.7, p) == 0.0
    assert kernel_mt_P(0, 0, 0.5, 0.7, p) == 0.0
    ref = transition_density(0.5, 0.7, 0.3, 0.5)
    assert abs(kernel_mt_P(0, 1, 0.5, 0.7, p, "printed") - 4 * ref) < 1e-15
    assert abs(kernel_mt_P(0, 1, 0.5, 0.7, p, "probability") + ref) < 1e-15


def test_multitime_diagonal_reduces_to_single_time():
    p = ProcessParams(nu=0.5, tau=0.2, times=(0.25, 0.5))
    x, y = np.array([0.4, 1.1]), np.array([0.6, 1.7])
    K = kernel_gb_single(y, x, p).T
    H = kernel_mt_H(1, 1, x, y, p, normalization="probability")
    assert np.max(np.abs(H - (y[None, :] / x[:, None]) ** 0.5 * K)) < 1e-12
    Ha = kernel_mt_H(0, 0, x, y, p, "loop", normalization="probability")
    assert np.max(np.abs(Ha - kernel_gb_single(x, y, p))) < 1e-12


def test_measured_conventions():
    c = measure_conventions(0.5, 0.0)
    assert abs(c.kappa_single + 4) < 1e-10 and c.kappa_single_spread < 1e-6
    assert abs(c.kappa_transpose - 1) < 1e-10 and c.kappa_transpose_spread < 1e-6
    assert abs(c.kappa_P - 4) < 1e-12


def test_t_side_requires_positive_argument():
    p = ProcessParams()
    with pytest.raises(ValueError):
        kernel_gb_single_complex(0.5, 0.0, p)


def test_params_validation():
    with pytest.raises(ValueError):
        ProcessParams(nu=-1.0)
    with pytest.raises(ValueError):
        ProcessParams(times=(0.5, 0.2))
    with pytest.raises(ValueError):
        ProcessParams(intervals=(((1.0, 0.5),),))
    # neighbouring intervals may share an endpoint
    ProcessParams(intervals=(((0.5, 1.0), (1.0, 1.5)),))
    assert kernel_mt_H_complex is not None
