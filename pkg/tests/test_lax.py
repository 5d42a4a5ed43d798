import numpy as np
import pytest

from gbessel.lax import (SIGMA3, LaxNumerics, comm, large_lambda_slope, lax_coefficients,
                         lax_residual, laurent_bound, printed_lax_coefficients)
from gbessel.rhp import Resolvent, build


@pytest.fixture(scope="module")
def num():
    return LaxNumerics(1.0, 0.5, 0.3)


def test_coefficient_structure(num):
    co = lax_coefficients(num.R, 1.0, 0.5, 0.3)
    assert np.allclose(co.A[0], 0.5 * SIGMA3)
    assert np.allclose(co.U1, 0.5 * SIGMA3) and np.all(co.V0 == 0)
    assert abs(np.trace(co.A[1])) < 1e-12
    assert abs(np.trace(co.A[2]) + np.trace(num.R.moment(1))) < 1e-10
    assert np.max(np.abs(np.diag(co.U0))) < 1e-12


def test_derived_coefficients_match_numerics(num):
    rows, _ = lax_residual(1.0, 0.5, 0.3, num=num)
    for lam, which, r in rows:
        assert r < 1e-6, (lam, which, r)


def test_printed_coefficients_differ(num):
    rows, co = lax_residual(1.0, 0.5, 0.3, num=num, variant="printed")
    worst = {w: max(r for _, ww, r in rows if ww == w) for w in ("A", "U", "V")}
    assert worst["U"] < 1e-6
    assert worst["A"] > 1e-4 and worst["V"] > 1e-2
    assert np.allclose(co.Vm1, 0.5 * SIGMA3)


def test_small_gap_limit():
    # A0 -> 0 and A_{-1} -> -(nu/2) sigma3; the off-diagonal of Gamma_1 grows
    # like a^{-1/2}, so the approach is O(sqrt(a))
    errs = []
    for a in (1e-5, 1e-7):
        R = Resolvent(build("single", {"a": a, "nu": 0.5, "tau": 0.0}))
        co = lax_coefficients(R, a, 0.5, 0.0)
        assert np.max(np.abs(co.A[0])) <= a
        errs.append(np.max(np.abs(co.A[1] + 0.25 * SIGMA3)))
    assert errs[1] < 1e-3
    assert abs(np.log10(errs[0] / errs[1]) - 1.0) < 0.1


def test_laurent_structure(num):
    bounds = laurent_bound(num)
    assert max(bounds) < 2 * min(bounds)
    co = lax_coefficients(num.R, 1.0, 0.5, 0.3)
    slope, errs = large_lambda_slope(num, co)
    assert abs(slope + 1) < 0.05


def test_commutator():
    X = np.array([[1, 2], [3, 4]], complex)
    assert np.allclose(np.diag(comm(X, SIGMA3)), 0)
    assert printed_lax_coefficients is not None
