"""Lax triplet of the single-interval problem.

Psi = Gamma e^{T} with T = (lambda a + tau/lambda - 1/(2 lambda^2) - nu log lambda) sigma3/2.
A = Psi_lambda Psi^{-1} is a Laurent polynomial A0 + A_{-1}/l + A_{-2}/l^2 + A_{-3}/l^3,
U = Psi_a Psi^{-1} = U0 + U1 l and V = Psi_tau Psi^{-1} = V_{-1}/l.  The
coefficients are assembled from the moments G1, G2, G3 of Gamma at infinity
(Gamma = I + G1/l + ...), and checked against numerically differentiated Psi.
"""

from dataclasses import dataclass

import numpy as np

from .iiks import DEFAULT_RES
from .rhp import Resolvent, build

SIGMA3 = np.diag([1.0 + 0j, -1.0])


def comm(X, Y):
    return X @ Y - Y @ X


@dataclass
class LaxCoefficients:
    A: list
    U0: np.ndarray
    U1: np.ndarray
    V0: np.ndarray
    Vm1: np.ndarray
    params: dict
    variant: str = "derived"

    def A_at(self, lam):
        return sum(Ak * lam ** (-k) for k, Ak in enumerate(self.A))

    def U_at(self, lam):
        return self.U0 + lam * self.U1

    def V_at(self, lam):
        return self.V0 + self.Vm1 / lam


def _common(G, a, nu, tau):
    G1, G2, _ = G
    s3 = SIGMA3
    A0 = 0.5 * a * s3
    Am1 = -0.5 * nu * s3 + 0.5 * a * comm(G1, s3)
    Am2 = (-0.5 * a * comm(G1, s3 @ G1) + 0.5 * a * comm(G2, s3)
           - 0.5 * nu * comm(G1, s3) - 0.5 * tau * s3 - G1)
    return A0, Am1, Am2


def lax_coefficients(R, a, nu, tau):
    """Coefficients from the expansion of Psi_lambda Psi^{-1} (derived A_{-3}, V_{-1})."""
    G = [R.moment(m) for m in (1, 2, 3)]
    G1, G2, G3 = G
    s3 = SIGMA3
    A0, Am1, Am2 = _common(G, a, nu, tau)
    S1 = comm(G1, s3)
    S2 = comm(G2, s3) - comm(G1, s3 @ G1)
    Am3 = (G1 @ G1 - 2 * G2
           + 0.5 * a * (comm(s3 @ G2, G1) + comm(G1, s3 @ G1 @ G1) + comm(s3 @ G1, G2)
                        + comm(G3, s3))
           - 0.5 * nu * S2 - 0.5 * tau * S1 + 0.5 * s3)
    G0 = R.taylor(0.0, 0)
    Vm1 = 0.5 * G0 @ s3 @ np.linalg.inv(G0)
    return LaxCoefficients([A0, Am1, Am2, Am3], 0.5 * S1, 0.5 * s3, np.zeros((2, 2), complex),
                           Vm1, {"a": a, "nu": nu, "tau": tau}, "derived")


def printed_lax_coefficients(R, a, nu, tau):
    """The printed coefficient formulas, verbatim (A_{-3} and V_{-1} differ)."""
    G = [R.moment(m) for m in (1, 2, 3)]
    G1, G2, G3 = G
    s3 = SIGMA3
    A0, Am1, Am2 = _common(G, a, nu, tau)
    Am3 = (G1 @ G1 - 2 * G2 + 0.5 * a * comm(s3 @ G2, G1) + 0.5 * a * comm(G1, s3 @ G1 @ G1)
           + 0.5 * a * comm(s3 @ G1, G2) + 0.5 * a * comm(G3, s3) + 0.5 * nu * s3 @ G2
           + 0.5 * nu * comm(G1, s3 @ G1) + 0.5 * tau * s3 @ G1 + 0.5 * s3)
    return LaxCoefficients([A0, Am1, Am2, Am3], 0.5 * comm(G1, s3), 0.5 * s3,
                           np.zeros((2, 2), complex), 0.5 * s3,
                           {"a": a, "nu": nu, "tau": tau}, "printed")


def dT_dlambda(lam, a, nu, tau):
    return (a - tau / lam ** 2 + 1 / lam ** 3 - nu / lam) * SIGMA3 / 2


class LaxNumerics:
    """Psi-derivatives from the resolvent: analytic in lambda, finite differences in a, tau."""

    def __init__(self, a, nu, tau, res=DEFAULT_RES, h=1e-3):
        self.a, self.nu, self.tau, self.h = a, nu, tau, h
        p = {"a": a, "nu": nu, "tau": tau}
        self.R = Resolvent(build("single", p, res))
        self.shifted = {}
        for name in ("a", "tau"):
            for s in (h, -h, h / 2, -h / 2):
                q = dict(p)
                q[name] += s
                self.shifted[name, s] = Resolvent(build("single", q, res))

    def _d(self, name, lam):
        h = self.h
        S = self.shifted
        D1 = (S[name, h].gamma(lam) - S[name, -h].gamma(lam)) / (2 * h)
        D2 = (S[name, h / 2].gamma(lam) - S[name, -h / 2].gamma(lam)) / h
        return (4 * D2 - D1) / 3

    def A(self, lam):
        G = self.R.gamma(lam)
        Gi = np.linalg.inv(G)
        return self.R.dgamma(lam) @ Gi + G @ dT_dlambda(lam, self.a, self.nu, self.tau) @ Gi

    def U(self, lam):
        G = self.R.gamma(lam)
        Gi = np.linalg.inv(G)
        return self._d("a", lam) @ Gi + G @ (lam * SIGMA3 / 2) @ Gi

    def V(self, lam):
        G = self.R.gamma(lam)
        Gi = np.linalg.inv(G)
        return self._d("tau", lam) @ Gi + G @ (SIGMA3 / (2 * lam)) @ Gi


DEFAULT_SAMPLES = (3 + 2j, 4 - 1j, -1 + 4j, -0.5 + 0.6j, 2 + 3j)


def lax_residual(a, nu, tau, lams=DEFAULT_SAMPLES, res=DEFAULT_RES, variant="derived", num=None):
    """Rows (lambda, which, residual) for A, U, V plus structural checks.

    Structural rows: "U_linear" compares U(l1) - U(l2) with (l1 - l2) sigma3/2,
    "V_inverse" the spread of lambda V(lambda) over the samples.
    """
    num = num or LaxNumerics(a, nu, tau, res)
    make = lax_coefficients if variant == "derived" else printed_lax_coefficients
    co = make(num.R, a, nu, tau)
    rows = []
    Us, lV = [], []
    for lam in lams:
        An, Un, Vn = num.A(lam), num.U(lam), num.V(lam)
        rows.append((lam, "A", float(np.max(np.abs(An - co.A_at(lam))))))
        rows.append((lam, "U", float(np.max(np.abs(Un - co.U_at(lam))))))
        rows.append((lam, "V", float(np.max(np.abs(Vn - co.V_at(lam))))))
        Us.append(Un)
        lV.append(lam * Vn)
    lin = max(float(np.max(np.abs(Us[i] - Us[0] - (lams[i] - lams[0]) * SIGMA3 / 2)))
              for i in range(1, len(lams)))
    inv = max(float(np.max(np.abs(lV[i] - lV[0]))) for i in range(1, len(lams)))
    rows.append((None, "U_linear", lin))
    rows.append((None, "V_inverse", inv))
    return rows, co


def laurent_bound(num, radii=(0.4, 0.2, 0.1), angles=(0.75 * np.pi, np.pi, 1.25 * np.pi)):
    """max |lambda^3 A(lambda)| on small rings around 0 (left of the tangent loop)."""
    out = []
    for r in radii:
        out.append(max(float(np.max(np.abs(r ** 3 * num.A(r * np.exp(1j * t)))))
                       for t in angles))
    return out


def large_lambda_slope(num, coeffs, radii=(50.0, 100.0, 200.0), direction=np.exp(1j * np.pi / 3)):
    """log-log slope of |A(lambda) - A0| against |lambda|."""
    errs = [np.max(np.abs(num.A(r * direction) - coeffs.A[0])) for r in radii]
    return float(np.polyfit(np.log(radii), np.log(errs), 1)[0]), errs
