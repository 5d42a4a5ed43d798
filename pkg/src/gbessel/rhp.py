"""Riemann-Hilbert data from the discretized resolvent.

Gamma(lambda) = I - sum_j w_j F(z_j) g(z_j)^T / (z_j - lambda), with
F = (I - K)^{-1} f.  Expansion conventions used throughout:

    Gamma = I + G1/lambda + G2/lambda^2 + G3/lambda^3 + ...   at infinity
    Gamma = T0 + T1 (lambda - l0) + T2 (lambda - l0)^2 + ... near finite l0

so G_m = sum w F g^T z^{m-1} and T_m = -sum w F g^T (z - l0)^{-m-1}.
"""

from dataclasses import dataclass, field

import numpy as np

from .contour import panel_nodes
from .fredholm import discretize_contour_operator, fredholm_det, resolvent_solve
from .iiks import (DEFAULT_RES, build_multi_interval, build_multitime,
                   build_single_interval)

TWO_PI_I = 2j * np.pi


class ContourProximityError(ValueError):
    """Requested lambda lies too close to a contour node."""


# ----------------------------------------------------------------------------
# building data from a parameter dictionary


def build(config, params, res=DEFAULT_RES):
    """Integrable data for ``config`` from a parameter dictionary."""
    if config == "single":
        return build_single_interval(params["a"], params["nu"], params["tau"], res)
    if config == "multi_interval":
        return build_multi_interval(params["ends"], params["nu"], params["tau"], res)
    if config == "multitime":
        return build_multitime(params["a"], params["times"], params["nu"], params["tau"], res,
                               params.get("normalization", "printed"))
    raise ValueError(config)


def perturb(params, which, h):
    """Copy of ``params`` with the parameter named by ``which`` moved by h.

    ``which`` is "a", "tau", ("a", j) for an endpoint or time index (1-based),
    or ("tau", k) for the time tau_k.
    """
    q = dict(params)
    if which == "tau":
        q["tau"] = params["tau"] + h
    elif which == "a":
        q["a"] = params["a"] + h
    elif isinstance(which, tuple) and which[0] == "a":
        key = "ends" if "ends" in params else "a"
        v = list(params[key])
        v[which[1] - 1] += h
        q[key] = tuple(v)
    elif isinstance(which, tuple) and which[0] == "tau":
        v = list(params["times"])
        v[which[1] - 1] += h
        q["times"] = tuple(v)
    else:
        raise ValueError(f"unknown parameter {which!r}")
    return q


# ----------------------------------------------------------------------------
# resolvent representation


class Resolvent:
    """Solved integrable operator: F = (I - K)^{-1} f on all blocks."""

    def __init__(self, data):
        self.data = data
        self.op = discretize_contour_operator(data)
        self.det, self.logdet = fredholm_det(self.op)
        self.N = data.N
        self.Z = np.concatenate([b.z for b in data.blocks])
        self.W = np.concatenate([b.w for b in data.blocks])
        self.f = np.vstack([b.f for b in data.blocks])
        self.G = np.vstack([b.g for b in data.blocks])
        self.piece = np.concatenate([np.full(len(b.z), b.piece) for b in data.blocks])
        self.F = resolvent_solve(self.op, self.f)
        self._offsets = np.cumsum([0] + [len(b.z) for b in data.blocks])

    # Cauchy sums ----------------------------------------------------------
    def _sum(self, coef, F=None, G=None):
        F = self.F if F is None else F
        G = self.G if G is None else G
        return (F * coef[:, None]).T @ G

    def moment(self, m):
        """G_m = sum w F g^T z^{m-1} (coefficient of lambda^{-m} at infinity)."""
        return self._sum(self.W * self.Z ** (m - 1))

    def taylor(self, lam0, m):
        """Taylor coefficient of order m of Gamma at the finite point lam0."""
        c = self._sum(self.W / (self.Z - lam0) ** (m + 1))
        return np.eye(self.N) - c if m == 0 else -c

    def interpolate_F(self, block, z):
        """Nystrom interpolation of F at off-node points of one block."""
        b = self.data.blocks[block]
        fz = b.f_fn(z)
        other = self.piece != b.piece
        S = fz @ self.G[other].T
        K = S * (self.W[other][None, :] / (z[:, None] - self.Z[other][None, :]))
        return fz + K @ self.F[other]

    def gamma(self, lam, delta=1e-4, near=True):
        """Gamma(lambda) off the contour, with panel refinement near it."""
        lam = complex(lam)
        dist = np.abs(self.Z - lam)
        if np.min(dist) < delta:
            raise ContourProximityError(f"lambda within {delta} of a node")
        coef = self.W / (self.Z - lam)
        out = np.eye(self.N, dtype=complex) - self._sum(coef)
        if near:
            out = out - self._near_correction(lam)
        return out

    def dgamma(self, lam, near=True):
        """Analytic derivative Gamma'(lambda) = -sum w F g^T/(z - lambda)^2."""
        lam = complex(lam)
        out = -self._sum(self.W / (self.Z - lam) ** 2)
        if near:
            out = out - self._near_correction(lam, power=2)
        return out

    def _near_correction(self, lam, power=1):
        corr = np.zeros((self.N, self.N), complex)
        for bi, b in enumerate(self.data.blocks):
            ns = b.nodes
            q = ns.order
            off = self._offsets[bi]
            for p, panel in enumerate(ns.panels):
                zp = b.z[p * q:(p + 1) * q]
                size = abs(zp[-1] - zp[0]) * (1 + 2.0 / q)
                d = np.min(np.abs(zp - lam))
                if d >= size:
                    continue
                sl = slice(off + p * q, off + (p + 1) * q)
                coarse = self._sum(self.W[sl] / (self.Z[sl] - lam) ** power, self.F[sl], self.G[sl])
                # distance to the curve, not to the nearest node
                arc_i, u0, u1 = panel
                us = np.linspace(u0, u1, 257)
                dd = np.abs(ns.contour.arcs[arc_i].point(us) - lam)
                k = int(np.argmin(dd))
                d = max(dd[k] - size / 256, 0.25 * dd[k], 1e-14)
                levels = int(np.ceil(np.log2(max(size / d, 1.0)))) + 2
                z, w, _, _ = panel_nodes(ns.contour, panel, q, levels, focus=us[k])
                Fz = self.interpolate_F(bi, z)
                fine = self._sum(w / (z - lam) ** power, Fz, b.g_fn(z))
                corr += fine - coarse
        return corr


# ----------------------------------------------------------------------------
# jumps and phases


def jump_matrix(data, piece, lam):
    """M(lambda) = I - 2 pi i sum_b f_b(lambda) g_b(lambda)^T over the blocks of one piece.

    Blocks sharing a piece carry separate unknowns, so the sum runs over
    block products, not over the product of summed vectors.
    """
    lam = np.atleast_1d(np.asarray(lam, complex))
    out = np.repeat(np.eye(data.N, dtype=complex)[None], len(lam), axis=0)
    for b in data.blocks:
        if b.piece == piece:
            out = out - TWO_PI_I * np.einsum("ka,kb->kab", b.f_fn(lam), b.g_fn(lam))
    return out


def phase_matrix(data, lam):
    """Diagonal of T(lambda)."""
    return data.phase(lam)


def conjugated_jump(data, piece, lam):
    """I - e^{T} J0 e^{-T} with the piece's constant matrix J0."""
    t = data.phase(lam)
    E = np.exp(t[:, None] - t[None, :])
    return np.eye(data.N) - E * data.J0[piece]


def jump_factorization_residual(data, samples=20, seed=0, margin=0.05):
    """max |M - (I - e^T J0 e^{-T})| / (1 + |M|) over random points of every piece."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for piece in data.pieces():
        C = data.contour_of(piece)
        for _ in range(samples):
            arc = C.arcs[rng.integers(len(C.arcs))]
            lo, hi = arc.breaks[0], arc.breaks[-1]
            u = rng.uniform(lo + margin * (hi - lo), hi - margin * (hi - lo))
            lam = complex(arc.point(np.array([u]))[0])
            M = jump_matrix(data, piece, lam)[0]
            Mc = conjugated_jump(data, piece, lam)
            worst = max(worst, float(np.max(np.abs(M - Mc)) / (1 + np.max(np.abs(M)))))
    return worst


def orthogonality_residual(data):
    """max |f_b(z)^T g_c(z)| (relative) over nodes, for all blocks b, c on a common piece."""
    worst = 0.0
    for bi in data.blocks:
        for bj in data.blocks:
            if bi.piece != bj.piece:
                continue
            g = bj.g_fn(bi.z)
            scale = np.max(np.abs(bi.f)) * np.max(np.abs(g)) + 1e-300
            worst = max(worst, float(np.max(np.abs(np.sum(bi.f * g, axis=1))) / scale))
    return worst


def jump_check(R, piece, u=None, offset=1e-3):
    """||Gamma_+ - Gamma_- M|| / max(1, ||Gamma_-|| ||M||) at a point of a piece.

    Gamma_+ (left of the orientation) and Gamma_- are obtained by cubic
    extrapolation from the normal offsets k * offset, k = 1..4.
    """
    data = R.data
    C = data.contour_of(piece)
    arc = C.arcs[-1]
    if u is None:
        br = arc.breaks
        u = 0.5 * (br[0] + br[1]) if len(br) > 1 else br[0]
    z = complex(arc.point(np.array([u]))[0])
    dz = complex(arc.deriv(np.array([u]))[0])
    n = 1j * dz / abs(dz)

    def side(sign):
        vals = [R.gamma(z + sign * k * offset * n, delta=offset / 4) for k in (1, 2, 3, 4)]
        return 4 * vals[0] - 6 * vals[1] + 4 * vals[2] - vals[3]

    gp, gm = side(+1), side(-1)
    M = jump_matrix(data, piece, z)[0]
    scale = max(1.0, np.max(np.abs(gm)) * np.max(np.abs(M)))
    return float(np.max(np.abs(gp - gm @ M)) / scale), z


# ----------------------------------------------------------------------------
# moments and residue formulas


@dataclass
class GammaMoments:
    G: list
    at0: list = None
    at_points: dict = field(default_factory=dict)
    Phi0: dict = field(default_factory=dict)
    Phi1: dict = field(default_factory=dict)

    @property
    def Phi_tilde(self):
        return np.linalg.solve(self.at0[0], self.at0[1])


def gamma_moments(R):
    """Moments at infinity, Taylor data at 0 and at the points -4 tau_k."""
    data = R.data
    G = [R.moment(m) for m in (1, 2, 3)]
    mom = GammaMoments(G)
    if data.config in ("single", "multi_interval"):
        mom.at0 = [R.taylor(0.0, m) for m in (0, 1, 2)]
    if data.config == "multitime":
        for k, tk in enumerate(data.params["times"]):
            l0 = -4.0 * tk
            T = [R.taylor(l0, m) for m in (0, 1, 2)]
            mom.at_points[k + 1] = T
            P0 = np.linalg.solve(T[0], T[1])
            mom.Phi0[k + 1] = P0
            mom.Phi1[k + 1] = 2 * np.linalg.solve(T[0], T[2]) - P0 @ P0
    return mom


def jmu_logderiv(R, which, mom=None, variant="verified"):
    """Residue formula for a log-derivative of the determinant.

    ``variant="printed"`` returns the printed expression.  ``"verified"`` fixes
    the signs that the finite-difference oracle contradicts: the tau
    derivative of a union of intervals, and the finite-point residues of
    the multi-time formulas.
    """
    data = R.data
    mom = mom or gamma_moments(R)
    G1 = mom.G[0]
    cfg = data.config
    if cfg == "single":
        if which == "a":
            return float(G1[1, 1].real)
        if which == "tau":
            return float(mom.Phi_tilde[1, 1].real)
    elif cfg == "multi_interval":
        if isinstance(which, tuple) and which[0] == "a":
            j = which[1]
            return float(-G1[j, j].real)
        if which == "tau":
            s = 1.0 if variant == "verified" else -1.0
            return float(s * mom.Phi_tilde[0, 0].real)
    elif cfg == "multitime":
        n = len(data.params["times"])
        sgn = 1.0 if variant == "verified" else -1.0
        if which == "tau":
            return float(-sum(G1[n + k, n + k] for k in range(n)).real)
        if isinstance(which, tuple):
            k = which[1]
            idx = [k - 1] + ([2 * n + k - 2] if k > 1 else [])
            s0 = sum(mom.Phi0[k][i, i] for i in idx)
            if which[0] == "a":
                return float(sgn * s0.real)
            if which[0] == "tau":
                s1 = sum(mom.Phi1[k][i, i] for i in idx)
                nu, ak = data.params["nu"], data.params["a"][k - 1]
                return float((4 * G1[n + k - 1, n + k - 1]
                              + sgn * (4 * nu * s0 - 4 * ak * s1)).real)
    raise ValueError(f"{which!r} not available for {cfg}")


def fd_logderiv(config, params, which, hs=(1e-3, 5e-4), res=DEFAULT_RES):
    """Richardson-combined central difference of log det."""
    def ld(q):
        R = discretize_contour_operator(build(config, q, res))
        return fredholm_det(R)[1].real

    D = []
    for h in hs:
        D.append((ld(perturb(params, which, h)) - ld(perturb(params, which, -h))) / (2 * h))
    r = (hs[0] / hs[1]) ** 2
    return float((r * D[1] - D[0]) / (r - 1))


def isomonodromy_check(config, params, which, hs=(1e-3, 5e-4), res=DEFAULT_RES,
                       variant="verified"):
    """(residue value, finite difference, |difference|)."""
    R = Resolvent(build(config, params, res))
    val = jmu_logderiv(R, which, variant=variant)
    fd = fd_logderiv(config, params, which, hs, res)
    return val, fd, abs(val - fd)


def gamma_eval(R, lam):
    """Gamma(lambda) from a solved resolvent (off the contour)."""
    return R.gamma(lam)


def far_field_gamma1(R, radii=(1e3, 1e4), direction=np.exp(0.3j)):
    """G1 from lambda (Gamma(lambda) - I) at two radii, Richardson-combined."""
    vals = []
    for r in radii:
        lam = r * direction
        vals.append(lam * (-R._sum(R.W / (R.Z - lam))))
    l1, l2 = radii
    return (l2 * vals[1] - l1 * vals[0]) / (l2 - l1)


def unimodularity_residual(R, lams):
    """max |det Gamma(lambda) - 1| over sample points."""
    return max(abs(np.linalg.det(R.gamma(l)) - 1) for l in lams)


def trace_residuals(R, mom=None):
    """|Tr G1| and, when Taylor data at 0 exist, |Tr(T0^{-1} T1)|."""
    mom = mom or gamma_moments(R)
    out = {"tr_G1": abs(np.trace(mom.G[0]))}
    if mom.at0 is not None:
        out["tr_Phi_tilde"] = abs(np.trace(mom.Phi_tilde))
    for k, P in mom.Phi0.items():
        out[f"tr_Phi0[{k}]"] = abs(np.trace(P))
    return out
