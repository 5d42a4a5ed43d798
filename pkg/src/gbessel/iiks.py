"""IIKS data for the three integrable configurations and the determinant identity.

Each configuration is a list of blocks.  A block is one contour piece
together with the vectors f (row side, including the 1/(2 pi i)) and g
(column side) restricted to that piece; blocks with the same ``piece`` id
share nodes and have f^T g = 0 between them.  The phase data describe
T(lambda) and the constant jump matrices J0, so that the jump is
M = I - e^T J0 e^{-T} = I - 2 pi i f g^T.
"""

from dataclasses import dataclass, field

import numpy as np

from .contour import (GeometryError, describe_geometry, discretize, invert_contour,
                      make_hankel_wedge, make_tangent_loop, validate_geometry,
                      wedge_tail_bound)
from .fredholm import (discretize_contour_operator, discretize_interval_operator,
                       fredholm_det)
from .kernels import (DEFAULT_GRIDS, KernelGrids, NORMALIZATIONS, ProcessParams,
                      kernel_gb_single_complex, kernel_mt_H_complex, kernel_mt_P)
from .specfun import cpow

TWO_PI_I = 2j * np.pi
SIGMA3 = np.diag([1.0, -1.0])


@dataclass(frozen=True)
class IIKSResolution:
    order: int = 24
    refine: int = 1
    tail: float = 40.0
    loop_V: float = 10.0
    loop_panels: int = 10
    delta_min: float = 0.05

    def doubled(self):
        return IIKSResolution(**{**self.__dict__, "refine": 2 * self.refine})


DEFAULT_RES = IIKSResolution()


@dataclass
class Block:
    piece: int
    label: str
    nodes: object
    f_fn: object
    g_fn: object
    z: np.ndarray = None
    w: np.ndarray = None
    f: np.ndarray = None
    g: np.ndarray = None

    def __post_init__(self):
        self.z = self.nodes.z
        self.w = self.nodes.w
        self.f = self.f_fn(self.z)
        self.g = self.g_fn(self.z)


@dataclass
class IIKSData:
    """Integrable kernel data: blocks, phase T(lambda) and constant jumps."""

    config: str
    N: int
    blocks: list
    phase: object
    J0: dict
    contours: list
    params: dict
    tails: dict = field(default_factory=dict)

    def pieces(self):
        return sorted({b.piece for b in self.blocks})

    def contour_of(self, piece):
        return next(b.nodes.contour for b in self.blocks if b.piece == piece)

    def geometry_lines(self):
        lines = describe_geometry(self.contours)
        lines += [f"tail {k} = {v:.3e}" for k, v in sorted(self.tails.items())]
        return lines


def _vec(n, N):
    return np.zeros((n, N), complex)


# ----------------------------------------------------------------------------
# single interval [0, a]


def single_wedge(rate, res, alpha=0.75 * np.pi, rate_max=None):
    """Wedge adapted to the decay e^{rate t}; panels limited by the fastest rate."""
    x0 = max(2.0, 1.0 / rate)
    scale = max(1.0, 1.0 / rate)
    L = (res.tail + rate * x0) / (rate * abs(np.cos(alpha)))
    hmax = 4.0 * scale
    if rate_max is not None:
        hmax = min(hmax, 12.0 / rate_max)
    h0 = min(0.5 * scale, hmax)
    W = make_hankel_wedge(x0=x0, alpha=alpha, L=L, h0=h0, hmax=hmax)
    return W, wedge_tail_bound(rate, x0, alpha, L)


def build_single_interval(a, nu, tau, res=DEFAULT_RES):
    """2x2 integrable data for the gap [0, a]."""
    if a <= 0:
        raise ValueError("a must be positive")
    W, tail = single_wedge(a / 2, res)
    S = make_tangent_loop(0.5, -1, 0.0, V=res.loop_V, panels=res.loop_panels)
    gw = discretize(W, res.order, res.refine)
    gs = discretize(S, res.order, res.refine)

    def f_gamma(t):
        f = _vec(len(t), 2)
        f[:, 0] = np.exp(t * a / 2) / TWO_PI_I
        return f

    def g_gamma(t):
        g = _vec(len(t), 2)
        g[:, 1] = cpow(t, -nu) * np.exp(t * a / 2 + tau / t - 0.5 / t ** 2)
        return g

    def f_hat(s):
        f = _vec(len(s), 2)
        f[:, 1] = 1.0 / TWO_PI_I
        return f

    def g_hat(s):
        g = _vec(len(s), 2)
        g[:, 0] = cpow(s, nu) * np.exp(-s * a - tau / s + 0.5 / s ** 2)
        return g

    def phase(lam):
        th = theta_single(lam, a, nu, tau)
        return np.array([-th / 2, th / 2])

    blocks = [Block(0, "gamma", gw, f_gamma, g_gamma), Block(1, "gamma_hat", gs, f_hat, g_hat)]
    J0 = {0: np.array([[0, 1], [0, 0]], complex), 1: np.array([[0, 0], [1, 0]], complex)}
    return IIKSData("single", 2, blocks, phase, J0, [W, S],
                    {"a": a, "nu": nu, "tau": tau}, {"gamma": tail})


def theta_single(lam, a, nu, tau):
    """theta_a(lambda) = -lambda a - tau/lambda + 1/(2 lambda^2) + nu log lambda."""
    lam = complex(lam)
    return -lam * a - tau / lam + 0.5 / lam ** 2 + nu * np.log(lam)


# ----------------------------------------------------------------------------
# union of intervals [a1,a2] u ... u [a_{2N-1}, a_{2N}], a1 > 0


def build_multi_interval(ends, nu, tau, res=DEFAULT_RES):
    """(2N+1)-component data for a union of N intervals away from 0."""
    ends = np.asarray(ends, float)
    if len(ends) % 2 or len(ends) == 0:
        raise ValueError("need an even number of endpoints")
    # intervals have positive length; neighbours may touch (shared endpoint)
    if np.any(ends[1::2] <= ends[0::2]) or np.any(ends[2::2] < ends[1:-1:2]):
        raise ValueError("endpoints must be increasing, each interval of positive length")
    if ends[0] <= 0:
        raise ValueError("a1 > 0 required; use the single-interval path for [0, a]")
    N = len(ends) + 1
    a1 = ends[0]
    ex = ends - a1 / 2
    ex[0] = a1 / 2
    sign = (-1.0) ** np.arange(1, len(ends) + 1)
    W, tail = single_wedge(a1 / 2, res, rate_max=ends[-1])
    S = make_tangent_loop(0.5, -1, 0.0, V=res.loop_V, panels=res.loop_panels)
    gw = discretize(W, res.order, res.refine)
    gs = discretize(S, res.order, res.refine)

    def f_gamma(t):
        f = _vec(len(t), N)
        f[:, 1:] = np.exp(np.outer(t, ex)) / TWO_PI_I
        return f

    def g_gamma(t):
        g = _vec(len(t), N)
        g[:, 0] = np.exp(t * a1 / 2 + tau / t - 0.5 / t ** 2) * cpow(t, -nu)
        return g

    def f_hat(s):
        f = _vec(len(s), N)
        f[:, 0] = 1.0 / TWO_PI_I
        return f

    def g_hat(s):
        g = _vec(len(s), N)
        g[:, 1:] = sign[None, :] * np.exp(-np.outer(s, ends) - (tau / s - 0.5 / s ** 2)[:, None]) \
            * cpow(s, nu)[:, None]
        return g

    def phase(lam):
        th = np.array([theta_single(lam, aj, nu, tau) for aj in ends])
        T0 = th.sum() / N
        return np.concatenate([[T0], T0 - th])

    J0g = np.zeros((N, N), complex)
    J0g[1:, 0] = 1.0
    J0s = np.zeros((N, N), complex)
    J0s[0, 1:] = sign
    blocks = [Block(0, "gamma", gw, f_gamma, g_gamma), Block(1, "gamma_hat", gs, f_hat, g_hat)]
    return IIKSData("multi_interval", N, blocks, phase, {0: J0g, 1: J0s}, [W, S],
                    {"ends": tuple(ends), "nu": nu, "tau": tau}, {"gamma": tail})


# ----------------------------------------------------------------------------
# multi-time, one gap [0, a^(k)] per time


MT_ALPHA = 2.0 * np.pi / 3.0


def multitime_geometry(a, times, tau, res=DEFAULT_RES, x0=3.0, grow=1.25, tries=30):
    """gamma (wedge) and the loops gamma_{-k} = 1/gamma' - 4 tau_k, validated.

    The vertex of gamma moves right until every loop is encircled with
    separation at least ``res.delta_min``.
    """
    times = np.asarray(times, float)
    amin = float(np.min(a))
    xl = 2.0
    scale = max(1.0, 1.0 / amin)
    Ll = (res.tail + amin * xl) / (amin * abs(np.cos(MT_ALPHA)))
    base = make_hankel_wedge(x0=xl, alpha=MT_ALPHA, L=Ll, scale=scale)
    loops = [invert_contour(base, shift=-4.0 * tk, label=f"gamma_-{k + 1}")
             for k, tk in enumerate(times)]
    x0 = max(x0, 1.0 + np.max(-4.0 * times) + 1.0 / xl)
    last = None
    for _ in range(tries):
        L = 12.0 + 4.0 * np.max(np.abs(times)) + abs(tau) + x0
        G = make_hankel_wedge(x0=x0, alpha=MT_ALPHA, L=L, h0=0.5, hmax=2.0)
        rep = validate_geometry([G] + loops, enclose=[("gamma", C.label) for C in loops],
                                delta_min=res.delta_min)
        if rep.ok:
            tails = {"gamma": float(np.exp(-(L - x0) ** 2 / 4.0)),
                     "gamma_-k": wedge_tail_bound(amin, xl, MT_ALPHA, Ll)}
            return G, loops, rep, tails
        last = rep
        # overlapping loops cannot be repaired by moving the vertex
        if any(f.startswith("separation gamma_-") for f in rep.failures):
            break
        x0 *= grow
    raise GeometryError("multi-time geometry invalid: " + "; ".join(last.failures))


def build_multitime(a, times, nu, tau, res=DEFAULT_RES, normalization="printed"):
    """(3n-1)-component data for gaps [0, a^(k)] at times tau_1 < ... < tau_n.

    ``normalization="printed"`` keeps the displayed -4 factors in f (the
    determinant is then det(I + 4 K chi)); "probability" replaces them by 1,
    which gives the gap probability.
    """
    a = np.asarray(a, float)
    times = np.asarray(times, float)
    n = len(times)
    if len(a) != n:
        raise ValueError("one endpoint per time")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must increase")
    kf = NORMALIZATIONS[normalization]
    N = 3 * n - 1
    G, loops, rep, tails = multitime_geometry(a, times, tau, res)
    gn = discretize(G, res.order, res.refine)
    blocks = []

    def shifts(z):
        zk = z[:, None] + 4.0 * times[None, :]
        return zk, zk - tau

    for k in range(n):
        def f_g(z, k=k):
            zk, _ = shifts(z)
            f = _vec(len(z), N)
            f[:, k] = kf * np.exp(-a[k] / zk[:, k])
            return f / TWO_PI_I

        def g_g(z, k=k):
            zk, zt = shifts(z)
            g = _vec(len(z), N)
            g[:, n:2 * n] = np.exp(zt ** 2 / 2) * cpow(zk[:, k], -nu)[:, None]
            return g

        blocks.append(Block(0, f"gamma[{k + 1}]", gn, f_g, g_g))

    for k in range(n):
        ln = discretize(loops[k], res.order, res.refine)

        def f_l(z, k=k):
            zk, zt = shifts(z)
            f = _vec(len(z), N)
            f[:, n + k] = np.exp(-zt[:, k] ** 2 / 2) * cpow(zk[:, k], nu)
            for l in range(k + 1, n):
                f[:, 2 * n + l - 1] = kf * np.exp(-a[l] / zk[:, l]) * cpow(zk[:, k], nu) \
                    / cpow(zk[:, l], nu)
            return f / TWO_PI_I

        def g_l(z, k=k):
            zk, _ = shifts(z)
            g = _vec(len(z), N)
            g[:, k] = np.exp(a[k] / zk[:, k])
            if k >= 1:
                g[:, 2 * n + k - 1] = g[:, k]
            return g

        blocks.append(Block(k + 1, f"gamma_-{k + 1}", ln, f_l, g_l))

    def phase(lam):
        lk = complex(lam) + 4.0 * times
        th = a / lk + nu * np.log(lk)
        tht = (lk - tau) ** 2 / 2
        return np.concatenate([-th, -tht, -th[1:]])

    J0 = {0: np.zeros((N, N), complex)}
    J0[0][:n, n:2 * n] = kf
    for k in range(n):
        J = np.zeros((N, N), complex)
        J[n + k, k] = 1.0
        if k >= 1:
            J[n + k, 2 * n + k - 1] = 1.0
        for l in range(k + 1, n):
            J[2 * n + l - 1, k] = kf
            if k >= 1:
                J[2 * n + l - 1, 2 * n + k - 1] = kf
        J0[k + 1] = J
    params = {"a": tuple(a), "times": tuple(times), "nu": nu, "tau": tau,
              "normalization": normalization}
    return IIKSData("multitime", N, blocks, phase, J0, [G] + loops, params, tails)


# ----------------------------------------------------------------------------
# determinants


def iiks_det(data):
    """(det, logdet, operator) of I - K for integrable data."""
    op = discretize_contour_operator(data)
    d, ld = fredholm_det(op)
    return d, ld, op


def scalar_det_single(intervals, nu, tau, m=40, grids=DEFAULT_GRIDS):
    """det(I - chi_I K chi_I) of the single-time kernel by Nystrom quadrature."""
    p = ProcessParams(nu=nu, tau=tau)

    def kern(ci, cj, x, y):
        return kernel_gb_single_complex(x, y, p, grids).real

    op = discretize_interval_operator(kern, [list(intervals)], m, nu_weight=nu)
    d, ld = fredholm_det(op)
    return d, ld, op


def scalar_det_multitime(a, times, nu, tau, m=30, grids=DEFAULT_GRIDS,
                         normalization="printed", form="wedge"):
    """det(I - K chi) for the multi-time kernel H + chi_{i<j} P with gaps [0, a^(k)]."""
    p = ProcessParams(nu=nu, tau=tau, times=tuple(times))

    def kern(i, j, x, y):
        H = kernel_mt_H_complex(i, j, x, y, p, form, grids, normalization).real
        if i < j:
            H = H + kernel_mt_P(i, j, x, y, p, normalization)
        return H

    op = discretize_interval_operator(kern, [[(0.0, ak)] for ak in a], m, nu_weight=nu)
    d, ld = fredholm_det(op)
    return d, ld, op


@dataclass
class IdentityResult:
    config: str
    det_scalar: complex
    det_iiks: complex
    dlog: float
    logdet_scalar: complex
    logdet_iiks: complex


def det_identity(config, p, res=DEFAULT_RES, m=None, grids=DEFAULT_GRIDS,
                 normalization="printed"):
    """Compare the interval-side and contour-side determinants.

    ``config`` is "single" (gap [0, a] from p.intervals[0]), "multi_interval"
    (union of intervals away from 0) or "multitime" (p.intervals[k] = [(0, a_k)]).
    """
    if config == "single":
        a = p.intervals[0][0][1]
        ds, ls, _ = scalar_det_single([(0.0, a)], p.nu, p.tau, m or 40, grids)
        di, li, _ = iiks_det(build_single_interval(a, p.nu, p.tau, res))
    elif config == "multi_interval":
        ivs = [tuple(iv) for iv in p.intervals[0]]
        ends = np.ravel(ivs)
        ds, ls, _ = scalar_det_single(ivs, p.nu, p.tau, m or 40, grids)
        di, li, _ = iiks_det(build_multi_interval(ends, p.nu, p.tau, res))
    elif config == "multitime":
        a = [iv[0][1] for iv in p.intervals]
        ds, ls, _ = scalar_det_multitime(a, p.times, p.nu, p.tau, m or 30, grids, normalization)
        di, li, _ = iiks_det(build_multitime(a, p.times, p.nu, p.tau, res, normalization))
    else:
        raise ValueError(config)
    return IdentityResult(config, ds, di, float(abs(ls - li)), ls, li)


def gap_probability(p, res=DEFAULT_RES, self_check=True):
    """Gap probability through the integrable side, with a self-convergence estimate.

    Single-time: p.intervals[0] is the union of gaps; multi-time: one
    [0, a_k] per time.  Returns (det, logdet, estimate).
    """
    def run(r):
        if len(p.times) > 1:
            a = [iv[0][1] for iv in p.intervals]
            data = build_multitime(a, p.times, p.nu, p.tau, r, "probability")
        else:
            ivs = [tuple(iv) for iv in p.intervals[0]]
            if len(ivs) == 1 and ivs[0][0] == 0:
                data = build_single_interval(ivs[0][1], p.nu, p.tau, r)
            else:
                data = build_multi_interval(np.ravel(ivs), p.nu, p.tau, r)
        d, ld, _ = iiks_det(data)
        return d, ld

    d, ld = run(res)
    est = float("nan")
    if self_check:
        _, ld2 = run(res.doubled())
        est = float(abs(ld2 - ld))
    return d, ld, est
