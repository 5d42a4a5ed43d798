"""Pointwise kernel evaluators.

All double contour integrals share one evaluator, :func:`double_contour`:

    D_c(x, y) = (2 pi i)^{-2} int_s int_t
        exp(-x s + y t + (tau - 1/s + c)^2/2 - (tau - 1/t)^2/2)
        (s/t)^nu / (s - t + c s t)  ds dt,

with s on a loop tangent to 0 and t on a wedge around it.  For c = 0 it is
the single-time kernel, since the exponent equals phi_tau(y,t) - phi_tau(x,s).
The multi-time entries are D_c for shifts c built from the time gaps.
The evaluation is factorized as E(x,s) C(s,t) F(y,t) and the wedge is
rescaled for each value of y so that small arguments stay resolved.
"""

from dataclasses import dataclass, field

import numpy as np

from .contour import (GeometryError, discretize, make_hankel_wedge, make_tangent_loop,
                      invert_contour)
from .specfun import bessel_i_scaled, cpow, gamma, gauss_jacobi_interval, gauss_legendre

TWO_PI_I = 2j * np.pi


@dataclass(frozen=True)
class ProcessParams:
    """Model parameters.

    ``times`` are the strictly increasing tau_1 < ... < tau_n of the
    multi-time process, and ``intervals[k]`` the gap intervals at time k as
    endpoint pairs.  Single-time problems use ``times=(0.0,)``.
    """

    nu: float = 0.5
    tau: float = 0.0
    times: tuple = (0.0,)
    intervals: tuple = ()

    def __post_init__(self):
        if not self.nu > -1:
            raise ValueError("nu must exceed -1")
        t = np.asarray(self.times, float)
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        for ivs in self.intervals:
            ends = np.asarray(ivs, float).ravel()
            if (np.any(ends < 0) or np.any(ends[1::2] <= ends[0::2])
                    or np.any(ends[2::2] < ends[1:-1:2])):
                raise ValueError("interval endpoints must be nonnegative and increasing")

    def delta(self, j, i):
        """tau_j - tau_i (positive exactly when j > i)."""
        return float(self.times[j] - self.times[i])


@dataclass(frozen=True)
class KernelGrids:
    """Resolution and contour choices for the double contour integrals."""

    order: int = 24
    refine: int = 1
    loop_c: float = 0.5
    loop_V: float = 10.0
    loop_panels: int = 10
    wedge_alpha: float = 0.75 * np.pi
    wedge_x0: float = 2.0
    tail: float = 40.0
    inv_alpha: float = 2.0 * np.pi / 3.0
    inv_L: float = 14.0

    def doubled(self):
        return KernelGrids(**{**self.__dict__, "refine": 2 * self.refine})


DEFAULT_GRIDS = KernelGrids()


def phase_phi(z, t, tau):
    """phi_tau(z, t) = z t + tau/t - 1/(2 t^2)."""
    t = np.asarray(t, complex)
    if np.any(t == 0):
        raise ValueError("phase_phi needs t != 0")
    return z * t + tau / t - 0.5 / t ** 2


# ----------------------------------------------------------------------------
# contour grids


def t_wedge(y, grids=DEFAULT_GRIDS):
    """Wedge for the t variable, scaled with 1/y; returns (node set, tail bound)."""
    alpha = grids.wedge_alpha
    x0 = max(grids.wedge_x0, 1.0 / y)
    scale = max(1.0, 1.0 / y)
    L = (grids.tail + y * x0) / (y * abs(np.cos(alpha)))
    W = make_hankel_wedge(x0=x0, alpha=alpha, L=L, scale=scale)
    ns = discretize(W, order=grids.order, refine=grids.refine)
    tail = np.exp(y * (x0 + L * np.cos(alpha))) / (y * abs(np.cos(alpha)))
    return ns, tail


def s_loop(c_shift, grids=DEFAULT_GRIDS, kind="loop", tau=0.0):
    """Nodes for the s variable.

    ``kind="loop"``: tangent loop whose inverse line Re(1/s) = R sits to the
    right of the pole set {1/t + c_shift}.  ``kind="inverted_wedge"``: s = 1/u
    with u on a wedge of angle ``grids.inv_alpha`` whose vertex lies to the
    right of the same pole set.
    """
    if kind == "loop":
        c = grids.loop_c
        R = 1.0 / (2.0 * c)
        if c_shift > 0:
            # keep the circle's inverse line right of the shifted poles
            c = 1.0 / (2.0 * (R + c_shift))
            R = R + c_shift
        A = abs(tau + c_shift - R)
        V = grids.loop_V + A
        C = make_tangent_loop(c=c, orientation=-1, V=V,
                              panels=int(np.ceil(grids.loop_panels * V / grids.loop_V)))
        return discretize(C, order=grids.order, refine=grids.refine)
    if kind == "inverted_wedge":
        X = 1.5 + max(c_shift, 0.0)
        A = abs(tau + c_shift - X)
        W = make_hankel_wedge(x0=X, alpha=grids.inv_alpha, L=grids.inv_L + 2 * A,
                              h0=0.5, hmax=1.0)
        return discretize(invert_contour(W, label="gamma_hat"), order=grids.order,
                          refine=grids.refine)
    raise ValueError(kind)


# ----------------------------------------------------------------------------
# the shared double contour integral


def double_contour(xs, ys, nu, tau, c_shift=0.0, grids=DEFAULT_GRIDS, s_kind="loop"):
    """Matrix D[p, q] = D_c(xs[p], ys[q]) (complex)."""
    xs = np.atleast_1d(np.asarray(xs, float))
    ys = np.atleast_1d(np.asarray(ys, float))
    if np.any(ys <= 0):
        raise ValueError("t-side arguments must be positive")
    sn = s_loop(c_shift, grids, s_kind, tau)
    s, ds = sn.z, sn.w
    u = 1.0 / s
    E = np.exp(-np.outer(xs, s) + 0.5 * (tau - u + c_shift) ** 2) * cpow(s, nu) * ds
    out = np.empty((len(xs), len(ys)), complex)
    cache = {}
    for q, y in enumerate(ys):
        tn, _ = cache.get(y) or cache.setdefault(y, t_wedge(y, grids))
        t, dt = tn.z, tn.w
        F = np.exp(y * t - 0.5 * (tau - 1.0 / t) ** 2) * cpow(t, -nu) * dt
        den = s[:, None] - t[None, :] + c_shift * s[:, None] * t[None, :]
        if np.min(np.abs(den)) < 1e-8:
            raise GeometryError("s and t contours are too close")
        out[:, q] = E @ ((1.0 / den) @ F)
    return out / TWO_PI_I ** 2


def _real(v, rel=1e-8):
    v = np.asarray(v)
    bad = np.abs(v.imag) > rel * (1.0 + np.abs(v.real))
    if np.any(bad):
        raise ArithmeticError(f"kernel not real: max imag {np.max(np.abs(v.imag)):.3g}")
    return v.real


def _squeeze(M, x, y):
    if np.ndim(x) == 0 and np.ndim(y) == 0:
        return M[0, 0]
    return M


def kernel_gb_single_complex(x, y, p, grids=DEFAULT_GRIDS, s_kind="loop"):
    """Single-time kernel K(x, y) as a complex matrix over x (rows) and y (columns)."""
    return double_contour(x, y, p.nu, p.tau, 0.0, grids, s_kind)


def kernel_gb_single(x, y, p, grids=DEFAULT_GRIDS):
    """Real single-time generalized Bessel kernel K(x, y)."""
    return _squeeze(_real(kernel_gb_single_complex(x, y, p, grids)), x, y)


# The loop form of the kernel is literally the same double integral.
kernel_kmw = kernel_gb_single


# ----------------------------------------------------------------------------
# transition density


def transition_density(x, y, delta, nu):
    """Squared Bessel transition density p(x, y, delta), normalized in y.

    p = (y/x)^{nu/2} / (4 delta) exp(-(x+y)/(4 delta)) I_nu(sqrt(xy)/(2 delta)),
    with the x = 0 limit y^nu/((4 delta)^{nu+1} Gamma(nu+1)) exp(-y/(4 delta)).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    x, y = np.broadcast_arrays(x, y)
    out = np.empty(x.shape)
    zero = x == 0
    if np.any(zero):
        yz = y[zero]
        out[zero] = (yz ** nu / ((4 * delta) ** (nu + 1) * gamma(nu + 1))
                     * np.exp(-yz / (4 * delta)))
    pos = ~zero
    if np.any(pos):
        xp, yp = x[pos], y[pos]
        z = np.sqrt(xp * yp) / (2 * delta)
        env = np.exp(-(np.sqrt(xp) - np.sqrt(yp)) ** 2 / (4 * delta))
        out[pos] = (yp / xp) ** (nu / 2) / (4 * delta) * env * bessel_i_scaled(nu, z)
    return out[()] if out.ndim == 0 else out


def transition_density_contour(x, y, delta, nu, order=24, alpha=2 * np.pi / 3):
    """The same density from its Hankel contour representation.

    p = (y/x)^nu / (4 delta) (2 pi i)^{-1} int e^{(x(t-1) + y(1/t-1))/(4 delta)} t^{-nu-1} dt,
    evaluated with t = sqrt(y/x) w and w on a wedge through the saddle w = 1.
    """
    z = np.sqrt(x * y) / (2 * delta)
    scale = max(1.0, 2.0 / z)
    L = 4.0 * (45.0 + 10.0) / (z * abs(np.cos(alpha))) + 10.0 * scale
    W = make_hankel_wedge(x0=1.0, alpha=alpha, L=L, h0=0.25, hmax=2.0, scale=scale)
    ns = discretize(W, order=order)
    w = ns.z
    env = -(np.sqrt(x) - np.sqrt(y)) ** 2 / (4 * delta)
    f = np.exp(0.5 * z * (w + 1.0 / w - 2.0) + env) * cpow(w, -nu - 1.0)
    inner = ns.integrate(f) / TWO_PI_I
    val = (y / x) ** (nu / 2) / (4 * delta) * inner
    return float(_real(val, 1e-10))


# ----------------------------------------------------------------------------
# multi-time entries


NORMALIZATIONS = {"printed": -4.0, "probability": 1.0}


def kernel_mt_H_complex(i, j, x, y, p, form="wedge", grids=DEFAULT_GRIDS,
                        normalization="printed", delta_scale=4.0):
    """Multi-time H_ij on the grid x (rows) by y (columns).

    form="wedge":  kappa (y/x)^nu D_c(y, x) with c = delta_scale * (tau_j - tau_i),
                      s on the inversion of a wedge.
    form="loop":  kappa D_c(x, y) with c = 4 (tau_j - tau_i), s on a tangent loop.
    kappa = -4 reproduces the displayed prefactors, kappa = 1 the probabilistic
    normalization.  ``delta_scale=1`` is the literal shift of the wedge-form
    display, which does not match the rest of the construction.
    """
    kappa = NORMALIZATIONS[normalization]
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    d = p.delta(j, i)
    if form == "wedge":
        D = double_contour(y, x, p.nu, p.tau, delta_scale * d, grids, "inverted_wedge").T
        return kappa * (y[None, :] / x[:, None]) ** p.nu * D
    if form == "loop":
        return kappa * double_contour(x, y, p.nu, p.tau, 4.0 * d, grids, "loop")
    raise ValueError(form)


def kernel_mt_H(i, j, x, y, p, form="wedge", grids=DEFAULT_GRIDS, normalization="printed",
                delta_scale=4.0):
    """Real multi-time H_ij (see :func:`kernel_mt_H_complex`)."""
    M = kernel_mt_H_complex(i, j, x, y, p, form, grids, normalization, delta_scale)
    return _squeeze(_real(M), x, y)


def kernel_mt_P(i, j, x, y, p, normalization="printed"):
    """Transition part of the multi-time kernel; zero unless i < j.

    "printed" gives the displayed (y/x)^{nu/2} (1/Delta) e^{...} I_nu, i.e. 4 p;
    "probability" gives -p, so that H + P is the Eynard-Mehta kernel.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    X, Y = np.meshgrid(np.atleast_1d(x), np.atleast_1d(y), indexing="ij")
    if i >= j:
        out = np.zeros(X.shape)
    else:
        out = -NORMALIZATIONS[normalization] * transition_density(X, Y, p.delta(j, i), p.nu)
    return _squeeze(out, x, y)


# ----------------------------------------------------------------------------
# conventions ledger


@dataclass
class Conventions:
    """Measured proportionality constants between the kernel forms."""

    kappa_single: float
    kappa_single_spread: float
    kappa_transpose: float
    kappa_transpose_spread: float
    kappa_P: float
    values: dict = field(default_factory=dict)

    def lines(self):
        return [f"kappa_single = {self.kappa_single:.10g} (spread {self.kappa_single_spread:.2e})",
                f"kappa_transpose = {self.kappa_transpose:.10g} (spread {self.kappa_transpose_spread:.2e})",
                f"kappa_P = {self.kappa_P:.10g}"]


def _ratio_stats(r):
    r = np.asarray(r)
    m = np.mean(r)
    return float(m.real), float(np.max(np.abs(r - m)) / abs(m))


def measure_conventions(nu=0.5, tau=0.0, times=(0.25, 0.5), samples=10, seed=1,
                        grids=DEFAULT_GRIDS):
    """Measure the constants relating the kernel displays on random samples.

    kappa_single:    H^{sec3}_ii(x,y) / [(y/x)^nu K(y,x)]
    kappa_transpose: H^{sec3}_12(x,y) / [(y/x)^nu H^{app}_21(y,x)] with times reversed
    kappa_P:         displayed P_Delta / normalized density
    """
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.3, 2.0, samples)
    ys = rng.uniform(0.3, 2.0, samples)
    p = ProcessParams(nu=nu, tau=tau, times=tuple(times))
    prev = ProcessParams(nu=nu, tau=tau, times=tuple(sorted(-np.asarray(times))))
    n = len(times)
    r1, r2 = [], []
    for x, y in zip(xs, ys):
        h = kernel_mt_H_complex(0, 0, x, y, p, "wedge", grids)[0, 0]
        k = kernel_gb_single_complex(y, x, p, grids)[0, 0]
        r1.append(h / ((y / x) ** nu * k))
        h12 = kernel_mt_H_complex(0, 1, x, y, p, "wedge", grids)[0, 0]
        # time k in p corresponds to index n-1-k after reversal
        h21 = kernel_mt_H_complex(n - 2, n - 1, y, x, prev, "loop", grids)[0, 0]
        r2.append(h12 / ((y / x) ** nu * h21))
    k1, s1 = _ratio_stats(r1)
    k2, s2 = _ratio_stats(r2)
    d = p.delta(1, 0)
    pp = kernel_mt_P(0, 1, xs[0], ys[0], p, "printed")
    kP = float(pp / transition_density(xs[0], ys[0], d, nu))
    return Conventions(k1, s1, k2, s2, kP, {"xs": xs, "ys": ys})


# ----------------------------------------------------------------------------
# half-line quadrature for densities


def half_line_rule(zmax, nu_weight=0.0, order=24, panels=16):
    """Nodes/weights on [0, zmax]; the first panel carries the weight z^nu_weight.

    The weights on the first panel include z^nu_weight, so integrands must be
    supplied divided by it there: use ``divide`` (returned) as the factor.
    """
    br = np.linspace(0.0, zmax, panels + 1)
    x, w = gauss_legendre(order)
    zs, ws, div = [], [], []
    z0, w0 = gauss_jacobi_interval(order, 0.0, br[1], nu_weight)
    zs.append(z0)
    ws.append(w0)
    div.append(z0 ** nu_weight)
    for a, b in zip(br[1:-1], br[2:]):
        z = 0.5 * (a + b) + 0.5 * (b - a) * x
        zs.append(z)
        ws.append(0.5 * (b - a) * w)
        div.append(np.ones(order))
    return np.concatenate(zs), np.concatenate(ws), np.concatenate(div)


def density_support(x, delta, tol_exp=40.0):
    """Right end where exp(-(sqrt z - sqrt x)^2 / (4 delta)) < e^{-tol_exp}."""
    return (np.sqrt(x) + np.sqrt(4.0 * delta * tol_exp)) ** 2


def density_integral(x, delta, nu, func=None, order=24, panels=16):
    """int_0^inf p(x, z, delta) func(z) dz by truncated composite quadrature."""
    zmax = density_support(x, delta)
    z, w, div = half_line_rule(zmax, nu, order, panels)
    vals = transition_density(x, z, delta, nu) / div
    if func is not None:
        vals = vals * func(z)
    return np.tensordot(w, vals, axes=(0, 0))


def normalization_check(x, delta, nu):
    """|int p(x, y, delta) dy - 1|."""
    return abs(density_integral(x, delta, nu) - 1.0)


def chapman_kolmogorov_check(x, y, d1, d2, nu):
    """Relative residual of int p(x,z,d1) p(z,y,d2) dz = p(x,y,d1+d2)."""
    lhs = density_integral(x, d1, nu, lambda z: transition_density(z, y, d2, nu))
    rhs = transition_density(x, y, d1 + d2, nu)
    return abs(lhs - rhs) / abs(rhs)
