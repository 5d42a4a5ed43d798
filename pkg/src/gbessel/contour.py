"""Contours, their discretization and geometry checks.

Three shapes are needed: the Hankel-type wedge ``gamma`` (two rays leaving a
vertex on the positive axis), the loop ``gamma_hat`` tangent to the origin
and images of these under z -> 1/z + shift.  Every arc is a smooth map from
a real parameter interval, and a contour is a list of arcs with an
orientation flag and a label.  Discretization is composite Gauss-Legendre on
panel breakpoints carried by the arcs.
"""

from dataclasses import dataclass, field

import numpy as np

from .specfun import gauss_legendre


class GeometryError(ValueError):
    """Contours violate a separation, encirclement or cut condition."""


# ----------------------------------------------------------------------------
# arcs


@dataclass(frozen=True)
class LineArc:
    """z(u) = origin + u * direction on the parameter breakpoints ``breaks``."""

    origin: complex
    direction: complex
    breaks: tuple

    def point(self, u):
        return self.origin + np.asarray(u) * self.direction

    def deriv(self, u):
        return np.full(np.shape(u), self.direction, dtype=complex)

    def describe(self):
        return (f"line origin={_c(self.origin)} dir={_c(self.direction)} "
                f"u=[{self.breaks[0]:.6g},{self.breaks[-1]:.6g}] panels={len(self.breaks) - 1}")


@dataclass(frozen=True)
class CircleArc:
    """z(u) = center + radius * exp(i (phase + sense * u))."""

    center: complex
    radius: float
    phase: float
    sense: int
    breaks: tuple

    def point(self, u):
        return self.center + self.radius * np.exp(1j * (self.phase + self.sense * np.asarray(u)))

    def deriv(self, u):
        return 1j * self.sense * (self.point(u) - self.center)

    def describe(self):
        return (f"circle center={_c(self.center)} r={self.radius:.6g} sense={self.sense:+d} "
                f"panels={len(self.breaks) - 1}")


@dataclass(frozen=True)
class InvertedArc:
    """Image of ``base`` under z -> 1/z + shift."""

    base: object
    shift: complex = 0.0

    @property
    def breaks(self):
        return self.base.breaks

    def point(self, u):
        return 1.0 / self.base.point(u) + self.shift

    def deriv(self, u):
        b = self.base.point(u)
        return -self.base.deriv(u) / b ** 2

    def describe(self):
        return f"inverted[{self.base.describe()}] shift={_c(self.shift)}"


def _c(z):
    z = complex(z)
    return f"{z.real:.12g}{z.imag:+.12g}j"


@dataclass(frozen=True)
class Contour:
    """A union of arcs.

    ``orientation`` is +1 (counterclockwise sense) or -1 (clockwise).
    ``closed`` marks loops; an open contour has both ends at infinity and is
    closed "at infinity" for winding computations.
    """

    arcs: tuple
    orientation: int
    label: str
    closed: bool
    info: dict = field(default_factory=dict, compare=False)

    def shifted(self, shift, label=None):
        """Translate by ``shift`` (implemented as a composition of inversions)."""
        arcs = tuple(_translate(a, shift) for a in self.arcs)
        info = dict(self.info)
        info["shift"] = info.get("shift", 0.0) + shift
        if "tangent_point" in info:
            info["tangent_point"] = info["tangent_point"] + shift
        return Contour(arcs, self.orientation, label or self.label, self.closed, info)

    def describe(self):
        head = (f"{self.label}: closed={int(self.closed)} orientation={self.orientation:+d} "
                + " ".join(f"{k}={_fmt(v)}" for k, v in sorted(self.info.items())))
        return [head] + [f"  arc{i}: {a.describe()}" for i, a in enumerate(self.arcs)]


def _fmt(v):
    if isinstance(v, complex):
        return _c(v)
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _translate(arc, shift):
    if isinstance(arc, LineArc):
        return LineArc(arc.origin + shift, arc.direction, arc.breaks)
    if isinstance(arc, CircleArc):
        return CircleArc(arc.center + shift, arc.radius, arc.phase, arc.sense, arc.breaks)
    if isinstance(arc, InvertedArc):
        return InvertedArc(arc.base, arc.shift + shift)
    raise TypeError(type(arc))


# ----------------------------------------------------------------------------
# constructors


def _geometric_breaks(length, h0, hmax):
    """Breakpoints 0 = r0 < r1 < ... = length with steps h0, 2h0, ... capped at hmax."""
    br = [0.0]
    h = h0
    while br[-1] < length:
        br.append(min(length, br[-1] + h))
        h = min(2.0 * h, hmax)
    return np.array(br)


def make_tangent_loop(c=0.5, orientation=-1, shift=0.0, parametrization="line",
                      V=10.0, panels=10, h_min=1e-8):
    """Circle of radius c through ``shift``, tangent there to the vertical line.

    ``parametrization="line"`` realizes the circle as the image 1/u + shift of
    the vertical segment Re u = 1/(2c), |Im u| <= V.  Uniform panels in u are
    geometrically graded toward the tangency point, and the truncated sliver
    has size ~1/V.  This is the production choice for integrands carrying
    e^{1/(2s^2)}, which is Gaussian in Im u.

    ``parametrization="angle"`` uses the angle from the tangency point with
    panels halving toward both ends down to ``h_min``; it covers the full
    circle and is meant for geometric checks.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    if parametrization == "line":
        R = 1.0 / (2.0 * c)
        # v increasing gives a clockwise circle; flip the direction for ccw
        direction = 1j if orientation == -1 else -1j
        base = LineArc(complex(R), direction, tuple(np.linspace(-V, V, panels + 1)))
        arcs = (InvertedArc(base, shift),)
        info = {"kind": "tangent_loop", "c": float(c), "V": float(V), "shift": complex(shift),
                "tangent_point": complex(shift)}
    elif parametrization == "angle":
        inner = [np.pi]
        h = np.pi / 4
        while h > h_min:
            inner.append(h)
            h *= 0.5
        inner.append(h_min)
        left = np.array(sorted(inner + [0.0]))
        mid = np.linspace(left[-1], 2 * np.pi - left[-1], 9)[1:-1]
        br = np.concatenate([left, mid, 2 * np.pi - left[::-1]])
        arcs = (CircleArc(shift + c, c, np.pi, orientation, tuple(br)),)
        info = {"kind": "tangent_loop_angle", "c": float(c), "shift": complex(shift),
                "tangent_point": complex(shift)}
    else:
        raise ValueError(parametrization)
    return Contour(arcs, orientation, "gamma_hat", True, info)


def make_hankel_wedge(x0=2.0, alpha=0.75 * np.pi, L=40.0, h0=0.5, hmax=4.0, scale=1.0):
    """Two rays t = x0 + r e^{-+i alpha}, from the lower ray (inward) to the upper.

    Panels start at h0*scale at the vertex, double, and are capped at
    hmax*scale.
    """
    if not (np.pi / 2 < alpha < np.pi):
        raise ValueError("wedge angle must lie strictly between pi/2 and pi")
    if x0 <= 0:
        raise ValueError("vertex must be on the positive axis")
    br = _geometric_breaks(L, h0 * scale, hmax * scale)
    lower = LineArc(complex(x0), -np.exp(-1j * alpha), tuple(-br[::-1]))
    upper = LineArc(complex(x0), np.exp(1j * alpha), tuple(br))
    info = {"kind": "wedge", "x0": float(x0), "alpha": float(alpha), "L": float(L),
            "h0": float(h0 * scale), "hmax": float(hmax * scale)}
    return Contour((lower, upper), 1, "gamma", False, info)


def invert_contour(C, shift=0.0, label=None):
    """Image of C under z -> 1/z, followed by an optional translation.

    The inversion keeps the local orientation, so a counterclockwise wedge
    around the origin becomes a clockwise loop tangent to the origin and the
    orientation flag flips.  Open contours (ends at infinity) become closed.
    """
    ns = discretize(C, order=8)
    if np.min(np.abs(ns.z)) < 1e-12:
        raise GeometryError("contour passes through 0")
    arcs = []
    for a in C.arcs:
        if isinstance(a, InvertedArc) and a.shift == 0:
            # 1/(1/b) = b exactly; keep the base arc
            arcs.append(_translate(a.base, shift) if shift else a.base)
        else:
            arcs.append(InvertedArc(a, shift))
    info = dict(C.info)
    info["inverted"] = not info.get("inverted", False)
    if shift:
        info["post_shift"] = complex(shift)
    tp = info.pop("tangent_point", None)
    if not C.closed:
        closed = True
        info["tangent_point"] = complex(shift)
    elif tp is not None and abs(tp) == 0:
        closed = False
    else:
        closed = True
        if tp is not None:
            info["tangent_point"] = 1.0 / tp + shift
    return Contour(tuple(arcs), -C.orientation, label or C.label, closed, info)


# ----------------------------------------------------------------------------
# discretization


@dataclass
class NodeSet:
    """Composite Gauss nodes of a contour.

    Nodes are stored panel by panel; ``panels[p] = (arc index, u0, u1)`` and
    nodes ``p*order ... (p+1)*order - 1`` belong to panel p.
    """

    z: np.ndarray
    w: np.ndarray
    u: np.ndarray
    arc_index: np.ndarray
    panels: list
    order: int
    contour: Contour

    def __len__(self):
        return len(self.z)

    def integrate(self, values):
        return np.tensordot(self.w, values, axes=(0, 0))


def discretize(C, order=24, refine=1):
    """Composite Gauss-Legendre rule; each base panel is split into ``refine`` parts."""
    if order < 2 or refine < 1:
        raise ValueError("need order >= 2 and refine >= 1")
    x, wx = gauss_legendre(order)
    zs, ws, us, ai, panels = [], [], [], [], []
    for k, arc in enumerate(C.arcs):
        br = np.asarray(arc.breaks, float)
        if refine > 1:
            br = np.concatenate([np.linspace(a, b, refine + 1)[:-1] for a, b in zip(br[:-1], br[1:])]
                                + [br[-1:]])
        for a, b in zip(br[:-1], br[1:]):
            u = 0.5 * (a + b) + 0.5 * (b - a) * x
            zs.append(arc.point(u))
            ws.append(arc.deriv(u) * 0.5 * (b - a) * wx)
            us.append(u)
            ai.append(np.full(order, k))
            panels.append((k, a, b))
    return NodeSet(np.concatenate(zs).astype(complex), np.concatenate(ws).astype(complex),
                   np.concatenate(us), np.concatenate(ai), panels, order, C)


def panel_nodes(C, panel, order, levels=0, focus=None):
    """Gauss nodes on one panel, optionally refined geometrically toward ``focus``.

    ``focus`` is a parameter value inside the panel; the panel is bisected
    ``levels`` times around it, which resolves a nearby Cauchy singularity.
    Returns (z, w, arc index, u).
    """
    k, a, b = panel
    arc = C.arcs[k]
    x, wx = gauss_legendre(order)
    pieces = [(a, b)]
    for _ in range(levels):
        new = []
        for lo, hi in pieces:
            if focus is not None and (lo - (hi - lo)) <= focus <= (hi + (hi - lo)):
                m = 0.5 * (lo + hi)
                new.extend([(lo, m), (m, hi)])
            else:
                new.append((lo, hi))
        pieces = new
    zs, ws, us = [], [], []
    for lo, hi in pieces:
        u = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        zs.append(arc.point(u))
        ws.append(arc.deriv(u) * 0.5 * (hi - lo) * wx)
        us.append(u)
    u = np.concatenate(us)
    return np.concatenate(zs), np.concatenate(ws), np.full(len(u), k), u


# ----------------------------------------------------------------------------
# geometry checks


def _end_points(ns):
    first = ns.contour.arcs[0]
    last = ns.contour.arcs[-1]
    return complex(first.point(first.breaks[0])), complex(last.point(last.breaks[-1]))


def winding_number(C, z0, order=24, refine=1, ns=None):
    """Winding number of C about z0, closing the two ends by a straight segment.

    For a truncated tangent loop the closing segment bridges the cut-off
    sliver; for a wedge it closes the contour far to the left.
    """
    if ns is None:
        ns = discretize(C, order=order, refine=refine)
    z0 = np.atleast_1d(np.asarray(z0, complex))
    I = np.array([np.sum(ns.w / (ns.z - p)) for p in z0])
    start, end = _end_points(ns)
    if abs(start - end) > 1e-14:
        I = I + np.log((start - z0) / (end - z0))
    return I / (2j * np.pi)


def wedge_tail_bound(rate, x0, alpha, L, power=0.0):
    """Analytic bound for int_L^inf |e^{rate t}| |t|^power dr along both rays."""
    decay = -rate * np.cos(alpha)
    if decay <= 0:
        return np.inf
    mag = np.exp(rate * (x0 + L * np.cos(alpha))) * max(L, 1.0) ** power
    return 2.0 * mag / decay


@dataclass
class GeometryReport:
    ok: bool
    separations: dict
    windings: dict
    failures: list

    def lines(self):
        out = [f"geometry ok={int(self.ok)}"]
        out += [f"  sep {a}|{b} = {d:.6g}" for (a, b), d in sorted(self.separations.items())]
        out += [f"  wind {a}@{p} = {v:.6g}" for (a, p), v in sorted(self.windings.items())]
        out += [f"  FAIL {f}" for f in self.failures]
        return out


def validate_geometry(contours, interior=None, enclose=(), delta_min=0.05, strict=False,
                      order=16):
    """Pairwise separations, required windings and encirclements.

    ``interior`` maps a contour label to points that must have winding
    number equal to the contour's orientation.  ``enclose`` lists
    (outer, inner) label pairs: every node of ``inner`` must be encircled
    by ``outer``.
    """
    interior = interior or {}
    grids = {C.label: discretize(C, order=order) for C in contours}
    by_label = {C.label: C for C in contours}
    seps, winds, fails = {}, {}, []
    labels = list(grids)
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            za, zb = grids[a].z, grids[b].z
            d = np.min(np.abs(za[:, None] - zb[None, :]))
            seps[(a, b)] = float(d)
            if d < delta_min:
                fails.append(f"separation {a}|{b} = {d:.3g} < {delta_min}")
    for lab, pts in interior.items():
        C = by_label[lab]
        for p in np.atleast_1d(pts):
            w = winding_number(C, p, ns=grids[lab])[0]
            winds[(lab, _c(p))] = float(w.real)
            if abs(w - C.orientation) > 1e-6:
                fails.append(f"{lab} winding about {_c(p)} is {w.real:.3g}, expected {C.orientation}")
    for outer, inner in enclose:
        C = by_label[outer]
        pts = grids[inner].z
        w = winding_number(C, pts, ns=grids[outer])
        bad = np.abs(w - C.orientation) > 1e-6
        winds[(outer, inner)] = float(np.min(np.abs(w)))
        if np.any(bad):
            fails.append(f"{outer} does not encircle {inner} ({int(bad.sum())} points)")
    rep = GeometryReport(not fails, seps, winds, fails)
    if strict and fails:
        raise GeometryError("; ".join(fails))
    return rep


def describe_geometry(contours):
    """Plain-text block describing each contour, for output headers."""
    out = []
    for C in contours:
        out.extend(C.describe())
    return out
