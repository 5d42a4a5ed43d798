"""Nystrom discretization, determinants and resolvents.

Two kinds of operators appear.  Interval operators chi_I K act on functions
on a union of intervals (one union per time for the multi-time kernel).
Contour operators are integrable (IIKS) kernels f(z)^T g(w)/(z - w) on a
union of contour pieces.  Both end up as a dense matrix A with the
quadrature weights multiplied on the right, and det(I - A) is taken from an
LU factorization.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .contour import GeometryError
from .kernels import (DEFAULT_GRIDS, density_integral, kernel_mt_H_complex)
from .specfun import gauss_jacobi_interval, gauss_legendre


class SingularOperator(ArithmeticError):
    """I - A is numerically singular; carries the determinant value."""

    def __init__(self, det):
        super().__init__(f"I - A is singular (det = {det})")
        self.det = det


@dataclass
class DiscreteOperator:
    """Dense matrix A of a discretized operator.

    ``index`` holds one (piece, node, component) triple per row/column,
    ``weights`` the complex quadrature weight of each column, and ``meta``
    a snapshot of the parameters that produced it.
    """

    matrix: np.ndarray
    index: list
    weights: np.ndarray
    meta: dict = field(default_factory=dict)
    _lu: tuple = field(default=None, repr=False)

    def __len__(self):
        return self.matrix.shape[0]

    def lu(self):
        if self._lu is None:
            I = np.eye(len(self), dtype=self.matrix.dtype)
            self._lu = sla.lu_factor(I - self.matrix, check_finite=False)
        return self._lu


# ----------------------------------------------------------------------------
# interval operators


def interval_rule(a, b, m, nu_weight=None):
    """Nodes and effective weights on [a, b].

    If ``nu_weight`` is given and a == 0, Gauss-Jacobi with weight y^nu is
    used and the returned weights are W_j y_j^{-nu}, so that sum w_j h(y_j)
    integrates h whose only singularity is the factor y^nu.
    """
    if nu_weight is not None and a == 0 and nu_weight != 0:
        y, W = gauss_jacobi_interval(m, 0.0, b, nu_weight)
        return y, W * y ** (-nu_weight)
    x, w = gauss_legendre(m)
    return 0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w


def discretize_interval_operator(kernel, intervals, m=40, nu_weight=None, meta=None):
    """Nystrom matrix of chi_I K chi_I.

    ``intervals[c]`` is the list of (a, b) pairs for component c, and
    ``kernel(ci, cj, x, y)`` returns the matrix K_{ci,cj}(x_p, y_q).
    The indicator structure is realized by the node placement.
    """
    nodes, weights, index = [], [], []
    for c, ivs in enumerate(intervals):
        xs, ws = [], []
        for k, (a, b) in enumerate(ivs):
            x, w = interval_rule(a, b, m, nu_weight)
            xs.append(x)
            ws.append(w)
            index.extend((c, k, j) for j in range(m))
        nodes.append(np.concatenate(xs) if xs else np.zeros(0))
        weights.append(np.concatenate(ws) if ws else np.zeros(0))
    n = sum(len(x) for x in nodes)
    if n == 0:
        return DiscreteOperator(np.zeros((0, 0)), [], np.zeros(0), dict(meta or {}))
    rows = []
    for ci, xi in enumerate(nodes):
        blocks = []
        for cj, (xj, wj) in enumerate(zip(nodes, weights)):
            if len(xi) == 0 or len(xj) == 0:
                blocks.append(np.zeros((len(xi), len(xj))))
                continue
            blocks.append(np.asarray(kernel(ci, cj, xi, xj)) * wj[None, :])
        rows.append(np.hstack(blocks))
    A = np.vstack(rows)
    op = DiscreteOperator(A, index, np.concatenate(weights), dict(meta or {}))
    op.meta["nodes"] = nodes
    return op


# ----------------------------------------------------------------------------
# contour operators


def discretize_contour_operator(data):
    """Nystrom matrix of the integrable kernel f^T(z) g(w)/(z - w).

    Blocks living on the same contour piece share nodes.  Off-diagonal
    entries are num/(z_i - z_j); coincident nodes get the limit
    -f(z)^T g'(z) with g' from a four-point stencil along the arc.
    """
    blocks = data.blocks
    rows = []
    index = []
    for bi in blocks:
        row = []
        for bj in blocks:
            num = bi.f @ bj.g.T
            scale = np.max(np.abs(bi.f)) * np.max(np.abs(bj.g)) + 1e-300
            if bi.piece == bj.piece:
                if np.max(np.abs(num)) <= 1e-14 * scale:
                    row.append(np.zeros(num.shape, complex))
                    continue
                D = bi.z[:, None] - bj.z[None, :]
                same = np.abs(D) == 0
                D[same] = 1.0
                K = num / D
                K[same] = _diagonal_limit(bi, bj)[same]
            else:
                D = bi.z[:, None] - bj.z[None, :]
                if np.min(np.abs(D)) < 1e-12:
                    raise GeometryError("coincident nodes on different pieces")
                K = num / D
            row.append(K * bj.w[None, :])
        rows.append(np.hstack(row))
    for b in blocks:
        index.extend((b.piece, k, b.label) for k in range(len(b.z)))
    A = np.vstack(rows)
    W = np.concatenate([b.w for b in blocks])
    return DiscreteOperator(A, index, W, {"config": data.config})


def _diagonal_limit(bi, bj, h=1e-3):
    """-f_i(z)^T g_j'(z) at the shared nodes (matrix with that diagonal)."""
    ns = bj.nodes
    arcs = ns.contour.arcs
    out = np.zeros((len(bi.z), len(bj.z)), complex)
    for k in range(len(bj.z)):
        arc = arcs[ns.arc_index[k]]
        u = ns.u[k]
        pts = arc.point(u + h * np.array([-2, -1, 1, 2]))
        gv = bj.g_fn(pts)
        dg = (gv[0] - 8 * gv[1] + 8 * gv[2] - gv[3]) / (12 * h)
        dz = arc.deriv(np.array([u]))[0]
        out[k, k] = -bi.f[k] @ (dg / dz)
    return out


# ----------------------------------------------------------------------------
# determinants


def fredholm_det(A):
    """det(I - A) and log det(I - A) from an LU factorization with pivoting."""
    op = A if isinstance(A, DiscreteOperator) else DiscreteOperator(np.asarray(A), [], None)
    if len(op) == 0:
        return 1.0 + 0j, 0j
    lu, piv = op.lu()
    d = np.diag(lu).astype(complex)
    if np.any(d == 0):
        return 0j, -np.inf + 0j
    swaps = np.sum(piv != np.arange(len(piv)))
    logdet = np.sum(np.log(d)) + (1j * np.pi if swaps % 2 else 0.0)
    # fold the imaginary part back into (-pi, pi]
    logdet = complex(logdet.real, np.angle(np.exp(1j * logdet.imag)))
    return np.exp(logdet), logdet


def fredholm_series(A, order=3):
    """Truncated Fredholm series sum_k (-1)^k e_k(A) via Newton identities."""
    A = np.asarray(A)
    p = [np.trace(np.linalg.matrix_power(A, k)) for k in range(1, order + 1)]
    e = [1.0]
    for k in range(1, order + 1):
        e.append(sum((-1) ** (i - 1) * e[k - i] * p[i - 1] for i in range(1, k + 1)) / k)
    return sum((-1) ** k * e[k] for k in range(order + 1))


def carleman_det(A):
    """Regularized det_2(I - A) = prod (1 - l_k) e^{l_k} from eigenvalues."""
    lam = np.linalg.eigvals(np.asarray(A))
    return np.prod((1 - lam) * np.exp(lam))


def carleman_relation_check(A, blocks=None):
    """|det(I-A) - det_2(I-A) e^{-Tr A}|, plus traces of the listed diagonal blocks.

    ``blocks`` is an optional list of index arrays (e.g. the rows that carry
    the transition part); their traces are returned alongside.
    """
    M = A.matrix if isinstance(A, DiscreteOperator) else np.asarray(A)
    det, _ = fredholm_det(M)
    res = abs(det - carleman_det(M) * np.exp(-np.trace(M)))
    traces = [np.trace(M[np.ix_(b, b)]) for b in (blocks or [])]
    return res, traces


def resolvent_solve(A, rhs):
    """Solve (I - A) F = rhs reusing the LU factorization."""
    op = A if isinstance(A, DiscreteOperator) else DiscreteOperator(np.asarray(A), [], None)
    det, _ = fredholm_det(op)
    if abs(det) == 0:
        raise SingularOperator(det)
    return sla.lu_solve(op.lu(), rhs, check_finite=False)


# ----------------------------------------------------------------------------
# convolution identities


def convolution_check(i, j, k, x, y, p, grids=DEFAULT_GRIDS, normalization="printed"):
    """Relative residual of int_0^inf p(x, z, tau_j - tau_i) H_jk(z, y) dz = H_ik(x, y).

    H is the loop form of the multi-time kernel and p the normalized
    transition density.  For i > j the transition part vanishes and the
    residual is the size of the (zero) integral, i.e. 0.
    """
    if i == j:
        raise ValueError("convolution needs distinct times (Delta > 0)")
    if i > j:
        return 0.0
    d = p.delta(j, i)

    def h_jk(z):
        return kernel_mt_H_complex(j, k, z, y, p, "loop", grids, normalization)[:, 0]

    lhs = density_integral(x, d, p.nu, h_jk)
    rhs = kernel_mt_H_complex(i, k, x, y, p, "loop", grids, normalization)[0, 0]
    return float(abs(lhs - rhs) / abs(rhs))
