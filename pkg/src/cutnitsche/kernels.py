"""Hot numeric kernels: basis tabulation and weighted quadrature accumulation.

Each kernel exists twice: a loop form compiled with numba's ``@njit`` and a
vectorized pure-numpy form.  The active implementation is chosen at import
time; set ``CUTNITSCHE_NUMBA=0`` to force the numpy path (the fallback is
also used automatically when numba is not importable).
"""

import os

import numpy as np

_flag = os.environ.get("CUTNITSCHE_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _flag not in ("0", "false", "off")

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


NUMBA_ENABLED = NUMBA_REQUESTED and NUMBA_AVAILABLE


# ---------------------------------------------------------------------------
# Shape function tabulation on reference elements.
#
# Local dof orderings:
#   tri  (unit triangle, vertices (0,0),(1,0),(0,1)): vertex order as listed
#   quad ([-1,1]^2): Q1 corners CCW (-1,-1),(1,-1),(1,1),(-1,1)
#                    Q2 3x3 lattice, eta outer / xi inner
# ---------------------------------------------------------------------------

def _tabulate_p1_numpy(pts):
    x = pts[:, 0]
    y = pts[:, 1]
    n = pts.shape[0]
    vals = np.empty((n, 3))
    vals[:, 0] = 1.0 - x - y
    vals[:, 1] = x
    vals[:, 2] = y
    grads = np.empty((n, 3, 2))
    grads[:, 0, 0] = -1.0
    grads[:, 0, 1] = -1.0
    grads[:, 1, 0] = 1.0
    grads[:, 1, 1] = 0.0
    grads[:, 2, 0] = 0.0
    grads[:, 2, 1] = 1.0
    return vals, grads


def _tabulate_p1_loops(pts):
    n = pts.shape[0]
    vals = np.empty((n, 3))
    grads = np.empty((n, 3, 2))
    for q in range(n):
        x = pts[q, 0]
        y = pts[q, 1]
        vals[q, 0] = 1.0 - x - y
        vals[q, 1] = x
        vals[q, 2] = y
        grads[q, 0, 0] = -1.0
        grads[q, 0, 1] = -1.0
        grads[q, 1, 0] = 1.0
        grads[q, 1, 1] = 0.0
        grads[q, 2, 0] = 0.0
        grads[q, 2, 1] = 1.0
    return vals, grads


def _tabulate_q1_numpy(pts):
    xi = pts[:, 0]
    eta = pts[:, 1]
    n = pts.shape[0]
    sx = np.stack([0.5 * (1.0 - xi), 0.5 * (1.0 + xi)], axis=1)
    sy = np.stack([0.5 * (1.0 - eta), 0.5 * (1.0 + eta)], axis=1)
    dx = np.array([-0.5, 0.5])
    corners = ((0, 0), (1, 0), (1, 1), (0, 1))
    vals = np.empty((n, 4))
    grads = np.empty((n, 4, 2))
    for i, (cx, cy) in enumerate(corners):
        vals[:, i] = sx[:, cx] * sy[:, cy]
        grads[:, i, 0] = dx[cx] * sy[:, cy]
        grads[:, i, 1] = sx[:, cx] * dx[cy]
    return vals, grads


def _tabulate_q1_loops(pts):
    n = pts.shape[0]
    vals = np.empty((n, 4))
    grads = np.empty((n, 4, 2))
    for q in range(n):
        xi = pts[q, 0]
        eta = pts[q, 1]
        xm = 0.5 * (1.0 - xi)
        xp = 0.5 * (1.0 + xi)
        ym = 0.5 * (1.0 - eta)
        yp = 0.5 * (1.0 + eta)
        vals[q, 0] = xm * ym
        vals[q, 1] = xp * ym
        vals[q, 2] = xp * yp
        vals[q, 3] = xm * yp
        grads[q, 0, 0] = -0.5 * ym
        grads[q, 0, 1] = -0.5 * xm
        grads[q, 1, 0] = 0.5 * ym
        grads[q, 1, 1] = -0.5 * xp
        grads[q, 2, 0] = 0.5 * yp
        grads[q, 2, 1] = 0.5 * xp
        grads[q, 3, 0] = -0.5 * yp
        grads[q, 3, 1] = 0.5 * xm
    return vals, grads


def _lag2(t):
    """1D quadratic Lagrange basis at nodes -1, 0, 1 and its derivative."""
    v0 = 0.5 * t * (t - 1.0)
    v1 = 1.0 - t * t
    v2 = 0.5 * t * (t + 1.0)
    d0 = t - 0.5
    d1 = -2.0 * t
    d2 = t + 0.5
    return (v0, v1, v2), (d0, d1, d2)


def _tabulate_q2_numpy(pts):
    xi = pts[:, 0]
    eta = pts[:, 1]
    n = pts.shape[0]
    (vx, dvx) = (np.stack(a, axis=1) for a in _lag2(xi))
    (vy, dvy) = (np.stack(a, axis=1) for a in _lag2(eta))
    vals = np.empty((n, 9))
    grads = np.empty((n, 9, 2))
    for iy in range(3):
        for ix in range(3):
            k = 3 * iy + ix
            vals[:, k] = vx[:, ix] * vy[:, iy]
            grads[:, k, 0] = dvx[:, ix] * vy[:, iy]
            grads[:, k, 1] = vx[:, ix] * dvy[:, iy]
    return vals, grads


def _tabulate_q2_loops(pts):
    n = pts.shape[0]
    vals = np.empty((n, 9))
    grads = np.empty((n, 9, 2))
    vx = np.empty(3)
    vy = np.empty(3)
    dx = np.empty(3)
    dy = np.empty(3)
    for q in range(n):
        xi = pts[q, 0]
        eta = pts[q, 1]
        vx[0] = 0.5 * xi * (xi - 1.0)
        vx[1] = 1.0 - xi * xi
        vx[2] = 0.5 * xi * (xi + 1.0)
        dx[0] = xi - 0.5
        dx[1] = -2.0 * xi
        dx[2] = xi + 0.5
        vy[0] = 0.5 * eta * (eta - 1.0)
        vy[1] = 1.0 - eta * eta
        vy[2] = 0.5 * eta * (eta + 1.0)
        dy[0] = eta - 0.5
        dy[1] = -2.0 * eta
        dy[2] = eta + 0.5
        for iy in range(3):
            for ix in range(3):
                k = 3 * iy + ix
                vals[q, k] = vx[ix] * vy[iy]
                grads[q, k, 0] = dx[ix] * vy[iy]
                grads[q, k, 1] = vx[ix] * dy[iy]
    return vals, grads


# ---------------------------------------------------------------------------
# Weighted accumulation over quadrature points.
# ---------------------------------------------------------------------------

def _weighted_gram_numpy(vals, w):
    return np.einsum("q,qi,qj->ij", w, vals, vals, optimize=True)


def _weighted_gram_loops(vals, w):
    nq, nd = vals.shape
    out = np.zeros((nd, nd))
    for q in range(nq):
        wq = w[q]
        for i in range(nd):
            vi = wq * vals[q, i]
            for j in range(nd):
                out[i, j] += vi * vals[q, j]
    return out


def _weighted_cross_numpy(a, b, w):
    return np.einsum("q,qi,qj->ij", w, a, b, optimize=True)


def _weighted_cross_loops(a, b, w):
    nq, na = a.shape
    nb = b.shape[1]
    out = np.zeros((na, nb))
    for q in range(nq):
        wq = w[q]
        for i in range(na):
            ai = wq * a[q, i]
            for j in range(nb):
                out[i, j] += ai * b[q, j]
    return out


def _weighted_stiffness_numpy(grads, w):
    return np.einsum("q,qid,qjd->ij", w, grads, grads, optimize=True)


def _weighted_stiffness_loops(grads, w):
    nq, nd, _ = grads.shape
    out = np.zeros((nd, nd))
    for q in range(nq):
        wq = w[q]
        for i in range(nd):
            gx = grads[q, i, 0]
            gy = grads[q, i, 1]
            for j in range(nd):
                out[i, j] += wq * (gx * grads[q, j, 0] + gy * grads[q, j, 1])
    return out


def _normal_derivatives_numpy(grads, normals):
    return np.einsum("qid,qd->qi", grads, normals, optimize=True)


def _normal_derivatives_loops(grads, normals):
    nq, nd, _ = grads.shape
    out = np.empty((nq, nd))
    for q in range(nq):
        nx = normals[q, 0]
        ny = normals[q, 1]
        for i in range(nd):
            out[q, i] = grads[q, i, 0] * nx + grads[q, i, 1] * ny
    return out


def _weighted_moments_numpy(vals, w, f):
    return vals.T @ (w * f)


def _weighted_moments_loops(vals, w, f):
    nq, nd = vals.shape
    out = np.zeros(nd)
    for q in range(nq):
        wf = w[q] * f[q]
        for i in range(nd):
            out[i] += wf * vals[q, i]
    return out


# Batched forms over many congruent elements sharing one reference rule.

def _batch_moments_numpy(vals, wf):
    return wf @ vals


def _batch_moments_loops(vals, wf):
    ne, nq = wf.shape
    nd = vals.shape[1]
    out = np.zeros((ne, nd))
    for e in range(ne):
        for q in range(nq):
            c = wf[e, q]
            for i in range(nd):
                out[e, i] += c * vals[q, i]
    return out


def _batch_field_numpy(vals, coeffs):
    return coeffs @ vals.T


def _batch_field_loops(vals, coeffs):
    ne, nd = coeffs.shape
    nq = vals.shape[0]
    out = np.zeros((ne, nq))
    for e in range(ne):
        for q in range(nq):
            acc = 0.0
            for i in range(nd):
                acc += coeffs[e, i] * vals[q, i]
            out[e, q] = acc
    return out


def _batch_gradient_numpy(grads, coeffs):
    return np.einsum("ei,qid->eqd", coeffs, grads, optimize=True)


def _batch_gradient_loops(grads, coeffs):
    ne, nd = coeffs.shape
    nq = grads.shape[0]
    out = np.zeros((ne, nq, 2))
    for e in range(ne):
        for q in range(nq):
            ax = 0.0
            ay = 0.0
            for i in range(nd):
                ax += coeffs[e, i] * grads[q, i, 0]
                ay += coeffs[e, i] * grads[q, i, 1]
            out[e, q, 0] = ax
            out[e, q, 1] = ay
    return out


_LOOP_IMPLS = {
    "tabulate_p1": _tabulate_p1_loops,
    "tabulate_q1": _tabulate_q1_loops,
    "tabulate_q2": _tabulate_q2_loops,
    "weighted_gram": _weighted_gram_loops,
    "weighted_cross": _weighted_cross_loops,
    "weighted_stiffness": _weighted_stiffness_loops,
    "normal_derivatives": _normal_derivatives_loops,
    "weighted_moments": _weighted_moments_loops,
    "batch_moments": _batch_moments_loops,
    "batch_field": _batch_field_loops,
    "batch_gradient": _batch_gradient_loops,
}

_NUMPY_IMPLS = {
    "tabulate_p1": _tabulate_p1_numpy,
    "tabulate_q1": _tabulate_q1_numpy,
    "tabulate_q2": _tabulate_q2_numpy,
    "weighted_gram": _weighted_gram_numpy,
    "weighted_cross": _weighted_cross_numpy,
    "weighted_stiffness": _weighted_stiffness_numpy,
    "normal_derivatives": _normal_derivatives_numpy,
    "weighted_moments": _weighted_moments_numpy,
    "batch_moments": _batch_moments_numpy,
    "batch_field": _batch_field_numpy,
    "batch_gradient": _batch_gradient_numpy,
}


# the batch_* kernels are matmul-shaped and run faster through BLAS even
# when numba is available (see benchmarks/bench_kernels.py); the small
# per-element kernels win big under njit
_BLAS_BOUND = {"batch_moments", "batch_field", "batch_gradient"}


def numba_impls():
    """Compile and return the njit variants (used by the benchmark)."""
    return {name: njit(cache=True)(fn) for name, fn in _LOOP_IMPLS.items()}


def numpy_impls():
    return dict(_NUMPY_IMPLS)


if NUMBA_ENABLED:
    _ACTIVE = {
        name: (_NUMPY_IMPLS[name] if name in _BLAS_BOUND
               else njit(cache=True)(fn))
        for name, fn in _LOOP_IMPLS.items()
    }
else:
    _ACTIVE = _NUMPY_IMPLS

tabulate_p1 = _ACTIVE["tabulate_p1"]
tabulate_q1 = _ACTIVE["tabulate_q1"]
tabulate_q2 = _ACTIVE["tabulate_q2"]
weighted_gram = _ACTIVE["weighted_gram"]
weighted_cross = _ACTIVE["weighted_cross"]
weighted_stiffness = _ACTIVE["weighted_stiffness"]
normal_derivatives = _ACTIVE["normal_derivatives"]
weighted_moments = _ACTIVE["weighted_moments"]
batch_moments = _ACTIVE["batch_moments"]
batch_field = _ACTIVE["batch_field"]
batch_gradient = _ACTIVE["batch_gradient"]

_TABULATORS = {
    "tri-p1": tabulate_p1,
    "quad-q1": tabulate_q1,
    "quad-q2": tabulate_q2,
}


def tabulate(element_type, pts):
    """Shape values and reference gradients for all local dofs at ``pts``."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    return _TABULATORS[element_type](pts)
