"""Implicit problem domains, element classification and exact solution data.

All domains are described by a level-set field ``phi`` that is negative
inside, positive outside and zero on the boundary.  The three straight-sided
domains are intersections of half-planes and everything about them is
computed exactly; the rounded-square domain is handled through sign sampling
consistent with the tessellation depth used for quadrature.
"""

from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np


class BC(IntEnum):
    DIRICHLET = 0
    NEUMANN = 1


class Classification(IntEnum):
    INSIDE = 0
    CUT = 1
    OUTSIDE = 2


class DomainKind(str, Enum):
    OVERLAP_SQUARE = "overlap-square"
    MIXED_SQUARE = "mixed-square"
    KINKED_SQUARE = "kinked-square"
    PNORM_BALL8 = "pnorm-ball8"


@dataclass(frozen=True)
class Facet:
    """Half-plane boundary piece: psi(x) = normal . x - offset, unit normal."""

    normal: tuple
    offset: float
    bc: BC


class ImplicitDomain:
    """Level-set domain with boundary-condition tags per boundary piece.

    ``facets`` is None for the curved domain, otherwise the domain equals
    the intersection of the half-planes {psi_i < 0} and
    phi = max_i psi_i.
    """

    def __init__(self, kind, epsilon, facets=None):
        if not epsilon > 0.0:
            raise ValueError("geometry offset epsilon must be positive")
        self.kind = DomainKind(kind)
        self.epsilon = float(epsilon)
        self.facets = tuple(facets) if facets is not None else None
        if self.facets is not None:
            self._facet_a = np.array([f.normal for f in self.facets]).T
            self._facet_b = np.array([f.offset for f in self.facets])

    @property
    def is_curved(self):
        return self.facets is None

    def facet_matrix(self):
        return self._facet_a.T, self._facet_b

    def facet_values(self, pts):
        """psi_i at each point, shape (npts, nfacets)."""
        return np.atleast_2d(pts) @ self._facet_a - self._facet_b

    def phi(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.is_curved:
            r = self._pnorm8(pts)
            out = r - (1.0 + self.epsilon)
        else:
            out = self.facet_values(pts).max(axis=1)
        return out if out.size > 1 else float(out[0])

    def grad_phi(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.is_curved:
            # d/dx (x^8 + y^8)^{1/8} = (x / r)^7, same for y
            r = self._pnorm8(pts)
            return (pts / r[:, None]) ** 7
        idx = np.argmax(self.facet_values(pts), axis=1)
        a, _ = self.facet_matrix()
        return a[idx]

    @staticmethod
    def _pnorm8(pts):
        m = np.maximum(np.abs(pts[:, 0]), np.abs(pts[:, 1]))
        m = np.maximum(m, 1e-300)
        s = (np.abs(pts[:, 0]) / m) ** 8 + (np.abs(pts[:, 1]) / m) ** 8
        return m * s ** 0.125

    def max_extent(self):
        """Largest |coordinate| reached by the closure of the domain."""
        if self.kind is DomainKind.KINKED_SQUARE:
            return 1.0 / (1.0 - self.epsilon)
        return 1.0 + self.epsilon

    def boundary_bc(self, point):
        """Tag a boundary point by its most exterior facet (ties: lowest index)."""
        if self.is_curved:
            return BC.DIRICHLET
        vals = self.facet_values(np.asarray(point, dtype=float))
        return self.facets[int(np.argmax(vals[0]))].bc


def overlap_square(epsilon):
    b = 1.0 + epsilon
    facets = [
        Facet((1.0, 0.0), b, BC.DIRICHLET),
        Facet((-1.0, 0.0), b, BC.DIRICHLET),
        Facet((0.0, 1.0), b, BC.DIRICHLET),
        Facet((0.0, -1.0), b, BC.DIRICHLET),
    ]
    return ImplicitDomain(DomainKind.OVERLAP_SQUARE, epsilon, facets)


def mixed_square(epsilon):
    b = 1.0 + epsilon
    facets = [
        Facet((1.0, 0.0), b, BC.NEUMANN),
        Facet((-1.0, 0.0), b, BC.NEUMANN),
        Facet((0.0, 1.0), b, BC.DIRICHLET),
        Facet((0.0, -1.0), b, BC.DIRICHLET),
    ]
    return ImplicitDomain(DomainKind.MIXED_SQUARE, epsilon, facets)


def kinked_square(epsilon):
    if epsilon >= 1.0:
        raise ValueError("kinked domain requires epsilon < 1")
    s = 1.0 / np.hypot(1.0, epsilon)
    facets = [
        Facet((s, -epsilon * s), s, BC.NEUMANN),
        Facet((-s, epsilon * s), s, BC.NEUMANN),
        Facet((-epsilon * s, s), s, BC.DIRICHLET),
        Facet((epsilon * s, -s), s, BC.DIRICHLET),
    ]
    return ImplicitDomain(DomainKind.KINKED_SQUARE, epsilon, facets)


def pnorm_ball8(epsilon):
    return ImplicitDomain(DomainKind.PNORM_BALL8, epsilon, None)


_FACTORIES = {
    DomainKind.OVERLAP_SQUARE: overlap_square,
    DomainKind.MIXED_SQUARE: mixed_square,
    DomainKind.KINKED_SQUARE: kinked_square,
    DomainKind.PNORM_BALL8: pnorm_ball8,
}


def make_domain(kind, epsilon):
    try:
        return _FACTORIES[DomainKind(kind)](epsilon)
    except ValueError as exc:
        raise ValueError(f"unknown domain kind {kind!r}") from exc


def evaluate_phi(domain, point):
    return domain.phi(point)


# ---------------------------------------------------------------------------
# Element classification.
# ---------------------------------------------------------------------------

def polygon_area(poly):
    s = 0.0
    n = len(poly)
    for i in range(n):
        j = i + 1 if i + 1 < n else 0
        s += poly[i, 0] * poly[j, 1] - poly[j, 0] * poly[i, 1]
    return 0.5 * s


def clip_polygon(poly, normal, offset):
    """Keep the part of a convex CCW polygon with normal.x - offset <= 0."""
    out = []
    n = len(poly)
    vals = poly @ np.asarray(normal) - offset
    for i in range(n):
        j = (i + 1) % n
        vi, vj = vals[i], vals[j]
        if vi <= 0.0:
            out.append(poly[i])
        if (vi < 0.0 < vj) or (vj < 0.0 < vi):
            t = vi / (vi - vj)
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out) if out else np.empty((0, 2))


def clip_to_domain(poly, domain):
    """Exact T (intersect) closure(Omega) for straight-sided domains."""
    part = np.asarray(poly, dtype=float)
    for f in domain.facets:
        if len(part) < 3:
            break
        part = clip_polygon(part, f.normal, f.offset)
    return part


def _classify_straight(poly, domain):
    vals = domain.facet_values(poly)
    if np.all(vals.max(axis=0) <= 0.0):
        return Classification.INSIDE
    area = abs(polygon_area(poly))
    inner = clip_to_domain(poly, domain)
    if len(inner) < 3 or abs(polygon_area(inner)) <= 1e-14 * area:
        return Classification.OUTSIDE
    return Classification.CUT


def _rect_bounds(poly):
    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    return lo, hi


def _is_axis_rect(poly):
    if len(poly) != 4:
        return False
    lo, hi = _rect_bounds(poly)
    ref = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    for shift in range(4):
        if np.array_equal(np.roll(poly, -shift, axis=0), ref):
            return True
    return False


def _classify_ball_rect(poly, domain):
    """Exact sign extremes of phi over an axis-aligned rectangle.

    |x|^8 + |y|^8 is separable, so its min/max over a box are attained at
    the coordinates clamped toward / away from zero.
    """
    lo, hi = _rect_bounds(poly)
    near = np.where((lo <= 0.0) & (hi >= 0.0), 0.0,
                    np.minimum(np.abs(lo), np.abs(hi)))
    far = np.maximum(np.abs(lo), np.abs(hi))
    r = 1.0 + domain.epsilon
    phi_min = (near[0] ** 8 + near[1] ** 8) ** 0.125 - r
    phi_max = (far[0] ** 8 + far[1] ** 8) ** 0.125 - r
    if phi_max <= 0.0:
        return Classification.INSIDE
    if phi_min >= 0.0:
        return Classification.OUTSIDE
    return Classification.CUT


def _classify_ball_sampled(poly, domain, depth):
    pts = [poly]
    current = [poly]
    for _ in range(depth):
        nxt = []
        for p in current:
            mids = 0.5 * (p + np.roll(p, -1, axis=0))
            c = p.mean(axis=0, keepdims=True)
            nxt.append(np.vstack([mids, c]))
        pts.extend(nxt)
        current = nxt
    sample = np.vstack(pts)
    vals = np.asarray(domain.phi(sample))
    if np.all(vals < 0.0):
        return Classification.INSIDE
    if np.all(vals > 0.0):
        return Classification.OUTSIDE
    return Classification.CUT


def classify_element(element_poly, domain, depth=2):
    """Classify a convex CCW element against the domain.

    Exact for the straight-sided domains.  For the curved domain the
    decision follows the same geometric resolution as the quadrature
    tessellation: exact min/max for axis-aligned rectangles, recursive
    sign sampling otherwise.
    """
    poly = np.asarray(element_poly, dtype=float)
    area = polygon_area(poly)
    if abs(area) <= 0.0:
        raise ValueError("degenerate element with zero area")
    if area < 0.0:
        raise ValueError("element vertices must be ordered counterclockwise")
    if not domain.is_curved:
        return _classify_straight(poly, domain)
    if _is_axis_rect(poly):
        return _classify_ball_rect(poly, domain)
    return _classify_ball_sampled(poly, domain, depth)


# ---------------------------------------------------------------------------
# Manufactured solution data.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact solution u with gradient and matching Poisson source f = -lap u."""

    u: callable
    grad_u: callable
    f: callable


def sine_solution():
    """u = sin(pi x) + sin(pi y), f = pi^2 u."""

    def u(p):
        p = np.atleast_2d(p)
        return np.sin(np.pi * p[:, 0]) + np.sin(np.pi * p[:, 1])

    def grad_u(p):
        p = np.atleast_2d(p)
        return np.pi * np.stack(
            [np.cos(np.pi * p[:, 0]), np.cos(np.pi * p[:, 1])], axis=1
        )

    def f(p):
        return np.pi ** 2 * u(p)

    return ManufacturedSolution(u, grad_u, f)


def linear_solution():
    """u = x + y, harmonic (f = 0); reproduced exactly by every basis."""

    def u(p):
        p = np.atleast_2d(p)
        return p[:, 0] + p[:, 1]

    def grad_u(p):
        p = np.atleast_2d(p)
        return np.ones((p.shape[0], 2))

    def f(p):
        p = np.atleast_2d(p)
        return np.zeros(p.shape[0])

    return ManufacturedSolution(u, grad_u, f)


def boundary_data(domain, sol, point, normal):
    """Boundary value at a surface quadrature point of the resolved geometry.

    Dirichlet pieces give the trace of the exact solution, Neumann pieces
    the exact flux through the supplied facet normal.
    """
    bc = domain.boundary_bc(point)
    point = np.asarray(point, dtype=float)
    if bc == BC.DIRICHLET:
        return bc, float(sol.u(point)[0])
    flux = float(sol.grad_u(point)[0] @ np.asarray(normal, dtype=float))
    return bc, flux
