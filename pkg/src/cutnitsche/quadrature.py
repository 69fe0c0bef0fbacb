"""Quadrature on cut elements via recursive bisection tessellation.

Cut cells are bisected ``max_depth`` times; leaf sub-cells fully inside the
domain stay tensor-product cells, ambiguous leaves are resolved into
triangles.  For the straight-sided domains the leaf resolution clips against
the exact half-plane facets, so the resulting rules are geometrically exact
at every depth.  For the curved domain the leaves are resolved by marching
triangles with a secant/Newton crossing search on the edges.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .geometry import (
    BC,
    Classification,
    classify_element,
    clip_polygon,
    polygon_area,
)

AREA_DROP = 1e-14
LENGTH_DROP = 1e-14
CURVED_TAG = -1


# ---------------------------------------------------------------------------
# Reference rules.
# ---------------------------------------------------------------------------

def points_for_degree(degree):
    return (degree + 2) // 2


@lru_cache(maxsize=None)
def gauss_1d(degree):
    """Gauss-Legendre nodes/weights on [-1, 1], exact through ``degree``."""
    return np.polynomial.legendre.leggauss(points_for_degree(degree))


@lru_cache(maxsize=None)
def tensor_rule(degree):
    """Tensor Gauss rule on [-1, 1]^2."""
    x, w = gauss_1d(degree)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    ww = np.outer(w, w)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    return pts, ww.ravel()


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Conical-product rule on the unit triangle, positive weights.

    Gauss-Legendre in the collapsed direction, Gauss-Jacobi (weight 1-x)
    in the other; exact for total degree ``degree``.
    """
    n = points_for_degree(degree)
    xg, wg = np.polynomial.legendre.leggauss(n)
    xi = 0.5 * (xg + 1.0)
    wi = 0.5 * wg
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    eta = 0.5 * (xj + 1.0)
    wj = 0.25 * wj
    pts = np.empty((n * n, 2))
    w = np.empty(n * n)
    k = 0
    for j in range(n):
        for i in range(n):
            pts[k, 0] = xi[i] * (1.0 - eta[j])
            pts[k, 1] = eta[j]
            w[k] = wi[i] * wj[j]
            k += 1
    return pts, w


def map_rect_rule(lo, hi, degree):
    pts, w = tensor_rule(degree)
    half = 0.5 * (np.asarray(hi) - np.asarray(lo))
    center = 0.5 * (np.asarray(hi) + np.asarray(lo))
    return center + pts * half, w * (half[0] * half[1])


def map_triangle_rule(verts, degree):
    # reference weights sum to 1/2, so scaling by |det| gives the area
    pts, w = triangle_rule(degree)
    v0 = verts[0]
    jac = np.column_stack([verts[1] - v0, verts[2] - v0])
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    return v0 + pts @ jac.T, w * abs(det)


def map_segment_rule(p0, p1, degree):
    x, w = gauss_1d(degree)
    mid = 0.5 * (p0 + p1)
    half = 0.5 * (p1 - p0)
    length = np.hypot(*(p1 - p0))
    return mid + np.outer(x, half), w * (0.5 * length)


# ---------------------------------------------------------------------------
# Rules.
# ---------------------------------------------------------------------------

@dataclass
class VolumeRule:
    points: np.ndarray
    weights: np.ndarray

    @property
    def measure(self):
        return float(self.weights.sum())


@dataclass
class SurfaceRule:
    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    tags: np.ndarray  # BC value per point

    @property
    def measure(self):
        return float(self.weights.sum())

    def restrict(self, bc):
        keep = self.tags == int(bc)
        return SurfaceRule(
            self.points[keep], self.weights[keep], self.normals[keep], self.tags[keep]
        )

    def has(self, bc):
        return bool(np.any(self.tags == int(bc)))


@dataclass
class CutGeometry:
    """Tessellated interior of one cut element plus its boundary segments."""

    rects: list = field(default_factory=list)  # (lo, hi) pairs
    tris: list = field(default_factory=list)  # (3, 2) vertex arrays
    segments: list = field(default_factory=list)  # (p0, p1, facet_index)

    def interior_area(self):
        area = sum((hi[0] - lo[0]) * (hi[1] - lo[1]) for lo, hi in self.rects)
        area += sum(abs(polygon_area(t)) for t in self.tris)
        return area

    def boundary_length(self):
        return sum(np.hypot(*(p1 - p0)) for p0, p1, _ in self.segments)


def _rect_poly(lo, hi):
    return np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])


def _fan_triangulate(poly, min_area=0.0):
    tris = []
    for i in range(1, len(poly) - 1):
        tri = np.array([poly[0], poly[i], poly[i + 1]])
        if abs(polygon_area(tri)) > min_area:
            tris.append(tri)
    return tris


def _line_in_polygon(poly, normal, offset):
    """Segment of the line normal.x = offset inside a convex polygon, or None."""
    normal = np.asarray(normal)
    base = offset * normal
    direction = np.array([-normal[1], normal[0]])
    tmin, tmax = -np.inf, np.inf
    n = len(poly)
    for k in range(n):
        a = poly[k]
        b = poly[(k + 1) % n]
        edge = b - a
        out = np.array([edge[1], -edge[0]])  # outward for CCW polygons
        denom = out @ direction
        rhs = out @ (a - base)
        if abs(denom) < 1e-300:
            if out @ (base - a) > 0.0:
                return None
            continue
        t = rhs / denom
        if denom > 0.0:
            tmax = min(tmax, t)
        else:
            tmin = max(tmin, t)
        if tmin >= tmax:
            return None
    if not np.isfinite(tmin) or not np.isfinite(tmax):
        return None
    return base + tmin * direction, base + tmax * direction


def facet_segments(poly, domain, scale=None):
    """Exact boundary pieces of a straight-sided domain inside one element.

    Each piece is the part of one facet line lying inside the element and
    inside every other facet's half-plane; the piece keeps the index of the
    facet that generated it.
    """
    poly = np.asarray(poly, dtype=float)
    if scale is None:
        scale = np.sqrt(abs(polygon_area(poly)))
    vals = domain.facet_values(poly)
    vmin = vals.min(axis=0)
    vmax = vals.max(axis=0)
    segs = []
    for i, f in enumerate(domain.facets):
        if vmin[i] > 0.0 or vmax[i] < 0.0:
            continue
        hit = _line_in_polygon(poly, f.normal, f.offset)
        if hit is None:
            continue
        p0, p1 = hit
        for j, g in enumerate(domain.facets):
            if j == i:
                continue
            v0 = p0 @ np.asarray(g.normal) - g.offset
            v1 = p1 @ np.asarray(g.normal) - g.offset
            if v0 > 0.0 and v1 > 0.0:
                p0 = None
                break
            if v0 > 0.0 or v1 > 0.0:
                t = v0 / (v0 - v1)
                mid = p0 + t * (p1 - p0)
                if v0 > 0.0:
                    p0 = mid
                else:
                    p1 = mid
        if p0 is None:
            continue
        if np.hypot(*(p1 - p0)) > LENGTH_DROP * scale:
            segs.append((p0, p1, i))
    return segs


def _resolve_straight_leaf(poly, domain, geo, area_scale, len_scale):
    inner = poly
    for f in domain.facets:
        if len(inner) < 3:
            break
        inner = clip_polygon(inner, f.normal, f.offset)
    if len(inner) >= 3 and abs(polygon_area(inner)) > AREA_DROP * area_scale:
        geo.tris.extend(_fan_triangulate(inner, AREA_DROP * area_scale))
    geo.segments.extend(facet_segments(poly, domain, scale=len_scale))


def _edge_crossing(p0, p1, f0, f1, domain):
    t = f0 / (f0 - f1)
    if domain.is_curved:
        # one Newton correction keeps the geometric error well below the
        # tessellation error of the depth-2 scheme
        p = p0 + t * (p1 - p0)
        dphi = float(domain.grad_phi(p)[0] @ (p1 - p0))
        if abs(dphi) > 1e-300:
            t = t - float(domain.phi(p)) / dphi
            t = min(max(t, 0.0), 1.0)
    return p0 + t * (p1 - p0)


def _resolve_curved_tri(verts, domain, geo, area_scale, len_scale):
    phis = np.asarray(domain.phi(verts))
    neg = phis < 0.0
    if not neg.any():
        return
    if neg.all():
        if abs(polygon_area(verts)) > AREA_DROP * area_scale:
            geo.tris.append(verts)
        return
    order = [0, 1, 2]
    crossings = []
    inner_pts = []
    for k in order:
        k2 = (k + 1) % 3
        if neg[k]:
            inner_pts.append(verts[k])
        if neg[k] != neg[k2]:
            x = _edge_crossing(verts[k], verts[k2], phis[k], phis[k2], domain)
            crossings.append(x)
            inner_pts.append(x)
    if len(crossings) == 2:
        p0, p1 = crossings
        if np.hypot(*(p1 - p0)) > LENGTH_DROP * len_scale:
            geo.segments.append((p0, p1, CURVED_TAG))
    region = np.array(inner_pts)
    if len(region) >= 3 and abs(polygon_area(region)) > AREA_DROP * area_scale:
        if polygon_area(region) < 0.0:
            region = region[::-1]
        geo.tris.extend(_fan_triangulate(region, AREA_DROP * area_scale))


def _resolve_curved_leaf(poly, domain, geo, area_scale, len_scale):
    if len(poly) == 4:
        tris = [
            np.array([poly[0], poly[1], poly[2]]),
            np.array([poly[0], poly[2], poly[3]]),
        ]
    else:
        tris = [poly]
    for t in tris:
        _resolve_curved_tri(t, domain, geo, area_scale, len_scale)


def _split(poly):
    if len(poly) == 4:
        lo, hi = poly.min(axis=0), poly.max(axis=0)
        mx, my = 0.5 * (lo + hi)
        return [
            _rect_poly(lo, (mx, my)),
            _rect_poly((mx, lo[1]), (hi[0], my)),
            _rect_poly((mx, my), hi),
            _rect_poly((lo[0], my), (mx, hi[1])),
        ]
    m01 = 0.5 * (poly[0] + poly[1])
    m12 = 0.5 * (poly[1] + poly[2])
    m20 = 0.5 * (poly[2] + poly[0])
    return [
        np.array([poly[0], m01, m20]),
        np.array([m01, poly[1], m12]),
        np.array([m20, m12, poly[2]]),
        np.array([m01, m12, m20]),
    ]


def tessellate(element_poly, domain, max_depth=2):
    """Bisection tessellation of a cut element.

    Returns the interior sub-cells/simplices and the tagged boundary
    segments.  Raises if the element is not actually cut.
    """
    poly = np.asarray(element_poly, dtype=float)
    cls = classify_element(poly, domain, max_depth)
    if cls != Classification.CUT:
        raise ValueError(f"tessellate requires a cut element, got {cls.name}")
    geo = CutGeometry()
    area_scale = abs(polygon_area(poly))
    len_scale = np.sqrt(area_scale)
    _tessellate_into(poly, domain, max_depth, geo, area_scale, len_scale)
    return geo


def _tessellate_into(poly, domain, depth, geo, area_scale, len_scale):
    cls = classify_element(poly, domain, depth)
    if cls == Classification.OUTSIDE:
        return
    if cls == Classification.INSIDE:
        if len(poly) == 4:
            geo.rects.append((poly.min(axis=0), poly.max(axis=0)))
        else:
            geo.tris.append(poly)
        if not domain.is_curved:
            # a facet can lie exactly on the element's edge (fitted cuts)
            geo.segments.extend(facet_segments(poly, domain, scale=len_scale))
        return
    if depth > 0:
        for child in _split(poly):
            _tessellate_into(child, domain, depth - 1, geo, area_scale, len_scale)
        return
    if domain.is_curved:
        _resolve_curved_leaf(poly, domain, geo, area_scale, len_scale)
    else:
        _resolve_straight_leaf(poly, domain, geo, area_scale, len_scale)


def _outward_normal(p0, p1, facet_idx, domain):
    if facet_idx >= 0:
        return np.asarray(domain.facets[facet_idx].normal, dtype=float)
    d = p1 - p0
    n = np.array([d[1], -d[0]]) / np.hypot(*d)
    mid = 0.5 * (p0 + p1)
    if float(domain.grad_phi(mid)[0] @ n) < 0.0:
        n = -n
    return n


def rules_from_geometry(geo, domain, degree):
    """Volume and surface rules for one tessellated cut element."""
    pts, wts = [], []
    for lo, hi in geo.rects:
        p, w = map_rect_rule(lo, hi, degree)
        pts.append(p)
        wts.append(w)
    for tri in geo.tris:
        p, w = map_triangle_rule(tri, degree)
        pts.append(p)
        wts.append(w)
    if pts:
        vol = VolumeRule(np.vstack(pts), np.concatenate(wts))
    else:
        vol = VolumeRule(np.empty((0, 2)), np.empty(0))
    surf = surface_rule_from_segments(geo.segments, domain, degree)
    return vol, surf


def surface_rule_from_segments(segments, domain, degree):
    if not segments:
        return None
    pts, wts, nrm, tag = [], [], [], []
    for p0, p1, fidx in segments:
        p, w = map_segment_rule(np.asarray(p0), np.asarray(p1), degree)
        n = _outward_normal(np.asarray(p0), np.asarray(p1), fidx, domain)
        bc = domain.facets[fidx].bc if fidx >= 0 else BC.DIRICHLET
        pts.append(p)
        wts.append(w)
        nrm.append(np.tile(n, (len(w), 1)))
        tag.append(np.full(len(w), int(bc), dtype=np.int8))
    return SurfaceRule(
        np.vstack(pts), np.concatenate(wts), np.vstack(nrm), np.concatenate(tag)
    )


@dataclass
class ElementRules:
    """Volume and surface rules for every active element of a space."""

    vol: dict
    surf: dict
    degree: int
    depth: int


def tessellate_all(space, domain, depth=2):
    """Cut geometry for every cut element, keyed by active element index."""
    geos = {}
    for a in range(space.n_active):
        if space.classification(a) == Classification.CUT:
            geos[a] = tessellate(space.element_poly(a), domain, depth)
    return geos


def build_rules(space, domain, degree, depth=2, geos=None):
    """Quadrature rules over all active elements.

    Inside elements get plain full-element rules; for straight-sided domains
    they may still carry boundary pieces when a facet lies exactly on an
    element edge (fitted cuts), which are picked up here as well.
    """
    if geos is None:
        geos = tessellate_all(space, domain, depth)
    vol, surf = {}, {}
    for a in range(space.n_active):
        poly = space.element_poly(a)
        if space.classification(a) == Classification.INSIDE:
            if len(poly) == 4:
                p, w = map_rect_rule(poly.min(axis=0), poly.max(axis=0), degree)
            else:
                p, w = map_triangle_rule(poly, degree)
            vol[a] = VolumeRule(p, w)
            if domain.is_curved:
                surf[a] = None
            else:
                scale = np.sqrt(abs(polygon_area(poly)))
                segs = facet_segments(poly, domain, scale=scale)
                surf[a] = surface_rule_from_segments(segs, domain, degree)
        else:
            vol[a], surf[a] = rules_from_geometry(geos[a], domain, degree)
    return ElementRules(vol, surf, degree, depth)


def volume_rule(element_poly, domain, max_depth, degree):
    """Quadrature over element (intersect) domain.

    Inside elements get the plain rule on the whole element, cut elements
    the tessellation-based rule.
    """
    poly = np.asarray(element_poly, dtype=float)
    cls = classify_element(poly, domain, max_depth)
    if cls == Classification.OUTSIDE:
        return VolumeRule(np.empty((0, 2)), np.empty(0))
    if cls == Classification.INSIDE:
        if len(poly) == 4:
            p, w = map_rect_rule(poly.min(axis=0), poly.max(axis=0), degree)
        else:
            p, w = map_triangle_rule(poly, degree)
        return VolumeRule(p, w)
    vol, _ = rules_from_geometry(tessellate(poly, domain, max_depth), domain, degree)
    return vol


def surface_rule(element_poly, domain, max_depth, degree):
    """Quadrature with outward normals over element (intersect) boundary."""
    poly = np.asarray(element_poly, dtype=float)
    cls = classify_element(poly, domain, max_depth)
    if cls == Classification.OUTSIDE:
        return None
    if cls == Classification.INSIDE:
        if domain.is_curved:
            return None
        scale = np.sqrt(abs(polygon_area(poly)))
        segs = facet_segments(poly, domain, scale=scale)
        return surface_rule_from_segments(segs, domain, degree)
    _, surf = rules_from_geometry(tessellate(poly, domain, max_depth), domain, degree)
    return surf
