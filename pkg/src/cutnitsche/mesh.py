"""Structured background meshes, active-mesh extraction and FE spaces.

The background grid spans [-1-h, 1+h]^2 with h = 1/K, so the grid lines
x, y = +-1 exist and any geometry offset 0 < eps < h produces sliver cuts in
the outermost element ring.  Triangular meshes split every cell into two
isosceles right triangles with the diagonal alternating in a checkerboard
pattern.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .geometry import BC, Classification, classify_element

TRI_P1 = "tri-p1"
QUAD_Q1 = "quad-q1"
QUAD_Q2 = "quad-q2"

LOCAL_DOFS = {TRI_P1: 3, QUAD_Q1: 4, QUAD_Q2: 9}
ORDER = {TRI_P1: 1, QUAD_Q1: 1, QUAD_Q2: 2}


@dataclass
class BackgroundMesh:
    element_type: str
    K: int
    h: float
    n_side: int  # cells per direction
    node_x: np.ndarray  # shared 1d node coordinates

    @property
    def n_cells(self):
        return self.n_side ** 2

    @property
    def n_elements(self):
        return 2 * self.n_cells if self.element_type == TRI_P1 else self.n_cells

    def cell_of(self, eid):
        cid = eid // 2 if self.element_type == TRI_P1 else eid
        return cid % self.n_side, cid // self.n_side

    def cell_corners(self, i, j):
        """Corner node indices (ix, iy) of cell (i, j), CCW from lower-left."""
        return ((i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1))

    def node_point(self, ix, iy):
        return np.array([self.node_x[ix], self.node_x[iy]])

    def tri_corner_nodes(self, eid):
        """Corner (ix, iy) pairs of triangle ``eid``, CCW."""
        i, j = self.cell_of(eid)
        c = self.cell_corners(i, j)
        local = eid % 2
        if (i + j) % 2 == 0:  # diagonal lower-left to upper-right
            return (c[0], c[1], c[2]) if local == 0 else (c[0], c[2], c[3])
        return (c[0], c[1], c[3]) if local == 0 else (c[1], c[2], c[3])

    def element_poly(self, eid):
        if self.element_type == TRI_P1:
            return np.array([self.node_point(*n) for n in self.tri_corner_nodes(eid)])
        i, j = self.cell_of(eid)
        return np.array([self.node_point(*n) for n in self.cell_corners(i, j)])


def build_background(element_type, K):
    if element_type not in LOCAL_DOFS:
        raise ValueError(f"unknown element type {element_type!r}")
    if K < 2:
        raise ValueError("K must be at least 2")
    n_side = 2 * K + 2
    # node i sits at (i - (K+1))/K: hits -1, 0, 1 exactly
    node_x = (np.arange(n_side + 1) - (K + 1)) / K
    return BackgroundMesh(element_type, K, 1.0 / K, n_side, node_x)


@dataclass
class ActiveMesh:
    ids: np.ndarray  # background element ids, ascending
    classes: np.ndarray  # classification of every background element

    @property
    def n_active(self):
        return len(self.ids)


def classify_all(mesh, domain, depth=2):
    """Classification array over all background elements.

    Vectorized for the straight-sided domains (facet values at the shared
    nodes) with an exact polygon-clip fallback for the few elements near
    domain corners; exact box bounds for the curved domain on quads.
    """
    n = mesh.n_elements
    classes = np.empty(n, dtype=np.int8)
    polys = np.stack([mesh.element_poly(e) for e in range(n)])

    if not domain.is_curved:
        vals = domain.facet_values(polys.reshape(-1, 2)).reshape(n, polys.shape[1], -1)
        vmax = vals.max(axis=1)
        vmin = vals.min(axis=1)
        inside = np.all(vmax <= 0.0, axis=1)
        outside = np.any(vmin >= 0.0, axis=1) & ~inside
        classes[inside] = int(Classification.INSIDE)
        classes[outside] = int(Classification.OUTSIDE)
        rest = np.where(~inside & ~outside)[0]
        for e in rest:
            classes[e] = int(classify_element(polys[e], domain, depth))
        return classes

    if mesh.element_type != TRI_P1:
        lo = polys.min(axis=1)
        hi = polys.max(axis=1)
        near = np.where((lo <= 0.0) & (hi >= 0.0), 0.0,
                        np.minimum(np.abs(lo), np.abs(hi)))
        far = np.maximum(np.abs(lo), np.abs(hi))
        r = 1.0 + domain.epsilon
        phi_min = (near[:, 0] ** 8 + near[:, 1] ** 8) ** 0.125 - r
        phi_max = (far[:, 0] ** 8 + far[:, 1] ** 8) ** 0.125 - r
        classes[:] = int(Classification.CUT)
        classes[phi_max <= 0.0] = int(Classification.INSIDE)
        classes[phi_min >= 0.0] = int(Classification.OUTSIDE)
        return classes

    for e in range(n):
        classes[e] = int(classify_element(polys[e], domain, depth))
    return classes


def extract_active(mesh, domain, depth=2):
    classes = classify_all(mesh, domain, depth)
    ids = np.where(classes != int(Classification.OUTSIDE))[0]
    if len(ids) == 0:
        raise ValueError("domain does not intersect the background mesh")
    return ActiveMesh(ids, classes)


# ---------------------------------------------------------------------------
# FE space on the active mesh.
# ---------------------------------------------------------------------------

@dataclass
class FeSpace:
    mesh: BackgroundMesh
    active: ActiveMesh
    conn: np.ndarray  # (n_active, n_local) compact global dof ids
    dof_coords: np.ndarray
    origins: np.ndarray  # affine map x = origin + J @ xi per active element
    jacobians: np.ndarray
    inv_jacobians: np.ndarray
    det_jacobians: np.ndarray
    _class_members: dict = field(default_factory=dict)

    @property
    def element_type(self):
        return self.mesh.element_type

    @property
    def order(self):
        return ORDER[self.mesh.element_type]

    @property
    def n_dofs(self):
        return len(self.dof_coords)

    @property
    def n_active(self):
        return self.active.n_active

    def element_poly(self, a):
        return self.mesh.element_poly(int(self.active.ids[a]))

    def classification(self, a):
        return Classification(int(self.active.classes[self.active.ids[a]]))

    def to_reference(self, a, pts):
        return (np.atleast_2d(pts) - self.origins[a]) @ self.inv_jacobians[a].T

    def eval_basis(self, a, pts):
        """Basis values and physical gradients at physical points."""
        ref = self.to_reference(a, pts)
        vals, grads = kernels.tabulate(self.element_type, ref)
        return vals, grads @ self.inv_jacobians[a]

    def congruence_classes(self):
        """Active element indices grouped by shared affine jacobian."""
        return self._class_members


def _global_dof_grid(mesh):
    if mesh.element_type == QUAD_Q2:
        m = 2 * mesh.n_side + 1
        x = np.empty(m)
        x[0::2] = mesh.node_x
        x[1::2] = 0.5 * (mesh.node_x[:-1] + mesh.node_x[1:])
        return m, x
    return mesh.n_side + 1, mesh.node_x


def _element_dof_indices(mesh, eid):
    if mesh.element_type == TRI_P1:
        return [(ix, iy) for ix, iy in mesh.tri_corner_nodes(eid)]
    i, j = mesh.cell_of(eid)
    if mesh.element_type == QUAD_Q1:
        return list(mesh.cell_corners(i, j))
    return [(2 * i + dx, 2 * j + dy) for dy in range(3) for dx in range(3)]


def build_space(mesh, active):
    m, grid_x = _global_dof_grid(mesh)
    n_local = LOCAL_DOFS[mesh.element_type]
    n_act = active.n_active
    full = np.empty((n_act, n_local), dtype=np.int64)
    for a, eid in enumerate(active.ids):
        for k, (ix, iy) in enumerate(_element_dof_indices(mesh, int(eid))):
            full[a, k] = iy * m + ix
    used, conn = np.unique(full, return_inverse=True)
    conn = conn.reshape(full.shape).astype(np.int64)
    dof_coords = np.column_stack([grid_x[used % m], grid_x[used // m]])

    origins = np.empty((n_act, 2))
    jac = np.empty((n_act, 2, 2))
    inv = np.empty((n_act, 2, 2))
    det = np.empty(n_act)
    class_members = {}
    for a, eid in enumerate(active.ids):
        poly = mesh.element_poly(int(eid))
        if mesh.element_type == TRI_P1:
            origins[a] = poly[0]
            jac[a] = np.column_stack([poly[1] - poly[0], poly[2] - poly[0]])
            key = ("tri", (int(eid) % 2), (sum(mesh.cell_of(int(eid))) % 2))
        else:
            lo, hi = poly.min(axis=0), poly.max(axis=0)
            origins[a] = 0.5 * (lo + hi)
            jac[a] = np.diag(0.5 * (hi - lo))
            key = ("quad",)
        det[a] = jac[a, 0, 0] * jac[a, 1, 1] - jac[a, 0, 1] * jac[a, 1, 0]
        inv[a] = np.linalg.inv(jac[a])
        class_members.setdefault(key, []).append(a)
    class_members = {k: np.array(v, dtype=np.int64) for k, v in class_members.items()}
    return FeSpace(mesh, active, conn, dof_coords, origins, jac, inv, det,
                   class_members)


def shape_eval(element_type, ref_point):
    """Shape values and reference gradients at one reference point."""
    vals, grads = kernels.tabulate(element_type, np.atleast_2d(ref_point))
    return vals[0], grads[0]


def boundary_dof_counts(space, surf_rules, trace_tol_factor=1e-12):
    """Count boundary-coupled dofs N and independent trace constraints M.

    N counts dofs whose basis has a nonzero trace on the Dirichlet boundary;
    M is the rank of the Dirichlet-boundary mass matrix of those dofs, with
    eigenvalues below 1e-10 of the largest counted as zero.
    """
    h = space.mesh.h
    tol = trace_tol_factor * h
    n = space.n_dofs
    max_val = np.zeros(n)
    contrib = []
    for a, surf in surf_rules.items():
        if surf is None or not surf.has(BC.DIRICHLET):
            continue
        sub = surf.restrict(BC.DIRICHLET)
        vals, _ = space.eval_basis(a, sub.points)
        idx = space.conn[a]
        np.maximum.at(max_val, idx, np.abs(vals).max(axis=0))
        contrib.append((idx, vals, sub.weights))
    supported = np.where(max_val > tol)[0]
    n_supported = len(supported)
    if n_supported == 0:
        return 0, 0
    pos = -np.ones(n, dtype=np.int64)
    pos[supported] = np.arange(n_supported)
    gram = np.zeros((n_supported, n_supported))
    for idx, vals, w in contrib:
        local = pos[idx]
        keep = local >= 0
        sub_vals = vals[:, keep]
        block = kernels.weighted_gram(np.ascontiguousarray(sub_vals),
                                      np.ascontiguousarray(w))
        ii = local[keep]
        gram[np.ix_(ii, ii)] += block
    eigs = np.linalg.eigvalsh(gram)
    rank = int(np.sum(eigs > 1e-10 * eigs[-1]))
    return rank, n_supported
