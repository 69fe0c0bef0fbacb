"""Global assembly of the symmetric Nitsche system and related gram matrices.

The bilinear form couples the interior Poisson stiffness with boundary
consistency (flux), symmetry and penalty terms on the Dirichlet boundary.
The hybrid variant drops the flux terms on elements whose penalty was
capped.  Neumann boundary pieces only contribute exact-flux data to the
right-hand side.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .geometry import BC, Classification
from .quadrature import tensor_rule, triangle_rule
from .stabilization import MODE_NITSCHE

SUPPORT_PIN_TOL = 1e-14


class AssemblyError(RuntimeError):
    pass


@dataclass(frozen=True)
class FormVariant:
    """Symmetric Nitsche when ``cap`` is None, hybrid Nitsche-penalty otherwise."""

    cap: float = None

    @classmethod
    def nitsche(cls):
        return cls(None)

    @classmethod
    def hybrid(cls, cap):
        if not cap > 0.0:
            raise ValueError("penalty cap must be positive")
        return cls(float(cap))

    @property
    def is_hybrid(self):
        return self.cap is not None


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    pinned: np.ndarray


class _Coo:
    def __init__(self, n):
        self.n = n
        self.rows = []
        self.cols = []
        self.data = []

    def add_block(self, idx, block):
        nd = len(idx)
        self.rows.append(np.repeat(idx, nd))
        self.cols.append(np.tile(idx, nd))
        self.data.append(block.ravel())

    def add_blocks(self, conn, blocks):
        ne, nd = conn.shape
        self.rows.append(np.repeat(conn, nd, axis=1).ravel())
        self.cols.append(np.tile(conn, (1, nd)).ravel())
        self.data.append(np.broadcast_to(blocks, (ne, nd, nd)).ravel())

    def matrix(self, pinned=None):
        rows = np.concatenate(self.rows) if self.rows else np.empty(0, dtype=int)
        cols = np.concatenate(self.cols) if self.cols else np.empty(0, dtype=int)
        data = np.concatenate(self.data) if self.data else np.empty(0)
        if pinned is not None and pinned.any():
            keep = ~(pinned[rows] | pinned[cols])
            rows, cols, data = rows[keep], cols[keep], data[keep]
            diag = np.where(pinned)[0]
            rows = np.concatenate([rows, diag])
            cols = np.concatenate([cols, diag])
            data = np.concatenate([data, np.ones(len(diag))])
        mat = sp.coo_matrix((data, (rows, cols)), shape=(self.n, self.n))
        return mat.tocsr()


def _reference_rule(element_type, degree):
    if element_type == "tri-p1":
        return triangle_rule(degree)
    return tensor_rule(degree)


def _inside_members(space, members):
    cls = space.active.classes[space.active.ids[members]]
    return members[cls == int(Classification.INSIDE)]


def _class_tabulation(space, members, degree):
    """Shared reference tabulation for one congruence class."""
    ref_pts, ref_w = _reference_rule(space.element_type, degree)
    a0 = members[0]
    vals, grads_ref = kernels.tabulate(space.element_type, ref_pts)
    grads_phys = grads_ref @ space.inv_jacobians[a0]
    w_phys = ref_w * abs(space.det_jacobians[a0])
    return ref_pts, vals, np.ascontiguousarray(grads_phys), w_phys


def _batch_points(space, members, ref_pts):
    jac = space.jacobians[members[0]]
    return space.origins[members][:, None, :] + ref_pts @ jac.T


def dof_support(space, rules):
    """Measure of each dof's support inside the domain."""
    support = np.zeros(space.n_dofs)
    for a, vol in rules.vol.items():
        np.add.at(support, space.conn[a], vol.weights.sum())
    return support


def assemble(space, domain, stab, sol, rules):
    """Assemble the linear system for the given penalty field.

    The penalty field decides per element whether the flux (consistency and
    symmetry) terms are present; capped elements keep only the penalty.
    """
    n = space.n_dofs
    coo = _Coo(n)
    b = np.zeros(n)

    # interior stiffness and source, batched over congruent inside elements
    for members in space.congruence_classes().values():
        inside = _inside_members(space, members)
        if len(inside) == 0:
            continue
        ref_pts, vals, grads, w = _class_tabulation(space, inside, rules.degree)
        k_loc = kernels.weighted_stiffness(grads, w)
        coo.add_blocks(space.conn[inside], k_loc)
        pts = _batch_points(space, inside, ref_pts)
        fv = sol.f(pts.reshape(-1, 2)).reshape(len(inside), -1)
        b_blocks = kernels.batch_moments(vals, np.ascontiguousarray(fv * w))
        np.add.at(b, space.conn[inside], b_blocks)

    for a, vol in rules.vol.items():
        if space.classification(a) != Classification.CUT:
            continue
        if len(vol.weights) == 0:
            continue
        vals, grads = space.eval_basis(a, vol.points)
        w = np.ascontiguousarray(vol.weights)
        idx = space.conn[a]
        coo.add_block(idx, kernels.weighted_stiffness(np.ascontiguousarray(grads), w))
        b[idx] += kernels.weighted_moments(
            np.ascontiguousarray(vals), w, np.ascontiguousarray(sol.f(vol.points))
        )

    # boundary terms
    for a, surf in rules.surf.items():
        if surf is None:
            continue
        idx = space.conn[a]
        if surf.has(BC.DIRICHLET):
            sub = surf.restrict(BC.DIRICHLET)
            if a not in stab.values:
                raise AssemblyError(
                    f"no stabilization value for Dirichlet element {a}"
                )
            lam = stab.values[a]
            vals, grads = space.eval_basis(a, sub.points)
            vals = np.ascontiguousarray(vals)
            w = np.ascontiguousarray(sub.weights)
            g = np.ascontiguousarray(sol.u(sub.points))
            coo.add_block(idx, lam * kernels.weighted_gram(vals, w))
            b[idx] += lam * kernels.weighted_moments(vals, w, g)
            if not stab.is_penalty(a):
                flux = kernels.normal_derivatives(
                    np.ascontiguousarray(grads), np.ascontiguousarray(sub.normals)
                )
                fmat = kernels.weighted_cross(flux, vals, w)
                coo.add_block(idx, -(fmat + fmat.T))
                b[idx] -= kernels.weighted_moments(flux, w, g)
        if surf.has(BC.NEUMANN):
            sub = surf.restrict(BC.NEUMANN)
            vals, _ = space.eval_basis(a, sub.points)
            data = np.einsum("qd,qd->q", sol.grad_u(sub.points), sub.normals)
            b[idx] += kernels.weighted_moments(
                np.ascontiguousarray(vals),
                np.ascontiguousarray(sub.weights),
                np.ascontiguousarray(data),
            )

    support = dof_support(space, rules)
    pinned = support < SUPPORT_PIN_TOL
    matrix = coo.matrix(pinned)
    b[pinned] = 0.0
    return LinearSystem(matrix, b, pinned)


def assemble_energy_gram(space, stab, rules):
    """Gram matrix of the mesh-dependent energy norm.

    Interior gradient part plus, on Dirichlet pieces, the penalty-weighted
    trace and (on Nitsche-mode elements only) the penalty-inverse-weighted
    normal flux.
    """
    n = space.n_dofs
    coo = _Coo(n)
    for members in space.congruence_classes().values():
        inside = _inside_members(space, members)
        if len(inside) == 0:
            continue
        _, _, grads, w = _class_tabulation(space, inside, rules.degree)
        coo.add_blocks(space.conn[inside], kernels.weighted_stiffness(grads, w))
    for a, vol in rules.vol.items():
        if space.classification(a) != Classification.CUT or len(vol.weights) == 0:
            continue
        _, grads = space.eval_basis(a, vol.points)
        coo.add_block(
            space.conn[a],
            kernels.weighted_stiffness(
                np.ascontiguousarray(grads), np.ascontiguousarray(vol.weights)
            ),
        )
    for a, surf in rules.surf.items():
        if surf is None or not surf.has(BC.DIRICHLET):
            continue
        sub = surf.restrict(BC.DIRICHLET)
        lam = stab.values[a]
        vals, grads = space.eval_basis(a, sub.points)
        vals = np.ascontiguousarray(vals)
        w = np.ascontiguousarray(sub.weights)
        idx = space.conn[a]
        coo.add_block(idx, lam * kernels.weighted_gram(vals, w))
        if not stab.is_penalty(a):
            flux = kernels.normal_derivatives(
                np.ascontiguousarray(grads), np.ascontiguousarray(sub.normals)
            )
            coo.add_block(idx, kernels.weighted_gram(flux, w) / lam)
    return coo.matrix()


def assemble_h1_gram(space, rules):
    """Gram of the full H1(Omega) inner product with the cut quadrature."""
    n = space.n_dofs
    coo = _Coo(n)
    for members in space.congruence_classes().values():
        inside = _inside_members(space, members)
        if len(inside) == 0:
            continue
        _, vals, grads, w = _class_tabulation(space, inside, rules.degree)
        block = kernels.weighted_stiffness(grads, w) + kernels.weighted_gram(
            np.ascontiguousarray(vals), w
        )
        coo.add_blocks(space.conn[inside], block)
    for a, vol in rules.vol.items():
        if space.classification(a) != Classification.CUT or len(vol.weights) == 0:
            continue
        vals, grads = space.eval_basis(a, vol.points)
        w = np.ascontiguousarray(vol.weights)
        block = kernels.weighted_stiffness(
            np.ascontiguousarray(grads), w
        ) + kernels.weighted_gram(np.ascontiguousarray(vals), w)
        coo.add_block(space.conn[a], block)
    return coo.matrix()
