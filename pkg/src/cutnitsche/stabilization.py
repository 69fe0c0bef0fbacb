"""Element-wise Nitsche penalty from a local generalized eigenvalue problem.

On every element carrying a Dirichlet boundary piece, the penalty equals
twice the largest eigenvalue of

    (boundary-flux gram) x = mu (interior-gradient gram) x

posed on the local basis functions with zero mean over the full element.
A hybrid mode caps the value and switches the element to a pure penalty
treatment (no flux terms).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from . import kernels
from .geometry import BC
from .quadrature import map_rect_rule, map_triangle_rule

MODE_NITSCHE = 0
MODE_PENALTY = 1

B_DEFLATION_FACTOR = 1e-12
A_RESIDUAL_FACTOR = 1e-12


class SliverDegenerate(RuntimeError):
    """The interior-gradient gram lost rank while the flux gram did not.

    The required penalty is effectively unbounded on this element; callers
    may retry with a capped (pure penalty) treatment.
    """

    def __init__(self, element):
        super().__init__(f"stabilization eigenproblem degenerate on element {element}")
        self.element = element


def _element_map(poly):
    poly = np.asarray(poly, dtype=float)
    if len(poly) == 4:
        lo, hi = poly.min(axis=0), poly.max(axis=0)
        origin = 0.5 * (lo + hi)
        jac = np.diag(0.5 * (hi - lo))
    else:
        origin = poly[0]
        jac = np.column_stack([poly[1] - poly[0], poly[2] - poly[0]])
    return origin, jac, np.linalg.inv(jac)


def element_basis(poly, element_type, pts):
    """Basis values and physical gradients on a standalone element."""
    origin, _, inv = _element_map(poly)
    ref = (np.atleast_2d(pts) - origin) @ inv.T
    vals, grads = kernels.tabulate(element_type, ref)
    return vals, grads @ inv


def full_element_rule(poly, degree):
    """Quadrature over the whole element (not just its domain part)."""
    poly = np.asarray(poly, dtype=float)
    if len(poly) == 4:
        return map_rect_rule(poly.min(axis=0), poly.max(axis=0), degree)
    return map_triangle_rule(poly, degree)


def element_zero_mean_basis(poly, element_type, order):
    """Coefficient basis of the local functions with zero mean over the element.

    Returns an (n_local, n_local - 1) matrix whose columns are orthonormal in
    the full-element mass inner product.
    """
    pts, w = full_element_rule(poly, 2 * order)
    vals, _ = element_basis(poly, element_type, pts)
    mass = kernels.weighted_gram(np.ascontiguousarray(vals), np.ascontiguousarray(w))
    moments = vals.T @ w
    # kernel of the mean functional
    _, _, vt = np.linalg.svd(moments[None, :])
    null = vt[1:].T
    gram = null.T @ mass @ null
    evals, evecs = eigh(gram)
    return null @ evecs @ np.diag(1.0 / np.sqrt(evals))


def element_stabilization(poly, element_type, order, vol_rule, surf_rule,
                          element_id=None):
    """Raw penalty for one element given its cut volume and Dirichlet
    surface quadrature."""
    vals_s, grads_s = element_basis(poly, element_type, surf_rule.points)
    flux = kernels.normal_derivatives(np.ascontiguousarray(grads_s),
                                      np.ascontiguousarray(surf_rule.normals))
    a_mat = kernels.weighted_gram(np.ascontiguousarray(flux),
                                  np.ascontiguousarray(surf_rule.weights))
    _, grads_v = element_basis(poly, element_type, vol_rule.points)
    b_mat = kernels.weighted_stiffness(np.ascontiguousarray(grads_v),
                                       np.ascontiguousarray(vol_rule.weights))
    basis = element_zero_mean_basis(poly, element_type, order)
    a_z = basis.T @ a_mat @ basis
    b_z = basis.T @ b_mat @ basis
    return 2.0 * _max_generalized_eig(a_z, b_z, element=element_id)


def zero_mean_local_basis(space, a):
    return element_zero_mean_basis(space.element_poly(a), space.element_type,
                                   space.order)


def stabilization_parameter(space, a, vol_rule, surf_rule):
    """Raw penalty value for one active element with a Dirichlet part."""
    sub = surf_rule.restrict(BC.DIRICHLET)
    if len(sub.weights) == 0:
        raise ValueError("element has no Dirichlet boundary part")
    return element_stabilization(space.element_poly(a), space.element_type,
                                 space.order, vol_rule, sub, element_id=a)


def _max_generalized_eig(a_z, b_z, element):
    """Largest eigenvalue of a_z x = mu b_z x with deflation of b_z's
    numerically null directions."""
    n = a_z.shape[0]
    b_evals, b_evecs = eigh(b_z)
    cutoff = B_DEFLATION_FACTOR * np.trace(b_z) / n
    keep = b_evals > cutoff
    if not keep.all():
        dropped = b_evecs[:, ~keep]
        residual = np.abs(dropped.T @ a_z @ dropped).max() if dropped.size else 0.0
        if residual > A_RESIDUAL_FACTOR * max(np.trace(a_z), 1e-300):
            raise SliverDegenerate(element)
    if not keep.any():
        raise SliverDegenerate(element)
    transform = b_evecs[:, keep] / np.sqrt(b_evals[keep])
    reduced = transform.T @ a_z @ transform
    return float(eigh(reduced, eigvals_only=True)[-1])


@dataclass
class StabilizationField:
    """Penalty value and treatment mode per active element index."""

    values: dict
    modes: dict
    cap: float

    @property
    def lambda_max(self):
        return max(self.values.values()) if self.values else 0.0

    def is_penalty(self, a):
        return self.modes.get(a, MODE_NITSCHE) == MODE_PENALTY


def apply_cap(raw_values, cap=None):
    """Cap raw penalties: values above the cap switch to pure-penalty mode.

    Raw values may be ``inf`` (degenerate elements); with a cap they become
    penalty elements, without one the caller should not have produced them.
    """
    if cap is not None and not cap > 0.0:
        raise ValueError("penalty cap must be positive")
    values, modes = {}, {}
    for a, raw in raw_values.items():
        if cap is not None and raw > cap:
            values[a] = cap
            modes[a] = MODE_PENALTY
        else:
            values[a] = raw
            modes[a] = MODE_NITSCHE
    return StabilizationField(values, modes, cap)


def compute_stabilization(space, rules, cap=None):
    """Penalty field over all elements with a Dirichlet boundary part.

    Without a cap, a degenerate element raises ``SliverDegenerate``; with a
    cap it is treated as an unbounded raw value and capped.
    """
    raw = {}
    for a, surf in rules.surf.items():
        if surf is None or not surf.has(BC.DIRICHLET):
            continue
        try:
            raw[a] = stabilization_parameter(space, a, rules.vol[a], surf)
        except SliverDegenerate:
            if cap is None:
                raise
            raw[a] = np.inf
    return apply_cap(raw, cap)
