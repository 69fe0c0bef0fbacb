"""Executable stability checks: coercivity/continuity scans, energy-norm
best approximation and the energy-vs-H1 norm equivalence constants."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla
from scipy.linalg import eigh

from . import kernels
from .geometry import BC, Classification
from .assembly import _batch_points, _class_tabulation, _inside_members

NULL_REL_TOL = 1e-12


@dataclass
class EquivConstants:
    c_est: float
    C_est: float


def _restricted_pencil(gram):
    """Basis of the numerically nonnull range of a PSD gram, scaled so the
    gram becomes the identity there."""
    dense = gram.toarray() if hasattr(gram, "toarray") else np.asarray(gram)
    evals, evecs = eigh(dense)
    keep = evals > NULL_REL_TOL * max(evals[-1], 1e-300)
    return evecs[:, keep] / np.sqrt(evals[keep])


def coercivity_scan(system_matrix, energy_gram, n_samples=100, seed=0):
    """Smallest ratio of the bilinear form to the squared energy norm.

    Returns (sampled minimum, exact minimum eigenvalue); directions in the
    numerical nullspace of the energy gram are excluded.
    """
    basis = _restricted_pencil(energy_gram)
    a_dense = system_matrix.toarray() if hasattr(system_matrix, "toarray") else system_matrix
    reduced = basis.T @ a_dense @ basis
    reduced = 0.5 * (reduced + reduced.T)
    exact_min = float(eigh(reduced, eigvals_only=True)[0])
    rng = np.random.default_rng(seed)
    sample_min = np.inf
    for _ in range(n_samples):
        y = rng.standard_normal(basis.shape[1])
        sample_min = min(sample_min, float(y @ reduced @ y) / float(y @ y))
    return sample_min, exact_min


def continuity_scan(system_matrix, energy_gram, n_pairs=100, seed=0):
    """Largest ratio a(u, v) / (|||u||| |||v|||) over random pairs."""
    basis = _restricted_pencil(energy_gram)
    a_dense = system_matrix.toarray() if hasattr(system_matrix, "toarray") else system_matrix
    reduced = basis.T @ a_dense @ basis
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        y = rng.standard_normal(basis.shape[1])
        z = rng.standard_normal(basis.shape[1])
        ratio = abs(float(y @ reduced @ z)) / (np.linalg.norm(y) * np.linalg.norm(z))
        worst = max(worst, ratio)
    return worst


def energy_pairing(space, sol, rules, stab):
    """Energy inner product of the exact solution with every basis function."""
    r = np.zeros(space.n_dofs)
    for members in space.congruence_classes().values():
        inside = _inside_members(space, members)
        if len(inside) == 0:
            continue
        ref_pts, _, grads, w = _class_tabulation(space, inside, rules.degree)
        pts = _batch_points(space, inside, ref_pts)
        gu = sol.grad_u(pts.reshape(-1, 2)).reshape(len(inside), -1, 2)
        wdot = np.einsum("eqd,qid,q->ei", gu, grads, w)
        np.add.at(r, space.conn[inside], wdot)
    for a, vol in rules.vol.items():
        if space.classification(a) != Classification.CUT or len(vol.weights) == 0:
            continue
        _, grads = space.eval_basis(a, vol.points)
        gu = sol.grad_u(vol.points)
        r[space.conn[a]] += np.einsum("qd,qid,q->i", gu, grads, vol.weights)
    for a, surf in rules.surf.items():
        if surf is None or not surf.has(BC.DIRICHLET):
            continue
        sub = surf.restrict(BC.DIRICHLET)
        lam = stab.values[a]
        vals, grads = space.eval_basis(a, sub.points)
        u = sol.u(sub.points)
        idx = space.conn[a]
        r[idx] += lam * kernels.weighted_moments(
            np.ascontiguousarray(vals),
            np.ascontiguousarray(sub.weights),
            np.ascontiguousarray(u),
        )
        if not stab.is_penalty(a):
            flux = kernels.normal_derivatives(
                np.ascontiguousarray(grads), np.ascontiguousarray(sub.normals)
            )
            un = np.einsum("qd,qd->q", sol.grad_u(sub.points), sub.normals)
            r[idx] += kernels.weighted_moments(
                flux, np.ascontiguousarray(sub.weights), np.ascontiguousarray(un)
            ) / lam
    return r


def energy_projection(space, sol, rules, stab, energy_gram):
    """Best approximation of the exact solution in the energy norm.

    Solves the normal equations of the energy gram; if the gram is
    numerically singular the projection is restricted to its range and the
    nullspace component set to zero.
    """
    r = energy_pairing(space, sol, rules, stab)
    try:
        lu = spla.splu(energy_gram.tocsc())
        x = lu.solve(r)
        if np.all(np.isfinite(x)):
            res = energy_gram @ x - r
            if np.linalg.norm(res) <= 1e-8 * max(np.linalg.norm(r), 1e-300):
                return x
    except RuntimeError:
        pass
    basis = _restricted_pencil(energy_gram)
    return basis @ (basis.T @ r)


def equiv_constants(energy_gram, h1_gram):
    """Extremal values of the energy norm against the H1 norm over the space."""
    basis = _restricted_pencil(h1_gram)
    e_dense = energy_gram.toarray() if hasattr(energy_gram, "toarray") else energy_gram
    reduced = basis.T @ e_dense @ basis
    reduced = 0.5 * (reduced + reduced.T)
    evals = eigh(reduced, eigvals_only=True)
    low = max(evals[0], 0.0)
    return EquivConstants(float(np.sqrt(low)), float(np.sqrt(evals[-1])))
