import numpy as np
import pytest
import scipy.sparse as sp

from cutnitsche.assembly import (
    AssemblyError,
    FormVariant,
    assemble,
    assemble_energy_gram,
    assemble_h1_gram,
)
from cutnitsche.geometry import BC, linear_solution, sine_solution
from cutnitsche.solver import solve
from cutnitsche.stabilization import StabilizationField, apply_cap

from .conftest import assembled, energy_gram, pipeline


def test_linear_solution_reproduced_exactly():
    K = 8
    p, system = assembled("overlap-square", "quad-q1", K, (1.0 / K) / 3.0,
                          sol=linear_solution())
    coeffs = solve(system)
    exact = p.space.dof_coords.sum(axis=1)
    assert np.abs(coeffs - exact).max() < 1e-10


def test_matrix_symmetry():
    _, system = assembled("overlap-square", "quad-q1", 8, 2.0 ** -6)
    diff = sp.csr_matrix(system.matrix - system.matrix.T)
    scale = np.abs(system.matrix.data).max()
    assert np.abs(diff.data).max() if diff.nnz else 0.0 <= 1e-12 * scale


def test_huge_cap_hybrid_equals_symmetric():
    p = pipeline("overlap-square", "quad-q1", 8, 2.0 ** -6)
    raw = dict(p.stab.values)
    huge = apply_cap(raw, cap=1e30)
    sol = sine_solution()
    sym = assemble(p.space, p.domain, p.stab, sol, p.rules)
    hyb = assemble(p.space, p.domain, huge, sol, p.rules)
    diff = sp.csr_matrix(sym.matrix - hyb.matrix)
    if diff.nnz:
        assert np.abs(diff.data).max() <= 1e-14 * np.abs(sym.matrix.data).max()
    np.testing.assert_allclose(hyb.rhs, sym.rhs, atol=1e-14 * np.abs(sym.rhs).max())


def test_missing_stabilization_raises():
    p = pipeline("overlap-square", "quad-q1", 8, 2.0 ** -6)
    empty = StabilizationField({}, {}, None)
    with pytest.raises(AssemblyError):
        assemble(p.space, p.domain, empty, sine_solution(), p.rules)


def test_form_variant_validation():
    assert FormVariant.nitsche().cap is None
    assert FormVariant.hybrid(16000.0).is_hybrid
    with pytest.raises(ValueError):
        FormVariant.hybrid(-1.0)


def test_energy_gram_zero_vector():
    p = pipeline("overlap-square", "quad-q1", 8, 2.0 ** -6)
    e = energy_gram(p)
    v = np.zeros(p.space.n_dofs)
    assert v @ (e @ v) == 0.0


def test_energy_gram_positive_semidefinite():
    p = pipeline("overlap-square", "quad-q1", 8, 2.0 ** -6)
    e = energy_gram(p).toarray()
    evals = np.linalg.eigvalsh(0.5 * (e + e.T))
    assert evals[0] >= -1e-10 * np.abs(evals).max()


def test_energy_gram_termwise_against_direct_quadrature():
    # nodal interpolant of x on a fitted square: each energy term has a
    # direct quadrature value
    K = 8
    p = pipeline("overlap-square", "quad-q1", K, 1.0 / K)
    e = energy_gram(p)
    v = p.space.dof_coords[:, 0].copy()
    quad = float(v @ (e @ v))
    grad_term = 0.0
    for vol in p.rules.vol.values():
        grad_term += vol.weights.sum()  # |grad x|^2 = 1
    surf_flux = 0.0
    surf_pen = 0.0
    for a, surf in p.rules.surf.items():
        if surf is None or not surf.has(BC.DIRICHLET):
            continue
        sub = surf.restrict(BC.DIRICHLET)
        lam = p.stab.values[a]
        nx2 = sub.normals[:, 0] ** 2
        surf_flux += (sub.weights @ nx2) / lam
        surf_pen += lam * (sub.weights @ sub.points[:, 0] ** 2)
    assert quad == pytest.approx(grad_term + surf_flux + surf_pen, rel=1e-12)


def test_coercivity_random_vectors():
    p, system = assembled("overlap-square", "quad-q1", 8, 2.0 ** -10)
    e = energy_gram(p)
    rng = np.random.default_rng(9)
    for _ in range(100):
        v = rng.standard_normal(p.space.n_dofs)
        lhs = v @ (system.matrix @ v)
        rhs = v @ (e @ v)
        assert lhs >= 0.2 * rhs - 1e-10 * abs(rhs)


def test_continuity_random_pairs():
    p, system = assembled("overlap-square", "tri-p1", 8, 2.0 ** -10)
    e = energy_gram(p)
    rng = np.random.default_rng(10)
    for _ in range(100):
        u = rng.standard_normal(p.space.n_dofs)
        v = rng.standard_normal(p.space.n_dofs)
        lhs = abs(u @ (system.matrix @ v))
        rhs = np.sqrt(max(u @ (e @ u), 0)) * np.sqrt(max(v @ (e @ v), 0))
        assert lhs <= 2.0 * rhs + 1e-10


def test_galerkin_orthogonality_for_in_space_solution():
    K = 8
    p, system = assembled("overlap-square", "quad-q1", K, (1.0 / K) / 3.0,
                          sol=linear_solution())
    coeffs = solve(system)
    exact = p.space.dof_coords.sum(axis=1)
    resid = system.matrix @ (exact - coeffs)
    e = energy_gram(p)
    rng = np.random.default_rng(12)
    for _ in range(20):
        v = rng.standard_normal(p.space.n_dofs)
        norm_v = np.sqrt(v @ (e @ v))
        assert abs(resid @ v) <= 1e-9 * norm_v * np.sqrt(exact @ (e @ exact))


def test_neumann_rows_localized_to_side_boundary_dofs():
    # replacing the Neumann tag with Dirichlet only perturbs rows of dofs
    # supported on the left/right boundary
    K = 8
    eps = 2.0 ** -5
    p1, sys1 = assembled("overlap-square", "quad-q1", K, eps)
    p2, sys2 = assembled("mixed-square", "quad-q1", K, eps)
    diff = sp.csr_matrix(sys1.matrix - sys2.matrix).tocoo()
    scale = np.abs(sys1.matrix.data).max()
    touched = {int(i) for i, v in zip(diff.row, diff.data) if abs(v) > 1e-12 * scale}
    touched |= {int(j) for j, v in zip(diff.col, diff.data) if abs(v) > 1e-12 * scale}
    xcoords = np.abs(p1.space.dof_coords[sorted(touched), 0])
    assert touched, "systems should differ on the Neumann sides"
    assert np.all(xcoords >= 1.0 - 1e-12)


def test_h1_gram_matches_direct_norm():
    p = pipeline("overlap-square", "quad-q1", 8, 2.0 ** -6)
    hmat = assemble_h1_gram(p.space, p.rules)
    v = p.space.dof_coords[:, 0].copy()  # interpolant of x
    # ||x||^2 + ||grad x||^2 over the domain
    area = sum(vol.weights.sum() for vol in p.rules.vol.values())
    xsq = sum(vol.weights @ vol.points[:, 0] ** 2 for vol in p.rules.vol.values())
    assert v @ (hmat @ v) == pytest.approx(area + xsq, rel=1e-12)


def test_support_pinning_zeroes_isolated_dofs():
    # at extreme offsets the outermost corner dof's support drops below the
    # pin threshold and its row becomes the identity
    p, system = assembled("overlap-square", "quad-q1", 16, 2.0 ** -24)
    assert system.pinned.sum() == 4
    pinned_coords = np.abs(p.space.dof_coords[system.pinned])
    np.testing.assert_allclose(pinned_coords, 1.0 + 1.0 / 16.0, atol=1e-14)
    coeffs = solve(system)
    np.testing.assert_allclose(coeffs[system.pinned], 0.0)
