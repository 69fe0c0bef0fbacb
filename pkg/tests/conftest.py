import functools
from types import SimpleNamespace

import numpy as np
import pytest

from cutnitsche.assembly import FormVariant, assemble, assemble_energy_gram
from cutnitsche.geometry import make_domain, sine_solution
from cutnitsche.mesh import build_background, build_space, extract_active
from cutnitsche.quadrature import build_rules, tessellate_all
from cutnitsche.stabilization import compute_stabilization


@functools.lru_cache(maxsize=32)
def _pipeline(kind, element_type, K, eps, depth, cap):
    domain = make_domain(kind, eps)
    mesh = build_background(element_type, K)
    active = extract_active(mesh, domain, depth)
    space = build_space(mesh, active)
    k = space.order
    geos = tessellate_all(space, domain, depth)
    rules = build_rules(space, domain, 2 * k + 1, depth, geos)
    rules_err = build_rules(space, domain, 2 * k + 3, depth, geos)
    stab = compute_stabilization(space, rules, cap)
    return SimpleNamespace(
        domain=domain, mesh=mesh, active=active, space=space,
        rules=rules, rules_err=rules_err, stab=stab,
    )


def pipeline(kind, element_type, K, eps, depth=2, cap=None):
    """Cached full setup: domain, mesh, space, quadrature and penalties."""
    return _pipeline(kind, element_type, K, float(eps), depth, cap)


def assembled(kind, element_type, K, eps, cap=None, sol=None):
    p = pipeline(kind, element_type, K, eps, cap=cap)
    system = assemble(p.space, p.domain, p.stab, sol or sine_solution(), p.rules)
    return p, system


def energy_gram(p):
    return assemble_energy_gram(p.space, p.stab, p.rules)


def cell_element_index(space, i, j, local=0):
    """Active index of the element in background cell (i, j)."""
    mesh = space.mesh
    if mesh.element_type == "tri-p1":
        eid = 2 * (j * mesh.n_side + i) + local
    else:
        eid = j * mesh.n_side + i
    pos = np.searchsorted(space.active.ids, eid)
    assert space.active.ids[pos] == eid, "element is not active"
    return int(pos)


def right_sliver_index(space, row=None):
    """Active index of a cut cell on the x = +1 sliver column."""
    mesh = space.mesh
    i = mesh.n_side - 1
    j = mesh.n_side // 2 if row is None else row
    return cell_element_index(space, i, j)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
