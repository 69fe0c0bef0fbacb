"""Sweep driver: runs the example problems over geometry offsets and
persists one CSV row per offset."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .assembly import FormVariant, assemble, assemble_energy_gram, assemble_h1_gram
from .diagnostics import energy_projection, equiv_constants
from .geometry import DomainKind, make_domain, sine_solution
from .mesh import (
    QUAD_Q1,
    QUAD_Q2,
    TRI_P1,
    boundary_dof_counts,
    build_background,
    build_space,
    extract_active,
)
from .quadrature import build_rules, tessellate_all
from .solver import SolveError, error_norms, error_report, solve
from .stabilization import SliverDegenerate, compute_stabilization

EXAMPLES = {
    "ex1-tri": DomainKind.OVERLAP_SQUARE,
    "ex1-quad": DomainKind.OVERLAP_SQUARE,
    "ex2": DomainKind.MIXED_SQUARE,
    "ex3": DomainKind.KINKED_SQUARE,
    "ex4": DomainKind.PNORM_BALL8,
}

STATUS_OK = "ok"
STATUS_DEGENERATE = "sliver-degenerate"
STATUS_SOLVE_FAILED = "solve-failed"

BASE_COLUMNS = [
    "epsilon", "n_dofs", "M", "N", "lambda_max",
    "err_energy", "err_h1", "err_l2",
]
DIAG_COLUMNS = ["c_est", "C_est", "cea_ratio"]


def geometric_eps_list(start, stop, factor=0.5):
    """Descending geometric grid from start down to (approximately) stop."""
    if not (0.0 < stop <= start) or not (0.0 < factor < 1.0):
        raise ValueError("need 0 < stop <= start and 0 < factor < 1")
    out = []
    eps = float(start)
    while eps >= stop * (1.0 - 1e-12):
        out.append(eps)
        eps *= factor
    return out


@dataclass
class ExperimentConfig:
    example: str
    K: int = 16
    order: int = 1
    eps_list: list = field(default_factory=lambda: geometric_eps_list(2.0 ** -4, 2.0 ** -24))
    variant: FormVariant = field(default_factory=FormVariant.nitsche)
    tess_depth: int = 2
    diagnostics: bool = False
    out: str = None
    seed: int = 0

    def __post_init__(self):
        if self.example not in EXAMPLES:
            raise ValueError(f"unknown example {self.example!r}")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if self.example == "ex1-tri" and self.order != 1:
            raise ValueError("the triangular example only supports order 1")
        eps = [float(e) for e in self.eps_list]
        if any(e <= 0.0 for e in eps):
            raise ValueError("geometry offsets must be positive")
        if sorted(eps, reverse=True) != eps:
            raise ValueError("eps_list must be sorted descending")
        self.eps_list = eps

    @property
    def element_type(self):
        if self.example == "ex1-tri":
            return TRI_P1
        return QUAD_Q2 if self.order == 2 else QUAD_Q1

    @property
    def domain_kind(self):
        return EXAMPLES[self.example]


@dataclass
class ResultRecord:
    epsilon: float
    n_dofs: int = 0
    M: int = 0
    N: int = 0
    lambda_max: float = float("nan")
    err_energy: float = float("nan")
    err_h1: float = float("nan")
    err_l2: float = float("nan")
    c_est: float = None
    C_est: float = None
    cea_ratio: float = None
    status: str = STATUS_OK


def run_point(config, eps, mesh=None):
    """One solve at a fixed geometry offset."""
    domain = make_domain(config.domain_kind, eps)
    if mesh is None:
        mesh = build_background(config.element_type, config.K)
    if domain.max_extent() > 1.0 + mesh.h + 1e-12:
        raise ValueError(
            f"offset {eps} pushes the domain outside the background mesh"
        )
    sol = sine_solution()
    active = extract_active(mesh, domain, config.tess_depth)
    space = build_space(mesh, active)
    k = config.order
    geos = tessellate_all(space, domain, config.tess_depth)
    rules = build_rules(space, domain, 2 * k + 1, config.tess_depth, geos)
    rules_err = build_rules(space, domain, 2 * k + 3, config.tess_depth, geos)

    rec = ResultRecord(epsilon=eps, n_dofs=space.n_dofs)
    rec.M, rec.N = boundary_dof_counts(space, rules.surf)
    try:
        stab = compute_stabilization(space, rules, config.variant.cap)
    except SliverDegenerate:
        rec.status = STATUS_DEGENERATE
        return rec
    rec.lambda_max = stab.lambda_max
    system = assemble(space, domain, stab, sol, rules)
    try:
        coeffs = solve(system)
    except SolveError:
        rec.status = STATUS_SOLVE_FAILED
        return rec
    report = error_report(space, coeffs, sol, rules_err, stab, rec.M, rec.N)
    rec.err_energy = report.err_energy
    rec.err_h1 = report.err_h1
    rec.err_l2 = report.err_l2
    if config.diagnostics:
        energy = assemble_energy_gram(space, stab, rules)
        h1 = assemble_h1_gram(space, rules)
        consts = equiv_constants(energy, h1)
        rec.c_est, rec.C_est = consts.c_est, consts.C_est
        proj = energy_projection(space, sol, rules, stab, energy)
        best_energy, _, _ = error_norms(space, proj, sol, rules_err, stab)
        rec.cea_ratio = rec.err_energy / best_energy if best_energy > 0 else float("inf")
    return rec


def run_sweep(config):
    """Run all feasible offsets; write the CSV when an output path is set.

    Degenerate or failed solves are recorded in-row; offsets whose domain
    is not covered by the background mesh are skipped with a warning.
    """
    mesh = build_background(config.element_type, config.K)
    records = []
    for eps in config.eps_list:
        domain = make_domain(config.domain_kind, eps)
        if domain.max_extent() > 1.0 + mesh.h + 1e-12:
            warnings.warn(
                f"skipping eps={eps}: domain exceeds the background mesh",
                stacklevel=2,
            )
            continue
        records.append(run_point(config, eps, mesh))
    if config.out:
        write_csv(records, config, config.out)
    return records


def dof_drop_markers(records):
    """Offsets at which the active dof count drops from the previous offset."""
    markers = []
    for prev, cur in zip(records, records[1:]):
        if cur.n_dofs < prev.n_dofs:
            markers.append(cur.epsilon)
    return markers


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_columns(config):
    cols = list(BASE_COLUMNS)
    if config.diagnostics:
        cols += DIAG_COLUMNS
    return cols + ["status"]


def write_csv(records, config, path):
    cols = csv_columns(config)
    cap = config.variant.cap if config.variant.is_hybrid else ""
    header = (
        f"# cutnitsche sweep: example={config.example} K={config.K} "
        f"order={config.order} variant="
        f"{'hybrid' if config.variant.is_hybrid else 'nitsche'} cap={cap} "
        f"depth={config.tess_depth} diagnostics={int(config.diagnostics)} "
        f"seed={config.seed}"
    )
    lines = [header, ",".join(cols)]
    for rec in records:
        lines.append(",".join(_fmt(getattr(rec, c)) for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Rows of a sweep CSV as dictionaries (floats where possible)."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    cols = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        row = {}
        for key, tok in zip(cols, ln.split(",")):
            if key == "status":
                row[key] = tok
            elif tok == "":
                row[key] = None
            else:
                row[key] = float(tok)
        rows.append(row)
    return rows
