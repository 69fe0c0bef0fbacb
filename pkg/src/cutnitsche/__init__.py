"""Unfitted finite elements with eigenvalue-based Nitsche penalties.

Reproduces the breakdown of the discretization error on sliver-cut
elements and the hybrid capped-penalty fix.
"""

from .assembly import FormVariant, LinearSystem, assemble, assemble_energy_gram
from .experiment import ExperimentConfig, ResultRecord, dof_drop_markers, run_sweep
from .geometry import (
    BC,
    Classification,
    DomainKind,
    ImplicitDomain,
    ManufacturedSolution,
    boundary_data,
    classify_element,
    evaluate_phi,
    make_domain,
    sine_solution,
)
from .mesh import boundary_dof_counts, build_background, build_space, extract_active
from .quadrature import SurfaceRule, VolumeRule, surface_rule, tessellate, volume_rule
from .solver import ErrorReport, SolveError, error_norms, solve
from .stabilization import (
    SliverDegenerate,
    StabilizationField,
    apply_cap,
    compute_stabilization,
    stabilization_parameter,
    zero_mean_local_basis,
)

__all__ = [
    "BC",
    "Classification",
    "DomainKind",
    "ErrorReport",
    "ExperimentConfig",
    "FormVariant",
    "ImplicitDomain",
    "LinearSystem",
    "ManufacturedSolution",
    "ResultRecord",
    "SliverDegenerate",
    "SolveError",
    "StabilizationField",
    "SurfaceRule",
    "VolumeRule",
    "apply_cap",
    "assemble",
    "assemble_energy_gram",
    "boundary_data",
    "boundary_dof_counts",
    "build_background",
    "build_space",
    "classify_element",
    "compute_stabilization",
    "dof_drop_markers",
    "error_norms",
    "evaluate_phi",
    "extract_active",
    "make_domain",
    "run_sweep",
    "sine_solution",
    "solve",
    "stabilization_parameter",
    "surface_rule",
    "tessellate",
    "volume_rule",
    "zero_mean_local_basis",
]

__version__ = "0.1.0"
