"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Sweep windows are
chosen so each claimed regime is actually reached at K=16 (the divergence
onset sits below the CLI's default grid there); thresholds and tolerances
are fixed here, not tuned per run.
"""

import time
import warnings

import numpy as np
import pytest

from cutnitsche.assembly import FormVariant, assemble, assemble_energy_gram
from cutnitsche.diagnostics import coercivity_scan, continuity_scan
from cutnitsche.experiment import (
    ExperimentConfig,
    dof_drop_markers,
    geometric_eps_list,
    run_point,
    run_sweep,
)
from cutnitsche.geometry import sine_solution
from cutnitsche.mesh import boundary_dof_counts

from .conftest import pipeline
from .oracles import generalized_penalty_oracle
from .test_stabilization import (
    element_moments,
    element_stabilization,
    line_cut_rules,
    nodal_matrices,
    random_cut_config,
)

DEFAULT_EPS = geometric_eps_list(2.0 ** -4, 2.0 ** -24)
DEEP_EPS = geometric_eps_list(2.0 ** -4, 2.0 ** -36)


def report(criterion, passed, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} ({detail})")
    assert passed, f"criterion {criterion}: {detail}"


def _sweep(**kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_sweep(ExperimentConfig(**kwargs))


@pytest.fixture(scope="module")
def ex1_tri_k16():
    t0 = time.time()
    recs = _sweep(example="ex1-tri", K=16, eps_list=DEEP_EPS)
    return recs, time.time() - t0


@pytest.fixture(scope="module")
def ex1_quad_k16():
    return _sweep(example="ex1-quad", K=16, eps_list=DEEP_EPS)


@pytest.fixture(scope="module")
def ex2_k16():
    return _sweep(example="ex2", K=16, eps_list=DEFAULT_EPS)


@pytest.fixture(scope="module")
def ex3_k16():
    return _sweep(example="ex3", K=16,
                  eps_list=geometric_eps_list(2.0 ** -5, 2.0 ** -36))


def _ball_peak_grid(K=16):
    """Geometric backbone plus approaches to the vertex-crossing offsets."""
    h = 1.0 / K
    eps = set(DEFAULT_EPS)
    for k in range(2, K):
        crossing = (1.0 + (k * h) ** 8) ** 0.125 - 1.0
        for c in (0.5, 0.2, 0.07, 0.02):
            e = crossing * (1.0 + c)
            if 2.0 ** -28 <= e <= 2.0 ** -4:
                eps.add(e)
    return sorted(eps, reverse=True)


@pytest.fixture(scope="module")
def ex4_sweeps():
    grid = _ball_peak_grid()
    sym = _sweep(example="ex4", K=16, eps_list=grid)
    hyb = _sweep(example="ex4", K=16, eps_list=grid,
                 variant=FormVariant.hybrid(16000.0))
    return sym, hyb


@pytest.fixture(scope="module")
def ex1_quad_k8_diag():
    return _sweep(example="ex1-quad", K=8, eps_list=DEFAULT_EPS, diagnostics=True)


def _scan_setup(element_type, eps):
    p = pipeline("overlap-square", element_type, 8, eps)
    system = assemble(p.space, p.domain, p.stab, sine_solution(), p.rules)
    gram = assemble_energy_gram(p.space, p.stab, p.rules)
    return system.matrix, gram


SCAN_CASES = [(et, eps) for et in ("tri-p1", "quad-q1")
              for eps in (2.0 ** -4, 2.0 ** -10, 2.0 ** -16)]


def test_criterion_01_coercivity():
    worst = np.inf
    for element_type, eps in SCAN_CASES:
        t0 = time.time()
        matrix, gram = _scan_setup(element_type, eps)
        _, exact_min = coercivity_scan(matrix, gram, n_samples=100, seed=11)
        elapsed = time.time() - t0
        worst = min(worst, exact_min)
        assert elapsed < 30.0
    report(1, worst >= 0.2, f"min generalized eigenvalue {worst:.4f} >= 0.2")


def test_criterion_02_continuity():
    worst = 0.0
    for element_type, eps in SCAN_CASES:
        matrix, gram = _scan_setup(element_type, eps)
        worst = max(worst, continuity_scan(matrix, gram, n_pairs=100, seed=12))
    report(2, worst <= 2.0 + 1e-10, f"max form ratio {worst:.4f} <= 2")


def test_criterion_03_cea_factor(ex1_quad_k8_diag):
    ratios = [r.cea_ratio for r in ex1_quad_k8_diag if r.status == "ok"]
    assert ratios
    report(3, max(ratios) <= 11.0, f"max quasi-optimality factor {max(ratios):.4f} <= 11")


def test_criterion_04_penalty_oracle_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        poly, etype, order, normal, offset = random_cut_config(rng)
        vol, surf = line_cut_rules(poly, normal, offset)
        got = element_stabilization(poly, etype, order, vol, surf)
        ref = generalized_penalty_oracle(
            *nodal_matrices(poly, etype, vol, surf),
            element_moments(poly, etype, order),
        )
        worst = max(worst, abs(got - ref) / ref)
    assert worst <= 1e-8

    h = 0.125
    base = np.array([[0, 0], [h, 0], [h, h], [0, h]], dtype=float)
    lams = []
    for shift in (0.0, 11.5):
        poly = base + shift
        vol, surf = line_cut_rules(poly, (1.0, 0.0), 0.3 * h + shift)
        lams.append(element_stabilization(poly, "quad-q1", 1, vol, surf))
    translation_err = abs(lams[1] - lams[0]) / lams[0]
    assert translation_err <= 1e-10

    vol, surf = line_cut_rules(base, (1.0, 0.0), 0.3 * h)
    lam0 = element_stabilization(base, "quad-q1", 1, vol, surf)
    scale_err = 0.0
    for s in (0.5, 2.0):
        vol_s, surf_s = line_cut_rules(base * s, (1.0, 0.0), 0.3 * h * s)
        lam_s = element_stabilization(base * s, "quad-q1", 1, vol_s, surf_s)
        scale_err = max(scale_err, abs(lam_s * s - lam0) / lam0)
    assert scale_err <= 1e-8
    report(4, True,
           f"oracle dev {worst:.2e}, translation {translation_err:.2e}, "
           f"scaling {scale_err:.2e}")


def test_criterion_05_sliver_scaling(ex1_quad_k16):
    ok = [r for r in ex1_quad_k16 if r.status == "ok"]
    ratios = [nxt.lambda_max / cur.lambda_max
              for cur, nxt in zip(ok, ok[1:])
              if cur.epsilon <= 2.0 ** -8 * (1 + 1e-12)
              and nxt.epsilon == pytest.approx(cur.epsilon / 2)]
    assert len(ratios) >= 10
    lo, hi = min(ratios), max(ratios)
    report(5, 1.9 <= lo and hi <= 2.1, f"penalty halving ratios in [{lo:.3f}, {hi:.3f}]")


COUNT_FORMULAS = [
    ("overlap-square", "tri-p1", lambda K: (16 * K + 7, 16 * K + 8)),
    ("overlap-square", "quad-q1", lambda K: (8 * K + 8, 16 * K + 8)),
    ("mixed-square", "quad-q1", lambda K: (4 * K + 6, 8 * K + 12)),
    ("kinked-square", "quad-q1", lambda K: (8 * K + 6, 8 * K + 10)),
]


def test_criterion_06_boundary_dof_counts():
    eps = 2.0 ** -5
    checked = 0
    for K in (8, 16):
        for kind, element_type, formula in COUNT_FORMULAS:
            p = pipeline(kind, element_type, K, eps)
            m, n = boundary_dof_counts(p.space, p.rules.surf)
            expected = formula(K)
            assert (m, n) == expected, (kind, K, (m, n), expected)
            if kind == "mixed-square":
                assert n == 2 * m
            checked += 1
    report(6, True, f"{checked} closed-form (M, N) pairs matched exactly")


def test_criterion_07_divergence_slope(ex1_tri_k16):
    recs, elapsed = ex1_tri_k16
    assert elapsed < 300.0
    ok = [r for r in recs if r.status == "ok"]
    tail = ok[-5:]
    slope = np.polyfit(np.log([r.epsilon for r in tail]),
                       np.log([r.err_h1 for r in tail]), 1)[0]
    report(7, -0.65 <= slope <= -0.35,
           f"H1 error slope {slope:.4f} in [-0.65, -0.35], sweep {elapsed:.0f}s")


def test_criterion_08_robust_mixed_case(ex2_k16):
    ok = [r for r in ex2_k16 if r.status == "ok"]
    h1 = [r.err_h1 for r in ok]
    spread = max(h1) / min(h1)
    tail = ok[-5:]
    slope = np.polyfit(np.log([r.epsilon for r in tail]),
                       np.log([r.err_energy for r in tail]), 1)[0]
    report(8, spread < 2.0 and abs(slope + 0.5) <= 0.15,
           f"H1 spread {spread:.3f} < 2, energy slope {slope:.4f} = -0.5 +- 0.15")


def test_criterion_09_energy_reduction(ex1_quad_k16, ex2_k16):
    # the sqrt(2) reduction is an asymptotic effect: compare on the three
    # largest offsets of the boundary-dominated window
    window = [2.0 ** -16, 2.0 ** -17, 2.0 ** -18]
    by_eps_1 = {r.epsilon: r for r in ex1_quad_k16 if r.status == "ok"}
    by_eps_2 = {r.epsilon: r for r in ex2_k16 if r.status == "ok"}
    ratios = [by_eps_2[e].err_energy / by_eps_1[e].err_energy for e in window]
    lo, hi = min(ratios), max(ratios)
    report(9, 0.6 <= lo and hi <= 0.85,
           f"energy ratios in [{lo:.4f}, {hi:.4f}] around 1/sqrt(2)")


def test_criterion_10_kinked_divergence(ex3_k16):
    ok = [r for r in ex3_k16 if r.status == "ok"]
    ratio = ok[-1].err_h1 / ok[0].err_h1
    report(10, ratio > 10.0, f"H1 growth factor {ratio:.1f} > 10")


def _prominent_maxima(vals, rel=0.05):
    peaks = []
    for i in range(1, len(vals) - 1):
        if vals[i] > vals[i - 1] and vals[i] >= vals[i + 1]:
            if vals[i] >= (1.0 + rel) * min(vals[i - 1], vals[i + 1]):
                peaks.append(i)
    return peaks


def test_criterion_11_peaks_at_dof_drops(ex4_sweeps):
    sym, _ = ex4_sweeps
    ok = [r for r in sym if r.status == "ok"]
    peaks = _prominent_maxima([r.err_l2 for r in ok])
    assert peaks, "expected visible L2 peaks on the peak-resolving grid"
    markers = set(dof_drop_markers(sym))
    ok_pos_of_marker = []
    n_ok_before = 0
    for r in sym:
        if r.epsilon in markers:
            ok_pos_of_marker.append(n_ok_before)
        n_ok_before += r.status == "ok"
    worst_gap = max(
        min(abs(p - m) for m in ok_pos_of_marker) for p in peaks
    )
    report(11, worst_gap <= 1,
           f"{len(peaks)} L2 peaks, all within {worst_gap} step(s) of a dof drop")


def test_criterion_12_hybrid_fix(ex4_sweeps):
    sym, hyb = ex4_sweeps
    h1s = [r.err_h1 for r in sym if r.status == "ok"]
    h1h = [r.err_h1 for r in hyb if r.status == "ok"]
    sym_spread = max(h1s) / min(h1s)
    hyb_spread = max(h1h) / min(h1h)
    report(12, hyb_spread < 3.0 and sym_spread > 10.0,
           f"hybrid spread {hyb_spread:.3f} < 3, symmetric spread {sym_spread:.1f} > 10")


def test_criterion_13_mesh_convergence():
    rates = {}
    for order, expected, tol in ((1, 1.0, 0.2), (2, 2.0, 0.3)):
        errs = []
        for K in (4, 8, 16):
            eps = 0.5 / K
            cfg = ExperimentConfig(example="ex1-quad", K=K, order=order,
                                   eps_list=[eps])
            errs.append(run_point(cfg, eps).err_h1)
        fit = np.polyfit(np.log([0.25, 0.125, 0.0625]), np.log(errs), 1)[0]
        rates[order] = fit
        assert abs(fit - expected) <= tol, (order, fit)
    report(13, True,
           f"H1 rates: order1 {rates[1]:.3f} (1.0 +- 0.2), "
           f"order2 {rates[2]:.3f} (2.0 +- 0.3)")
