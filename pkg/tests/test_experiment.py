import subprocess
import sys

import numpy as np
import pytest

from cutnitsche.assembly import FormVariant
from cutnitsche.experiment import (
    ExperimentConfig,
    ResultRecord,
    dof_drop_markers,
    geometric_eps_list,
    read_csv,
    run_point,
    run_sweep,
    write_csv,
)


def test_geometric_eps_list_default_count():
    eps = geometric_eps_list(2.0 ** -4, 2.0 ** -24)
    assert len(eps) == 21
    assert eps[0] == 2.0 ** -4 and eps[-1] == pytest.approx(2.0 ** -24)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(example="ex0", eps_list=[0.1])
    with pytest.raises(ValueError):
        ExperimentConfig(example="ex1-tri", order=2, eps_list=[0.1])
    with pytest.raises(ValueError):
        ExperimentConfig(example="ex2", eps_list=[0.01, 0.1])  # ascending
    with pytest.raises(ValueError):
        ExperimentConfig(example="ex2", eps_list=[0.1, -0.01])


def test_element_type_resolution():
    assert ExperimentConfig(example="ex1-tri", eps_list=[0.01]).element_type == "tri-p1"
    assert ExperimentConfig(example="ex2", eps_list=[0.01]).element_type == "quad-q1"
    assert ExperimentConfig(example="ex4", order=2, eps_list=[0.01]).element_type == "quad-q2"


def test_dof_drop_markers():
    recs = [ResultRecord(epsilon=e, n_dofs=n) for e, n in
            [(0.1, 50), (0.05, 50), (0.025, 48), (0.0125, 48), (0.00625, 40)]]
    assert dof_drop_markers(recs) == [0.025, 0.00625]
    assert dof_drop_markers(recs[:1]) == []
    assert dof_drop_markers([]) == []


def test_ex1_sweep_has_no_dof_drops():
    recs = run_sweep(ExperimentConfig(
        example="ex1-quad", K=8, eps_list=geometric_eps_list(2.0 ** -5, 2.0 ** -12)
    ))
    assert dof_drop_markers(recs) == []


def test_infeasible_kinked_offsets_are_skipped():
    cfg = ExperimentConfig(example="ex3", K=16,
                           eps_list=[2.0 ** -4, 2.0 ** -5, 2.0 ** -6])
    with pytest.warns(UserWarning):
        recs = run_sweep(cfg)
    assert [r.epsilon for r in recs] == [2.0 ** -5, 2.0 ** -6]


def test_run_point_rejects_uncovered_domain():
    cfg = ExperimentConfig(example="ex3", K=16, eps_list=[2.0 ** -5])
    with pytest.raises(ValueError):
        run_point(cfg, 2.0 ** -4)


def test_csv_round_trip_and_determinism(tmp_path):
    eps = geometric_eps_list(2.0 ** -5, 2.0 ** -7)
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    cfg1 = ExperimentConfig(example="ex1-quad", K=8, eps_list=eps,
                            diagnostics=True, out=str(out1))
    cfg2 = ExperimentConfig(example="ex1-quad", K=8, eps_list=eps,
                            diagnostics=True, out=str(out2))
    run_sweep(cfg1)
    run_sweep(cfg2)
    assert out1.read_bytes() == out2.read_bytes()
    rows = read_csv(str(out1))
    assert len(rows) == len(eps)
    assert set(rows[0]) == {
        "epsilon", "n_dofs", "M", "N", "lambda_max", "err_energy", "err_h1",
        "err_l2", "c_est", "C_est", "cea_ratio", "status",
    }
    assert all(row["status"] == "ok" for row in rows)
    assert rows[0]["epsilon"] == 2.0 ** -5


def test_csv_header_without_diagnostics(tmp_path):
    out = tmp_path / "plain.csv"
    cfg = ExperimentConfig(example="ex1-quad", K=8, eps_list=[2.0 ** -5], out=str(out))
    run_sweep(cfg)
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# cutnitsche sweep: example=ex1-quad")
    assert lines[1] == "epsilon,n_dofs,M,N,lambda_max,err_energy,err_h1,err_l2,status"


def test_hybrid_sweep_records_capped_lambda(tmp_path):
    cfg = ExperimentConfig(example="ex1-quad", K=8, eps_list=[2.0 ** -16],
                           variant=FormVariant.hybrid(16000.0))
    rec = run_point(cfg, 2.0 ** -16)
    assert rec.lambda_max == 16000.0
    assert rec.status == "ok"


def test_cli_end_to_end(tmp_path):
    out = tmp_path / "cli.csv"
    cmd = [
        sys.executable, "-m", "cutnitsche.cli", "run",
        "--example", "ex1-quad", "--K", "8", "--order", "1",
        "--eps-from", "0.03125", "--eps-to", "0.0078125", "--eps-factor", "0.5",
        "--variant", "nitsche", "--out", str(out),
    ]
    res = subprocess.run(cmd, capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    rows = read_csv(str(out))
    assert len(rows) == 3
    assert all(row["status"] == "ok" for row in rows)


# integration checks of the published sweep behaviors, at K=8 for speed

def test_divergence_integration_k8():
    recs = run_sweep(ExperimentConfig(
        example="ex1-quad", K=8,
        eps_list=geometric_eps_list(2.0 ** -4, 2.0 ** -30),
    ))
    ok = [r for r in recs if r.status == "ok"]
    h1 = [r.err_h1 for r in ok]
    assert h1[-1] > 10.0 * h1[0]


def test_robust_mixed_case_integration_k8():
    recs = run_sweep(ExperimentConfig(
        example="ex2", K=8, eps_list=geometric_eps_list(2.0 ** -4, 2.0 ** -24),
    ))
    h1 = [r.err_h1 for r in recs if r.status == "ok"]
    assert max(h1) / min(h1) < 2.0


def test_hybrid_vs_symmetric_integration_k8():
    eps_list = geometric_eps_list(2.0 ** -4, 2.0 ** -30)
    sym = run_sweep(ExperimentConfig(example="ex1-tri", K=8, eps_list=eps_list))
    hyb = run_sweep(ExperimentConfig(example="ex1-tri", K=8, eps_list=eps_list,
                                     variant=FormVariant.hybrid(16000.0)))
    h1s = [r.err_h1 for r in sym if r.status == "ok"]
    h1h = [r.err_h1 for r in hyb if r.status == "ok"]
    assert max(h1s) / min(h1s) > 10.0
    assert max(h1h) / min(h1h) < 3.0
