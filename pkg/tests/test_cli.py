import asyncio
import json

import pandas as pd
import pytest

from mfoffload.errors import EXIT_OK, EXIT_SOLVER, EXIT_VALIDATION
from mfoffload.main import build_parser, run

SINGLE_TYPE = """\
mode = oneshot
f_per = 0.5

[support]
p  W  L  f  R
1  1  1  1  20
"""


def cli(cfg, *argv):
    return asyncio.run(run([str(a) for a in argv], cfg))


def read_csv(path):
    return pd.read_csv(path, skiprows=1)


def schema_line(path):
    with open(path, encoding="utf-8") as fh:
        return fh.readline().strip()


# ---------------------------------------------------------------- solve-mfg

def test_solve_mfg_three_type(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "mfg.csv"
    code = cli(cfg, "solve-mfg", scenarios_dir / "three_type_oneshot.scn", "--tol", "1e-3", "--out", out)
    assert code == EXIT_OK
    assert schema_line(out) == "# schema: solve-mfg/v1"
    history = read_csv(out)
    assert list(history.columns) == ["iteration", "exploitability", "pi_1", "pi_2", "pi_3"]
    summary = json.loads(out.with_suffix(".summary.json").read_text())
    # stopping at tol=1e-3 may leave a few hundredths on the pure types
    assert summary["exploitability"] < 1e-3
    assert summary["iterations"] == len(history)
    manifest = json.loads((tmp_path / "mfg.csv.manifest.json").read_text())
    assert manifest["command"] == "solve-mfg"
    assert manifest["scenario"]["f_per"] == 0.5
    assert str(out) in manifest["outputs"]


def test_solve_mfg_dominant_type_has_one_line_history(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "k1.csv"
    assert cli(cfg, "solve-mfg", scenarios_dir / "k1_dominant.scn", "--out", out) == EXIT_OK
    history = read_csv(out)
    assert len(history) == 1
    assert history["exploitability"].iloc[0] == 0.0


def test_solve_mfg_unconverged_exits_with_solver_code(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "short.csv"
    code = cli(cfg, "solve-mfg", scenarios_dir / "three_type_oneshot.scn", "--iters", "10", "--out", out)
    assert code == EXIT_SOLVER
    assert len(read_csv(out)) == 10


def test_solve_mfg_best_response_method(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "br.csv"
    code = cli(cfg, "solve-mfg", scenarios_dir / "three_type_oneshot.scn", "--method", "best-response", "--out", out)
    assert code == EXIT_SOLVER
    summary = json.loads(out.with_suffix(".summary.json").read_text())
    assert summary["cycle_detected"] is True


def test_solve_mfg_stationary(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "stat.csv"
    cli(cfg, "solve-mfg", scenarios_dir / "three_type_stationary.scn", "--out", out)
    summary = json.loads(out.with_suffix(".summary.json").read_text())
    assert summary["policy"][1] == pytest.approx(0.507, abs=5e-3)


def test_invalid_scenario_exits_with_validation_code(cfg, tmp_path):
    bad = tmp_path / "bad.scn"
    bad.write_text(SINGLE_TYPE.replace("1  1  1  1  20", "0.9  1  1  1  20"))
    assert cli(cfg, "solve-mfg", bad, "--out", tmp_path / "x.csv") == EXIT_VALIDATION


# ---------------------------------------------------------------- solve-mfc

def test_solve_mfc_json_summary(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "mfc.json"
    lattice = tmp_path / "surface.csv"
    code = cli(cfg, "solve-mfc", scenarios_dir / "two_type_oneshot.scn", "--out", out, "--lattice-out", lattice)
    assert code == EXIT_OK
    summary = json.loads(out.read_text())
    assert summary["policy"] == pytest.approx([0.5125, 0.0], abs=1e-2)
    assert summary["value"] == pytest.approx(1.1131667, abs=1e-4)
    surface = read_csv(lattice)
    assert len(surface) == 101 ** 2
    assert schema_line(lattice) == "# schema: mfc-lattice/v1"


def test_solve_mfc_csv_without_refinement(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "mfc.csv"
    assert cli(cfg, "solve-mfc", scenarios_dir / "two_type_stationary.scn", "--no-refine", "--out", out) == EXIT_OK
    row = read_csv(out).iloc[0]
    assert not row["refined"]
    assert row["pi_1"] == pytest.approx(0.24, abs=0.02)


# ---------------------------------------------------------------- simulate

def simulate(cfg, scenarios_dir, out, *extra):
    return cli(
        cfg, "simulate", scenarios_dir / "three_type_stationary.scn", "-N", "5,10",
        "--trajectories", "6", "--horizon", "20", "--grid", "20", "--seed", "3", "--out", out, *extra,
    )


def test_simulate_all_local_is_zero(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "zero.csv"
    assert simulate(cfg, scenarios_dir, out, "--policy", "0,0,0") == EXIT_OK
    frame = read_csv(out)
    assert set(frame["N"]) == {5, 10}
    assert (frame["mean_ntot_over_N"] == 0).all()
    assert (frame["mean_field"] == 0).all()


def test_simulate_unstable_policy_has_no_mean_field(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "unstable.csv"
    code = cli(
        cfg, "simulate", scenarios_dir / "three_type_stationary.scn", "--policy", "1,1,1", "-N", "5",
        "--trajectories", "4", "--horizon", "10", "--grid", "10", "--out", out,
    )
    assert code == EXIT_OK
    frame = read_csv(out)
    assert frame["mean_field"].isna().all()
    assert frame["mean_ntot_over_N"].iloc[-1] > 0


def test_simulate_survives_idle_periods(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "idle.csv"
    code = cli(
        cfg, "simulate", scenarios_dir / "three_type_stationary.scn", "--policy", "1,0.50694,0", "-N", "5",
        "--trajectories", "20", "--seed", "0", "--grid", "20", "--out", out,
    )
    assert code == EXIT_OK
    assert read_csv(out)["mean_ntot_over_N"].notna().all()


def test_simulate_is_reproducible(cfg, scenarios_dir, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    simulate(cfg, scenarios_dir, a, "--policy", "1,0.50694,0")
    simulate(cfg, scenarios_dir, b, "--policy", "1,0.50694,0", "--workers", "2")
    assert a.read_bytes() == b.read_bytes()


def test_simulate_event_log_per_population(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "sim.csv"
    log = tmp_path / "events.log"
    simulate(cfg, scenarios_dir, out, "--policy", "1,0.50694,0", "--event-log", log)
    assert (tmp_path / "events_N5.log").exists()
    assert (tmp_path / "events_N10.log").exists()


def test_simulate_needs_stationary_scenario(cfg, scenarios_dir, tmp_path):
    code = cli(
        cfg, "simulate", scenarios_dir / "three_type_oneshot.scn", "--policy", "1,0.5,0",
        "--trajectories", "2", "--out", tmp_path / "x.csv",
    )
    assert code == EXIT_VALIDATION


def test_rerun_reproduces_outputs(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "sim.csv"
    simulate(cfg, scenarios_dir, out, "--policy", "1,0.50694,0")
    first = out.read_bytes()
    out.unlink()
    assert cli(cfg, "rerun", tmp_path / "sim.csv.manifest.json") == EXIT_OK
    assert out.read_bytes() == first


# ---------------------------------------------------------------- finite-eval

def test_finite_eval_lone_user(cfg, tmp_path):
    scenario = tmp_path / "single.scn"
    scenario.write_text(SINGLE_TYPE)
    out = tmp_path / "fe.csv"
    code = cli(cfg, "finite-eval", scenario, "--policy", "1", "-N", "1", "--samples", "200", "--out", out)
    assert code == EXIT_OK
    frame = read_csv(out)
    assert frame["estimate"].iloc[0] == pytest.approx(1.05)
    assert schema_line(out) == "# schema: finite-eval/v1"


def test_finite_eval_policy_from_solver_summary(cfg, scenarios_dir, tmp_path):
    mfc = tmp_path / "mfc.json"
    cli(cfg, "solve-mfc", scenarios_dir / "two_type_oneshot.scn", "--out", mfc)
    out = tmp_path / "coop.csv"
    code = cli(
        cfg, "finite-eval", scenarios_dir / "two_type_oneshot.scn", "--policy", mfc, "--mode", "coop-deviation",
        "-N", "5,100", "--samples", "5000", "--out", out,
    )
    assert code == EXIT_OK
    frame = read_csv(out)
    assert list(frame["N"]) == [5, 100]
    assert frame["estimate"].iloc[1] < frame["estimate"].iloc[0]


def test_finite_eval_rerun_with_other_worker_count(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "fe.csv"
    argv = [
        "finite-eval", scenarios_dir / "three_type_oneshot.scn", "--policy", "1,0.65625,0",
        "-N", "5,25", "--samples", "3000", "--seed", "11", "--out", out,
    ]
    cli(cfg, *argv)
    first = out.read_bytes()
    cli(cfg, *argv, "--workers", "2")
    assert out.read_bytes() == first


# ---------------------------------------------------------------- compare

def test_compare(cfg, scenarios_dir, tmp_path):
    out = tmp_path / "cmp.json"
    assert cli(cfg, "compare", scenarios_dir / "three_type_oneshot.scn", "--resolution", "0.05", "--out", out) == EXIT_OK
    report = json.loads(out.read_text())
    assert report["cost_ratio"] >= 1 - 1e-9
    assert report["equilibrium_policy"] == pytest.approx([1.0, 0.65625, 0.0], abs=1e-2)


def test_parser_defaults():
    args = build_parser().parse_args(["simulate", "x.scn", "--policy", "0", "--out", "o.csv"])
    assert args.n_list == [5, 10, 25, 50, 100]
    assert args.seed == 0
    with pytest.raises(SystemExit):
        build_parser().parse_args(["simulate", "x.scn", "--policy", "0", "-N", "5,a", "--out", "o.csv"])
