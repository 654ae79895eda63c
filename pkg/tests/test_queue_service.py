import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from mfoffload.errors import FeasibilityError, InsufficientSamplesError, ValidationError
from mfoffload.models import JobPhase, Policy
from mfoffload.services.queue_service import QueueSimulator, simulate_trajectory, stationary_prediction, write_event_log


@pytest.fixture
def simulator(cfg):
    return QueueSimulator(cfg)


def run(s, pi, n, horizon, **kwargs):
    grid = np.linspace(0.0, horizon, 50)
    return simulate_trajectory(s, pi, n, horizon, grid, seed=kwargs.pop("seed", 0), **kwargs)


# ---------------------------------------------------------------- prediction

def test_prediction_at_stationary_equilibrium(three_type_stationary, three_type_stationary_equilibrium):
    assert stationary_prediction(three_type_stationary, three_type_stationary_equilibrium) == pytest.approx(0.025, abs=1e-6)


def test_prediction_two_type_cooperative_point(two_type_stationary):
    assert stationary_prediction(two_type_stationary, Policy((0.24, 1.0))) == pytest.approx(0.0419, abs=1e-3)


def test_prediction_all_local(three_type_stationary):
    assert stationary_prediction(three_type_stationary, Policy.zeros(3)) == 0.0


def test_prediction_infeasible(single_type):
    s = dataclasses.replace(single_type, lam=20.0)
    with pytest.raises(FeasibilityError):
        stationary_prediction(s, Policy.ones(1))


# ---------------------------------------------------------------- single trajectory

def test_all_local_never_counts(three_type_stationary):
    result = run(three_type_stationary, Policy.zeros(3), 10, 50.0)
    assert_array_equal(result.ntot_over_n, 0.0)


def test_include_local_counts_local_jobs(three_type_stationary):
    result = run(three_type_stationary, Policy.zeros(3), 10, 50.0, include_local=True)
    assert result.ntot_over_n.max() > 0


def test_local_sojourn_is_exact(three_type_stationary):
    result = run(three_type_stationary, Policy((0.0, 0.5, 0.0)), 20, 40.0)
    d = three_type_stationary.dist
    local = [j for j in result.jobs if not j.offloaded and j.phase is JobPhase.DONE]
    assert local
    for job in local:
        assert job.sojourn == pytest.approx(d.local_times[job.type_index], rel=1e-12)


@pytest.mark.parametrize("sharing", ["system", "pool"])
def test_offloaded_sojourn_lower_bound(three_type_stationary, three_type_stationary_equilibrium, sharing):
    n = 20
    result = run(three_type_stationary, three_type_stationary_equilibrium, n, 40.0, pool_sharing=sharing)
    d = three_type_stationary.dist
    done = [j for j in result.jobs if j.offloaded and j.phase is JobPhase.DONE]
    assert done
    for job in done:
        bound = d.tx_times[job.type_index] + d.L[job.type_index] / three_type_stationary.f_pool(n)
        assert job.sojourn >= bound * (1 - 1e-12)


@pytest.mark.parametrize("sharing", ["system", "pool"])
def test_trajectory_that_drains_before_horizon(single_type, sharing):
    # about 20 arrivals, each gone well within a second
    result = run(single_type, Policy.ones(1), 1, 20_000.0, pool_sharing=sharing, record_events=True)
    assert result.jobs
    assert all(j.phase is JobPhase.DONE for j in result.jobs)
    assert result.ntot_over_n[-1] == 0.0
    assert result.events[-1].kind == "pool_done"
    assert result.events[-1].n_tot == 0


def test_small_systems_survive_going_idle(three_type_stationary, three_type_stationary_equilibrium):
    horizon = 40 / three_type_stationary.lam
    for seed in range(20):
        result = run(three_type_stationary, three_type_stationary_equilibrium, 5, horizon, seed=seed)
        assert np.isfinite(result.ntot_over_n).all()


def test_isolated_jobs_follow_littles_law(single_type):
    # λ tiny: jobs practically never overlap, so each is served alone at the full pool rate
    result = run(single_type, Policy.ones(1), 1, 1e6, seed=3)
    done = [j.sojourn for j in result.jobs if j.phase is JobPhase.DONE]
    assert len(done) > 500
    expected = 1 / 20 + 1 / single_type.f_per
    assert np.mean(done) == pytest.approx(expected, rel=0.05)


@pytest.mark.parametrize("sharing", ["system", "pool"])
def test_pool_work_is_conserved(three_type_stationary, three_type_stationary_equilibrium, sharing):
    n = 10
    result = run(three_type_stationary, three_type_stationary_equilibrium, n, 150.0, pool_sharing=sharing, record_events=True)
    f_pool = three_type_stationary.f_pool(n)
    events = result.events
    checked = 0
    for prev, cur in zip(events, events[1:]):
        k = prev.pool_size
        if k == 0:
            continue
        drain_rate = f_pool if sharing == "pool" else f_pool * k / prev.n_tot
        expected = prev.work_after - drain_rate * (cur.time - prev.time)
        assert cur.work_before == pytest.approx(expected, rel=1e-9, abs=1e-9)
        checked += 1
    assert checked > 100


def test_event_log_is_deterministic(three_type_stationary, three_type_stationary_equilibrium, tmp_path):
    a = run(three_type_stationary, three_type_stationary_equilibrium, 10, 30.0, seed=9, record_events=True)
    b = run(three_type_stationary, three_type_stationary_equilibrium, 10, 30.0, seed=9, record_events=True)
    assert a.events == b.events
    path_a = write_event_log(a.events, tmp_path / "a.log")
    path_b = write_event_log(b.events, tmp_path / "b.log")
    assert path_a.read_bytes() == path_b.read_bytes()
    assert path_a.read_text().startswith("# time job_id kind pool_size n_tot")


def test_every_job_passes_through_legal_phases(three_type_stationary, three_type_stationary_equilibrium):
    result = run(three_type_stationary, three_type_stationary_equilibrium, 10, 30.0)
    for job in result.jobs:
        if job.offloaded:
            assert job.phase in (JobPhase.TRANSMITTING, JobPhase.IN_POOL, JobPhase.DONE)
        else:
            assert job.phase in (JobPhase.LOCAL, JobPhase.DONE)
    with pytest.raises(RuntimeError):
        result.jobs[0].advance(JobPhase.TRANSMITTING)


def test_trajectory_argument_validation(three_type_stationary):
    with pytest.raises(ValidationError):
        run(three_type_stationary, Policy.zeros(3), 0, 10.0)
    with pytest.raises(ValidationError):
        run(three_type_stationary, Policy.zeros(3), 5, 0.0)
    with pytest.raises(ValidationError):
        run(three_type_stationary, Policy.zeros(3), 5, 10.0, pool_sharing="fifo")


# ---------------------------------------------------------------- ensembles

def test_ensemble_all_local(simulator, three_type_stationary):
    ensemble = simulator.run_ensemble(three_type_stationary, Policy.zeros(3), 10, horizon=20.0, trajectories=5)
    assert_array_equal(ensemble.mean_ntot_over_N, 0.0)
    assert_array_equal(ensemble.ci68_halfwidth, 0.0)


def test_ensemble_needs_two_trajectories(simulator, three_type_stationary):
    with pytest.raises(InsufficientSamplesError):
        simulator.run_ensemble(three_type_stationary, Policy.zeros(3), 10, trajectories=1)


def test_ensemble_rejects_unsorted_grid(simulator, three_type_stationary):
    with pytest.raises(ValidationError):
        simulator.run_ensemble(three_type_stationary, Policy.zeros(3), 10, horizon=10.0, grid=[0.0, 5.0, 2.0], trajectories=2)


def test_ensemble_independent_of_worker_count(cfg, three_type_stationary, three_type_stationary_equilibrium):
    kwargs = dict(horizon=20.0, trajectories=24, seed=5)
    serial = QueueSimulator(dataclasses.replace(cfg, workers=1)).run_ensemble(
        three_type_stationary, three_type_stationary_equilibrium, 10, **kwargs,
    )
    parallel = QueueSimulator(dataclasses.replace(cfg, workers=3)).run_ensemble(
        three_type_stationary, three_type_stationary_equilibrium, 10, **kwargs,
    )
    assert_array_equal(serial.mean_ntot_over_N, parallel.mean_ntot_over_N)
    assert_array_equal(serial.ci68_halfwidth, parallel.ci68_halfwidth)


def test_confidence_interval_shrinks_with_more_trajectories(simulator, three_type_stationary, three_type_stationary_equilibrium):
    horizon = 60.0
    small = simulator.run_ensemble(three_type_stationary, three_type_stationary_equilibrium, 10, horizon=horizon, trajectories=100)
    large = simulator.run_ensemble(three_type_stationary, three_type_stationary_equilibrium, 10, horizon=horizon, trajectories=200)
    tail = small.time_grid >= horizon / 2
    ratio = large.ci68_halfwidth[tail].mean() / small.ci68_halfwidth[tail].mean()
    assert ratio == pytest.approx(1 / np.sqrt(2), rel=0.2)


def test_default_horizon_and_grid(simulator, three_type_stationary):
    horizon = simulator.default_horizon(three_type_stationary)
    assert horizon == pytest.approx(40 / 0.225)
    grid = simulator.default_grid(horizon)
    assert len(grid) == 50
    assert grid[0] == 0.0 and grid[-1] == pytest.approx(horizon)


@pytest.mark.slow
def test_large_systems_approach_mean_field(simulator, three_type_stationary, three_type_stationary_equilibrium):
    prediction = stationary_prediction(three_type_stationary, three_type_stationary_equilibrium)
    gaps = {}
    for n in (5, 100):
        ensemble = simulator.run_ensemble(
            three_type_stationary, three_type_stationary_equilibrium, n, trajectories=1000, seed=0, workers=4,
        )
        gaps[n] = abs(ensemble.tail_mean() - prediction)
        if n == 100:
            assert ensemble.tail_mean() == pytest.approx(prediction, rel=0.1)
    assert gaps[100] < gaps[5]


def test_moderate_system_tracks_mean_field(simulator, three_type_stationary, three_type_stationary_equilibrium):
    ensemble = simulator.run_ensemble(
        three_type_stationary, three_type_stationary_equilibrium, 100, horizon=100.0, trajectories=20, seed=1,
    )
    assert ensemble.tail_mean() == pytest.approx(0.025, abs=0.005)
