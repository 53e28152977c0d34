import numpy as np
import pytest

from renewalopt.controller import solve_enumerate
from renewalopt.core import validate_model
from renewalopt.distributions import CompoundLength, GeometricLength
from renewalopt.scheduling import (
    TABLE1,
    SchedulingInstance,
    ServerClassParams,
    ServiceIdleSampler,
    build_instance,
    scheduling_objective,
)
from renewalopt.simulation import default_poisson_cap


def test_class_params_derived_quantities():
    c = ServerClassParams(2.0, 5.5, 9, 21, 16.0, 2.5, 3.0)
    assert c.jobs_mean == 15.0
    assert c.frame_mean == 8.0
    assert c.energy_mean == 16.0 + 3.0 * 2.5


def test_class_params_validation():
    with pytest.raises(ValueError):
        ServerClassParams(0.0, 5.5, 9, 21, 16.0, 2.5, 3.0)
    with pytest.raises(ValueError):
        ServerClassParams(2.0, 0.5, 9, 21, 16.0, 2.5, 3.0)
    with pytest.raises(ValueError):
        ServerClassParams(2.0, 5.5, 9, 20, 16.0, 2.5, 3.0)  # odd-width support
    with pytest.raises(ValueError):
        ServerClassParams(2.0, 5.5, 0, 20, 16.0, 2.5, 3.0)
    with pytest.raises(ValueError):
        ServerClassParams(2.0, 5.5, 21, 9, 16.0, 2.5, 3.0)
    with pytest.raises(ValueError):
        SchedulingInstance(0, TABLE1.classes)
    with pytest.raises(ValueError):
        SchedulingInstance(5, ())


def test_preset_shape():
    assert TABLE1.n_servers == 5
    assert TABLE1.n_classes == 3
    assert [c.arrival_rate for c in TABLE1.classes] == [2.0, 3.0, 4.0]
    assert all(c.idle_power == 3.0 for c in TABLE1.classes)


def test_built_triples_match_hand_arithmetic(table1_env):
    model = table1_env["models"][0]
    assert len(table1_env["models"]) == 5
    # homogeneous servers share one immutable model object
    assert all(m is model for m in table1_env["models"])
    assert model.n_actions == 3 and model.n_metrics == 3
    assert np.array_equal(model.y_hats, [23.5, 20.0 + 3.0 * 4.3, 13.0 + 3.0 * 3.7])
    assert np.array_equal(model.t_hats, [8.0, 4.6 + 4.3, 7.5])
    expected_z = np.diag([-15.0, -21.0, -17.0])
    assert np.array_equal(model.z_hats, expected_z)


def test_built_bounds(table1_env):
    model = table1_env["models"][0]
    assert model.y_max == (20.0 + 3.0) / 2  # class 2 all-minimum frame
    assert model.z_max == 27.0
    # largest frame second moment, assembled from geometric phase moments
    moments = [
        CompoundLength(
            (GeometricLength(c.service_mean), GeometricLength(c.idle_mean))
        ).second_moment
        for c in TABLE1.classes
    ]
    assert model.residual_bound == max(moments)
    assert model.residual_bound == pytest.approx(109.96, abs=1e-9)


def test_built_external_process(table1_env):
    external = table1_env["external"]
    assert external.n_metrics == 3
    assert np.array_equal(external.means(), [-2.0, -3.0, -4.0])
    caps = [default_poisson_cap(c.arrival_rate) for c in TABLE1.classes]
    assert caps == [17, 21, 24]
    assert external.max_abs() == 24.0
    mat = external.sample_matrix(np.random.default_rng(0), 5000)
    assert mat.max() <= 0.0
    assert mat.min() >= -24.0


def test_built_lp_orientation(table1_env):
    lp = table1_env["lp"]
    assert lp.directions == ("<=",) * 3
    assert np.array_equal(lp.d, [-2.0, -3.0, -4.0])
    assert np.allclose(lp.f_hats[0], [23.5 / 8.0, 32.9 / (4.6 + 4.3), 24.1 / 7.5])


def test_sampler_emits_one_service_impulse():
    rng = np.random.default_rng(14)
    params = TABLE1.classes[1]
    sampler = ServiceIdleSampler(params, 1, 3)
    for _ in range(500):
        out = sampler.sample(rng)
        nz_rows, nz_cols = np.nonzero(out.per_slot_metrics)
        assert len(nz_rows) == 1
        assert nz_cols[0] == 1
        jobs = -out.per_slot_metrics[nz_rows[0], 1]
        assert jobs == int(jobs)
        assert params.jobs_low <= jobs <= params.jobs_high
        # at least one idle slot follows the service phase
        assert nz_rows[0] <= out.length - 2
        # energy is flat across the frame and sums to batch + idle draw
        service = nz_rows[0] + 1
        idle = out.length - service
        assert np.allclose(out.per_slot_penalty, out.per_slot_penalty[0])
        assert out.total_penalty == pytest.approx(
            params.energy + params.idle_power * idle, abs=1e-9
        )


def test_sampled_frames_match_declared_triples(table1_env):
    report = validate_model(table1_env["models"][0], 100_000)
    assert report.ok, report.flags
    for act in report.actions:
        assert act.bound_violations == 0


def test_scheduling_objective_examples(table1_env):
    assert scheduling_objective(TABLE1, 2, np.ones(3), 0.0) == -21.0 / (4.6 + 4.3)
    assert scheduling_objective(TABLE1, 1, np.zeros(3), 1.0) == 2.9375
    # picking the best mode by this formula agrees with the generic solver
    model = table1_env["models"][0]
    rng = np.random.default_rng(19)
    for _ in range(100):
        q = rng.uniform(0, 50, 3)
        v = float(rng.uniform(0, 100))
        values = [scheduling_objective(TABLE1, m, q, v) for m in (1, 2, 3)]
        sol = solve_enumerate(model, q, v)
        assert np.allclose(values, v * model.y_hats / model.t_hats
                           + (model.z_hats / model.t_hats[:, None]) @ q, atol=1e-12)
        assert min(values) == pytest.approx(sol.value, abs=1e-12)


def test_scheduling_objective_validation():
    with pytest.raises(ValueError):
        scheduling_objective(TABLE1, 0, np.zeros(3), 1.0)
    with pytest.raises(ValueError):
        scheduling_objective(TABLE1, 4, np.zeros(3), 1.0)
    with pytest.raises(ValueError):
        scheduling_objective(TABLE1, 1, np.zeros(2), 1.0)
