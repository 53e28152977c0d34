import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renewalopt.core import (
    ActionId,
    FrameOutcome,
    PerformanceTriple,
    RenewalSystemModel,
    performance_vector,
    sample_frame,
    validate_model,
)
from renewalopt.distributions import (
    ConstantRateSampler,
    DeterministicLength,
    GeometricLength,
    constant_rate_model,
)


def test_performance_vector_divides_totals_by_length():
    triple = PerformanceTriple(2.0, [4.0], 2.0)
    vec = performance_vector(triple)
    assert vec.f_hat == 1.0
    assert np.array_equal(vec.g_hat, [2.0])


def test_performance_vector_zero_totals():
    vec = performance_vector(PerformanceTriple(0.0, [0.0, 0.0], 3.0))
    assert vec.f_hat == 0.0
    assert np.array_equal(vec.g_hat, [0.0, 0.0])


def test_performance_vector_energy_class_example():
    # server class with service mean 5.5, idle mean 2.5, energy 16, idle power 3:
    # frame energy 16 + 3 * 2.5 over mean length 8 slots
    triple = PerformanceTriple(16.0 + 3 * 2.5, [-15.0], 5.5 + 2.5)
    vec = performance_vector(triple)
    assert vec.f_hat == pytest.approx(2.9375, abs=1e-12)
    assert vec.g_hat[0] == pytest.approx(-15.0 / 8.0, abs=1e-12)


def test_triple_rejects_short_frames():
    with pytest.raises(ValueError):
        PerformanceTriple(1.0, [0.0], 0.5)
    with pytest.raises(ValueError):
        PerformanceTriple(1.0, [0.0], 0.0)


def test_triple_array_is_read_only():
    triple = PerformanceTriple(1.0, [2.0], 1.0)
    with pytest.raises(ValueError):
        triple.z_hat[0] = 5.0


def test_frame_outcome_shape_checks():
    with pytest.raises(ValueError):
        FrameOutcome(0, np.zeros(0), np.zeros((0, 1)))
    with pytest.raises(ValueError):
        FrameOutcome(2, np.zeros(3), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        FrameOutcome(2, np.zeros(2), np.zeros((3, 1)))
    with pytest.raises(ValueError):
        FrameOutcome(2, np.zeros(2), np.zeros(2))  # metrics must be 2-d


def test_frame_outcome_totals():
    out = FrameOutcome(3, np.array([1.0, 2.0, 3.0]), np.array([[1.0], [0.0], [-1.0]]))
    assert out.total_penalty == 6.0
    assert np.array_equal(out.total_metrics, [0.0])


def test_model_rejects_inconsistent_declarations():
    triple = PerformanceTriple(4.0, [0.0], 1.0)
    sampler = ConstantRateSampler(DeterministicLength(1), 4.0, np.array([0.0]))
    with pytest.raises(ValueError):
        RenewalSystemModel((), (), 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        RenewalSystemModel((triple,), (sampler, sampler), 5.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        # |y_hat| = 4 > y_max * t_hat = 3
        RenewalSystemModel((triple,), (sampler,), 3.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        RenewalSystemModel((triple,), (sampler,), 5.0, 1.0, 0.5)
    mixed = (triple, PerformanceTriple(0.0, [0.0, 0.0], 1.0))
    with pytest.raises(ValueError):
        RenewalSystemModel(mixed, (sampler, sampler), 5.0, 1.0, 1.0)


def test_model_caches_action_arrays():
    model = constant_rate_model(
        penalty_rates=[1.0, 2.0],
        metric_rates=[[0.5], [-0.5]],
        lengths=[DeterministicLength(2), DeterministicLength(4)],
    )
    assert model.n_actions == 2
    assert model.n_metrics == 1
    assert np.array_equal(model.y_hats, [2.0, 8.0])
    assert np.array_equal(model.z_hats, [[1.0], [-2.0]])
    assert np.array_equal(model.t_hats, [2.0, 4.0])
    vecs = model.performance_vectors()
    assert vecs[0].f_hat == 1.0 and vecs[1].f_hat == 2.0
    with pytest.raises(ValueError):
        model.y_hats[0] = 99.0


def test_sample_frame_deterministic_action():
    model = constant_rate_model([3.0], [[0.0]], [DeterministicLength(1)])
    out = sample_frame(model, 0, np.random.default_rng(0))
    assert out.length == 1
    assert np.array_equal(out.per_slot_penalty, [3.0])
    assert np.array_equal(out.per_slot_metrics, [[0.0]])


def test_sample_frame_accepts_action_id_and_checks_range():
    model = constant_rate_model(
        [1.0, 2.0], [[0.0], [0.0]], [DeterministicLength(1), DeterministicLength(2)]
    )
    out = sample_frame(model, ActionId(0, 1), np.random.default_rng(0))
    assert out.length == 2
    with pytest.raises(IndexError):
        sample_frame(model, 2, np.random.default_rng(0))
    with pytest.raises(IndexError):
        sample_frame(model, ActionId(0, 5), np.random.default_rng(0))


def test_sample_frame_same_seed_same_outcome():
    model = constant_rate_model([1.0], [[2.0]], [GeometricLength(8.0)])
    a = sample_frame(model, 0, np.random.default_rng(42))
    b = sample_frame(model, 0, np.random.default_rng(42))
    assert a.length == b.length
    assert np.array_equal(a.per_slot_penalty, b.per_slot_penalty)
    assert np.array_equal(a.per_slot_metrics, b.per_slot_metrics)


def test_sample_frame_geometric_mean():
    model = constant_rate_model([1.0], [[0.0]], [GeometricLength(8.0)])
    rng = np.random.default_rng(7)
    lengths = [sample_frame(model, 0, rng).length for _ in range(100_000)]
    assert abs(np.mean(lengths) - 8.0) < 0.1
    assert min(lengths) >= 1


@given(
    rate=st.floats(-10, 10, allow_nan=False),
    mean_len=st.floats(1, 20),
    seed=st.integers(0, 2**32 - 1),
)
@settings(max_examples=50, deadline=None)
def test_constant_rate_frames_respect_declared_bounds(rate, mean_len, seed):
    model = constant_rate_model([rate], [[rate / 2]], [GeometricLength(mean_len)])
    out = sample_frame(model, 0, np.random.default_rng(seed))
    assert np.all(np.abs(out.per_slot_penalty) <= model.y_max)
    assert np.all(np.abs(out.per_slot_metrics) <= model.z_max)
    vec = model.performance_vectors()[0]
    assert abs(vec.f_hat) <= model.y_max + 1e-12
    assert np.all(np.abs(vec.g_hat) <= model.z_max + 1e-12)


def test_validate_model_deterministic_unit_frames():
    model = constant_rate_model([3.0], [[1.0]], [DeterministicLength(1)])
    report = validate_model(model, 50)
    assert report.ok
    act = report.actions[0]
    assert act.bound_violations == 0
    assert act.y_mean == 3.0 and act.y_se == 0.0
    assert act.t_mean == 1.0
    # with T = 1 always, the residual at offset 0 is exactly 1
    assert act.residual_estimates[0] == 1.0
    assert not act.residual_flags.any()


def test_validate_model_catches_lying_declaration():
    # declared mean penalty 4 per unit frame, sampler actually emits 7 per slot
    triple = PerformanceTriple(4.0, [0.0], 1.0)
    sampler = ConstantRateSampler(DeterministicLength(1), 7.0, np.array([0.0]))
    model = RenewalSystemModel((triple,), (sampler,), 5.0, 1.0, 1.0)
    report = validate_model(model, 200)
    assert not report.ok
    act = report.actions[0]
    assert act.bound_violations == 200  # every frame breaks the per-slot bound
    assert any("y_hat" in f for f in report.flags)
    assert any("bound" in f for f in report.flags)


def test_validate_model_residual_flagging():
    # geometric mean 2: E[T^2] = 2*4 - 2 = 6, verified against a direct series
    series = sum(t**2 * 0.5**t for t in range(1, 200))
    assert abs(series - 6.0) < 1e-12
    length = GeometricLength(2.0)
    assert length.second_moment == 6.0

    def build(bound):
        triple = PerformanceTriple(0.0, [0.0], 2.0)
        sampler = ConstantRateSampler(length, 0.0, np.array([0.0]))
        return RenewalSystemModel((triple,), (sampler,), 1.0, 1.0, bound)

    rng = np.random.default_rng(3)
    tight = validate_model(build(6.0), 50_000, rng)
    assert not any("residual" in f for f in tight.flags)
    rng = np.random.default_rng(3)
    low = validate_model(build(2.0), 50_000, rng)
    assert any("residual" in f for f in low.flags)


def test_validate_model_ignores_thinly_sampled_offsets():
    # geometric mean 2 with the true supremum declared: E[(T-s)^2 | T >= s]
    # is 6 at s=0 and 10 - 6 + 1 = 5 for s >= 1, so bound 6 is honest
    length = GeometricLength(2.0)
    triple = PerformanceTriple(0.0, [0.0], 2.0)
    sampler = ConstantRateSampler(length, 0.0, np.array([0.0]))
    model = RenewalSystemModel((triple,), (sampler,), 1.0, 1.0, 6.0)
    report = validate_model(model, 200, np.random.default_rng(3))
    act = report.actions[0]
    # a single length-13 frame is the only one reaching offset 7, so the
    # estimate there is (13 - 7)^2 = 36 with zero SE; that lone frame is
    # not evidence against the bound and must not flag the model
    assert act.residual_counts[7] == 1
    assert act.residual_estimates[7] == 36.0
    assert act.residual_ses[7] == 0.0
    assert not act.residual_flags[7]
    assert report.ok, report.flags


def test_validate_model_rejects_bad_sample_count():
    model = constant_rate_model([1.0], [[0.0]], [DeterministicLength(1)])
    with pytest.raises(ValueError):
        validate_model(model, 0)
