import numpy as np
import pytest

from renewalopt.distributions import (
    CompoundLength,
    ConstantRateSampler,
    DeterministicLength,
    GeometricLength,
    UniformIntLength,
    constant_rate_model,
)


def test_deterministic_moments_and_samples():
    d = DeterministicLength(4)
    assert d.mean == 4.0
    assert d.second_moment == 16.0
    assert d.sample(np.random.default_rng(0)) == 4
    with pytest.raises(ValueError):
        DeterministicLength(0)


def test_uniform_moments_match_enumeration():
    u = UniformIntLength(3, 7)
    support = np.arange(3, 8)
    assert u.mean == support.mean()
    assert u.second_moment == pytest.approx((support**2).mean(), abs=1e-12)
    rng = np.random.default_rng(1)
    draws = [u.sample(rng) for _ in range(2000)]
    assert set(draws) == set(range(3, 8))
    with pytest.raises(ValueError):
        UniformIntLength(2, 1)
    with pytest.raises(ValueError):
        UniformIntLength(0, 3)


def test_geometric_moments_match_series():
    g = GeometricLength(2.0)
    # direct series for P(T = t) = (1 - p)^(t-1) p with p = 1/2
    series_mean = sum(t * 0.5**t for t in range(1, 300))
    series_m2 = sum(t**2 * 0.5**t for t in range(1, 300))
    assert g.mean == pytest.approx(series_mean, abs=1e-12)
    assert g.second_moment == pytest.approx(series_m2, abs=1e-12)

    g = GeometricLength(5.5)
    p = 1 / 5.5
    series_m2 = sum(t**2 * (1 - p) ** (t - 1) * p for t in range(1, 2000))
    assert g.second_moment == pytest.approx(2 * 5.5**2 - 5.5, abs=1e-12)
    assert g.second_moment == pytest.approx(series_m2, abs=1e-9)
    with pytest.raises(ValueError):
        GeometricLength(0.9)


def test_geometric_sampling_statistics():
    g = GeometricLength(5.5)
    rng = np.random.default_rng(11)
    draws = np.array([g.sample(rng) for _ in range(100_000)])
    assert draws.min() >= 1
    assert abs(draws.mean() - 5.5) < 0.07
    assert abs((draws.astype(float) ** 2).mean() - 55.0) < 1.5


def test_compound_moments_add_phases():
    # service geometric mean 5.5 plus idle geometric mean 2.5:
    # var(H) + var(I) + (mean sum)^2 = (55 - 30.25) + (10 - 6.25) + 64 = 92.5
    c = CompoundLength((GeometricLength(5.5), GeometricLength(2.5)))
    assert c.mean == 8.0
    assert c.second_moment == pytest.approx(92.5, abs=1e-12)
    rng = np.random.default_rng(2)
    draws = np.array([c.sample(rng) for _ in range(50_000)])
    assert draws.min() >= 2
    assert abs(draws.mean() - 8.0) < 0.1
    assert abs((draws.astype(float) ** 2).mean() - 92.5) < 1.5


def test_constant_rate_sampler_triple_and_frames():
    s = ConstantRateSampler(DeterministicLength(3), 2.0, np.array([1.0, -1.0]))
    triple = s.triple()
    assert triple.y_hat == 6.0
    assert np.array_equal(triple.z_hat, [3.0, -3.0])
    assert triple.t_hat == 3.0
    out = s.sample(np.random.default_rng(0))
    assert out.length == 3
    assert np.array_equal(out.per_slot_penalty, [2.0, 2.0, 2.0])
    assert np.array_equal(out.per_slot_metrics, [[1.0, -1.0]] * 3)


def test_constant_rate_model_defaults():
    model = constant_rate_model(
        penalty_rates=[1.0, -3.0],
        metric_rates=[[0.5], [2.0]],
        lengths=[GeometricLength(2.0), DeterministicLength(5)],
    )
    assert model.y_max == 3.0
    assert model.z_max == 2.0
    assert model.residual_bound == 25.0  # max second moment across lengths
    with pytest.raises(ValueError):
        constant_rate_model([1.0], [[0.0], [0.0]], [DeterministicLength(1)])
