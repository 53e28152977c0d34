"""Frame-length distributions and simple frame samplers.

Length distributions produce integer frame lengths >= 1 and expose exact
moments so models can declare matching triples and residual bounds.  The
geometric distribution lives on support {1, 2, ...} and is parameterized by
its mean m via success probability 1/m, so non-integer means are honored
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .core import FrameOutcome, FrameSampler, PerformanceTriple, RenewalSystemModel

__all__ = [
    "LengthDistribution",
    "DeterministicLength",
    "UniformIntLength",
    "GeometricLength",
    "CompoundLength",
    "ConstantRateSampler",
    "constant_rate_model",
]


class LengthDistribution(Protocol):
    def sample(self, rng: np.random.Generator) -> int: ...

    @property
    def mean(self) -> float: ...

    @property
    def second_moment(self) -> float: ...


@dataclass(frozen=True)
class DeterministicLength:
    value: int

    def __post_init__(self):
        if int(self.value) != self.value or self.value < 1:
            raise ValueError("length must be an integer >= 1")
        object.__setattr__(self, "value", int(self.value))

    def sample(self, rng: np.random.Generator) -> int:
        return self.value

    @property
    def mean(self) -> float:
        return float(self.value)

    @property
    def second_moment(self) -> float:
        return float(self.value) ** 2


@dataclass(frozen=True)
class UniformIntLength:
    """Uniform on the integers {low, ..., high}, low >= 1."""

    low: int
    high: int

    def __post_init__(self):
        if int(self.low) != self.low or int(self.high) != self.high:
            raise ValueError("endpoints must be integers")
        object.__setattr__(self, "low", int(self.low))
        object.__setattr__(self, "high", int(self.high))
        if self.low < 1 or self.high < self.low:
            raise ValueError("need 1 <= low <= high")

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.low, self.high + 1))

    @property
    def mean(self) -> float:
        return (self.low + self.high) / 2

    @property
    def second_moment(self) -> float:
        n = self.high - self.low + 1
        var = (n * n - 1) / 12
        return var + self.mean**2


@dataclass(frozen=True)
class GeometricLength:
    """Geometric on {1, 2, ...} with the given mean (success prob 1/mean)."""

    mean_length: float

    def __post_init__(self):
        object.__setattr__(self, "mean_length", float(self.mean_length))
        if not self.mean_length >= 1.0:
            raise ValueError("geometric mean must be >= 1")

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.geometric(1.0 / self.mean_length))

    @property
    def mean(self) -> float:
        return self.mean_length

    @property
    def second_moment(self) -> float:
        # E[T^2] = (2 - p) / p^2 with p = 1/mean
        m = self.mean_length
        return 2 * m * m - m

    @property
    def p(self) -> float:
        return 1.0 / self.mean_length


@dataclass(frozen=True)
class CompoundLength:
    """Sum of independent phase lengths (e.g. service phase + idle phase)."""

    phases: tuple[LengthDistribution, ...]

    def __post_init__(self):
        phases = tuple(self.phases)
        object.__setattr__(self, "phases", phases)
        if not phases:
            raise ValueError("need at least one phase")

    def sample(self, rng: np.random.Generator) -> int:
        return sum(ph.sample(rng) for ph in self.phases)

    @property
    def mean(self) -> float:
        return sum(ph.mean for ph in self.phases)

    @property
    def second_moment(self) -> float:
        var = sum(ph.second_moment - ph.mean**2 for ph in self.phases)
        return var + self.mean**2


@dataclass(frozen=True, eq=False)
class ConstantRateSampler:
    """Frames with a random length and constant per-slot penalty and metrics."""

    length: LengthDistribution
    penalty_rate: float
    metric_rates: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "penalty_rate", float(self.penalty_rate))
        rates = np.array(self.metric_rates, dtype=float, copy=True).reshape(-1)
        rates.flags.writeable = False
        object.__setattr__(self, "metric_rates", rates)

    def sample(self, rng: np.random.Generator) -> FrameOutcome:
        t = self.length.sample(rng)
        y = np.full(t, self.penalty_rate)
        z = np.tile(self.metric_rates, (t, 1))
        return FrameOutcome(t, y, z)

    def triple(self) -> PerformanceTriple:
        m = self.length.mean
        return PerformanceTriple(self.penalty_rate * m, self.metric_rates * m, m)


def constant_rate_model(
    penalty_rates: Sequence[float],
    metric_rates: Sequence[Sequence[float]],
    lengths: Sequence[LengthDistribution],
    y_max: float | None = None,
    z_max: float | None = None,
    residual_bound: float | None = None,
) -> RenewalSystemModel:
    """Build a model whose actions emit constant per-slot rates.

    The per-slot rates are the performance vectors themselves, which makes
    these models convenient exact fixtures: f_hat = penalty rate and
    g_hat = metric rates for every action, for any length distribution.
    """
    if not len(penalty_rates) == len(metric_rates) == len(lengths):
        raise ValueError("one penalty rate, metric row, and length per action")
    samplers = tuple(
        ConstantRateSampler(length, pr, np.asarray(mr, dtype=float))
        for length, pr, mr in zip(lengths, penalty_rates, metric_rates)
    )
    triples = tuple(s.triple() for s in samplers)
    if y_max is None:
        y_max = max(abs(float(r)) for r in penalty_rates)
    if z_max is None:
        z_max = float(np.max(np.abs(np.asarray(metric_rates, dtype=float))))
    if residual_bound is None:
        residual_bound = max(1.0, max(length.second_moment for length in lengths))
    return RenewalSystemModel(triples, samplers, y_max, z_max, residual_bound)
