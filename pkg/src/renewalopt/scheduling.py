"""Multi-server energy-aware scheduling instance.

N homogeneous servers each repeat a two-phase cycle: pick a job class, serve
a batch for a geometrically distributed number of slots H (crediting a
uniform-integer job count at the end of the service phase, energy e_hat for
the batch), then idle for a geometric number of slots I at idle power p.  The
goal is to minimize time-average energy while serving each class at least at
its Poisson arrival rate lambda_l.

The rate constraint "time-average service >= lambda_l" is a >= constraint;
the controller and queues work with <= constraints, so the builder negates
both sides: per-frame metric totals are -mu (job counts) and the external
process emits -arrivals.  The virtual queue recursion then reads
Q_l[t+1] = max{Q_l[t] + arrivals_l[t] - served_l[t], 0}, i.e. the familiar
queue of unserved work.

Per-frame quantities of class c (frame length T = H + I):
    energy total   e_hat + p * I, spread uniformly over the frame's slots
    service total  -draw from Uniform{low..high} on the last service slot
    triple         (e_hat + p * idle_mean, -jobs_mean * e_c, service_mean + idle_mean)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .benchmark import StationaryLP
from .core import FrameOutcome, PerformanceTriple, RenewalSystemModel
from .simulation import CappedPoisson, ExternalProcess, default_poisson_cap

__all__ = [
    "ServerClassParams",
    "SchedulingInstance",
    "ServiceIdleSampler",
    "TABLE1",
    "build_instance",
    "scheduling_objective",
]


@dataclass(frozen=True)
class ServerClassParams:
    """One job class: arrivals, service/idle phases, job counts, energy."""

    arrival_rate: float
    service_mean: float
    jobs_low: int
    jobs_high: int
    energy: float
    idle_mean: float
    idle_power: float

    def __post_init__(self):
        if not self.arrival_rate > 0:
            raise ValueError("arrival_rate must be positive")
        if not (self.service_mean >= 1 and self.idle_mean >= 1):
            raise ValueError("phase means must be >= 1 slot")
        if int(self.jobs_low) != self.jobs_low or int(self.jobs_high) != self.jobs_high:
            raise ValueError("job-count support endpoints must be integers")
        object.__setattr__(self, "jobs_low", int(self.jobs_low))
        object.__setattr__(self, "jobs_high", int(self.jobs_high))
        if not 0 < self.jobs_low <= self.jobs_high:
            raise ValueError("need 0 < jobs_low <= jobs_high")
        if (self.jobs_low + self.jobs_high) % 2 != 0:
            raise ValueError("job-count support must have an integer midpoint")
        if self.energy < 0 or self.idle_power < 0:
            raise ValueError("energy parameters must be nonnegative")

    @property
    def jobs_mean(self) -> float:
        return (self.jobs_low + self.jobs_high) / 2

    @property
    def frame_mean(self) -> float:
        return self.service_mean + self.idle_mean

    @property
    def energy_mean(self) -> float:
        return self.energy + self.idle_power * self.idle_mean


@dataclass(frozen=True)
class SchedulingInstance:
    """Homogeneous servers, one service mode per class."""

    n_servers: int
    classes: tuple[ServerClassParams, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if self.n_servers < 1:
            raise ValueError("need at least one server")
        if not self.classes:
            raise ValueError("need at least one class")

    @property
    def n_classes(self) -> int:
        return len(self.classes)


TABLE1 = SchedulingInstance(
    n_servers=5,
    classes=(
        ServerClassParams(2.0, 5.5, 9, 21, 16.0, 2.5, 3.0),
        ServerClassParams(3.0, 4.6, 15, 27, 20.0, 4.3, 3.0),
        ServerClassParams(4.0, 3.8, 11, 23, 13.0, 3.7, 3.0),
    ),
)


@dataclass(frozen=True)
class ServiceIdleSampler:
    """Frame sampler for one class; draw order is service, idle, job count."""

    params: ServerClassParams
    class_index: int
    n_classes: int

    def sample(self, rng: np.random.Generator) -> FrameOutcome:
        p = self.params
        service = int(rng.geometric(1.0 / p.service_mean))
        idle = int(rng.geometric(1.0 / p.idle_mean))
        jobs = int(rng.integers(p.jobs_low, p.jobs_high + 1))
        length = service + idle
        energy_total = p.energy + p.idle_power * idle
        y = np.full(length, energy_total / length)
        z = np.zeros((length, self.n_classes))
        z[service - 1, self.class_index] = -jobs
        return FrameOutcome(length, y, z)


def _class_triple(params: ServerClassParams, class_index: int, n_classes: int) -> PerformanceTriple:
    z_hat = np.zeros(n_classes)
    z_hat[class_index] = -params.jobs_mean
    return PerformanceTriple(params.energy_mean, z_hat, params.frame_mean)


def _geometric_second_moment(mean: float) -> float:
    return 2 * mean * mean - mean


def _frame_second_moment(params: ServerClassParams) -> float:
    # independent phases: E[(H+I)^2] = E[H^2] + 2 E[H] E[I] + E[I^2]; by
    # memorylessness this also bounds every residual E[(T-s)^2 | T >= s]
    return (
        _geometric_second_moment(params.service_mean)
        + 2 * params.service_mean * params.idle_mean
        + _geometric_second_moment(params.idle_mean)
    )


def build_instance(
    inst: SchedulingInstance,
) -> tuple[list[RenewalSystemModel], ExternalProcess, StationaryLP]:
    """Materialize models, external process, and benchmark LP for an instance.

    Servers are homogeneous, so the returned model list repeats one immutable
    model object n_servers times.  The external process emits negated capped
    Poisson arrivals (see the module docstring for the sign convention); the
    LP carries d = -lambda with "<=" rows, matching the internal convention.
    """
    n_classes = inst.n_classes
    triples = tuple(_class_triple(c, i, n_classes) for i, c in enumerate(inst.classes))
    samplers = tuple(ServiceIdleSampler(c, i, n_classes) for i, c in enumerate(inst.classes))

    # per-slot extrema: energy peaks on an all-minimum frame (H = I = 1),
    # service impulses peak at the top of the job-count support
    y_max = max((c.energy + c.idle_power) / 2 for c in inst.classes)
    z_max = float(max(c.jobs_high for c in inst.classes))
    residual_bound = max(_frame_second_moment(c) for c in inst.classes)
    model = RenewalSystemModel(triples, samplers, y_max, z_max, residual_bound)
    models = [model] * inst.n_servers

    external = ExternalProcess(
        tuple(
            CappedPoisson(rate=c.arrival_rate, cap=default_poisson_cap(c.arrival_rate), scale=-1.0)
            for c in inst.classes
        )
    )
    d = np.array([-c.arrival_rate for c in inst.classes])
    lp = StationaryLP.from_models(models, d)
    return models, external, lp


def scheduling_objective(inst: SchedulingInstance, mode: int, q, v: float) -> float:
    """The per-frame ratio of serving class `mode` (1-based) under queues q.

    Computes (V*(e_hat + p*idle_mean) - q_mode * jobs_mean) / frame_mean,
    which equals the generic ratio objective V*f_hat + <q, g_hat> of the
    built instance's corresponding action.
    """
    if not 1 <= mode <= inst.n_classes:
        raise ValueError(f"mode must be in 1..{inst.n_classes}, got {mode}")
    params = inst.classes[mode - 1]
    qv = np.asarray(q, dtype=float).reshape(-1)
    if qv.shape[0] != inst.n_classes:
        raise ValueError("queue length must equal the number of classes")
    v = float(v)
    return (v * params.energy_mean - qv[mode - 1] * params.jobs_mean) / params.frame_mean
