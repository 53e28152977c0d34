"""Slotted-time simulation of N asynchronous renewal systems.

Every system starts its first frame at slot 0 and starts a new frame the
slot after its previous frame ends, so the systems drift out of phase with
each other.  At a frame start the policy observes the current virtual queue
vector Q[t] (already updated through slot t-1) and picks an action; the
sampled frame then contributes its per-slot penalty and metrics on the slots
it covers.  Every slot the queue recursion

    Q[t+1] = max{Q[t] + sum_n z^n[t] - d[t], 0}

is applied with exactly the arithmetic of ``controller.queue_update`` so
trajectories replay bit-for-bit.

Seed derivation: system n draws from PCG64 seeded with
SeedSequence(seed, spawn_key=(0, n)); the external process uses
spawn_key=(1,).  Adding or removing systems therefore never perturbs the
other streams.

With ``check=True`` two exact invariants are asserted while running: the
minimality certificate of every frame decision (``ratio_bound_holds``) and
the sample-path lower bound Q_l[t] >= sum_{s<t}(sum_n z_l^n[s] - d_l[s]),
which holds exactly in floating point because both sides add the same
per-slot deltas and the queue side only ever clamps upward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .controller import (
    SubproblemSolution,
    TradeoffParameter,
    ratio_bound_holds,
    solve_bisection,
    solve_enumerate,
)
from .core import ActionId, PerformanceVector, RenewalSystemModel, sample_frame

__all__ = [
    "FixedValue",
    "UniformIntRange",
    "CappedPoisson",
    "ExternalProcess",
    "default_poisson_cap",
    "DppRatioPolicy",
    "RandomizedStationaryPolicy",
    "CheckViolation",
    "FrameStats",
    "QueueTrajectory",
    "SlotSeries",
    "RunMetrics",
    "DriftDiagnostic",
    "uniform_frame_drift_bound",
    "run",
    "StationarySweepReport",
    "SystemSweepStats",
    "run_stationary_sweep",
    "collect_drift_diagnostic",
]


# ---------------------------------------------------------------------------
# external i.i.d. slot process


def default_poisson_cap(rate: float) -> int:
    """Truncation point far enough out that the clipped mass is negligible."""
    return math.ceil(rate + 10.0 * math.sqrt(rate))


@dataclass(frozen=True)
class FixedValue:
    value: float

    @property
    def mean(self) -> float:
        return float(self.value)

    @property
    def max_abs(self) -> float:
        return abs(float(self.value))

    def sample_array(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, float(self.value))


@dataclass(frozen=True)
class UniformIntRange:
    low: int
    high: int
    scale: float = 1.0

    def __post_init__(self):
        if self.high < self.low:
            raise ValueError("need low <= high")

    @property
    def mean(self) -> float:
        return self.scale * (self.low + self.high) / 2

    @property
    def max_abs(self) -> float:
        return max(abs(self.scale * self.low), abs(self.scale * self.high))

    def sample_array(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.scale * rng.integers(self.low, self.high + 1, size=n).astype(float)


@dataclass(frozen=True)
class CappedPoisson:
    """Poisson(rate) clipped at cap; scale=-1 flips the sign of every draw.

    The clip keeps |d[t]| bounded as the analysis assumes.  With the default
    cap of mean + 10*sqrt(mean) the clipped probability mass is below 1e-10
    for the rates used here, so the stated mean ignores the truncation bias.
    """

    rate: float
    cap: int | None = None
    scale: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if self.cap is None:
            object.__setattr__(self, "cap", default_poisson_cap(self.rate))
        if self.cap < self.rate:
            raise ValueError("cap below the mean would bias every sample")

    @property
    def mean(self) -> float:
        return self.scale * self.rate

    @property
    def max_abs(self) -> float:
        return abs(self.scale) * self.cap

    def sample_array(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.scale * np.minimum(rng.poisson(self.rate, size=n), self.cap).astype(float)


@dataclass(frozen=True, eq=False)
class ExternalProcess:
    """Independent per-constraint slot distributions, i.i.d. across slots."""

    coords: tuple

    def __post_init__(self):
        coords = tuple(self.coords)
        object.__setattr__(self, "coords", coords)
        if not coords:
            raise ValueError("need at least one coordinate")

    @property
    def n_metrics(self) -> int:
        return len(self.coords)

    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.coords])

    def max_abs(self) -> float:
        return max(c.max_abs for c in self.coords)

    def sample_matrix(self, rng: np.random.Generator, slots: int) -> np.ndarray:
        return np.column_stack([c.sample_array(rng, slots) for c in self.coords])


# ---------------------------------------------------------------------------
# policies


@dataclass(frozen=True)
class DppRatioPolicy:
    """Minimize (V*y_hat + <Q, z_hat>)/t_hat at every frame start."""

    v: TradeoffParameter
    solver: str = "enumerate"
    tol: float = 1e-9

    def __post_init__(self):
        if not isinstance(self.v, TradeoffParameter):
            object.__setattr__(self, "v", TradeoffParameter(float(self.v)))
        if self.solver not in ("enumerate", "bisection"):
            raise ValueError('solver must be "enumerate" or "bisection"')


@dataclass(frozen=True, eq=False)
class RandomizedStationaryPolicy:
    """Draw each frame's action i.i.d. from fixed per-system weights."""

    weights: tuple[np.ndarray, ...]

    def __post_init__(self):
        cleaned = []
        for w in self.weights:
            arr = np.array(w, dtype=float).reshape(-1)
            if np.any(arr < -1e-9):
                raise ValueError("weights must be nonnegative")
            arr = np.maximum(arr, 0.0)
            total = arr.sum()
            if not np.isclose(total, 1.0, atol=1e-6):
                raise ValueError("weights must sum to 1 per system")
            arr /= total
            arr.flags.writeable = False
            cleaned.append(arr)
        object.__setattr__(self, "weights", tuple(cleaned))


class CheckViolation(Exception):
    """An exact runtime invariant failed during a checked run."""


# ---------------------------------------------------------------------------
# run outputs


class FrameStats:
    """Running sums over one system's completed frames.

    Keeps enough cross moments to compute the ratio estimators Y/T and Z/T
    and their delta-method standard errors without storing per-frame lists.
    """

    def __init__(self, n_metrics: int):
        self.count = 0
        self.sum_y = 0.0
        self.sum_t = 0.0
        self.sum_yy = 0.0
        self.sum_yt = 0.0
        self.sum_tt = 0.0
        self.sum_z = np.zeros(n_metrics)
        self.sum_zz = np.zeros(n_metrics)
        self.sum_zt = np.zeros(n_metrics)

    def add(self, y_total: float, z_total: np.ndarray, length: float) -> None:
        self.count += 1
        self.sum_y += y_total
        self.sum_t += length
        self.sum_yy += y_total * y_total
        self.sum_yt += y_total * length
        self.sum_tt += length * length
        self.sum_z += z_total
        self.sum_zz += z_total * z_total
        self.sum_zt += z_total * length

    @property
    def empirical_f(self) -> float:
        return self.sum_y / self.sum_t

    @property
    def empirical_g(self) -> np.ndarray:
        return self.sum_z / self.sum_t

    def f_se(self) -> float:
        # delta method for the ratio estimator: sqrt(sum (Y_k - f T_k)^2)/sum T
        f = self.empirical_f
        resid = max(self.sum_yy - 2 * f * self.sum_yt + f * f * self.sum_tt, 0.0)
        return math.sqrt(resid) / self.sum_t

    def g_se(self) -> np.ndarray:
        g = self.empirical_g
        resid = np.maximum(self.sum_zz - 2 * g * self.sum_zt + g * g * self.sum_tt, 0.0)
        return np.sqrt(resid) / self.sum_t


@dataclass(frozen=True, eq=False)
class QueueTrajectory:
    """Downsampled queue series; the last row is the final queue Q[slots]."""

    times: np.ndarray
    queues: np.ndarray


@dataclass(frozen=True, eq=False)
class SlotSeries:
    """Raw per-slot series (diagnostic opt-in; memory scales with slots)."""

    penalty: np.ndarray
    metrics: np.ndarray
    external: np.ndarray


@dataclass(frozen=True, eq=False)
class DriftDiagnostic:
    """Per-system statistics of frame drift sums against their uniform bound.

    For a reference point (f_bar, g_bar) per system, each completed frame
    contributes sum over its slots of X[t] = V*(y[t] - f_bar) +
    <Q[t], z[t] - g_bar>, and the analysis guarantees the conditional mean of
    that sum never exceeds c0 = L * z_max * (N * z_max + d_max) * B.  The
    diagnostic tracks the running mean of (frame sum - c0) per system, which
    must stay <= 0 within noise whenever the reference point is feasible for
    the system.
    """

    reference: tuple[PerformanceVector, ...]
    c0: float
    frame_counts: np.ndarray
    excess_mean: np.ndarray
    excess_se: np.ndarray

    def within_bound(self, sigmas: float = 3.0) -> np.ndarray:
        return self.excess_mean <= sigmas * self.excess_se


@dataclass(frozen=True, eq=False)
class RunMetrics:
    """Accumulated totals of one run; averages are derived views of them."""

    slots: int
    total_penalty: float
    total_metrics: np.ndarray
    queue_slot_sum: np.ndarray
    final_queues: np.ndarray
    frames_per_system: np.ndarray
    frame_stats: tuple[FrameStats, ...]
    queue_trajectory: QueueTrajectory | None = None
    drift: DriftDiagnostic | None = None
    slot_series: SlotSeries | None = None
    frame_records: tuple[list, ...] | None = None

    @property
    def avg_penalty(self) -> float:
        return self.total_penalty / self.slots

    @property
    def avg_metrics(self) -> np.ndarray:
        return self.total_metrics / self.slots

    @property
    def avg_queues(self) -> np.ndarray:
        return self.queue_slot_sum / self.slots


def uniform_frame_drift_bound(
    models: Sequence[RenewalSystemModel], external: ExternalProcess
) -> float:
    """c0 = L * z_max * (N * z_max + d_max) * B over the given systems."""
    n = len(models)
    n_metrics = external.n_metrics
    z_max = max(m.z_max for m in models)
    b = max(m.residual_bound for m in models)
    return n_metrics * z_max * (n * z_max + external.max_abs()) * b


class _Welford:
    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def se(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.count - 1) / self.count)


def run(
    models: Sequence[RenewalSystemModel],
    external: ExternalProcess,
    policy,
    slots: int,
    seed: int,
    *,
    check: bool = False,
    drift_reference: Sequence[PerformanceVector] | None = None,
    record_trajectory: bool = False,
    trajectory_stride: int | None = None,
    record_slot_series: bool = False,
    record_frames: bool = False,
) -> RunMetrics:
    """Simulate all systems for the given number of slots.

    Deterministic given (models, external, policy, slots, seed).  Frames that
    extend past the horizon contribute only their in-horizon slots to the
    averages; per-frame statistics (frame_stats, drift) use completed frames
    only.
    """
    models = list(models)
    n_sys = len(models)
    if n_sys == 0:
        raise ValueError("need at least one system")
    n_metrics = external.n_metrics
    if any(m.n_metrics != n_metrics for m in models):
        raise ValueError("all systems must share the external process dimension")
    if slots < 1:
        raise ValueError("slots must be >= 1")

    if isinstance(policy, DppRatioPolicy):
        v = policy.v.v
        if policy.solver == "enumerate":
            def decide(n, q):
                return solve_enumerate(models[n], q, v, system_index=n)
        else:
            def decide(n, q):
                return solve_bisection(models[n], q, v, policy.tol, system_index=n)
    elif isinstance(policy, RandomizedStationaryPolicy):
        if len(policy.weights) != n_sys:
            raise ValueError("one weight vector per system required")
        for w, m in zip(policy.weights, models):
            if w.shape[0] != m.n_actions:
                raise ValueError("weight length must match the system's action count")
        v = 0.0
        def decide(n, q):
            idx = int(rngs[n].choice(models[n].n_actions, p=policy.weights[n]))
            return SubproblemSolution(action=ActionId(n, idx), value=float("nan"))
    else:
        raise TypeError(f"unknown policy type {type(policy).__name__}")

    drift_on = drift_reference is not None
    if drift_on:
        reference = tuple(drift_reference)
        if len(reference) != n_sys:
            raise ValueError("one reference point per system required")
        if any(r.g_hat.shape[0] != n_metrics for r in reference):
            raise ValueError("reference metric dimension mismatch")
        if not isinstance(policy, DppRatioPolicy):
            raise ValueError("drift diagnostic applies to the dpp_ratio policy")
        c0 = uniform_frame_drift_bound(models, external)
        drift_acc = [_Welford() for _ in range(n_sys)]
        ref_f = np.array([r.f_hat for r in reference])
        ref_g = np.vstack([r.g_hat for r in reference])

    rngs = [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0, n))))
        for n in range(n_sys)
    ]
    ext_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1,))))
    d_arr = external.sample_matrix(ext_rng, slots)

    y_arr = np.zeros(slots)
    z_arr = np.zeros((slots, n_metrics))
    q = np.zeros(n_metrics)
    qsum = np.zeros(n_metrics)
    cum_net = np.zeros(n_metrics) if check else None

    stats = tuple(FrameStats(n_metrics) for _ in range(n_sys))
    frames = np.zeros(n_sys, dtype=int)
    next_start = [0] * n_sys
    next_event = 0
    records = tuple([] for _ in range(n_sys)) if record_frames else None

    # per-system state of the frame in progress (for the drift diagnostic)
    cur_z = [None] * n_sys
    cur_y_total = [0.0] * n_sys
    cur_len = [0] * n_sys
    cur_xz = [0.0] * n_sys
    cur_qsum_snap = [None] * n_sys

    if record_trajectory:
        stride = trajectory_stride or max(1, -(-slots // 10_000))
        traj_times: list[int] = []
        traj_rows: list[np.ndarray] = []

    def finalize_frame(n: int) -> None:
        excess = (
            v * (cur_y_total[n] - cur_len[n] * ref_f[n])
            + cur_xz[n]
            - (qsum - cur_qsum_snap[n]) @ ref_g[n]
            - c0
        )
        drift_acc[n].add(float(excess))

    for t in range(slots):
        if t == next_event:
            for n in range(n_sys):
                if next_start[n] != t:
                    continue
                if drift_on and cur_z[n] is not None:
                    finalize_frame(n)
                solution = decide(n, q)
                idx = solution.action.action_index
                if check and isinstance(policy, DppRatioPolicy):
                    if not ratio_bound_holds(models[n], solution, q, v):
                        raise CheckViolation(
                            f"frame decision at slot {t}, system {n}: ratio value "
                            f"{solution.value} exceeds an action objective"
                        )
                outcome = sample_frame(models[n], idx, rngs[n])
                length = outcome.length
                end = t + length
                lay_end = min(end, slots)
                y_arr[t:lay_end] += outcome.per_slot_penalty[: lay_end - t]
                z_arr[t:lay_end] += outcome.per_slot_metrics[: lay_end - t]
                if check:
                    if np.any(np.abs(outcome.per_slot_penalty) > models[n].y_max) or np.any(
                        np.abs(outcome.per_slot_metrics) > models[n].z_max
                    ):
                        raise CheckViolation(
                            f"sampled frame at slot {t}, system {n} exceeds declared bounds"
                        )
                if end <= slots:
                    stats[n].add(
                        float(outcome.per_slot_penalty.sum()),
                        outcome.per_slot_metrics.sum(axis=0),
                        float(length),
                    )
                frames[n] += 1
                if records is not None:
                    records[n].append((t, length, idx))
                if drift_on:
                    cur_z[n] = outcome.per_slot_metrics
                    cur_y_total[n] = float(outcome.per_slot_penalty.sum())
                    cur_len[n] = length
                    cur_xz[n] = 0.0
                    cur_qsum_snap[n] = qsum.copy()
                next_start[n] = end
            next_event = min(next_start)

        qsum += q
        if record_trajectory and t % stride == 0:
            traj_times.append(t)
            traj_rows.append(q.copy())
        if drift_on:
            for n in range(n_sys):
                cur_xz[n] += float(q @ cur_z[n][t - (next_start[n] - cur_len[n])])

        # same arithmetic as controller.queue_update, in place
        delta = z_arr[t] - d_arr[t]
        np.add(q, delta, out=q)
        np.maximum(q, 0.0, out=q)
        if check:
            cum_net += delta
            if not np.all(q >= cum_net):
                bad = int(np.argmin(q - cum_net))
                raise CheckViolation(
                    f"queue lower bound violated at slot {t}, constraint {bad}: "
                    f"Q={q[bad]!r} < cumulative net input {cum_net[bad]!r}"
                )

    if drift_on:
        for n in range(n_sys):
            if next_start[n] == slots and cur_z[n] is not None:
                finalize_frame(n)
        drift = DriftDiagnostic(
            reference=reference,
            c0=c0,
            frame_counts=np.array([acc.count for acc in drift_acc]),
            excess_mean=np.array([acc.mean for acc in drift_acc]),
            excess_se=np.array([acc.se() for acc in drift_acc]),
        )
    else:
        drift = None

    if record_trajectory:
        traj_times.append(slots)
        traj_rows.append(q.copy())
        trajectory = QueueTrajectory(np.array(traj_times), np.array(traj_rows))
    else:
        trajectory = None

    return RunMetrics(
        slots=slots,
        total_penalty=float(y_arr.sum()),
        total_metrics=z_arr.sum(axis=0),
        queue_slot_sum=qsum,
        final_queues=q.copy(),
        frames_per_system=frames,
        frame_stats=stats,
        queue_trajectory=trajectory,
        drift=drift,
        slot_series=SlotSeries(y_arr, z_arr, d_arr) if record_slot_series else None,
        frame_records=records,
    )


@dataclass(frozen=True, eq=False)
class SystemSweepStats:
    """Predicted vs realized per-slot averages for one system."""

    predicted_f: float
    predicted_g: np.ndarray
    empirical_f: float
    empirical_g: np.ndarray
    se_f: float
    se_g: np.ndarray
    frames: int


@dataclass(frozen=True, eq=False)
class StationarySweepReport:
    metrics: RunMetrics
    systems: tuple[SystemSweepStats, ...]


def run_stationary_sweep(
    models: Sequence[RenewalSystemModel],
    external: ExternalProcess,
    weights: Sequence,
    slots: int,
    seed: int,
    **run_kwargs,
) -> StationarySweepReport:
    """Run the stationary policy and compare against renewal-reward ratios.

    The prediction for each system is sum_a p_a y_hat_a / sum_a p_a t_hat_a
    (and likewise per metric); the empirical value is the ratio of completed
    frame totals, with a delta-method standard error.
    """
    policy = RandomizedStationaryPolicy(tuple(np.asarray(w, dtype=float) for w in weights))
    metrics = run(models, external, policy, slots, seed, **run_kwargs)
    systems = []
    for model, w, st in zip(models, policy.weights, metrics.frame_stats):
        t_mix = float(w @ model.t_hats)
        pred_f = float(w @ model.y_hats) / t_mix
        pred_g = (model.z_hats.T @ w) / t_mix
        if st.count == 0:
            raise RuntimeError("no completed frames; increase slots")
        systems.append(
            SystemSweepStats(
                predicted_f=pred_f,
                predicted_g=pred_g,
                empirical_f=st.empirical_f,
                empirical_g=st.empirical_g,
                se_f=st.f_se(),
                se_g=st.g_se(),
                frames=st.count,
            )
        )
    return StationarySweepReport(metrics=metrics, systems=tuple(systems))


def collect_drift_diagnostic(
    models: Sequence[RenewalSystemModel],
    external: ExternalProcess,
    policy: DppRatioPolicy,
    slots: int,
    seed: int,
    reference: Sequence[PerformanceVector],
) -> DriftDiagnostic:
    """Run with drift collection enabled and return the diagnostic."""
    metrics = run(models, external, policy, slots, seed, drift_reference=reference)
    return metrics.drift
