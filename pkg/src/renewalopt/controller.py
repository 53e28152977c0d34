"""Virtual queues and the per-frame ratio subproblem solvers.

One virtual queue per time-average constraint accumulates the per-slot
constraint slack: Q_l[t+1] = max{Q_l[t] + sum_n z_l^n[t] - d_l[t], 0}.
At each frame start the controller minimizes the linearized per-frame ratio

    (V * y_hat(a) + <q, z_hat(a)>) / t_hat(a)

over the system's actions, which equals V * f_hat(a) + <q, g_hat(a)>.  Three
solvers are provided: direct enumeration, a Dinkelbach iteration on the ratio
parameter, and enumeration over explicit hull vertices.  All three use the
same arithmetic for the objective so their values can be compared exactly,
and ``ratio_bound_holds`` checks the minimality certificate that the returned
value lower-bounds the objective at every action (hence, by convexity, at
every point of the performance region).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ActionId, PerformanceTriple, RenewalSystemModel

__all__ = [
    "VirtualQueueVector",
    "TradeoffParameter",
    "SubproblemSolution",
    "queue_update",
    "solve_enumerate",
    "solve_bisection",
    "solve_hull_vertices",
    "ratio_bound_holds",
]


@dataclass(frozen=True, eq=False)
class VirtualQueueVector:
    """Nonnegative multipliers, one per time-average constraint."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if np.any(values < 0):
            raise ValueError("queue entries must be nonnegative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, n_metrics: int) -> "VirtualQueueVector":
        return cls(np.zeros(n_metrics))

    def __len__(self) -> int:
        return self.values.shape[0]

    def updated(self, z_slot_sum, d_slot) -> "VirtualQueueVector":
        return queue_update(self, z_slot_sum, d_slot)


@dataclass(frozen=True)
class TradeoffParameter:
    """Positive weight V trading penalty against queue drift."""

    v: float

    def __post_init__(self):
        object.__setattr__(self, "v", float(self.v))
        if not self.v > 0:
            raise ValueError("V must be positive")


def _v_value(v: TradeoffParameter | float) -> float:
    value = v.v if isinstance(v, TradeoffParameter) else float(v)
    if value < 0:
        raise ValueError("V must be nonnegative")
    return value


def _queue_values(q) -> np.ndarray:
    if isinstance(q, VirtualQueueVector):
        return q.values
    return np.asarray(q, dtype=float).reshape(-1)


@dataclass(frozen=True)
class SubproblemSolution:
    """Chosen action and its achieved ratio value."""

    action: ActionId
    value: float


def queue_update(q, z_slot_sum, d_slot) -> VirtualQueueVector:
    """One slot of the virtual queue recursion, clamped at zero.

    The arithmetic order (delta first, then add, then clamp) is fixed;
    the simulation engine replays exactly the same operations, so recorded
    trajectories can be compared bit-for-bit against this function.
    """
    qv = _queue_values(q)
    z = np.asarray(z_slot_sum, dtype=float).reshape(-1)
    d = np.asarray(d_slot, dtype=float).reshape(-1)
    if z.shape != qv.shape or d.shape != qv.shape:
        raise ValueError(
            f"length mismatch: queue {qv.shape[0]}, z {z.shape[0]}, d {d.shape[0]}"
        )
    delta = z - d
    return VirtualQueueVector(np.maximum(qv + delta, 0.0))


def _ratio_objectives(model: RenewalSystemModel, qv: np.ndarray, v: float) -> np.ndarray:
    if qv.shape[0] != model.n_metrics:
        raise ValueError(
            f"queue length {qv.shape[0]} does not match model metrics {model.n_metrics}"
        )
    return (v * model.y_hats + model.z_hats @ qv) / model.t_hats


def solve_enumerate(
    model: RenewalSystemModel,
    q,
    v: TradeoffParameter | float,
    *,
    system_index: int = 0,
) -> SubproblemSolution:
    """Minimize the frame ratio by evaluating every action.

    Ties break toward the lowest action index so runs are reproducible.
    """
    objectives = _ratio_objectives(model, _queue_values(q), _v_value(v))
    idx = int(np.argmin(objectives))
    return SubproblemSolution(ActionId(system_index, idx), float(objectives[idx]))


def solve_bisection(
    model: RenewalSystemModel,
    q,
    v: TradeoffParameter | float,
    tol: float = 1e-9,
    *,
    system_index: int = 0,
) -> SubproblemSolution:
    """Minimize the frame ratio by Dinkelbach iteration on the ratio parameter.

    Repeatedly minimizes V*y_hat + <q, z_hat> - theta * t_hat over actions and
    moves theta to the minimizer's ratio; stops when the inner minimum is
    within tol of zero.  Frame lengths are >= 1, so the returned value is
    within tol of the true minimum; it is always the exact ratio of the
    returned action.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    qv = _queue_values(q)
    vv = _v_value(v)
    if qv.shape[0] != model.n_metrics:
        raise ValueError(
            f"queue length {qv.shape[0]} does not match model metrics {model.n_metrics}"
        )
    num = vv * model.y_hats + model.z_hats @ qv
    den = model.t_hats
    theta = num[0] / den[0]
    # theta strictly decreases across iterations and only finitely many
    # ratios exist, so this terminates; the cap is a safety net only
    for _ in range(10 * model.n_actions + 10):
        costs = num - theta * den
        idx = int(np.argmin(costs))
        if costs[idx] >= -tol:
            return SubproblemSolution(ActionId(system_index, idx), float(num[idx] / den[idx]))
        theta = num[idx] / den[idx]
    raise RuntimeError("Dinkelbach iteration failed to terminate")


def solve_hull_vertices(
    vertices: Sequence[PerformanceTriple | tuple],
    q,
    v: TradeoffParameter | float,
    *,
    system_index: int = 0,
) -> SubproblemSolution:
    """Minimize the ratio objective over explicit hull vertices.

    Any mixture over vertices has ratio objective
    (V * sum p_j y_j + <q, sum p_j z_j>) / sum p_j T_j, and reweighting the
    mixture by frame length shows this is a convex combination of the
    per-vertex ratios; the minimum over the whole hull is therefore attained
    at a vertex and plain enumeration is exact.
    """
    if len(vertices) == 0:
        raise ValueError("need at least one vertex")
    ys, zs, ts = [], [], []
    for vert in vertices:
        if isinstance(vert, PerformanceTriple):
            y, z, t = vert.y_hat, vert.z_hat, vert.t_hat
        else:
            y, z, t = vert
        ys.append(float(y))
        zs.append(np.asarray(z, dtype=float).reshape(-1))
        ts.append(float(t))
    t_arr = np.array(ts)
    if np.any(t_arr < 1):
        raise ValueError("vertex frame lengths must be >= 1")
    qv = _queue_values(q)
    z_arr = np.array(zs)
    if z_arr.shape[1] != qv.shape[0]:
        raise ValueError("queue length does not match vertex metric dimension")
    objectives = (_v_value(v) * np.array(ys) + z_arr @ qv) / t_arr
    idx = int(np.argmin(objectives))
    return SubproblemSolution(ActionId(system_index, idx), float(objectives[idx]))


def ratio_bound_holds(
    model: RenewalSystemModel,
    solution: SubproblemSolution,
    q,
    v: TradeoffParameter | float,
) -> bool:
    """True iff solution.value lower-bounds the objective at every action.

    This is the minimality certificate the optimality analysis rests on: the
    value returned at a frame start must not exceed V*f_hat + <q, g_hat> for
    any action, and by convexity for any point of the performance region.
    The comparison is exact (no tolerance); solvers and this check share the
    same objective arithmetic.
    """
    objectives = _ratio_objectives(model, _queue_values(q), _v_value(v))
    return bool(np.all(solution.value <= objectives))
