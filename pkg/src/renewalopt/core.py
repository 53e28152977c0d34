"""Domain types for controlled renewal systems.

A renewal system runs on slotted time and splits its timeline into frames.
At the first slot of each frame the controller picks an action from a finite
set; the action fixes the joint distribution of the frame length T (a
positive integer number of slots), the per-slot penalty y[t], and the per-slot
metric vector z[t] (length L, one entry per coupled time-average constraint).
Frames are independent across systems and, given the action, i.i.d. within a
system.

Each action is summarized by a ``PerformanceTriple`` of expected frame totals
(y_hat, z_hat, t_hat); dividing by t_hat gives the per-slot ``PerformanceVector``
(f_hat, g_hat), the quantity that long-run time averages converge to.  Models
declare per-slot bounds (y_max, z_max) and a residual second-moment bound B
on frame overshoot, and ``validate_model`` checks a model's samplers against
all of its declarations empirically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

__all__ = [
    "ActionId",
    "PerformanceTriple",
    "PerformanceVector",
    "FrameOutcome",
    "FrameSampler",
    "RenewalSystemModel",
    "performance_vector",
    "sample_frame",
    "validate_model",
    "ActionValidation",
    "ValidationReport",
]


@dataclass(frozen=True)
class ActionId:
    """Identifies one action of one system: (system index, action index)."""

    system_index: int
    action_index: int

    def __post_init__(self):
        if self.system_index < 0 or self.action_index < 0:
            raise ValueError("action indices must be nonnegative")


@dataclass(frozen=True, eq=False)
class PerformanceTriple:
    """Expected frame totals (y_hat, z_hat, t_hat) for one action.

    y_hat is the expected total penalty accumulated over a frame, z_hat the
    expected total metric vector, and t_hat the expected frame length in
    slots.  Frame lengths are integers >= 1, so t_hat >= 1.
    """

    y_hat: float
    z_hat: np.ndarray
    t_hat: float

    def __post_init__(self):
        object.__setattr__(self, "y_hat", float(self.y_hat))
        object.__setattr__(self, "t_hat", float(self.t_hat))
        z = np.array(self.z_hat, dtype=float, copy=True).reshape(-1)
        z.flags.writeable = False
        object.__setattr__(self, "z_hat", z)
        if not self.t_hat >= 1.0:
            raise ValueError(f"t_hat must be >= 1, got {self.t_hat}")


@dataclass(frozen=True, eq=False)
class PerformanceVector:
    """Per-slot expectations (f_hat, g_hat) = (y_hat, z_hat) / t_hat."""

    f_hat: float
    g_hat: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f_hat", float(self.f_hat))
        g = np.array(self.g_hat, dtype=float, copy=True).reshape(-1)
        g.flags.writeable = False
        object.__setattr__(self, "g_hat", g)


def performance_vector(triple: PerformanceTriple) -> PerformanceVector:
    """Divide a triple's frame totals by its expected frame length."""
    if not triple.t_hat >= 1.0:
        raise ValueError(f"t_hat must be >= 1, got {triple.t_hat}")
    return PerformanceVector(triple.y_hat / triple.t_hat, triple.z_hat / triple.t_hat)


@dataclass(frozen=True, eq=False)
class FrameOutcome:
    """One sampled frame: its length and the realized per-slot sequences."""

    length: int
    per_slot_penalty: np.ndarray
    per_slot_metrics: np.ndarray

    def __post_init__(self):
        length = int(self.length)
        object.__setattr__(self, "length", length)
        y = np.asarray(self.per_slot_penalty, dtype=float)
        z = np.asarray(self.per_slot_metrics, dtype=float)
        object.__setattr__(self, "per_slot_penalty", y)
        object.__setattr__(self, "per_slot_metrics", z)
        if length < 1:
            raise ValueError(f"frame length must be >= 1, got {length}")
        if y.shape != (length,):
            raise ValueError(f"per_slot_penalty must have shape ({length},)")
        if z.ndim != 2 or z.shape[0] != length:
            raise ValueError(f"per_slot_metrics must have shape ({length}, L)")

    @property
    def total_penalty(self) -> float:
        return float(self.per_slot_penalty.sum())

    @property
    def total_metrics(self) -> np.ndarray:
        return self.per_slot_metrics.sum(axis=0)


class FrameSampler(Protocol):
    """Stochastic generator of frames for one action.

    Implementations must be stateless apart from the supplied random source,
    so the same generator state always yields the same outcome.
    """

    def sample(self, rng: np.random.Generator) -> FrameOutcome: ...


@dataclass(frozen=True, eq=False)
class RenewalSystemModel:
    """One system's finite action set: declared triples plus frame samplers.

    y_max and z_max bound every per-slot |y[t]| and |z_l[t]| the samplers may
    emit; residual_bound B >= 1 bounds E[(T - s)^2 | T >= s] for every slot
    offset s.  Declarations are validated against the triples at construction
    and against the samplers by ``validate_model``.
    """

    actions: tuple[PerformanceTriple, ...]
    samplers: tuple[FrameSampler, ...]
    y_max: float
    z_max: float
    residual_bound: float

    def __post_init__(self):
        actions = tuple(self.actions)
        samplers = tuple(self.samplers)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "samplers", samplers)
        object.__setattr__(self, "y_max", float(self.y_max))
        object.__setattr__(self, "z_max", float(self.z_max))
        object.__setattr__(self, "residual_bound", float(self.residual_bound))
        if not actions:
            raise ValueError("model needs at least one action")
        if len(samplers) != len(actions):
            raise ValueError("one sampler per action required")
        n_metrics = actions[0].z_hat.shape[0]
        if any(a.z_hat.shape[0] != n_metrics for a in actions):
            raise ValueError("all actions must share the same metric dimension")
        if self.y_max < 0 or self.z_max < 0:
            raise ValueError("bounds must be nonnegative")
        if not self.residual_bound >= 1.0:
            raise ValueError("residual_bound must be >= 1")
        slack = 1e-9
        for i, a in enumerate(actions):
            if abs(a.y_hat) > self.y_max * a.t_hat * (1 + slack):
                raise ValueError(f"action {i}: |y_hat| exceeds y_max * t_hat")
            if np.any(np.abs(a.z_hat) > self.z_max * a.t_hat * (1 + slack)):
                raise ValueError(f"action {i}: |z_hat| exceeds z_max * t_hat")
        # cache per-action arrays used by the subproblem solvers
        y = np.array([a.y_hat for a in actions])
        z = np.array([a.z_hat for a in actions])
        t = np.array([a.t_hat for a in actions])
        for arr in (y, z, t):
            arr.flags.writeable = False
        object.__setattr__(self, "_y", y)
        object.__setattr__(self, "_z", z)
        object.__setattr__(self, "_t", t)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def n_metrics(self) -> int:
        return self.actions[0].z_hat.shape[0]

    @property
    def y_hats(self) -> np.ndarray:
        """Expected frame penalty totals, one entry per action."""
        return self._y

    @property
    def z_hats(self) -> np.ndarray:
        """Expected frame metric totals, shape (n_actions, n_metrics)."""
        return self._z

    @property
    def t_hats(self) -> np.ndarray:
        """Expected frame lengths, one entry per action."""
        return self._t

    def performance_vectors(self) -> list[PerformanceVector]:
        return [performance_vector(a) for a in self.actions]


def _action_index(model: RenewalSystemModel, action: ActionId | int) -> int:
    idx = action.action_index if isinstance(action, ActionId) else int(action)
    if not 0 <= idx < model.n_actions:
        raise IndexError(f"action index {idx} out of range for {model.n_actions} actions")
    return idx


def sample_frame(
    model: RenewalSystemModel, action: ActionId | int, rng: np.random.Generator
) -> FrameOutcome:
    """Draw one frame for the given action from its configured sampler."""
    idx = _action_index(model, action)
    return model.samplers[idx].sample(rng)


@dataclass(frozen=True, eq=False)
class ActionValidation:
    """Empirical evidence for one action's declarations."""

    action_index: int
    samples: int
    bound_violations: int
    declared: PerformanceTriple
    y_mean: float
    y_se: float
    z_mean: np.ndarray
    z_se: np.ndarray
    t_mean: float
    t_se: float
    residual_offsets: np.ndarray
    residual_estimates: np.ndarray
    residual_ses: np.ndarray
    residual_counts: np.ndarray
    residual_flags: np.ndarray


@dataclass(frozen=True, eq=False)
class ValidationReport:
    """Result of checking a model's samplers against its declarations."""

    actions: tuple[ActionValidation, ...]
    flags: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.flags


# fewer surviving frames than this gives no usable SE for the residual
# second-moment check, so such offsets are estimated but never flagged
RESIDUAL_MIN_FRAMES = 30


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(values.mean())
    if values.shape[0] < 2:
        return mean, 0.0
    se = float(values.std(ddof=1) / np.sqrt(values.shape[0]))
    return mean, se


def validate_model(
    model: RenewalSystemModel,
    samples_per_action: int,
    rng: np.random.Generator | None = None,
) -> ValidationReport:
    """Sample each action and report violations of the model's declarations.

    Checks three things per action: (a) per-slot bound violations, which must
    be zero; (b) estimates of E[(T - s)^2 | T >= s] for every offset s up to
    the longest observed frame, flagged when an estimate backed by at least
    RESIDUAL_MIN_FRAMES surviving frames exceeds the declared residual_bound
    by more than 3 standard errors; (c) empirical frame-total means against
    the declared triple, flagged beyond 4 standard errors.
    """
    if samples_per_action < 1:
        raise ValueError("samples_per_action must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)

    reports = []
    flags: list[str] = []
    for idx in range(model.n_actions):
        sampler = model.samplers[idx]
        declared = model.actions[idx]
        n = samples_per_action
        lengths = np.empty(n)
        y_totals = np.empty(n)
        z_totals = np.empty((n, model.n_metrics))
        violations = 0
        for i in range(n):
            out = sampler.sample(rng)
            if out.length < 1:
                violations += 1
            if np.any(np.abs(out.per_slot_penalty) > model.y_max):
                violations += 1
            if np.any(np.abs(out.per_slot_metrics) > model.z_max):
                violations += 1
            lengths[i] = out.length
            y_totals[i] = out.per_slot_penalty.sum()
            z_totals[i] = out.per_slot_metrics.sum(axis=0)

        y_mean, y_se = _mean_se(y_totals)
        t_mean, t_se = _mean_se(lengths)
        z_mean = z_totals.mean(axis=0)
        if n >= 2:
            z_se = z_totals.std(axis=0, ddof=1) / np.sqrt(n)
        else:
            z_se = np.zeros(model.n_metrics)

        max_len = int(lengths.max())
        offsets = np.arange(max_len + 1)
        residual_est = np.zeros(max_len + 1)
        residual_se = np.zeros(max_len + 1)
        residual_count = np.zeros(max_len + 1, dtype=np.int64)
        residual_flag = np.zeros(max_len + 1, dtype=bool)
        for s in offsets:
            tail = lengths[lengths >= s]
            sq = (tail - s) ** 2
            est, se = _mean_se(sq)
            residual_est[s] = est
            residual_se[s] = se
            residual_count[s] = tail.shape[0]
            # a lone long frame must not count as evidence against the bound
            residual_flag[s] = (
                tail.shape[0] >= RESIDUAL_MIN_FRAMES
                and est > model.residual_bound + 3 * se
            )

        if violations:
            flags.append(f"action {idx}: {violations} per-slot bound violations")
        if residual_flag.any():
            margin = np.where(residual_flag, residual_est - 3 * residual_se, -np.inf)
            worst = int(np.argmax(margin))
            flags.append(
                f"action {idx}: residual second moment at offset {worst} "
                f"estimated {residual_est[worst]:.6g} exceeds declared bound "
                f"{model.residual_bound:.6g}"
            )
        for name, emp, se, decl in (
            ("y_hat", y_mean, y_se, declared.y_hat),
            ("t_hat", t_mean, t_se, declared.t_hat),
        ):
            tol = 4 * se if se > 0 else 1e-9
            if abs(emp - decl) > tol:
                flags.append(
                    f"action {idx}: empirical {name} {emp:.6g} vs declared {decl:.6g}"
                )
        for l in range(model.n_metrics):
            tol = 4 * z_se[l] if z_se[l] > 0 else 1e-9
            if abs(z_mean[l] - declared.z_hat[l]) > tol:
                flags.append(
                    f"action {idx}: empirical z_hat[{l}] {z_mean[l]:.6g} "
                    f"vs declared {declared.z_hat[l]:.6g}"
                )

        reports.append(
            ActionValidation(
                action_index=idx,
                samples=n,
                bound_violations=violations,
                declared=declared,
                y_mean=y_mean,
                y_se=y_se,
                z_mean=z_mean,
                z_se=z_se,
                t_mean=t_mean,
                t_se=t_se,
                residual_offsets=offsets,
                residual_estimates=residual_est,
                residual_ses=residual_se,
                residual_counts=residual_count,
                residual_flags=residual_flag,
            )
        )

    return ValidationReport(actions=tuple(reports), flags=tuple(flags))
