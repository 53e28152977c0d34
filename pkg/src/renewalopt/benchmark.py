"""Optimal-stationary benchmark: the hull-weight LP and a brute-force oracle.

The best stationary randomized policy solves

    min   sum_n sum_a theta_n(a) * f_hat_n(a)
    s.t.  sum_n sum_a theta_n(a) * g_hat_nl(a)  <=/>=  d_l      for each l
          theta_n >= 0, sum_a theta_n(a) = 1                    for each n

where theta_n are hull weights over system n's performance vectors; the
optimum over all policies of the long-run averages is attained here because
each system's achievable averages form exactly the convex hull of its
per-action vectors.  The LP weights are time fractions; the per-frame
selection probabilities of the policy that realizes them follow from the
renewal-reward ratio as p_a proportional to theta_a / t_hat_a.

``solve_lp`` uses the in-repo dense simplex; ``brute_force_oracle`` searches
a simplex grid exhaustively and exists purely to cross-check the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import PerformanceVector, RenewalSystemModel
from .simplex import simplex_solve

__all__ = [
    "StationaryLP",
    "LPSolution",
    "solve_lp",
    "brute_force_oracle",
    "extract_reference_point",
    "stationary_policy_weights",
]


@dataclass(frozen=True, eq=False)
class StationaryLP:
    """Per-system performance vectors plus the coupled constraint bounds.

    directions[l] is "<=" or ">="; t_hats are only needed when LP weights
    will be mapped back to per-frame policy probabilities.
    """

    f_hats: tuple[np.ndarray, ...]
    g_hats: tuple[np.ndarray, ...]
    d: np.ndarray
    directions: tuple[str, ...]
    t_hats: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        f_hats = tuple(np.asarray(f, dtype=float).reshape(-1) for f in self.f_hats)
        g_hats = tuple(np.asarray(g, dtype=float) for g in self.g_hats)
        d = np.asarray(self.d, dtype=float).reshape(-1)
        directions = tuple(self.directions)
        object.__setattr__(self, "f_hats", f_hats)
        object.__setattr__(self, "g_hats", g_hats)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "directions", directions)
        if not f_hats:
            raise ValueError("need at least one system")
        if len(g_hats) != len(f_hats):
            raise ValueError("f_hats and g_hats must align per system")
        n_metrics = d.shape[0]
        for f, g in zip(f_hats, g_hats):
            if f.shape[0] < 1:
                raise ValueError("every system needs at least one action")
            if g.shape != (f.shape[0], n_metrics):
                raise ValueError("g_hats rows must be (n_actions, n_metrics)")
        if len(directions) != n_metrics or any(s not in ("<=", ">=") for s in directions):
            raise ValueError('directions must be "<=" or ">=" per constraint')
        if self.t_hats is not None:
            t_hats = tuple(np.asarray(t, dtype=float).reshape(-1) for t in self.t_hats)
            object.__setattr__(self, "t_hats", t_hats)
            if len(t_hats) != len(f_hats) or any(
                t.shape != f.shape for t, f in zip(t_hats, f_hats)
            ):
                raise ValueError("t_hats must align with f_hats per system")

    @classmethod
    def from_models(
        cls,
        models: Sequence[RenewalSystemModel],
        d,
        directions: Sequence[str] | None = None,
    ) -> "StationaryLP":
        d = np.asarray(d, dtype=float).reshape(-1)
        if directions is None:
            directions = ("<=",) * d.shape[0]
        return cls(
            f_hats=tuple(m.y_hats / m.t_hats for m in models),
            g_hats=tuple(m.z_hats / m.t_hats[:, None] for m in models),
            d=d,
            directions=tuple(directions),
            t_hats=tuple(m.t_hats for m in models),
        )

    @property
    def n_systems(self) -> int:
        return len(self.f_hats)

    @property
    def n_metrics(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True, eq=False)
class LPSolution:
    """Solver output; weights and achieved values only when optimal."""

    lp: StationaryLP
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: float | None = None
    weights: tuple[np.ndarray, ...] | None = None
    achieved: np.ndarray | None = None
    duals: np.ndarray | None = None


def _signs(lp: StationaryLP) -> np.ndarray:
    return np.array([1.0 if s == "<=" else -1.0 for s in lp.directions])


def _achieved(lp: StationaryLP, weights: Sequence[np.ndarray]) -> np.ndarray:
    return np.sum([g.T @ w for g, w in zip(lp.g_hats, weights)], axis=0)


def solve_lp(lp: StationaryLP) -> LPSolution:
    """Solve the hull-weight LP with the dense simplex.

    ">=" rows are negated so the core always minimizes subject to "<=" rows.
    Reported duals are nonnegative sensitivities to relaxing each constraint
    in its own direction; they are estimates only, nothing downstream relies
    on them.
    """
    signs = _signs(lp)
    blocks = [f.shape[0] for f in lp.f_hats]
    n = sum(blocks)
    c = np.concatenate(lp.f_hats)
    a_ub = np.zeros((lp.n_metrics, n))
    offset = 0
    for g, width in zip(lp.g_hats, blocks):
        a_ub[:, offset : offset + width] = (signs[:, None] * g.T)
        offset += width
    b_ub = signs * lp.d
    a_eq = np.zeros((lp.n_systems, n))
    offset = 0
    for i, width in enumerate(blocks):
        a_eq[i, offset : offset + width] = 1.0
        offset += width
    b_eq = np.ones(lp.n_systems)

    res = simplex_solve(c, a_ub, b_ub, a_eq, b_eq)
    if res.status != "optimal":
        return LPSolution(lp=lp, status=res.status)

    weights = []
    offset = 0
    for width in blocks:
        w = np.maximum(res.x[offset : offset + width], 0.0)
        weights.append(w / w.sum())
        offset += width
    weights = tuple(weights)
    duals = None if res.duals_ub is None else np.maximum(-res.duals_ub, 0.0)
    return LPSolution(
        lp=lp,
        status="optimal",
        objective=float(sum(f @ w for f, w in zip(lp.f_hats, weights))),
        weights=weights,
        achieved=_achieved(lp, weights),
        duals=duals,
    )


def _simplex_grid(n_actions: int, grid: int) -> np.ndarray:
    """All weight vectors with entries k/grid summing to 1, shape (P, A)."""
    if n_actions == 1:
        return np.ones((1, 1))
    points = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            points.append(prefix + [remaining])
            return
        for k in range(remaining + 1):
            rec(prefix + [k], remaining - k, slots - 1)

    rec([], grid, n_actions)
    return np.array(points, dtype=float) / grid


def brute_force_oracle(lp: StationaryLP, grid: int) -> LPSolution:
    """Exhaustive search over a simplex grid of weights per system.

    Independent of the simplex solver by construction; used to validate it.
    The best feasible grid point is within O(1/grid) of the LP optimum.
    """
    if grid < 1:
        raise ValueError("grid must be >= 1")
    free_dims = sum(f.shape[0] - 1 for f in lp.f_hats)
    if grid**max(free_dims, 1) > 10**7:
        raise ValueError("instance too large for the requested grid")
    signs = _signs(lp)
    d_solved = signs * lp.d
    grids = [_simplex_grid(f.shape[0], grid) for f in lp.f_hats]
    objs = [g @ f for g, f in zip(grids, lp.f_hats)]  # (P_n,)
    cons = [w_grid @ (g * signs[None, :]) for w_grid, g in zip(grids, lp.g_hats)]

    best_obj = np.inf
    best_weights = None
    last = lp.n_systems - 1

    def rec(sys_idx, obj_acc, con_acc, chosen):
        nonlocal best_obj, best_weights
        if sys_idx == last:
            total_obj = obj_acc + objs[last]
            total_con = con_acc[None, :] + cons[last]
            feasible = np.all(total_con <= d_solved[None, :] + 1e-9, axis=1)
            if not feasible.any():
                return
            idx = np.nonzero(feasible)[0]
            k = idx[np.argmin(total_obj[idx])]
            if total_obj[k] < best_obj:
                best_obj = float(total_obj[k])
                best_weights = chosen + [grids[last][k]]
            return
        for j in range(grids[sys_idx].shape[0]):
            rec(
                sys_idx + 1,
                obj_acc + objs[sys_idx][j],
                con_acc + cons[sys_idx][j],
                chosen + [grids[sys_idx][j]],
            )

    rec(0, 0.0, np.zeros(lp.n_metrics), [])
    if best_weights is None:
        return LPSolution(lp=lp, status="infeasible")
    weights = tuple(np.asarray(w) for w in best_weights)
    return LPSolution(
        lp=lp,
        status="optimal",
        objective=best_obj,
        weights=weights,
        achieved=_achieved(lp, weights),
    )


def extract_reference_point(sol: LPSolution) -> list[PerformanceVector]:
    """Per-system hull point (f_bar, g_bar) realized by the LP weights."""
    if sol.status != "optimal":
        raise ValueError(f"reference point needs an optimal solution, got {sol.status}")
    points = []
    for f, g, w in zip(sol.lp.f_hats, sol.lp.g_hats, sol.weights):
        points.append(PerformanceVector(float(f @ w), g.T @ w))
    return points


def stationary_policy_weights(sol: LPSolution) -> tuple[np.ndarray, ...]:
    """Per-frame selection probabilities realizing the LP's time fractions.

    The LP's theta are fractions of time; a stationary policy picking action
    a with probability p_a spends time fraction p_a t_hat_a / sum_b p_b
    t_hat_b on it, so inverting gives p_a proportional to theta_a / t_hat_a.
    """
    if sol.status != "optimal":
        raise ValueError(f"policy weights need an optimal solution, got {sol.status}")
    if sol.lp.t_hats is None:
        raise ValueError("StationaryLP lacks t_hats; build it from models")
    probs = []
    for theta, t in zip(sol.weights, sol.lp.t_hats):
        p = theta / t
        probs.append(p / p.sum())
    return tuple(probs)
