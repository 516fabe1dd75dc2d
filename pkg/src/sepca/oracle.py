"""Reference solutions: closed forms and the fine-mesh tamed solution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from sepca.model import SepcaProblem
from sepca.noise import BrownianGrid, cumulative_value
from sepca.scheme import Trajectory, simulate_tamed


def _pca_cell_factor(a: float, a0: float, tau: float) -> float:
    # u(n + tau) / u(n) for u' = a u + a0 u(n), 0 <= tau <= 1
    if a == 0.0:
        return 1.0 + a0 * tau
    return 1.0 + (1.0 + a0 / a) * math.expm1(a * tau)


def solve_linear_pca_deterministic(a: float, a0: float, xi: float, t: float) -> float:
    """Exact solution of ``u'(t) = a u(t) + a0 u([t])``, ``u(0) = xi``, by the method of steps."""
    if t < 0:
        raise ValueError("t must be non-negative")
    n = math.floor(t)
    u = xi
    full = _pca_cell_factor(a, a0, 1.0)
    for _ in range(n):
        u *= full
    return u * _pca_cell_factor(a, a0, t - n)


def solve_gbm_on_path(a: float, b: float, xi: float, path: BrownianGrid, n: int) -> float:
    """Pathwise solution of ``dx = a x dt + b x dB`` at grid index ``n``."""
    t = n / path.steps_per_unit
    B = float(cumulative_value(path, n)[0])
    return xi * math.exp((a - 0.5 * b * b) * t + b * B)


@dataclass(frozen=True, eq=False)
class ReferenceSolution:
    """Values of a reference solution on its own grid.

    ``values[n]`` is the solution at ``n / steps_per_unit``.  Coarser grids
    whose step count divides ``steps_per_unit`` are read by subsampling.
    """

    kind: str
    steps_per_unit: int
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def on_grid(self, m: int) -> np.ndarray:
        if self.steps_per_unit % m:
            raise ValueError(f"level {m} does not divide reference level {self.steps_per_unit}")
        return self.values[:: self.steps_per_unit // m]

    def at_time(self, T: int) -> np.ndarray:
        return self.values[T * self.steps_per_unit]


class ReferenceDivergenceError(RuntimeError):
    pass


def reference_solution(problem: SepcaProblem, fine_path: BrownianGrid) -> ReferenceSolution:
    traj: Trajectory = simulate_tamed(problem, fine_path)
    if traj.diverged:
        raise ReferenceDivergenceError(
            f"fine-mesh reference for {problem.name} diverged at step {traj.diverged_at} "
            f"(m_fine={fine_path.steps_per_unit}, seed={fine_path.seed_provenance})"
        )
    return ReferenceSolution(
        "fine_mesh_tamed",
        fine_path.steps_per_unit,
        traj.values,
        {"m_fine": fine_path.steps_per_unit, "problem": problem.name, "seed": fine_path.seed_provenance},
    )

