"""Tamed and plain Euler integrators with piecewise constant delay."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sepca._backend import kernels
from sepca.model import SepcaProblem
from sepca.noise import BrownianGrid


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Grid values ``y_0..y_N`` of one numerical solution.

    If the scheme produced a non-finite value at step ``diverged_at``, only
    ``y_0..y_{diverged_at-1}`` are stored.
    """

    problem_name: str
    steps_per_unit: int
    values: np.ndarray
    diverged_at: int | None = None
    scheme: str = "tamed"

    def __post_init__(self):
        self.values.flags.writeable = False

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    @property
    def terminal(self) -> np.ndarray:
        if self.diverged:
            raise ValueError(f"trajectory diverged at step {self.diverged_at}")
        return self.values[-1]

    def at(self, n: int) -> np.ndarray:
        return self.values[n]


def delay_index(n: int, m: int) -> int:
    """Grid index of the most recent integer time at or before ``t_n = n/m``."""
    if n < 0 or m < 1:
        raise ValueError("need n >= 0 and m >= 1")
    return m * (n // m)


def tame_drift(mu_value, h: float) -> np.ndarray:
    mu = np.asarray(mu_value, dtype=np.float64)
    norm = math.hypot(*mu.reshape(-1))
    return (mu * h) / (1.0 + h * norm)


def tamed_euler_step(problem: SepcaProblem, y_n, y_delay, h: float, dB) -> np.ndarray:
    """One step; the result may be non-finite if ``sigma @ dB`` overflows."""
    y_n = np.asarray(y_n, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        return y_n + tame_drift(problem.mu(y_n, y_delay), h) + problem.sigma(y_n, y_delay) @ np.asarray(dB)


def explicit_euler_step(problem: SepcaProblem, y_n, y_delay, h: float, dB) -> np.ndarray:
    y_n = np.asarray(y_n, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        return y_n + problem.mu(y_n, y_delay) * h + problem.sigma(y_n, y_delay) @ np.asarray(dB)


def _check_compatible(problem: SepcaProblem, path: BrownianGrid):
    if path.noise_dim != problem.noise_dim:
        raise ValueError(f"path noise_dim {path.noise_dim} != problem noise_dim {problem.noise_dim}")
    if path.horizon != problem.horizon:
        raise ValueError(f"path horizon {path.horizon} != problem horizon {problem.horizon}")


def _simulate(problem: SepcaProblem, path: BrownianGrid, tamed: bool) -> Trajectory:
    _check_compatible(problem, path)
    m = path.steps_per_unit
    scheme = "tamed" if tamed else "explicit"
    coef = problem.coefficients
    if coef is not None and problem.state_dim == 1 and problem.noise_dim == 1:
        vals, div = kernels.simulate_polylin(
            float(problem.initial[0]), path.increments[:, 0], m, *coef.kernel_args(), tamed
        )
        return Trajectory(problem.name, m, vals.reshape(-1, 1), None if div < 0 else div, scheme)

    step = tamed_euler_step if tamed else explicit_euler_step
    h = 1.0 / m
    N = path.n_steps
    out = np.empty((N + 1, problem.state_dim))
    out[0] = problem.initial
    for n in range(N):
        try:
            nxt = step(problem, out[n], out[delay_index(n, m)], h, path.increments[n])
        except OverflowError:
            nxt = np.full(problem.state_dim, np.inf)
        if not np.all(np.isfinite(nxt)):
            return Trajectory(problem.name, m, out[: n + 1].copy(), n + 1, scheme)
        out[n + 1] = nxt
    return Trajectory(problem.name, m, out, None, scheme)


def simulate_tamed(problem: SepcaProblem, path: BrownianGrid) -> Trajectory:
    return _simulate(problem, path, tamed=True)


def simulate_explicit_euler(problem: SepcaProblem, path: BrownianGrid) -> Trajectory:
    return _simulate(problem, path, tamed=False)


def interpolate(
    trajectory: Trajectory,
    problem: SepcaProblem,
    path: BrownianGrid,
    fine_path: BrownianGrid,
    t_fine_index: int,
    cell: int | None = None,
) -> np.ndarray:
    """Continuous tamed interpolant at fine-grid time ``t = t_fine_index / m_fine``.

    On cell ``[t_n, t_{n+1}]`` the interpolant is
    ``y_n + tame_drift(mu, h) * (t - t_n)/h + sigma * (B(t) - B(t_n))``.
    ``cell`` defaults to ``floor(t*m)``; passing ``cell=n`` with ``t = t_{n+1}``
    evaluates the left limit at the cell's right end, which reproduces
    ``y_{n+1}`` exactly.  ``B(t) - B(t_n)`` is the ascending sum of the fine
    increments inside the cell, the same sum that forms the coarse increment.
    """
    m = path.steps_per_unit
    if fine_path.steps_per_unit % m or fine_path.horizon != path.horizon:
        raise ValueError("fine_path does not refine path by an integer factor")
    if fine_path.noise_dim != path.noise_dim:
        raise ValueError("fine_path and path have different noise dimensions")
    f = fine_path.steps_per_unit // m
    if not 0 <= t_fine_index <= fine_path.n_steps:
        raise IndexError(f"fine index {t_fine_index} outside 0..{fine_path.n_steps}")
    n = t_fine_index // f if cell is None else cell
    if n == path.n_steps:
        return trajectory.values[n].copy()
    k = t_fine_index - n * f
    if not 0 <= k <= f:
        raise ValueError(f"fine index {t_fine_index} is not inside cell {n}")
    if n >= len(trajectory.values):
        raise ValueError("trajectory diverged before the requested time")
    y_n = trajectory.values[n]
    y_d = trajectory.values[delay_index(n, m)]
    if k == 0:
        return y_n.copy()
    h = 1.0 / m
    dB = np.cumsum(fine_path.increments[n * f : n * f + k], axis=0)[-1]
    return y_n + tame_drift(problem.mu(y_n, y_d), h) * (k / f) + problem.sigma(y_n, y_d) @ dB
