"""Problem definitions for SDEs with a piecewise constant argument.

An equation of the form

    dx(t) = mu(x(t), x([t])) dt + sigma(x(t), x([t])) dB(t),   x(0) = xi,

is described by a :class:`SepcaProblem`.  ``[t]`` is the floor of ``t``, so the
second argument of both coefficients is frozen on every unit interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Drift = Callable[[np.ndarray, np.ndarray], np.ndarray]
Diffusion = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PolyLinCoefficients:
    """Scalar coefficients ``mu = a*x + a0*y - k*x**alpha``, ``sigma = b*x + b0*y``.

    Instances are picklable and are recognised by the compiled kernels, so
    problems built from them integrate on the fast path.
    """

    k: float = 0.0
    alpha: float = 1.0
    a: float = 0.0
    a0: float = 0.0
    b: float = 0.0
    b0: float = 0.0

    def drift_scalar(self, x: float, y: float) -> float:
        mu = self.a * x + self.a0 * y
        if self.k != 0.0:
            mu = mu - self.k * x**self.alpha
        return mu

    def diffusion_scalar(self, x: float, y: float) -> float:
        return self.b * x + self.b0 * y

    def drift(self, x, y):
        return np.array([self.drift_scalar(float(x[0]), float(y[0]))])

    def diffusion(self, x, y):
        return np.array([[self.diffusion_scalar(float(x[0]), float(y[0]))]])

    def kernel_args(self) -> tuple[float, ...]:
        return (self.k, self.alpha, self.a, self.a0, self.b, self.b0)


@dataclass(frozen=True)
class SepcaProblem:
    state_dim: int
    noise_dim: int
    drift: Drift
    diffusion: Diffusion
    initial: np.ndarray
    horizon: int
    name: str = "custom"
    # set for built-in scalar problems; enables the compiled kernel
    coefficients: PolyLinCoefficients | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.state_dim < 1 or self.noise_dim < 1:
            raise ValueError("state_dim and noise_dim must be positive")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon!r}")
        xi = np.array(self.initial, dtype=np.float64).reshape(self.state_dim)
        if not np.all(np.isfinite(xi)):
            raise ValueError("initial value must be finite")
        xi.flags.writeable = False
        object.__setattr__(self, "initial", xi)
        object.__setattr__(self, "horizon", int(self.horizon))

    def with_horizon(self, horizon: int) -> SepcaProblem:
        return SepcaProblem(
            self.state_dim,
            self.noise_dim,
            self.drift,
            self.diffusion,
            self.initial,
            horizon,
            self.name,
            self.coefficients,
        )

    def mu(self, x, y) -> np.ndarray:
        return np.asarray(self.drift(x, y), dtype=np.float64).reshape(self.state_dim)

    def sigma(self, x, y) -> np.ndarray:
        return np.asarray(self.diffusion(x, y), dtype=np.float64).reshape(
            self.state_dim, self.noise_dim
        )


@dataclass(frozen=True)
class PolynomialParams:
    """Parameters of ``dx = (-x^alpha + a(x + x([t])))dt + b(x + x([t]))dB``, ``x(0) = c``."""

    alpha: int
    a: float
    b: float
    c: float

    def __post_init__(self):
        if int(self.alpha) != self.alpha or self.alpha < 1:
            raise ValueError(f"alpha must be a positive integer, got {self.alpha!r}")
        if self.alpha % 2 == 0:
            raise ValueError(
                f"alpha must be odd: -x^{self.alpha} is not monotone and breaks "
                "the one-sided Lipschitz condition"
            )


def _from_coefficients(coef, xi, horizon, name):
    return SepcaProblem(1, 1, coef.drift, coef.diffusion, [xi], horizon, name, coef)


def make_polynomial_problem(params: PolynomialParams, horizon: int = 1) -> SepcaProblem:
    coef = PolyLinCoefficients(
        k=1.0, alpha=float(params.alpha), a=params.a, a0=params.a, b=params.b, b0=params.b
    )
    name = f"poly(alpha={params.alpha},a={params.a},b={params.b},c={params.c})"
    return _from_coefficients(coef, params.c, horizon, name)


def make_linear_problem(a, a0, b, b0, xi, T: int = 1) -> SepcaProblem:
    """Linear problem ``dx = (a x + a0 x([t]))dt + (b x + b0 x([t]))dB``."""
    vals = (a, a0, b, b0, xi)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("linear problem parameters must be finite")
    coef = PolyLinCoefficients(a=a, a0=a0, b=b, b0=b0)
    return _from_coefficients(coef, xi, T, f"linear(a={a},a0={a0},b={b},b0={b0},xi={xi})")


# Parameter sets for the two reference polynomial experiments.
EXPERIMENT_1 = PolynomialParams(alpha=3, a=0.5, b=1.0, c=1.5)
EXPERIMENT_2 = PolynomialParams(alpha=5, a=4.5, b=3.0, c=1.0)


# -- assumption checker ------------------------------------------------------


@dataclass(frozen=True)
class AssumptionReport:
    """Sampled constants for the four coefficient conditions.

    ``violations`` holds ``(condition, point)`` witnesses where the sampled
    quotient keeps growing with the box radius, i.e. where no global
    constant can exist.
    """

    k_estimate_diffusion_lipschitz: float
    k_estimate_one_sided: float
    k_estimate_delay_lipschitz: float
    growth_fit: tuple[float, float]
    violations: list[tuple[str, tuple]]
    samples_used: int
    box_radius: float

    def as_dict(self) -> dict:
        return {
            "k_estimate_diffusion_lipschitz": self.k_estimate_diffusion_lipschitz,
            "k_estimate_one_sided": self.k_estimate_one_sided,
            "k_estimate_delay_lipschitz": self.k_estimate_delay_lipschitz,
            "growth_fit": {"K": self.growth_fit[0], "c": self.growth_fit[1]},
            "violations": [
                {"condition": cond, "point": [list(map(float, p)) for p in pt]}
                for cond, pt in self.violations
            ],
            "samples_used": self.samples_used,
            "box_radius": self.box_radius,
        }


# a quotient is flagged when doubling the box grows its supremum by more than this
_GROWTH_FLAG = 1.5


def _finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} returned a non-finite value inside the sampling box")
    return arr


def _opnorm(mat):
    return float(np.linalg.norm(mat, 2)) if mat.size > 1 else abs(float(mat.flat[0]))


def _drift_jacobian_norm(problem, x, y):
    d = problem.state_dim
    step = 1e-6 * max(1.0, math.hypot(*x))
    jac = np.empty((d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        up = _finite(problem.mu(x + e, y), "drift")
        dn = _finite(problem.mu(x - e, y), "drift")
        jac[:, i] = (up - dn) / (2.0 * step)
    return _opnorm(jac)


def _quotients(problem, u, radius):
    """The three Lipschitz-type quotients at unit-box sample ``u`` scaled by ``radius``."""
    x1, y1, x2, y2 = (radius * v for v in u)
    q = {}
    dx = math.hypot(*(x1 - x2))
    dy = math.hypot(*(y1 - y2))
    if dx + dy > 0.0:
        s1 = _finite(problem.sigma(x1, y1), "diffusion")
        s2 = _finite(problem.sigma(x2, y2), "diffusion")
        q["2.1"] = _opnorm(s1 - s2) / (dx + dy)
    if dx > 0.0:
        m1 = _finite(problem.mu(x1, y1), "drift")
        m2 = _finite(problem.mu(x2, y1), "drift")
        q["2.2"] = float(np.dot((x1 - x2) / dx, m1 - m2)) / dx
    if dy > 0.0:
        m1 = _finite(problem.mu(x1, y1), "drift")
        m2 = _finite(problem.mu(x1, y2), "drift")
        q["2.3"] = math.hypot(*(m1 - m2)) / dy
    return q


def check_assumptions(problem: SepcaProblem, box_radius: float, samples: int, seed: int) -> AssumptionReport:
    """Estimate the coefficient constants by sampling ``[-R, R]^d``.

    Each sample is evaluated at radius ``R`` and ``R/2`` with the same unit
    point; a quotient whose supremum grows by more than 1.5x between the two
    radii is reported as a violation, with the maximising point as witness.
    The growth bound ``|mu_x| <= K(1 + |x|^c)`` is fitted by least squares of
    log Jacobian norm against ``log(1 + |x|)``, then ``K`` is the smallest
    constant that covers every sample.
    """
    if box_radius <= 0:
        raise ValueError("box_radius must be positive")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    d = problem.state_dim
    rng = np.random.Generator(np.random.PCG64(seed))
    units = rng.uniform(-1.0, 1.0, size=(samples, 4, d))

    best = {}
    best_half = {}
    for u in units:
        for cond, val in _quotients(problem, u, box_radius).items():
            if cond not in best or val > best[cond][0]:
                best[cond] = (val, tuple(box_radius * v for v in u))
        for cond, val in _quotients(problem, u, 0.5 * box_radius).items():
            best_half[cond] = max(best_half.get(cond, -math.inf), val)

    violations = []
    for cond in ("2.1", "2.2", "2.3"):
        if cond not in best:
            continue
        full = best[cond][0]
        half = max(best_half[cond], 0.0)
        if not math.isfinite(full) or full > _GROWTH_FLAG * half + 1e-9:
            violations.append((cond, best[cond][1]))

    norms = np.array([_drift_jacobian_norm(problem, box_radius * u[0], box_radius * u[1]) for u in units])
    radii = np.array([math.hypot(*(box_radius * u[0])) for u in units])
    c = _fit_growth_exponent(radii, norms)
    K = float(np.max(norms / (1.0 + radii**c)))

    def est(cond):
        return max(best[cond][0], 0.0) if cond in best else 0.0

    return AssumptionReport(
        k_estimate_diffusion_lipschitz=est("2.1"),
        k_estimate_one_sided=est("2.2"),
        k_estimate_delay_lipschitz=est("2.3"),
        growth_fit=(K, c),
        violations=violations,
        samples_used=samples,
        box_radius=float(box_radius),
    )


def _fit_growth_exponent(radii, norms):
    keep = norms > 0.0
    if keep.sum() < 2:
        return 0.0
    lx = np.log1p(radii[keep])
    ly = np.log(norms[keep])
    if np.ptp(lx) == 0.0:
        return 0.0
    slope = np.polyfit(lx, ly, 1)[0]
    # finite-difference noise on constant Jacobians gives tiny slopes either way
    return float(max(slope, 0.0)) if abs(slope) > 1e-6 else 0.0
