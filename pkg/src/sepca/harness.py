"""Monte Carlo strong-error experiments.

Every trajectory ``(block i, trajectory j)`` owns one keyed Brownian path at
the reference resolution.  The reference solution and every coarser
approximation are driven by that same path (coarse increments are block
sums of fine ones), so the measured errors are pathwise.  Results are
reduced in ascending ``(i, j)`` order whatever the worker count, which makes
reports bit-reproducible.
"""

from __future__ import annotations

import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from sepca import __version__
from sepca.model import PolynomialParams, SepcaProblem, make_linear_problem, make_polynomial_problem
from sepca.noise import coarsen, path_for
from sepca.oracle import reference_solution
from sepca.scheme import simulate_explicit_euler, simulate_tamed

SCHEMES = {"tamed": simulate_tamed, "explicit": simulate_explicit_euler}


@dataclass(frozen=True)
class ProblemSpec:
    """Picklable name + parameters of a built-in problem."""

    kind: str
    params: tuple[tuple[str, float], ...]

    @classmethod
    def poly(cls, alpha, a, b, c):
        PolynomialParams(alpha, a, b, c)  # validate early
        return cls("poly", (("alpha", int(alpha)), ("a", a), ("b", b), ("c", c)))

    @classmethod
    def linear(cls, a, a0, b, b0, xi):
        return cls("linear", (("a", a), ("a0", a0), ("b", b), ("b0", b0), ("xi", xi)))

    def build(self, horizon: int) -> SepcaProblem:
        p = dict(self.params)
        if self.kind == "poly":
            return make_polynomial_problem(PolynomialParams(p["alpha"], p["a"], p["b"], p["c"]), horizon)
        if self.kind == "linear":
            return make_linear_problem(p["a"], p["a0"], p["b"], p["b0"], p["xi"], horizon)
        raise ValueError(f"unknown problem kind {self.kind!r}")

    def describe(self) -> str:
        return self.kind + "(" + ",".join(f"{k}={v}" for k, v in self.params) + ")"


def _build(problem, horizon):
    if isinstance(problem, SepcaProblem):
        return problem.with_horizon(horizon)
    return problem.build(horizon)


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemSpec | SepcaProblem
    horizons: tuple[int, ...] = (1,)
    levels: tuple[int, ...] = tuple(2**k for k in range(8, 13))
    reference_level: int = 2**18  # steps per unit time
    blocks: int = 30
    per_block: int = 100
    base_seed: int = 0
    scheme: str = "tamed"
    sup_over_grid: bool = False
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "horizons", tuple(int(t) for t in self.horizons))
        object.__setattr__(self, "levels", tuple(int(m) for m in self.levels))
        if not self.horizons or any(t < 1 for t in self.horizons):
            raise ValueError("horizons must be positive integers")
        if not self.levels or any(m < 1 for m in self.levels):
            raise ValueError("levels must be positive integers")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("levels must be strictly increasing")
        bad = [m for m in self.levels if self.reference_level % m]
        if bad:
            raise ValueError(f"levels {bad} do not divide reference level {self.reference_level}")
        if self.blocks < 1 or self.per_block < 1:
            raise ValueError("blocks and per_block must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {sorted(SCHEMES)}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def n_trajectories(self) -> int:
        return self.blocks * self.per_block

    def pairs(self):
        return [(i, j) for i in range(self.blocks) for j in range(self.per_block)]

    def resolved(self) -> dict:
        """Every setting that affects results (worker count and output path do not)."""
        d = {k: v for k, v in asdict(self).items() if k not in ("problem", "workers", "output")}
        prob = self.problem
        d["problem"] = prob.describe() if isinstance(prob, ProblemSpec) else prob.name
        d["horizons"] = list(self.horizons)
        d["levels"] = list(self.levels)
        return d


def _map_ordered(fn, config, items):
    """``[fn(config, *item) for item in items]``, optionally on a process pool."""
    if config.workers == 1 or len(items) < 2:
        return [fn(config, *it) for it in items]
    chunk = max(1, len(items) // (4 * config.workers))
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(fn, [config] * len(items), *zip(*items), chunksize=chunk))


def _trajectory_errors(config: ExperimentConfig, block: int, traj: int):
    """Squared errors, shape ``(len(horizons), len(levels))``; NaN marks divergence."""
    T_max = max(config.horizons)
    problem = _build(config.problem, T_max)
    fine = path_for(config.base_seed, block, traj, problem.noise_dim, T_max, config.reference_level)
    ref = reference_solution(problem, fine)
    simulate = SCHEMES[config.scheme]
    out = np.full((len(config.horizons), len(config.levels)), np.nan)
    for li, m in enumerate(config.levels):
        y = simulate(problem, coarsen(fine, config.reference_level // m))
        x = ref.on_grid(m)
        for hi, T in enumerate(config.horizons):
            idx = T * m
            if y.diverged and y.diverged_at <= idx:
                continue
            if config.sup_over_grid:
                diff = x[: idx + 1] - y.values[: idx + 1]
                out[hi, li] = float(np.max(np.einsum("ij,ij->i", diff, diff)))
            else:
                diff = x[idx] - y.values[idx]
                out[hi, li] = float(np.dot(diff, diff))
    return out


def _ordered_mean(values) -> float:
    values = list(values)
    if not values:
        return math.nan
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def mean_square_error(summands) -> float:
    """Average of squared errors, summed in the given order."""
    return _ordered_mean(summands)


def _pow(v, p):
    try:
        return v**p
    except OverflowError:
        return math.inf


def mse_summands(config: ExperimentConfig, m: int, T: int) -> list[float]:
    """Per-trajectory ``|x(T) - y(T)|^2`` in ``(block, trajectory)`` order; NaN if diverged."""
    if config.reference_level % m:
        raise ValueError(f"level {m} does not divide reference level {config.reference_level}")
    sub = _restrict(config, m, T)
    return [float(e[0, 0]) for e in _map_ordered(_trajectory_errors, sub, sub.pairs())]


def _restrict(config, m, T):
    return replace(config, levels=(m,), horizons=(T,))


def estimate_mse(config: ExperimentConfig, m: int, T: int) -> float:
    """Monte Carlo mean-square terminal error over all non-diverged trajectories."""
    return mean_square_error(s for s in mse_summands(config, m, T) if not math.isnan(s))


def fit_order(hs, eps) -> float:
    """Least-squares slope of ``log2 eps`` against ``log2 h``."""
    hs = np.asarray(hs, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if hs.shape != eps.shape or hs.ndim != 1 or len(hs) < 2:
        raise ValueError("need two equal-length sequences of at least two points")
    if np.any(hs <= 0) or np.any(eps <= 0) or not np.all(np.isfinite(eps)):
        raise ValueError("step sizes and errors must be positive and finite")
    x = np.log2(hs)
    y = np.log2(eps)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


@dataclass(frozen=True)
class HorizonTable:
    horizon: int
    levels: tuple[int, ...]
    eps: tuple[float, ...]
    ratios: tuple[float | None, ...]
    divergences: tuple[int, ...]
    fitted_order_mse: float
    fitted_strong_order: float

    @property
    def steps(self) -> tuple[float, ...]:
        return tuple(1.0 / m for m in self.levels)


@dataclass(frozen=True)
class ConvergenceReport:
    tables: tuple[HorizonTable, ...]
    trajectories_used: int
    divergence_count: int
    config: ExperimentConfig = field(repr=False)

    def table(self, horizon: int) -> HorizonTable:
        for t in self.tables:
            if t.horizon == horizon:
                return t
        raise KeyError(horizon)


def _ratios(eps):
    out = [None]
    for prev, cur in zip(eps, eps[1:]):
        out.append(prev / cur if cur > 0 else math.inf)
    return tuple(out)


def build_table(horizon, levels, eps, divergences=None) -> HorizonTable:
    eps = tuple(float(e) for e in eps)
    hs = [1.0 / m for m in levels]
    try:
        q = fit_order(hs, eps)
    except ValueError:
        q = math.nan
    return HorizonTable(
        horizon,
        tuple(levels),
        eps,
        _ratios(eps),
        tuple(divergences or (0,) * len(eps)),
        q,
        q / 2,
    )


def run_convergence_study(config: ExperimentConfig) -> ConvergenceReport:
    errs = np.stack(_map_ordered(_trajectory_errors, config, config.pairs()))
    tables = []
    total_div = 0
    for hi, T in enumerate(config.horizons):
        eps, divs = [], []
        for li in range(len(config.levels)):
            col = errs[:, hi, li]
            div = int(np.isnan(col).sum())
            eps.append(mean_square_error(float(v) for v in col if not math.isnan(v)))
            divs.append(div)
            total_div += div
        tables.append(build_table(T, config.levels, eps, divs))
    return ConvergenceReport(tuple(tables), config.n_trajectories, total_div, config)


def _step_label(m: int) -> str:
    k = m.bit_length() - 1
    return f"2^-{k}" if m == 1 << k else repr(1.0 / m)


def format_csv(report: ConvergenceReport) -> str:
    """Tables-1/2 layout: one ``eps``/``ratio`` column pair per horizon, rows by decreasing step."""
    buf = io.StringIO()
    buf.write(f"# sepca {__version__}\n")
    for k, v in report.config.resolved().items():
        buf.write(f"# {k} = {v}\n")
    cols = ["step"]
    for t in report.tables:
        cols += [f"eps_T{t.horizon}", f"ratio_T{t.horizon}"]
    buf.write(",".join(cols) + "\n")
    for li, m in enumerate(report.config.levels):
        row = [_step_label(m)]
        for t in report.tables:
            r = t.ratios[li]
            row += [f"{t.eps[li]:.6e}", "*" if r is None else f"{r:.4f}"]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def summary(report: ConvergenceReport) -> dict:
    return {
        "version": __version__,
        "config": report.config.resolved(),
        "trajectories_used": report.trajectories_used,
        "divergence_count": report.divergence_count,
        "horizons": {
            str(t.horizon): {
                "fitted_order_mse": t.fitted_order_mse,
                "fitted_strong_order": t.fitted_strong_order,
                "eps": list(t.eps),
                "ratios": [r for r in t.ratios],
                "divergences": list(t.divergences),
            }
            for t in report.tables
        },
    }


def write_report(report: ConvergenceReport, path) -> tuple[str, str]:
    """Write the CSV table and a JSON summary next to it; returns both paths."""
    path = str(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_csv(report))
    json_path = (path[:-4] if path.endswith(".csv") else path) + ".json"
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path, json_path


# -- moment sweep -------------------------------------------------------------


@dataclass(frozen=True)
class MomentReport:
    """Empirical ``E|y_{Tm}|^p`` per level for the tamed scheme, plus divergence counts.

    ``moments[(m, p)]`` averages over non-diverged tamed trajectories;
    ``explicit_moments`` does the same for the explicit scheme (NaN when every
    explicit trajectory diverged).
    """

    horizon: int
    levels: tuple[int, ...]
    p_values: tuple[float, ...]
    moments: dict
    explicit_moments: dict
    tamed_divergences: dict
    explicit_divergences: dict
    sample_size: int

    def as_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "sample_size": self.sample_size,
            "levels": {
                str(m): {
                    "tamed_divergences": self.tamed_divergences[m],
                    "explicit_divergences": self.explicit_divergences[m],
                    "moments": {str(p): self.moments[(m, p)] for p in self.p_values},
                    "explicit_moments": {str(p): self.explicit_moments[(m, p)] for p in self.p_values},
                }
                for m in self.levels
            },
        }


def _trajectory_terminals(config: ExperimentConfig, block: int, traj: int):
    """Terminal norms per level, shape ``(2, len(levels))``; row 0 tamed, row 1 explicit; NaN = diverged."""
    T = max(config.horizons)
    problem = _build(config.problem, T)
    finest = config.levels[-1]
    fine = path_for(config.base_seed, block, traj, problem.noise_dim, T, finest)
    out = np.full((2, len(config.levels)), np.nan)
    for li, m in enumerate(config.levels):
        coarse = coarsen(fine, finest // m)
        for row, sim in enumerate((simulate_tamed, simulate_explicit_euler)):
            y = sim(problem, coarse)
            if not y.diverged:
                out[row, li] = math.hypot(*y.values[-1])
    return out


def moment_sweep(config: ExperimentConfig, p_values) -> MomentReport:
    """Empirical terminal moments across levels at the largest configured horizon.

    Paths are generated at the finest listed level and coarsened, so the
    reference level is not used here.
    """
    p_values = tuple(float(p) for p in p_values)
    if any(p < 1 for p in p_values):
        raise ValueError("moment orders must be >= 1")
    norms = np.stack(_map_ordered(_trajectory_terminals, config, config.pairs()))
    moments, emoments, tdiv, ediv = {}, {}, {}, {}
    for li, m in enumerate(config.levels):
        tam = [float(v) for v in norms[:, 0, li] if not math.isnan(v)]
        exp = [float(v) for v in norms[:, 1, li] if not math.isnan(v)]
        tdiv[m] = config.n_trajectories - len(tam)
        ediv[m] = config.n_trajectories - len(exp)
        for p in p_values:
            moments[(m, p)] = _ordered_mean(_pow(v, p) for v in tam)
            emoments[(m, p)] = _ordered_mean(_pow(v, p) for v in exp)
    return MomentReport(
        max(config.horizons), config.levels, p_values, moments, emoments, tdiv, ediv, config.n_trajectories
    )
