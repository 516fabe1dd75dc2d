"""Seeded Brownian increments with exact coarsening.

Reproducibility contract (changing any of this changes every golden value):

* stream key: SplitMix64 absorption of the words ``base, block, trajectory``
  (see :func:`derive_stream_seed`);
* generator: ``numpy.random.PCG64(key)``;
* normals: ``Generator.standard_normal`` (NumPy's 256-layer ziggurat), drawn
  row-major into a ``(T*m, r)`` array and multiplied by ``sqrt(1/m)``.

Paths of the same key but longer horizon extend shorter ones: the first
``T*m`` rows are identical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    # SplitMix64 finalizer; a bijection on 64-bit words
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


def derive_stream_seed(base: int, block: int, trajectory: int) -> int:
    """Mix ``(base, block, trajectory)`` into a 64-bit stream key.

    ``h = mix(base + G); h = mix(h ^ (block + G)); h = mix(h ^ (trajectory + G))``
    with ``G`` the SplitMix64 golden-ratio increment.  For fixed ``base`` and
    ``block`` the map ``trajectory -> key`` is a bijection.
    """
    if block < 0 or trajectory < 0:
        raise ValueError("block and trajectory must be non-negative")
    h = _mix64((base + _GOLDEN) & _MASK)
    h = _mix64(h ^ ((block + _GOLDEN) & _MASK))
    return _mix64(h ^ ((trajectory + _GOLDEN) & _MASK))


@dataclass(frozen=True, eq=False)
class BrownianGrid:
    """Increments ``dB_n = B(t_{n+1}) - B(t_n)`` on the grid ``t_n = n/m``.

    ``increments`` has shape ``(horizon * steps_per_unit, noise_dim)`` and is
    read-only.
    """

    noise_dim: int
    horizon: int
    steps_per_unit: int
    increments: np.ndarray
    key: int | None = None
    seed_provenance: tuple[int, int, int] | None = None

    def __post_init__(self):
        inc = np.ascontiguousarray(self.increments, dtype=np.float64)
        if inc.ndim == 1:
            inc = inc.reshape(-1, 1)
        if inc.shape != (self.horizon * self.steps_per_unit, self.noise_dim):
            raise ValueError(
                f"increments shape {inc.shape} does not match "
                f"T*m={self.horizon * self.steps_per_unit}, r={self.noise_dim}"
            )
        if not np.all(np.isfinite(inc)):
            raise ValueError("increments must be finite")
        inc.flags.writeable = False
        object.__setattr__(self, "increments", inc)

    @property
    def n_steps(self) -> int:
        return self.horizon * self.steps_per_unit

    @property
    def step(self) -> float:
        return 1.0 / self.steps_per_unit

    @cached_property
    def prefix(self) -> np.ndarray:
        """``B(t_0..t_N)`` from one ascending running sum."""
        out = np.zeros((self.n_steps + 1, self.noise_dim))
        np.cumsum(self.increments, axis=0, out=out[1:])
        out.flags.writeable = False
        return out

    def truncated(self, horizon: int) -> BrownianGrid:
        """The same path restricted to ``[0, horizon]``."""
        if not 1 <= horizon <= self.horizon:
            raise ValueError(f"horizon {horizon} outside 1..{self.horizon}")
        if horizon == self.horizon:
            return self
        return BrownianGrid(
            self.noise_dim,
            horizon,
            self.steps_per_unit,
            self.increments[: horizon * self.steps_per_unit],
            self.key,
            self.seed_provenance,
        )


def generate_fine_path(key: int, r: int, T: int, m_fine: int, provenance=None) -> BrownianGrid:
    if m_fine < 1 or r < 1 or T < 1:
        raise ValueError("r, T and m_fine must be positive")
    rng = np.random.Generator(np.random.PCG64(key))
    inc = rng.standard_normal((T * m_fine, r))
    inc *= np.sqrt(1.0 / m_fine)
    return BrownianGrid(r, T, m_fine, inc, key, provenance)


def path_for(base: int, block: int, trajectory: int, r: int, T: int, m_fine: int) -> BrownianGrid:
    key = derive_stream_seed(base, block, trajectory)
    return generate_fine_path(key, r, T, m_fine, (base, block, trajectory))


def coarsen(path: BrownianGrid, factor: int) -> BrownianGrid:
    """Sum each run of ``factor`` consecutive increments, in ascending order."""
    if factor < 1 or path.steps_per_unit % factor:
        raise ValueError(f"factor {factor} does not divide steps_per_unit={path.steps_per_unit}")
    if factor == 1:
        return path
    blocks = path.increments.reshape(-1, factor, path.noise_dim)
    # cumsum is a strict left-to-right scan, unlike pairwise np.sum
    coarse = np.cumsum(blocks, axis=1)[:, -1, :]
    return BrownianGrid(
        path.noise_dim,
        path.horizon,
        path.steps_per_unit // factor,
        coarse,
        path.key,
        path.seed_provenance,
    )


def cumulative_value(path: BrownianGrid, n: int) -> np.ndarray:
    """``B(t_n)``; ``cumulative_value(p, n + 1) == cumulative_value(p, n) + p.increments[n]``."""
    if not 0 <= n <= path.n_steps:
        raise IndexError(f"grid index {n} outside 0..{path.n_steps}")
    return path.prefix[n]


# -- binary dump ------------------------------------------------------------
# header: four little-endian uint64 (r, T, m, key); body: T*m*r little-endian
# float64 increments, row-major.

_HEADER = struct.Struct("<4Q")


def dump_path(path: BrownianGrid, fh) -> None:
    fh.write(_HEADER.pack(path.noise_dim, path.horizon, path.steps_per_unit, path.key or 0))
    fh.write(path.increments.astype("<f8").tobytes(order="C"))


def load_path(fh) -> BrownianGrid:
    r, T, m, key = _HEADER.unpack(fh.read(_HEADER.size))
    body = np.frombuffer(fh.read(8 * r * T * m), dtype="<f8")
    return BrownianGrid(r, T, m, body.reshape(T * m, r).astype(np.float64), key)
