import io
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepca.noise import (
    BrownianGrid,
    coarsen,
    cumulative_value,
    derive_stream_seed,
    dump_path,
    generate_fine_path,
    load_path,
    path_for,
)


def test_stream_seed_deterministic_and_distinct():
    assert derive_stream_seed(42, 3, 7) == derive_stream_seed(42, 3, 7)
    assert derive_stream_seed(42, 0, 0) != derive_stream_seed(42, 0, 1)
    assert derive_stream_seed(42, 0, 1) != derive_stream_seed(42, 1, 0)
    assert derive_stream_seed(42, 0, 0) != derive_stream_seed(43, 0, 0)
    assert 0 <= derive_stream_seed(2**64 - 1, 5, 5) < 2**64


def test_stream_seed_default_design_has_no_collisions():
    keys = {derive_stream_seed(2024, i, j) for i in range(30) for j in range(100)}
    assert len(keys) == 3000


def test_stream_seed_golden_values():
    # frozen: changing the mixer changes every reproducible experiment
    assert derive_stream_seed(0, 0, 0) == 0xFBE988335F36C931
    assert derive_stream_seed(42, 1, 2) == 0x993A82FB7733D2F3


def _splitmix_reference(base, block, traj):
    # independent restatement of the documented mixer
    M = 2**64

    def mix(z):
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % M
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) % M
        return z ^ (z >> 31)

    G = 0x9E3779B97F4A7C15
    h = mix((base + G) % M)
    h = mix(h ^ ((block + G) % M))
    return mix(h ^ ((traj + G) % M))


@settings(max_examples=200)
@given(st.integers(0, 2**64 - 1), st.integers(0, 10**6), st.integers(0, 10**6))
def test_stream_seed_matches_reference_mixer(base, block, traj):
    assert derive_stream_seed(base, block, traj) == _splitmix_reference(base, block, traj)


def test_stream_seed_rejects_negative():
    with pytest.raises(ValueError):
        derive_stream_seed(1, -1, 0)


def test_fine_path_shape_and_determinism():
    p1 = generate_fine_path(123, 2, 3, 16)
    p2 = generate_fine_path(123, 2, 3, 16)
    assert p1.increments.shape == (48, 2)
    assert np.array_equal(p1.increments, p2.increments)
    assert not p1.increments.flags.writeable
    assert not np.array_equal(p1.increments, generate_fine_path(124, 2, 3, 16).increments)


def test_longer_horizon_extends_shorter():
    short = generate_fine_path(9, 1, 1, 64)
    long = generate_fine_path(9, 1, 3, 64)
    assert np.array_equal(long.increments[:64], short.increments)
    assert np.array_equal(long.truncated(1).increments, short.increments)


def test_increment_variance_in_five_sigma_band():
    m = 2**10
    p = generate_fine_path(derive_stream_seed(5, 0, 0), 1, 1000, m)  # 1024000 draws
    n = p.increments.size
    s2 = p.increments.var(ddof=1)
    # sample variance of n normals: sd = sigma^2 sqrt(2/(n-1))
    assert abs(s2 - 2**-10) <= 5 * 2**-10 * np.sqrt(2 / (n - 1))


def test_sum_of_increments_equals_terminal_value():
    p = generate_fine_path(77, 1, 2, 32)
    total = reduce(lambda acc, v: acc + v, p.increments[:, 0], 0.0)
    assert cumulative_value(p, p.n_steps)[0] == total


def test_coarsen_by_hand():
    p = BrownianGrid(1, 1, 4, np.array([0.1, -0.2, 0.3, 0.4]))
    c = coarsen(p, 2)
    assert c.steps_per_unit == 2
    assert c.increments[:, 0].tolist() == [0.1 + -0.2, 0.3 + 0.4]
    assert c.increments[:, 0] == pytest.approx([-0.1, 0.7])


def test_coarsen_identity_and_total():
    p = generate_fine_path(3, 1, 2, 8)
    assert np.array_equal(coarsen(p, 1).increments, p.increments)
    with pytest.raises(ValueError):
        coarsen(p, 3)
    # factor m collapses each unit interval to one increment
    one = coarsen(p, 8)
    assert one.increments.shape == (2, 1)
    first = reduce(lambda a, v: a + v, p.increments[:8, 0], 0.0)
    assert one.increments[0, 0] == first


def test_coarsen_full_horizon_single_increment():
    p = BrownianGrid(1, 1, 16, generate_fine_path(4, 1, 1, 16).increments)
    c = coarsen(p, 16)
    assert c.increments.shape == (1, 1)
    assert c.increments[0, 0] == cumulative_value(p, 16)[0]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**63), st.sampled_from([1, 2, 4, 8, 16, 32]), st.integers(1, 3), st.integers(1, 2))
def test_coarsen_is_ascending_block_sum(key, factor, T, r):
    p = generate_fine_path(key, r, T, 32)
    c = coarsen(p, factor)
    blocks = p.increments.reshape(-1, factor, r)
    for j in range(blocks.shape[0]):
        expect = reduce(lambda acc, v: acc + v, blocks[j, 1:], blocks[j, 0].copy())
        assert np.array_equal(c.increments[j], expect)


def test_cumulative_value():
    p = generate_fine_path(11, 2, 1, 16)
    assert np.array_equal(cumulative_value(p, 0), np.zeros(2))
    for n in range(p.n_steps):
        assert np.array_equal(cumulative_value(p, n + 1), cumulative_value(p, n) + p.increments[n])
    with pytest.raises(IndexError):
        cumulative_value(p, 17)
    with pytest.raises(IndexError):
        cumulative_value(p, -1)


def test_grid_rejects_bad_increments():
    with pytest.raises(ValueError):
        BrownianGrid(1, 1, 4, np.zeros(3))
    with pytest.raises(ValueError):
        BrownianGrid(1, 1, 2, np.array([0.0, np.nan]))


def test_binary_dump_roundtrip():
    p = path_for(42, 1, 2, 2, 1, 8)
    buf = io.BytesIO()
    dump_path(p, buf)
    raw = buf.getvalue()
    assert len(raw) == 32 + 8 * 16
    assert np.frombuffer(raw[:32], "<u8").tolist() == [2, 1, 8, p.key]
    q = load_path(io.BytesIO(raw))
    assert np.array_equal(q.increments, p.increments)
    assert (q.noise_dim, q.horizon, q.steps_per_unit, q.key) == (2, 1, 8, p.key)


def test_golden_increments():
    # PCG64 stream + NumPy ziggurat normals; a change here breaks reproducibility
    p = path_for(42, 0, 0, 1, 1, 4)
    assert p.increments[:, 0].tolist() == [
        -0.3833289941220117,
        -0.20688078225266765,
        -0.1855385066884175,
        -0.2037698546904851,
    ]
