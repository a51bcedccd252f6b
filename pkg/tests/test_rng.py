import numpy as np
import pytest
from hypothesis import given, strategies as st

from nelson_lab import rng


def test_same_arguments_same_numbers():
    assert np.array_equal(rng.standard_normal(5, 3, 1000), rng.standard_normal(5, 3, 1000))


def test_thread_count_does_not_change_draws():
    n = 3 * rng.BLOCK + 17
    one = rng.standard_normal(11, 42, n, threads=1)
    four = rng.standard_normal(11, 42, n, threads=4)
    assert np.array_equal(one, four)


@given(st.integers(1, 3 * 4096), st.integers(1, 3 * 4096), st.integers(0, 2**32))
def test_walker_draws_do_not_depend_on_ensemble_size(n1, n2, seed):
    a, b = rng.standard_normal(seed, 0, n1), rng.standard_normal(seed, 0, n2)
    k = min(n1, n2)
    assert np.array_equal(a[:k], b[:k])


def test_streams_steps_and_seeds_differ():
    base = rng.standard_normal(1, 0, 4096)
    for other in (rng.standard_normal(2, 0, 4096), rng.standard_normal(1, 1, 4096),
                  rng.standard_normal(1, 0, 4096, stream=1)):
        assert abs(np.corrcoef(base, other)[0, 1]) < 0.06


def test_moments_of_a_large_draw():
    x = rng.standard_normal(123, 7, 1_000_000)
    assert abs(x.mean()) < 3 / np.sqrt(x.size)
    assert abs(x.var() - 1) < 3 * np.sqrt(2 / x.size)
    blocks = x[: 200 * rng.BLOCK].reshape(200, rng.BLOCK).mean(axis=1)
    assert abs(np.corrcoef(blocks[:-1], blocks[1:])[0, 1]) < 0.25


def test_uniform_range_and_stream():
    u = rng.uniform(3, 10_000, 0)
    assert u.min() >= 0 and u.max() < 1
    assert not np.array_equal(u, rng.uniform(3, 10_000, 1))


def test_threads_from_env(monkeypatch):
    monkeypatch.delenv("NELSON_LAB_THREADS", raising=False)
    assert rng.threads_from_env() == 1
    monkeypatch.setenv("NELSON_LAB_THREADS", "4")
    assert rng.threads_from_env() == 4
    monkeypatch.setenv("NELSON_LAB_THREADS", "0")
    with pytest.raises(ValueError):
        rng.threads_from_env()
