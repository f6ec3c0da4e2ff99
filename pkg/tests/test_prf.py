import numpy as np

from irglab.prf import derive_key, mark_values, mix64, stream_keys, unit_from_bits


def test_mix64_is_deterministic_and_nontrivial():
    a = mix64(np.uint64(12345))
    b = mix64(np.uint64(12345))
    assert a == b
    assert a != np.uint64(12345)
    assert mix64(np.uint64(0)) != mix64(np.uint64(1))


def test_mix64_vectorized_matches_scalar():
    xs = np.arange(1000, dtype=np.uint64)
    vec = mix64(xs)
    for i in (0, 1, 17, 999):
        assert vec[i] == mix64(xs[i])


def test_derive_key_is_order_sensitive():
    assert derive_key(1, 2) != derive_key(2, 1)
    assert derive_key(1, 2, 3) != derive_key(1, 2)
    assert derive_key(7, 0) != derive_key(7)


def test_stream_keys_match_derive_key():
    keys = stream_keys(99, 5, 64)
    assert keys.shape == (64,)
    for i in (0, 1, 63):
        assert keys[i] == derive_key(99, 5, i)
    assert len(set(keys.tolist())) == 64


def test_unit_from_bits_stays_inside_open_interval():
    bits = np.array([0, 1, 2**64 - 1, 2**63], dtype=np.uint64)
    u = unit_from_bits(bits)
    assert np.all(u > 0.0)
    assert np.all(u < 1.0)


def test_mark_values_are_uniform_enough():
    keys = stream_keys(3, 11, 200)
    t = mark_values(keys[:, None], np.arange(500, dtype=np.uint64)[None, :])
    assert t.shape == (200, 500)
    n = t.size
    assert np.isclose(t.mean(), 0.5, atol=4.0 * 0.2887 / np.sqrt(n))
    assert np.isclose(t.var(), 1.0 / 12.0, atol=0.001)
    # same (key, position) pair always gives the same mark
    again = mark_values(keys[:, None], np.arange(500, dtype=np.uint64)[None, :])
    assert np.array_equal(t, again)


def test_mark_values_differ_across_keys_and_positions():
    keys = stream_keys(3, 11, 4)
    row = mark_values(keys[0], np.arange(10, dtype=np.uint64))
    other = mark_values(keys[1], np.arange(10, dtype=np.uint64))
    assert not np.allclose(row, other)
    assert len(np.unique(row)) == 10
