import numpy as np
from hypothesis import given, strategies as st

from ppgglu import prng


def test_splitmix64_known_first_output():
    # published first output of SplitMix64 started from state 0
    assert prng.splitmix64(0) == 0xE220A8397B1DCDAF


def xorshift_uint64(state, count):
    """Same generator written with numpy uint64 wraparound."""
    s = np.uint64(state)
    out = []
    with np.errstate(over="ignore"):
        for _ in range(count):
            s ^= s >> np.uint64(12)
            s ^= s << np.uint64(25)
            s ^= s >> np.uint64(27)
            out.append(int(s * np.uint64(0x2545F4914F6CDD1D)))
    return out


@given(st.integers(0, 2**64 - 1))
def test_xorshift_matches_uint64_arithmetic(seed):
    g = prng.XorShift64Star(seed)
    start = g.state
    assert [g.next() for _ in range(5)] == xorshift_uint64(start, 5)


@given(st.integers(1, 1000), st.integers(0, 2**63))
def test_below_in_range(bound, seed):
    g = prng.XorShift64Star(seed)
    assert all(0 <= g.below(bound) < bound for _ in range(20))


@given(st.integers(1, 300), st.integers(0, 2**63))
def test_permutation_is_permutation_and_pure(n, seed):
    p = prng.permutation(n, seed)
    assert sorted(p) == list(range(n))
    assert prng.permutation(n, seed) == p


def test_derive_seed_streams_differ():
    seeds = {prng.derive_seed(0, s, i) for s in range(1, 6) for i in range(10)}
    assert len(seeds) == 50
    assert all(0 <= s < 2**63 for s in seeds)
    assert prng.derive_seed(5, prng.STREAM_INIT) == prng.derive_seed(5, prng.STREAM_INIT)
