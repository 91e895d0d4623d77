import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hippolab.arith import HALF, ONE, Dyadic, strings_of_length, strings_up_to
from hippolab.measures import bernoulli, hidden_seed
from hippolab.prefix_sets import (
    PrefixFreeSet,
    StreamingCover,
    cover_indicator,
    cover_mass,
    is_prefix_free,
    minimal_cover,
    stream_insert,
)

bitstrings = st.text(alphabet="01", max_size=8)


def brute_prefix_free(s):
    s = list(set(s))
    return not any(a != b and b.startswith(a) for a in s for b in s)


def brute_cover(s, depth):
    """Set of depth-``depth`` strings lying under some element of ``s``."""
    return {y for y in strings_of_length(depth) if any(y.startswith(x) for x in s)}


def test_is_prefix_free_examples():
    assert is_prefix_free({"0", "1"})
    assert not is_prefix_free({"0", "01"})


def test_is_prefix_free_random_vs_brute_force():
    rng = random.Random(11)
    for _ in range(300):
        s = {"".join(rng.choice("01") for _ in range(rng.randint(0, 6))) for _ in range(20)}
        assert is_prefix_free(s) == brute_prefix_free(s)


def test_minimal_cover_examples():
    assert minimal_cover({"0", "01"}) == PrefixFreeSet({"0"})
    assert minimal_cover({"00", "01"}) == PrefixFreeSet({"00", "01"})
    s = {"1", "10", "101", "0"}
    assert minimal_cover(s) == PrefixFreeSet({"1", "0"})
    assert brute_cover(minimal_cover(s), 4) == brute_cover(s, 4)


def test_streaming_examples():
    st0 = StreamingCover()
    st1, e1 = stream_insert(st0, "01")
    assert e1 == PrefixFreeSet({"01"})
    st2, e2 = stream_insert(st1, "0")
    assert e2 == PrefixFreeSet({"00"})
    assert st2.accepted == PrefixFreeSet({"01", "00"})
    assert brute_cover(st2.accepted, 2) == brute_cover({"0", "01"}, 2)
    st3, e3 = stream_insert(st2, "010")
    assert len(e3) == 0
    assert cover_mass(st3.accepted, bernoulli(HALF)) == HALF
    # functional form leaves the old state alone
    assert st0.accepted == PrefixFreeSet()


def test_empty_string_covers_everything():
    st = StreamingCover()
    st.insert("")
    assert len(st.insert("0110")) == 0
    assert st.accepted.elements == ("",)


def test_prefix_free_set_rejects_overlap_and_serializes():
    with pytest.raises(ValueError):
        PrefixFreeSet({"1", "10"})
    s = PrefixFreeSet({"1", "01", "00"})
    assert s.dumps() == "1\n00\n01\n"
    assert PrefixFreeSet.loads(s.dumps()) == s
    assert PrefixFreeSet({""}).dumps() == "-\n"
    assert PrefixFreeSet.loads("-\n") == PrefixFreeSet({""})


def test_covers_uses_extensions():
    s = PrefixFreeSet({"00", "010", "011"})
    assert s.covers("0") and s.covers("01") and s.covers("0111")
    assert not s.covers("") and not s.covers("1")


@given(st.sets(bitstrings, max_size=12))
def test_minimal_cover_preserves_cover(s):
    m = minimal_cover(s)
    assert is_prefix_free(m)
    assert set(m) <= s
    assert cover_indicator(m, 8) == cover_indicator(s, 8)
    assert brute_cover(m, 8) == brute_cover(s, 8)


@given(st.lists(bitstrings, max_size=12), st.randoms())
def test_streaming_order_independent(items, rnd):
    a, b = StreamingCover(), StreamingCover()
    shuffled = list(items)
    rnd.shuffle(shuffled)
    P = bernoulli(Dyadic(3, 3))
    last = Dyadic(0)
    for x in items:
        a.insert(x)
        m = cover_mass(a.accepted, P)
        assert last <= m <= ONE
        last = m
    for x in shuffled:
        b.insert(x)
    assert cover_indicator(a.accepted, 8) == cover_indicator(b.accepted, 8) == cover_indicator(items, 8)


def test_cover_mass_examples():
    P = hidden_seed(b"q")[0]
    assert cover_mass(PrefixFreeSet({"0", "1"}), P) == ONE
    assert cover_mass(PrefixFreeSet({"00"}), bernoulli(HALF)) == Dyadic(1, 2)
    with pytest.raises(ValueError):
        cover_mass(["0", "01"], P)


def test_cover_mass_matches_leaf_sum():
    """Mass of a cover equals the sum over depth-12 leaves beneath it."""
    rng = random.Random(5)
    P = hidden_seed(b"leaf")[0]
    leaves = {y: P.mass(y) for y in strings_of_length(12)}
    for _ in range(20):
        s = {"".join(rng.choice("01") for _ in range(rng.randint(1, 8))) for _ in range(6)}
        m = minimal_cover(s)
        direct = sum((leaves[y] for y in brute_cover(s, 12)), Dyadic(0))
        assert cover_mass(m, P) == direct


def test_indicator_small():
    assert cover_indicator(["0"], 2) == 0b0011
    assert cover_indicator([""], 3) == 0xFF
    assert cover_indicator(["11", "01"], 2) == 0b1010
    assert len(list(strings_up_to(2))) == 7
