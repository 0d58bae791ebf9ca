import math

import pytest

from multiswap.core import CSwap, Hadamard, SwapTestCSwap, SwapTestHadamard
from multiswap.pairing import (
    ExplicitSplit,
    MiddleSplit,
    PadToPowerOfTwo,
    StrategyError,
    build_pairing,
    build_swap_test,
    build_u3,
    build_u4,
    parse_strategy,
    predict_counts,
)
from multiswap.permlab import label_table

from oracles import counts_by_recursion, forward_coverage


@pytest.mark.parametrize("m", range(2, 65))
def test_counts_match_recursion(m):
    c = build_pairing(m)
    assert (c.cswap_count, c.layout.d) == counts_by_recursion(m)
    pred = predict_counts(m)
    assert (pred.c, pred.d) == (c.cswap_count, c.layout.d)


@pytest.mark.parametrize("k", range(2, 8))
def test_power_of_two_closed_form(k):
    m = 2 ** k
    c = build_pairing(m)
    assert c.cswap_count == 3 * m // 2 - 3
    assert c.layout.d == 3 * (k - 1)


@pytest.mark.parametrize("m", [3, 5, 7, 9, 12, 17, 33])
def test_padding_counts(m):
    k = math.ceil(math.log2(m))
    c = build_pairing(m, PadToPowerOfTwo())
    assert c.layout.m == 2 ** k and c.n_inputs == m
    assert c.cswap_count == 3 * 2 ** (k - 1) - 3
    assert c.layout.d == 3 * (k - 1)
    assert (predict_counts(m, PadToPowerOfTwo()).c, predict_counts(m, PadToPowerOfTwo()).d) == (c.cswap_count, c.layout.d)


@pytest.mark.parametrize("m, text, expected", [
    (5, "explicit:3+2", (5, 5)),
    (6, "explicit:3+3", (7, 5)),
    (6, "explicit:4+2", (6, 6)),
    (6, "explicit:2+4", (6, 6)),
    (12, "explicit:12=6+6,6=4+2", (15, 9)),
])
def test_grouping(m, text, expected):
    c = build_pairing(m, parse_strategy(text, m))
    assert (c.cswap_count, c.layout.d) == expected
    assert label_table(c).complete


def test_small_blocks():
    assert build_pairing(2).gates == ()
    u3 = build_pairing(3)
    assert u3.cswaps() == [CSwap(0, 0, 2), CSwap(1, 1, 2)]
    u4 = build_pairing(4)
    assert u4.cswaps() == [CSwap(0, 0, 2), CSwap(1, 0, 3), CSwap(2, 1, 2)]


def test_u8_figure():
    """Two U4s on shared ancillas a1-a3, then U4 on r1 r2 r5 r6 with a4-a6."""
    u8 = build_pairing(8)
    assert u8.cswaps() == [
        CSwap(0, 0, 2), CSwap(1, 0, 3), CSwap(2, 1, 2),
        CSwap(0, 4, 6), CSwap(1, 4, 7), CSwap(2, 5, 6),
        CSwap(3, 0, 4), CSwap(4, 0, 5), CSwap(5, 1, 4),
    ]


@pytest.mark.parametrize("m", list(range(2, 41)) + [48, 64])
def test_invariants(m):
    c = build_pairing(m)
    d = c.layout.d
    # Hadamards first, each ancilla once
    assert c.gates[:d] == tuple(Hadamard(k) for k in range(d))
    assert all(isinstance(g, CSwap) for g in c.gates[d:])
    assert {g.control for g in c.cswaps()} == set(range(d))
    assert label_table(c).complete


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6, 7, 9, 13])
def test_complete_by_forward_oracle(m):
    c = build_pairing(m)
    pairs = forward_coverage(c.cswaps(), m, c.layout.d)
    assert pairs == {(i, j) for i in range(1, m + 1) for j in range(i + 1, m + 1)}


def test_swap_test_tail():
    c = build_swap_test(4, q=2)
    assert c.layout.has_test_ancilla and c.layout.q == 2
    assert c.gates[-3:] == (SwapTestHadamard(), SwapTestCSwap(0, 1), SwapTestHadamard())
    assert build_swap_test(2).gates == (SwapTestHadamard(), SwapTestCSwap(0, 1), SwapTestHadamard())


def test_block_duplicates_rejected():
    with pytest.raises(ValueError):
        build_u4([0, 1, 1, 3], [0, 1, 2])
    with pytest.raises(ValueError):
        build_u3([0, 1, 2], [0, 0])


@pytest.mark.parametrize("text", ["explicit:4+1", "explicit:3+3", "explicit:x", "bogus"])
def test_bad_strategies(text):
    with pytest.raises(StrategyError):
        build_pairing(5, parse_strategy(text, 5))


def test_strategy_parse():
    assert isinstance(parse_strategy("middle", 5), MiddleSplit)
    assert isinstance(parse_strategy("pad", 5), PadToPowerOfTwo)
    assert parse_strategy("explicit:3+2", 5) == ExplicitSplit({5: (3, 2)})


def test_invalid_m():
    with pytest.raises(ValueError):
        build_pairing(1)
