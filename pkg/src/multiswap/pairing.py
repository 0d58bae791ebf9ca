"""Pairing unitaries U_m and the m-state SWAP test built on them.

U_m is assembled from three hand-made blocks (U2, U3, U4) by recursion: split
the registers into two groups, pair each group with a sub-block (the two
sub-blocks share one ancilla block), then join the groups with a U4 on
registers ``(1, 2, g1 + 1, g1 + 2)`` controlled by three fresh ancillas.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .core import (
    Circuit,
    CSwap,
    Hadamard,
    Layout,
    SwapTestCSwap,
    SwapTestHadamard,
)
from .permlab import _front_pairs


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class MiddleSplit:
    """Split m into ceil(m/2) + floor(m/2); m <= 4 is a base case."""


@dataclass(frozen=True)
class PadToPowerOfTwo:
    """Append |0> registers up to the next power of two, then middle-split."""


@dataclass(frozen=True)
class ExplicitSplit:
    """Per-node group sizes: ``splits[n] = (g1, g2)`` is used whenever a node of
    size ``n`` is split.  Sizes without an entry fall back to the middle split.
    """

    splits: Mapping[int, tuple] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for n, pair in dict(self.splits).items():
            g1, g2 = (int(x) for x in pair)
            if g1 + g2 != n:
                raise StrategyError(f"split {g1}+{g2} does not sum to {n}")
            if g1 < 2 or g2 < 2:
                raise StrategyError(f"split {g1}+{g2}: every group needs at least 2 registers")
            clean[int(n)] = (g1, g2)
        object.__setattr__(self, "splits", clean)

    def __hash__(self):
        return hash(tuple(sorted(self.splits.items())))


Strategy = MiddleSplit | PadToPowerOfTwo | ExplicitSplit


def parse_strategy(text: str, m: int) -> Strategy:
    """Parse ``middle``, ``pad`` or ``explicit:<splits>``.

    ``<splits>`` is either ``g1+g2`` (top-level split of m) or a comma list of
    ``n=g1+g2`` entries, e.g. ``explicit:12=6+6,6=4+2``.
    """
    text = text.strip().lower()
    if text in ("middle", "middlesplit", "middle-split"):
        return MiddleSplit()
    if text in ("pad", "padtopoweroftwo", "pad-to-power-of-two"):
        return PadToPowerOfTwo()
    if not text.startswith("explicit:"):
        raise StrategyError(f"unknown strategy {text!r}")
    splits = {}
    for item in text[len("explicit:"):].split(","):
        node, sep, groups = item.partition("=")
        if not sep:
            node, groups = str(m), item
        try:
            g1, g2 = (int(x) for x in groups.split("+"))
            splits[int(node)] = (g1, g2)
        except ValueError:
            raise StrategyError(f"malformed split {item!r}") from None
    return ExplicitSplit(splits)


@dataclass(frozen=True)
class CountPrediction:
    c: int
    d: int


_BASE_COUNTS = {2: (0, 0), 3: (2, 2), 4: (3, 3)}


def _check_distinct(regs: Sequence[int], ancillas: Sequence[int]):
    if len(set(regs)) != len(regs):
        raise ValueError(f"duplicate register indices {tuple(regs)}")
    if len(set(ancillas)) != len(ancillas):
        raise ValueError(f"duplicate ancilla indices {tuple(ancillas)}")


def build_u2() -> list:
    return []


def build_u3(regs: Sequence[int], ancillas: Sequence[int]) -> list:
    r1, r2, r3 = regs
    a1, a2 = ancillas
    _check_distinct(regs, ancillas)
    return [CSwap(a1, r1, r3), CSwap(a2, r2, r3)]


def build_u4(regs: Sequence[int], ancillas: Sequence[int]) -> list:
    """Three CSWAPs: (a1: r1<->r3), (a2: r1<->r4), (a3: r2<->r3)."""
    r1, r2, r3, r4 = regs
    a1, a2, a3 = ancillas
    _check_distinct(regs, ancillas)
    return [CSwap(a1, r1, r3), CSwap(a2, r1, r4), CSwap(a3, r2, r3)]


def _split(n: int, strategy: Strategy):
    if isinstance(strategy, ExplicitSplit) and n in strategy.splits:
        return strategy.splits[n]
    if n <= 4:
        return None
    return (n + 1) // 2, n // 2


def _front_matrix(gates: list, n: int, d: int) -> np.ndarray:
    """bool[2**d, n]: is input u on register 1 or 2 for ancilla bitstring b."""
    fronts = _front_pairs(gates, d, 0, 1 << d) - 1
    rows = np.arange(1 << d)
    out = np.zeros((1 << d, n), dtype=bool)
    out[rows, fronts[:, 0]] = True
    out[rows, fronts[:, 1]] = True
    return out


def _share_ancillas(big: np.ndarray, d_big: int, small: np.ndarray, d_small: int) -> list[int]:
    """Injective map from the smaller block's ancillas into the larger block's.

    The join U4 pairs every input u of one group with every input v of the
    other iff some shared bitstring puts u and v on the front registers of
    their groups at the same time.  Identity is tried first; a depth-first
    search over injections follows when identity leaves a cross pair out
    (e.g. m = 7, where U3 must reuse a1 and a3 of U4, not a1 and a2).
    Prefixes are pruned with a relaxation that leaves the unassigned small
    ancillas free, which can only add coverage.
    """
    big_f = big.astype(np.float32)
    bitstrings = np.arange(1 << d_big)

    def feasible(assigned):
        k = len(assigned)
        # bit kk of the small block's index is ancilla kk; free high bits are OR-ed out
        relaxed = small.reshape(-1, 1 << k, small.shape[1]).any(axis=0)
        idx = np.zeros(1 << d_big, dtype=np.int64)
        for kk, target in enumerate(assigned):
            idx |= ((bitstrings >> target) & 1) << kk
        together = big_f.T @ relaxed[idx].astype(np.float32)
        return bool((together > 0).all())

    def extend(assigned):
        if not feasible(assigned):
            return None
        if len(assigned) == d_small:
            return assigned
        for target in range(d_big):
            if target not in assigned:
                found = extend(assigned + [target])
                if found is not None:
                    return found
        return None

    found = extend([])
    if found is None:
        raise RuntimeError(f"no complete ancilla sharing for groups of {big.shape[1]} and {small.shape[1]}")
    return found


@lru_cache(maxsize=None)
def _block(n: int, strategy) -> tuple[tuple, int]:
    """Local gates of U_n on registers 0..n-1 with ancillas 0..d-1."""
    split = _split(n, strategy)
    if split is None:
        if n == 2:
            return tuple(build_u2()), 0
        if n == 3:
            return tuple(build_u3([0, 1, 2], [0, 1])), 2
        return tuple(build_u4([0, 1, 2, 3], [0, 1, 2])), 3
    g1, g2 = split
    left, d1 = _block(g1, strategy)
    right, d2 = _block(g2, strategy)
    shared = max(d1, d2)
    left, right = list(left), list(right)
    # the block with fewer ancillas reuses a subset of the other's
    if d2 <= d1:
        mapping = _share_ancillas(_front_matrix(left, g1, d1), d1, _front_matrix(right, g2, d2), d2)
        right = [CSwap(mapping[g.control], g.a, g.b) for g in right]
    else:
        mapping = _share_ancillas(_front_matrix(right, g2, d2), d2, _front_matrix(left, g1, d1), d1)
        left = [CSwap(mapping[g.control], g.a, g.b) for g in left]
    right = [CSwap(g.control, g.a + g1, g.b + g1) for g in right]
    join = build_u4([0, 1, g1, g1 + 1], [shared, shared + 1, shared + 2])
    return tuple(left + right + join), shared + 3


def _padded_size(m: int) -> int:
    return 1 << (m - 1).bit_length()


def build_pairing(m: int, strategy: Strategy | None = None, q: int = 1) -> Circuit:
    """U_m as a circuit whose first gates put every ancilla in |+>."""
    strategy = strategy or MiddleSplit()
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    n_regs = _padded_size(m) if isinstance(strategy, PadToPowerOfTwo) else m
    if isinstance(strategy, ExplicitSplit):
        bad = [n for n in strategy.splits if n > m]
        if bad:
            raise StrategyError(f"split entries {bad} exceed m={m}")
    gates, d = _block(n_regs, strategy)
    head = [Hadamard(k) for k in range(d)]
    return Circuit(Layout(n_regs, q, d, False), head + list(gates), n_inputs=m)


def predict_counts(m: int, strategy: Strategy | None = None) -> CountPrediction:
    strategy = strategy or MiddleSplit()
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    if isinstance(strategy, PadToPowerOfTwo):
        k = (m - 1).bit_length()
        return CountPrediction(3 * 2 ** k // 2 - 3, 3 * (k - 1))

    def rec(n):
        split = _split(n, strategy)
        if split is None:
            return _BASE_COUNTS[n]
        (c1, d1), (c2, d2) = rec(split[0]), rec(split[1])
        return c1 + c2 + 3, max(d1, d2) + 3

    return CountPrediction(*rec(m))


def with_swap_test(pairing: Circuit, q: int | None = None) -> Circuit:
    """Append the two-state SWAP test on registers 1 and 2."""
    lay = pairing.layout
    layout = Layout(lay.m, lay.q if q is None else q, lay.d, True)
    gates = list(pairing.gates) + [SwapTestHadamard(), SwapTestCSwap(0, 1), SwapTestHadamard()]
    return Circuit(layout, gates, pairing.n_inputs)


def build_swap_test(m: int, strategy: Strategy | None = None, q: int = 1) -> Circuit:
    return with_swap_test(build_pairing(m, strategy, q))
