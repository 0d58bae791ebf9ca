"""Classical analysis of pairing circuits.

With the ancillas read in the computational basis every CSWAP either fires or
not, so each ancilla bitstring selects one register permutation.  Everything
here is exact enumeration; no amplitudes are involved.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import Circuit, CSwap, Hadamard, bits_to_str, str_to_bits

DEFAULT_MAX_ANCILLAS = 24
_CHUNK = 1 << 20


class EnumerationTooLarge(ValueError):
    pass


def _require_pairing(circuit: Circuit):
    for gate in circuit.gates:
        if not isinstance(gate, (Hadamard, CSwap)):
            raise ValueError(f"pairing analysis needs Hadamard/CSWAP gates only, found {gate}")


def _as_bits(bits, d: int) -> int:
    if isinstance(bits, str):
        if len(bits) != d or set(bits) - {"0", "1"}:
            raise ValueError(f"expected a {d}-bit string, got {bits!r}")
        return str_to_bits(bits)
    if isinstance(bits, (list, tuple)):
        # (a1, a2, ..., ad) order
        if len(bits) != d:
            raise ValueError(f"expected {d} ancilla bits, got {len(bits)}")
        return sum(int(b) << k for k, b in enumerate(bits))
    bits = int(bits)
    if not 0 <= bits < (1 << d):
        raise ValueError(f"bitstring {bits} out of range for d={d}")
    return bits


def permutation_for(circuit: Circuit, bits) -> tuple[int, ...]:
    """Register contents after the circuit for one ancilla branch.

    ``bits`` is an int (bit k = ancilla a_{k+1}), an MSB-first string, or a
    tuple ``(a1, ..., ad)``.  Entry r of the result is the 1-based index of the
    input state sitting in register r+1.
    """
    _require_pairing(circuit)
    b = _as_bits(bits, circuit.layout.d)
    contents = list(range(1, circuit.layout.m + 1))
    for g in circuit.cswaps():
        if (b >> g.control) & 1:
            contents[g.a], contents[g.b] = contents[g.b], contents[g.a]
    return tuple(contents)


def _front_pairs(cswaps, d: int, start: int, stop: int) -> np.ndarray:
    """Contents of registers 1 and 2 for bitstrings in [start, stop).

    Traced backwards: each CSWAP is a transposition, so the content of a
    register after gate k is the content of its image before gate k.
    """
    bits = np.arange(start, stop, dtype=np.int64)
    pos = np.zeros((2, stop - start), dtype=np.int32)
    pos[1] = 1
    for g in reversed(cswaps):
        fire = ((bits >> g.control) & 1).astype(bool)
        at_a = fire & (pos == g.a)
        at_b = fire & (pos == g.b)
        pos[at_a] = g.b
        pos[at_b] = g.a
    return pos.T + 1


@dataclass(frozen=True, eq=False)
class LabelTable:
    """Pair on registers (1, 2) for every ancilla bitstring.

    ``pairs[b]`` is the ordered 1-based pair for bitstring ``b``.
    ``n_inputs`` below ``m`` means registers past it hold padding.
    """

    m: int
    d: int
    n_inputs: int
    pairs: np.ndarray

    def entries(self) -> dict[str, tuple[int, int]]:
        return {bits_to_str(b, self.d): (int(i), int(j)) for b, (i, j) in enumerate(self.pairs)}

    def __getitem__(self, bits) -> tuple[int, int]:
        i, j = self.pairs[_as_bits(bits, self.d)]
        return int(i), int(j)

    def __len__(self):
        return len(self.pairs)

    @cached_property
    def labels_by_pair(self) -> dict[tuple[int, int], list[int]]:
        """Unordered pair (i < j) -> sorted list of bitstrings labelling it."""
        out: dict[tuple[int, int], list[int]] = {}
        lo = np.minimum(self.pairs[:, 0], self.pairs[:, 1])
        hi = np.maximum(self.pairs[:, 0], self.pairs[:, 1])
        keys = lo.astype(np.int64) * (self.m + 1) + hi
        order = np.argsort(keys, kind="stable")
        uniq, first = np.unique(keys[order], return_index=True)
        groups = np.split(order, first[1:])
        for key, group in zip(uniq, groups):
            out[(int(key // (self.m + 1)), int(key % (self.m + 1)))] = sorted(int(b) for b in group)
        return out

    @property
    def covered(self) -> set[tuple[int, int]]:
        return set(self.labels_by_pair)

    @property
    def duplicates(self) -> dict[tuple[int, int], list[int]]:
        return {p: bs for p, bs in self.labels_by_pair.items() if len(bs) > 1}

    def is_padded(self, pair) -> bool:
        return max(pair) > self.n_inputs

    @property
    def target_pairs(self) -> set[tuple[int, int]]:
        n = self.n_inputs
        return {(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)}

    @property
    def coverage(self) -> int:
        """Distinct unordered pairs of real (non-padding) inputs reached."""
        return sum(1 for p in self.labels_by_pair if not self.is_padded(p))

    @property
    def missing(self) -> list[tuple[int, int]]:
        return sorted(self.target_pairs - self.covered)

    @property
    def complete(self) -> bool:
        return self.coverage == self.n_inputs * (self.n_inputs - 1) // 2

    def format(self) -> str:
        lines = [f"{bits_to_str(b, self.d) or '(empty)'} -> ({i},{j})" + (" padded" if self.is_padded((i, j)) else "")
                 for b, (i, j) in enumerate(self.pairs.tolist())]
        total = self.n_inputs * (self.n_inputs - 1) // 2
        lines.append(f"coverage {self.coverage}/{total}")
        if self.missing:
            lines.append("missing " + " ".join(f"({i},{j})" for i, j in self.missing))
        return "\n".join(lines)


def label_table(circuit: Circuit, max_ancillas: int = DEFAULT_MAX_ANCILLAS) -> LabelTable:
    _require_pairing(circuit)
    d = circuit.layout.d
    if d > max_ancillas:
        raise EnumerationTooLarge(f"enumeration too large: d={d} exceeds cap {max_ancillas}")
    cswaps = circuit.cswaps()
    total = 1 << d
    chunks = [_front_pairs(cswaps, d, lo, min(lo + _CHUNK, total)) for lo in range(0, total, _CHUNK)]
    pairs = np.concatenate(chunks)
    pairs.setflags(write=False)
    return LabelTable(circuit.layout.m, d, circuit.n_inputs, pairs)


def coverage(circuit: Circuit, max_ancillas: int = DEFAULT_MAX_ANCILLAS) -> int:
    return label_table(circuit, max_ancillas).coverage


def is_complete(circuit: Circuit, max_ancillas: int = DEFAULT_MAX_ANCILLAS) -> bool:
    return label_table(circuit, max_ancillas).complete
