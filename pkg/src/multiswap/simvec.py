"""Dense statevector simulation of pairing and SWAP-test circuits.

The amplitude array is viewed as a tensor with one axis of size 2 per ancilla
(test ancilla first, then a_d ... a_1) followed by one axis of size 2**q per
state register.  A CSWAP is then a transpose of two register axes on the
control=1 slice, and never a matrix multiply.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .core import (
    Circuit,
    CSwap,
    GateError,
    Hadamard,
    Layout,
    SwapTestCSwap,
    SwapTestHadamard,
    bits_to_str,
    gate_violations,
)
from .permlab import label_table
from .pairing import with_swap_test

NORM_TOL = 1e-9
EXACT_TOL = 1e-10
_SQRT_HALF = np.sqrt(0.5)


class IncompleteLabeling(ValueError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("labeling is incomplete; missing pairs " + ", ".join(f"({i},{j})" for i, j in self.missing))


@dataclass(eq=False)
class StateVector:
    amplitudes: np.ndarray
    layout: Layout

    def tensor(self) -> np.ndarray:
        lay = self.layout
        return self.amplitudes.reshape((2,) * lay.n_ancillas + (2 ** lay.q,) * lay.m)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def branch(self, bits: int) -> np.ndarray:
        """Register tensor for pairing-ancilla bitstring ``bits`` (test ancilla 0)."""
        lay = self.layout
        t = self.tensor()
        if lay.has_test_ancilla:
            t = t[0]
        idx = tuple((bits >> (lay.d - 1 - axis)) & 1 for axis in range(lay.d))
        return t[idx]


@dataclass(eq=False)
class AncillaDistribution:
    """``probs[t, b]``: probability of test bit t and pairing bitstring b."""

    probs: np.ndarray
    d: int

    def __getitem__(self, key) -> float:
        t, b = key
        return float(self.probs[t, b])

    def as_dict(self) -> dict[tuple[int, str], float]:
        return {(t, bits_to_str(b, self.d)): float(p) for (t, b), p in np.ndenumerate(self.probs)}


def haar_states(m: int, q: int, rng) -> list[np.ndarray]:
    """m Haar-random pure states on q qubits (normalised complex Gaussians)."""
    rng = np.random.default_rng(rng)
    dim = 2 ** q
    out = []
    for _ in range(m):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        out.append(v / np.linalg.norm(v))
    return out


def basis_state(index: int, q: int) -> np.ndarray:
    v = np.zeros(2 ** q, dtype=complex)
    v[index] = 1.0
    return v


def _check_states(states, layout: Layout) -> list[np.ndarray]:
    if len(states) != layout.m:
        raise ValueError(f"expected {layout.m} input states, got {len(states)}")
    out = []
    for i, s in enumerate(states, start=1):
        s = np.asarray(s, dtype=complex).ravel()
        if s.shape != (2 ** layout.q,):
            raise ValueError(f"state {i} has dimension {s.size}, expected {2 ** layout.q}")
        if abs(np.linalg.norm(s) - 1.0) > NORM_TOL:
            raise ValueError(f"state {i} not normalized (norm {np.linalg.norm(s):.12g})")
        out.append(s)
    return out


def pad_states(states, circuit: Circuit) -> list[np.ndarray]:
    """Fill padding registers with |0...0>."""
    states = list(states)
    if len(states) == circuit.n_inputs and circuit.padded:
        states += [basis_state(0, circuit.layout.q)] * (circuit.layout.m - circuit.n_inputs)
    return states


def prepare_input(states, layout: Layout) -> StateVector:
    states = _check_states(states, layout)
    product = reduce(np.kron, states)
    amps = np.zeros(2 ** layout.n_qubits, dtype=complex)
    # all ancillas |0>: they are the most significant bits
    amps[: product.size] = product
    return StateVector(amps, layout)


def _ancilla_axis(layout: Layout, k: int) -> int:
    return int(layout.has_test_ancilla) + (layout.d - 1 - k)


def _register_axis(layout: Layout, r: int) -> int:
    return layout.n_ancillas + r


def _hadamard(t: np.ndarray, axis: int):
    lo = [slice(None)] * t.ndim
    hi = [slice(None)] * t.ndim
    lo[axis], hi[axis] = 0, 1
    a0 = t[tuple(lo)].copy()
    a1 = t[tuple(hi)]
    t[tuple(lo)] += a1
    t[tuple(lo)] *= _SQRT_HALF
    a0 -= a1
    a0 *= _SQRT_HALF
    t[tuple(hi)] = a0


def _cswap(t: np.ndarray, control_axis: int, ra: int, rb: int):
    sel = [slice(None)] * t.ndim
    sel[control_axis] = 1
    sub = t[tuple(sel)]
    # the control axis is gone from ``sub``; register axes sit after it
    sub[...] = np.swapaxes(sub, ra - 1, rb - 1).copy()


def _apply_inplace(t: np.ndarray, layout: Layout, gate):
    if isinstance(gate, Hadamard):
        _hadamard(t, _ancilla_axis(layout, gate.ancilla))
    elif isinstance(gate, SwapTestHadamard):
        _hadamard(t, 0)
    elif isinstance(gate, CSwap):
        _cswap(t, _ancilla_axis(layout, gate.control),
               _register_axis(layout, gate.a), _register_axis(layout, gate.b))
    elif isinstance(gate, SwapTestCSwap):
        _cswap(t, 0, _register_axis(layout, gate.a), _register_axis(layout, gate.b))


def apply_gate(sv: StateVector, gate) -> StateVector:
    problems = gate_violations(gate, sv.layout)
    if problems:
        raise GateError("; ".join(problems))
    out = StateVector(sv.amplitudes.copy(), sv.layout)
    _apply_inplace(out.tensor(), out.layout, gate)
    return out


def run(circuit: Circuit, states) -> StateVector:
    states = pad_states(states, circuit)
    sv = prepare_input(states, circuit.layout)
    problems = [p for g in circuit.gates for p in gate_violations(g, circuit.layout)]
    if problems:
        raise GateError("; ".join(problems))
    t = sv.tensor()
    for gate in circuit.gates:
        _apply_inplace(t, circuit.layout, gate)
    return sv


def ancilla_distribution(sv: StateVector) -> AncillaDistribution:
    lay = sv.layout
    weights = np.abs(sv.amplitudes) ** 2
    probs = weights.reshape(2 ** lay.n_ancillas, -1).sum(axis=1)
    return AncillaDistribution(probs.reshape(2 if lay.has_test_ancilla else 1, 2 ** lay.d), lay.d)


def exact_overlaps(circuit: Circuit, states) -> dict[tuple[int, int], float]:
    """|<phi_i|phi_j>|^2 per unordered pair, read off exact ancilla statistics.

    Accepts a pairing circuit or a full SWAP-test circuit.  Every label of a
    pair yields ``2**(d+1) * p(0, bits) - 1``; duplicate labels must agree.
    Pairs touching padding registers are included (see ``LabelTable.is_padded``).
    """
    pairing = circuit.pairing_part()
    if pairing.has_test_gates:
        raise ValueError("test-ancilla gates in a circuit without a test ancilla")
    table = label_table(pairing)
    if not table.complete:
        raise IncompleteLabeling(table.missing)
    full = circuit if circuit.layout.has_test_ancilla else with_swap_test(pairing)
    dist = ancilla_distribution(run(full, states))
    scale = 2.0 ** (full.layout.d + 1)
    out = {}
    for pair, labels in table.labels_by_pair.items():
        values = scale * dist.probs[0, labels] - 1.0
        if np.ptp(values) > EXACT_TOL:
            raise AssertionError(f"duplicate labels of {pair} disagree: {values}")
        out[pair] = float(values.mean())
    return out


def direct_overlaps(states) -> dict[tuple[int, int], float]:
    """|<phi_i|phi_j>|^2 from inner products, 1-based unordered keys."""
    states = [np.asarray(s, dtype=complex).ravel() for s in states]
    n = len(states)
    return {(i + 1, j + 1): float(abs(np.vdot(states[i], states[j])) ** 2)
            for i in range(n) for j in range(i + 1, n)}


def with_register_width(circuit: Circuit, q: int) -> Circuit:
    """Same gates on q-qubit registers (CSWAP is a block swap of any width)."""
    if circuit.layout.q == q:
        return circuit
    lay = circuit.layout
    return Circuit(Layout(lay.m, q, lay.d, lay.has_test_ancilla), circuit.gates, circuit.n_inputs)


def states_to_dict(states) -> dict:
    states = [np.asarray(s, dtype=complex).ravel() for s in states]
    q = int(np.log2(states[0].size))
    return {
        "format_version": 1,
        "q": q,
        "states": [[[float(z.real), float(z.imag)] for z in s] for s in states],
    }


def states_from_dict(obj: dict) -> list[np.ndarray]:
    q = int(obj["q"])
    out = []
    for i, vec in enumerate(obj["states"], start=1):
        arr = np.array([complex(re, im) for re, im in vec])
        if arr.size != 2 ** q:
            raise ValueError(f"state {i} has {arr.size} amplitudes, expected 2**q = {2 ** q}")
        out.append(arr)
    return out


def read_states(path) -> list[np.ndarray]:
    import json

    with open(path) as fh:
        return states_from_dict(json.load(fh))


def write_states(states, path) -> None:
    import json

    with open(path, "w") as fh:
        json.dump(states_to_dict(states), fh, indent=1)
