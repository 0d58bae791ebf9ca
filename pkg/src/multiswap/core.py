"""
Circuit IR shared by every other module.

A circuit acts on three kinds of wires:

    - an optional test ancilla (the SWAP-test qubit),
    - ``d`` pairing ancillas ``a1 .. ad``,
    - ``m`` state registers ``r1 .. rm`` of ``q`` qubits each.

Gate fields are 0-based.  The text format and every report that names input
states (permutations, pair labels, overlaps) are 1-based.

Global basis ordering (most significant first)::

    [test] a_d ... a_1  r1 r2 ... rm

so ``a1`` is the least significant ancilla bit and an ancilla bitstring is the
integer ``sum(bit_k << k)`` with ``bit_k`` the value of ``a_{k+1}``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Union

FORMAT_VERSION = 1


class LayoutError(ValueError):
    """Raised for out-of-range layout parameters."""


class GateError(ValueError):
    """Raised when a gate does not fit the layout it is applied to."""


class CircuitFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Layout:
    m: int
    q: int = 1
    d: int = 0
    has_test_ancilla: bool = False

    def __post_init__(self):
        for name, value, low in (("m", self.m, 2), ("q", self.q, 1), ("d", self.d, 0)):
            if not isinstance(value, int) or isinstance(value, bool):
                raise LayoutError(f"{name} must be an integer, got {value!r}")
            if value < low:
                raise LayoutError(f"{name} must be >= {low}, got {value}")

    @property
    def n_ancillas(self) -> int:
        return self.d + int(self.has_test_ancilla)

    @property
    def n_qubits(self) -> int:
        return self.n_ancillas + self.m * self.q


def new_layout(m: int, q: int = 1, d: int = 0, has_test_ancilla: bool = False) -> Layout:
    return Layout(m, q, d, bool(has_test_ancilla))


@dataclass(frozen=True)
class Hadamard:
    ancilla: int

    def __str__(self):
        return f"H a{self.ancilla + 1}"


@dataclass(frozen=True)
class CSwap:
    control: int
    a: int
    b: int

    def __str__(self):
        return f"CSWAP a{self.control + 1} r{self.a + 1} r{self.b + 1}"


@dataclass(frozen=True)
class SwapTestCSwap:
    a: int = 0
    b: int = 1

    def __str__(self):
        return f"CSWAPT r{self.a + 1} r{self.b + 1}"


@dataclass(frozen=True)
class SwapTestHadamard:
    def __str__(self):
        return "HT"


Gate = Union[Hadamard, CSwap, SwapTestCSwap, SwapTestHadamard]
TEST_GATES = (SwapTestCSwap, SwapTestHadamard)


def gate_violations(gate, layout: Layout) -> list[str]:
    """Return the reasons ``gate`` is invalid on ``layout`` (empty if valid)."""
    problems = []

    def check_ancilla(k):
        if not 0 <= k < layout.d:
            problems.append(f"{gate}: ancilla a{k + 1} out of range for d={layout.d}")

    def check_targets(a, b):
        for r in (a, b):
            if not 0 <= r < layout.m:
                problems.append(f"{gate}: register r{r + 1} out of range for m={layout.m}")
        if a == b:
            problems.append(f"{gate}: equal targets")

    if isinstance(gate, Hadamard):
        check_ancilla(gate.ancilla)
    elif isinstance(gate, CSwap):
        check_ancilla(gate.control)
        check_targets(gate.a, gate.b)
    elif isinstance(gate, (SwapTestCSwap, SwapTestHadamard)):
        if not layout.has_test_ancilla:
            problems.append(f"{gate}: layout has no test ancilla")
        if isinstance(gate, SwapTestCSwap):
            check_targets(gate.a, gate.b)
    else:
        problems.append(f"unknown gate {gate!r}")
    return problems


@dataclass(frozen=True)
class Circuit:
    """Immutable gate list over a layout.

    ``n_inputs`` is the number of caller-supplied input states.  When it is
    smaller than ``layout.m`` the trailing registers are padding, prepared in
    ``|0...0>``.
    """

    layout: Layout
    gates: tuple = ()
    n_inputs: int | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_inputs is None:
            object.__setattr__(self, "n_inputs", self.layout.m)
        elif not 2 <= self.n_inputs <= self.layout.m:
            raise LayoutError(f"n_inputs must be in [2, {self.layout.m}], got {self.n_inputs}")

    def __len__(self):
        return len(self.gates)

    @property
    def padded(self) -> bool:
        return self.n_inputs < self.layout.m

    @property
    def cswap_count(self) -> int:
        return sum(isinstance(g, CSwap) for g in self.gates)

    @property
    def controlled_swap_count(self) -> int:
        """CSWAP gates including the test-ancilla one."""
        return sum(isinstance(g, (CSwap, SwapTestCSwap)) for g in self.gates)

    @property
    def has_test_gates(self) -> bool:
        return any(isinstance(g, TEST_GATES) for g in self.gates)

    def cswaps(self) -> list[CSwap]:
        return [g for g in self.gates if isinstance(g, CSwap)]

    def pairing_part(self) -> "Circuit":
        """The circuit without its test-ancilla section."""
        if not self.layout.has_test_ancilla:
            return self
        return Circuit(
            replace(self.layout, has_test_ancilla=False),
            [g for g in self.gates if not isinstance(g, TEST_GATES)],
            self.n_inputs,
        )

    def append(self, gate) -> "Circuit":
        return append_gate(self, gate)


def append_gate(circuit: Circuit, gate) -> Circuit:
    problems = gate_violations(gate, circuit.layout)
    if problems:
        raise GateError("; ".join(problems))
    return Circuit(circuit.layout, circuit.gates + (gate,), circuit.n_inputs)


def make_circuit(layout: Layout, gates: Iterable = (), n_inputs: int | None = None) -> Circuit:
    """Build a circuit, raising on the first invalid gate."""
    circuit = Circuit(layout, gates, n_inputs)
    problems = validate(circuit)
    if problems:
        raise GateError("; ".join(problems))
    return circuit


def validate(circuit: Circuit) -> list[str]:
    problems = []
    for pos, gate in enumerate(circuit.gates):
        problems.extend(f"gate {pos}: {p}" for p in gate_violations(gate, circuit.layout))
    return problems


# -- serialization -----------------------------------------------------------

def _header(circuit: Circuit) -> dict:
    lay = circuit.layout
    return {
        "format_version": FORMAT_VERSION,
        "m": lay.m,
        "q": lay.q,
        "d": lay.d,
        "has_test_ancilla": lay.has_test_ancilla,
        "n_inputs": circuit.n_inputs,
    }


def to_text(circuit: Circuit) -> str:
    """Render the line-oriented circuit format.

    Registers and ancillas are 1-based in the text: ``CSWAP a1 r1 r3``
    swaps registers 1 and 3 controlled by ancilla 1 (the least significant
    ancilla bit).
    """
    head = _header(circuit)
    lines = ["# multiswap circuit; registers r1..rm and ancillas a1..ad are 1-based"]
    lines.append(f"format-version {head['format_version']}")
    lines.append(f"m {head['m']}")
    lines.append(f"q {head['q']}")
    lines.append(f"d {head['d']}")
    lines.append(f"test-ancilla {int(head['has_test_ancilla'])}")
    if circuit.padded:
        lines.append(f"inputs {circuit.n_inputs}")
    lines.extend(str(g) for g in circuit.gates)
    return "\n".join(lines) + "\n"


def _index(token: str, prefix: str, lineno: int) -> int:
    if not token.startswith(prefix) or not token[len(prefix):].isdigit():
        raise CircuitFormatError(f"expected {prefix}<n>, got {token!r}", lineno)
    value = int(token[len(prefix):])
    if value < 1:
        raise CircuitFormatError(f"indices are 1-based, got {token!r}", lineno)
    return value - 1


def _parse_gate(tokens: list[str], lineno: int):
    op, args = tokens[0], tokens[1:]
    arity = {"H": 1, "CSWAP": 3, "CSWAPT": 2, "HT": 0}
    if op not in arity:
        raise CircuitFormatError(f"unknown gate {op!r}", lineno)
    if len(args) != arity[op]:
        raise CircuitFormatError(f"{op} takes {arity[op]} operands, got {len(args)}", lineno)
    if op == "H":
        return Hadamard(_index(args[0], "a", lineno))
    if op == "CSWAP":
        return CSwap(_index(args[0], "a", lineno), _index(args[1], "r", lineno), _index(args[2], "r", lineno))
    if op == "CSWAPT":
        return SwapTestCSwap(_index(args[0], "r", lineno), _index(args[1], "r", lineno))
    return SwapTestHadamard()


def from_text(text: str) -> Circuit:
    header: dict[str, int] = {}
    gates = []
    keys = {"format-version", "m", "q", "d", "test-ancilla", "inputs"}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] in keys:
            if gates:
                raise CircuitFormatError(f"header field {tokens[0]!r} after gates", lineno)
            if len(tokens) != 2 or not tokens[1].isdigit():
                raise CircuitFormatError(f"malformed header line {line!r}", lineno)
            header[tokens[0]] = int(tokens[1])
            lines[tokens[0]] = lineno
        else:
            gates.append((_parse_gate(tokens, lineno), lineno))

    for key in ("m", "q", "d", "test-ancilla"):
        if key not in header:
            raise CircuitFormatError(f"missing header field {key!r}")
    version = header.get("format-version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise CircuitFormatError(f"unsupported format version {version}", lines.get("format-version"))
    try:
        layout = Layout(header["m"], header["q"], header["d"], bool(header["test-ancilla"]))
        circuit = Circuit(layout, [g for g, _ in gates], header.get("inputs"))
    except LayoutError as exc:
        raise CircuitFormatError(str(exc)) from exc
    for gate, lineno in gates:
        problems = gate_violations(gate, layout)
        if problems:
            raise CircuitFormatError("; ".join(problems), lineno)
    return circuit


def _gate_to_dict(gate) -> dict:
    if isinstance(gate, Hadamard):
        return {"op": "H", "ancilla": gate.ancilla}
    if isinstance(gate, CSwap):
        return {"op": "CSWAP", "control": gate.control, "targets": [gate.a, gate.b]}
    if isinstance(gate, SwapTestCSwap):
        return {"op": "CSWAPT", "targets": [gate.a, gate.b]}
    return {"op": "HT"}


def _gate_from_dict(obj: dict):
    op = obj.get("op")
    if op == "H":
        return Hadamard(int(obj["ancilla"]))
    if op == "CSWAP":
        a, b = obj["targets"]
        return CSwap(int(obj["control"]), int(a), int(b))
    if op == "CSWAPT":
        a, b = obj["targets"]
        return SwapTestCSwap(int(a), int(b))
    if op == "HT":
        return SwapTestHadamard()
    raise CircuitFormatError(f"unknown gate object {obj!r}")


def to_dict(circuit: Circuit) -> dict:
    """Structured form; indices here are 0-based like the in-memory gates."""
    out = _header(circuit)
    out["indexing"] = "0-based"
    out["gates"] = [_gate_to_dict(g) for g in circuit.gates]
    return out


def from_dict(obj: dict) -> Circuit:
    if obj.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
        raise CircuitFormatError(f"unsupported format version {obj.get('format_version')}")
    layout = Layout(int(obj["m"]), int(obj["q"]), int(obj["d"]), bool(obj["has_test_ancilla"]))
    circuit = Circuit(layout, [_gate_from_dict(g) for g in obj.get("gates", [])], obj.get("n_inputs"))
    problems = validate(circuit)
    if problems:
        raise CircuitFormatError("; ".join(problems))
    return circuit


def dumps(circuit: Circuit) -> str:
    return json.dumps(to_dict(circuit), sort_keys=True)


def loads(text: str) -> Circuit:
    return from_dict(json.loads(text))


def read_circuit(path) -> Circuit:
    """Load a circuit file; JSON if it starts with ``{``, text format otherwise."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        try:
            return loads(text)
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise CircuitFormatError(f"malformed circuit object: {exc}") from exc
    return from_text(text)


def write_circuit(circuit: Circuit, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_text(circuit))


def bits_to_str(bits: int, d: int) -> str:
    """Ancilla bitstring, most significant (a_d) first."""
    return format(bits, f"0{d}b") if d else ""


def str_to_bits(text: str) -> int:
    return int(text, 2) if text else 0
