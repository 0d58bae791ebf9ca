"""Recursive multi-state SWAP test: circuits, label tables, simulation and search."""

__version__ = "0.1.0"

from .core import Circuit, CSwap, Hadamard, Layout, from_text, read_circuit, to_text, write_circuit
from .pairing import ExplicitSplit, MiddleSplit, PadToPowerOfTwo, build_pairing, build_swap_test, predict_counts
from .permlab import label_table, permutation_for
from .simvec import exact_overlaps, run

__all__ = [
    "Circuit", "CSwap", "Hadamard", "Layout", "from_text", "read_circuit", "to_text", "write_circuit",
    "ExplicitSplit", "MiddleSplit", "PadToPowerOfTwo", "build_pairing", "build_swap_test", "predict_counts",
    "label_table", "permutation_for", "exact_overlaps", "run",
]
