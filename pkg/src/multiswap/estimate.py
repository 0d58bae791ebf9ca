"""Shot sampling and overlap estimation from SWAP-test ancilla counts.

Randomness comes from numpy's PCG64 ``Generator``.  Replication ``r`` of a run
seeded with ``seed`` uses ``SeedSequence(seed).spawn(reps)[r]``, so results do
not depend on execution order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import Circuit
from .pairing import with_swap_test
from .permlab import LabelTable, label_table
from .simvec import (
    AncillaDistribution,
    IncompleteLabeling,
    ancilla_distribution,
    direct_overlaps,
    pad_states,
    run,
)

RNG_ALGORITHM = "numpy.random.PCG64 via SeedSequence"


@dataclass(eq=False)
class ShotCounts:
    """``counts[t, b]``: shots with test bit t and pairing bitstring b."""

    counts: np.ndarray
    total: int

    def __post_init__(self):
        if int(self.counts.sum()) != self.total:
            raise ValueError(f"counts sum to {int(self.counts.sum())}, expected {self.total}")


@dataclass(eq=False)
class OverlapEstimate:
    raw: dict
    clamped: dict
    was_clamped: dict
    shots: int
    padded: set = field(default_factory=set)


def sample_shots(dist: AncillaDistribution, n: int, seed=None) -> ShotCounts:
    """Draw ``n`` shots; the multinomial draw is n categorical draws in distribution."""
    if n < 1:
        raise ValueError(f"number of shots must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    p = dist.probs.ravel()
    p = np.clip(p, 0.0, None)
    counts = rng.multinomial(n, p / p.sum())
    return ShotCounts(counts.reshape(dist.probs.shape), int(n))


def estimate_overlaps(counts: ShotCounts, table: LabelTable) -> OverlapEstimate:
    """Pooled inversion: every label of a pair contributes its test-0 counts."""
    if not table.complete:
        raise IncompleteLabeling(table.missing)
    n = counts.total
    scale = 2.0 ** (table.d + 1)
    raw, clamped, flags = {}, {}, {}
    for pair, labels in table.labels_by_pair.items():
        p_hat = counts.counts[0, labels].sum() / n
        value = scale * p_hat / len(labels) - 1.0
        raw[pair] = float(value)
        clamped[pair] = float(min(max(value, 0.0), 1.0))
        flags[pair] = not 0.0 <= value <= 1.0
    padded = {p for p in raw if table.is_padded(p)}
    return OverlapEstimate(raw, clamped, flags, n, padded)


def error_norm(truth: dict, est, clamp: bool = False) -> float:
    """Euclidean distance between true and estimated overlaps."""
    values = (est.clamped if clamp else est.raw) if isinstance(est, OverlapEstimate) else est
    if set(truth) != set(values):
        raise KeyError(f"pair sets differ: {sorted(set(truth) ^ set(values))}")
    return math.sqrt(sum((truth[k] - values[k]) ** 2 for k in truth))


def sample_bound(d: int, epsilon: float) -> int:
    """Shots that guarantee E||delta - delta_hat||_2 <= epsilon: ceil(4**(d+1) / eps**2)."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return math.ceil(Fraction(4 ** (d + 1)) / Fraction(epsilon) ** 2)


def mse_bound(d: int, n_shots: int) -> float:
    return 4.0 ** (d + 1) / n_shots


@dataclass(eq=False)
class ReplicationReport:
    errors: list
    mse: float
    bound: float
    truth: dict
    mean_estimate: dict
    n_shots: int
    reps: int
    seed: int | None

    @property
    def bias(self) -> dict:
        return {k: self.mean_estimate[k] - self.truth[k] for k in self.truth}


def run_replications(circuit: Circuit, states, n_shots: int, reps: int, seed=None,
                     truth: dict | None = None) -> ReplicationReport:
    """Repeat sample -> estimate ``reps`` times against the exact distribution.

    ``truth`` defaults to direct inner products of the (padded) input states.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    if n_shots < 1:
        raise ValueError(f"number of shots must be >= 1, got {n_shots}")
    pairing = circuit.pairing_part()
    table = label_table(pairing)
    if not table.complete:
        raise IncompleteLabeling(table.missing)
    full = circuit if circuit.layout.has_test_ancilla else with_swap_test(pairing)
    dist = ancilla_distribution(run(full, states))
    if truth is None:
        truth = direct_overlaps(pad_states(states, circuit))
        truth = {k: v for k, v in truth.items() if k in table.labels_by_pair}

    children = np.random.SeedSequence(seed).spawn(reps)
    errors = []
    totals = dict.fromkeys(truth, 0.0)
    for child in children:
        est = estimate_overlaps(sample_shots(dist, n_shots, child), table)
        errors.append(error_norm(truth, est))
        for k in totals:
            totals[k] += est.raw[k]
    mse = float(np.mean(np.square(errors)))
    return ReplicationReport(
        errors=errors,
        mse=mse,
        bound=mse_bound(table.d, n_shots),
        truth=truth,
        mean_estimate={k: v / reps for k, v in totals.items()},
        n_shots=n_shots,
        reps=reps,
        seed=seed,
    )
