"""Steady-state genetic search for pairing circuits of fixed size.

A chromosome is a tuple of ``c`` genes ``(a, t1, t2)`` (1-based ancilla and
ordered target registers).  The cost of a chromosome is the number of
unordered input pairs its circuit never brings to registers 1 and 2.

Each iteration selects the two lowest-cost members (ties broken by population
index), crosses them at a random pivot, mutates each offspring independently
and writes the offspring over two distinct, uniformly drawn members.
"""
from __future__ import annotations

import heapq
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .core import Circuit, CSwap, Hadamard, Layout

logger = logging.getLogger(__name__)

Gene = tuple  # (a, t1, t2), 1-based
Chromosome = tuple  # of Gene


@dataclass(frozen=True)
class GAConfig:
    m: int
    c: int
    d: int
    population_size: int = 10_000
    mutation_rate: float = 0.5
    iterations: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")
        if self.c < 1:
            raise ValueError(f"c must be >= 1, got {self.c}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.population_size < 4:
            raise ValueError("population_size must be >= 4")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")

    @property
    def n_pairs(self) -> int:
        return self.m * (self.m - 1) // 2

    @property
    def gene_space(self) -> int:
        return self.d * self.m * (self.m - 1)


PUBLISHED_SCALE = dict(population_size=10 ** 6, mutation_rate=0.5, iterations=20_000)


@dataclass(eq=False)
class GAResult:
    best: Chromosome
    best_cost: int
    cost_trace: list  # best-so-far cost; entry 0 is the initial population
    iterations_run: int
    config: GAConfig = field(repr=False, default=None)


@numba.njit(cache=True)
def _coverage_kernel(genes, m, d):
    seen = np.zeros((m, m), dtype=np.bool_)
    count = 0
    c = genes.shape[0]
    for b in range(1 << d):
        p0 = 0
        p1 = 1
        for k in range(c - 1, -1, -1):
            if (b >> genes[k, 0]) & 1:
                ta = genes[k, 1]
                tb = genes[k, 2]
                if p0 == ta:
                    p0 = tb
                elif p0 == tb:
                    p0 = ta
                if p1 == ta:
                    p1 = tb
                elif p1 == tb:
                    p1 = ta
        i = min(p0, p1)
        j = max(p0, p1)
        if not seen[i, j]:
            seen[i, j] = True
            count += 1
    return count


def _genes_array(chromosome) -> np.ndarray:
    return np.asarray(chromosome, dtype=np.int64).reshape(-1, 3) - 1


def chromosome_coverage(chromosome, m: int, d: int) -> int:
    return int(_coverage_kernel(_genes_array(chromosome), m, d))


def fitness(chromosome, config: GAConfig) -> int:
    """Missed pairs: m(m-1)/2 minus the coverage of the encoded circuit."""
    return config.n_pairs - chromosome_coverage(chromosome, config.m, config.d)


def to_circuit(chromosome, m: int, d: int) -> Circuit:
    gates = [Hadamard(k) for k in range(d)]
    gates += [CSwap(a - 1, t1 - 1, t2 - 1) for a, t1, t2 in chromosome]
    return Circuit(Layout(m, 1, d, False), gates)


def from_circuit(circuit: Circuit) -> Chromosome:
    return tuple((g.control + 1, g.a + 1, g.b + 1) for g in circuit.cswaps())


class _UniformStream:
    """Block-buffered uniforms from a PCG64 generator.

    Scalar Generator calls dominate the GA loop otherwise; integers are taken
    as floor(u * n).
    """

    def __init__(self, seed, block: int = 1 << 16):
        self._gen = np.random.default_rng(seed)
        self._block = block
        self._buf = []
        self._pos = 0

    def random(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self._gen.random(self._block).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def integers(self, low: int, high: int | None = None) -> int:
        if high is None:
            low, high = 0, low
        return low + int(self.random() * (high - low))


def _as_rng(rng):
    if hasattr(rng, "integers") and hasattr(rng, "random"):
        return rng
    return np.random.default_rng(rng)


def random_gene(config: GAConfig, rng) -> Gene:
    m = config.m
    a = 1 + int(rng.integers(0, config.d))
    k = int(rng.integers(0, m * (m - 1)))
    t1, rest = divmod(k, m - 1)
    t2 = rest + (rest >= t1)
    return (a, t1 + 1, t2 + 1)


def random_chromosome(config: GAConfig, rng=None) -> Chromosome:
    rng = _as_rng(rng)
    return tuple(random_gene(config, rng) for _ in range(config.c))


def crossover(parent_a, parent_b, pivot: int | None = None, rng=None):
    """One-point crossover; ``pivot`` is 1-based, offspring_a = a[:pivot-1] + b[pivot-1:]."""
    c = len(parent_a)
    if len(parent_b) != c:
        raise ValueError("parents differ in length")
    if pivot is None:
        pivot = 1 + int(_as_rng(rng).integers(0, c))
    if not 1 <= pivot <= c:
        raise ValueError(f"pivot must be in [1, {c}], got {pivot}")
    cut = pivot - 1
    return tuple(parent_a[:cut]) + tuple(parent_b[cut:]), tuple(parent_b[:cut]) + tuple(parent_a[cut:])


def mutate(chromosome, rate: float, rng, config: GAConfig) -> Chromosome:
    """With probability ``rate`` resample one uniformly chosen gene."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must lie in [0, 1]")
    if rng.random() >= rate:
        return tuple(chromosome)
    pos = int(rng.integers(0, len(chromosome)))
    genes = list(chromosome)
    genes[pos] = random_gene(config, rng)
    return tuple(genes)


def run_ga(config: GAConfig) -> GAResult:
    rng = _UniformStream(config.seed)
    memo: dict = {}
    n_pairs, m, d = config.n_pairs, config.m, config.d

    def cost(ch):
        value = memo.get(ch)
        if value is None:
            value = memo[ch] = n_pairs - int(_coverage_kernel(_genes_array(ch), m, d))
        return value

    L = config.population_size
    population = [random_chromosome(config, rng) for _ in range(L)]
    costs = [cost(ch) for ch in population]
    stamps = [0] * L
    heap = [(cst, i, 0) for i, cst in enumerate(costs)]
    heapq.heapify(heap)

    def pop_valid():
        while True:
            cst, i, stamp = heapq.heappop(heap)
            if stamps[i] == stamp:
                return cst, i, stamp

    best_idx = min(range(L), key=lambda i: (costs[i], i))
    best, best_cost = population[best_idx], costs[best_idx]
    trace = [best_cost]
    it = 0
    while it < config.iterations and best_cost > 0:
        it += 1
        first = pop_valid()
        second = pop_valid()
        heapq.heappush(heap, first)
        heapq.heappush(heap, second)

        off_a, off_b = crossover(population[first[1]], population[second[1]], rng=rng)
        off_a = mutate(off_a, config.mutation_rate, rng, config)
        off_b = mutate(off_b, config.mutation_rate, rng, config)

        v1 = rng.integers(0, L)
        v2 = rng.integers(0, L - 1)
        if v2 >= v1:
            v2 += 1
        for victim, child in ((v1, off_a), (v2, off_b)):
            cst = cost(child)
            population[victim] = child
            costs[victim] = cst
            stamps[victim] += 1
            heapq.heappush(heap, (cst, victim, stamps[victim]))
            if cst < best_cost:
                best, best_cost = child, cst
        trace.append(best_cost)

    logger.debug("ga seed=%s c=%d finished after %d iterations, best cost %d",
                 config.seed, config.c, it, best_cost)
    return GAResult(best, best_cost, trace, it, config)


@dataclass(eq=False)
class SuccessReport:
    rate: float
    results: list
    mean_missed: float
    missed_q25: float
    missed_q75: float
    mean_labelled: float


def trial_seeds(master_seed: int, trials: int) -> list[int]:
    children = np.random.SeedSequence(master_seed).spawn(trials)
    return [int(ch.generate_state(1, dtype=np.uint64)[0]) for ch in children]


def success_rate(config: GAConfig, trials: int, seed: int = 0, workers: int = 1) -> SuccessReport:
    """Fraction of independently seeded runs that reach cost 0."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    configs = [replace(config, seed=s) for s in trial_seeds(seed, trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_ga, configs))
    else:
        results = [run_ga(cfg) for cfg in configs]
    missed = np.array([r.best_cost for r in results], dtype=float)
    return SuccessReport(
        rate=float(np.mean(missed == 0)),
        results=results,
        mean_missed=float(missed.mean()),
        missed_q25=float(np.quantile(missed, 0.25)),
        missed_q75=float(np.quantile(missed, 0.75)),
        mean_labelled=float(config.n_pairs - missed.mean()),
    )
