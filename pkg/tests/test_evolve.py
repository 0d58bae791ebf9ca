import random

import numpy as np
import pytest

from multiswap.core import Circuit, CSwap, Hadamard, Layout
from multiswap.evolve import (
    GAConfig,
    _UniformStream,
    chromosome_coverage,
    crossover,
    fitness,
    from_circuit,
    mutate,
    random_chromosome,
    random_gene,
    run_ga,
    success_rate,
    to_circuit,
    trial_seeds,
)
from multiswap.pairing import build_pairing
from multiswap.permlab import coverage

from oracles import forward_coverage


def test_config_validation():
    with pytest.raises(ValueError):
        GAConfig(1, 3, 3)
    with pytest.raises(ValueError):
        GAConfig(4, 3, 3, mutation_rate=1.5)
    cfg = GAConfig(8, 9, 6)
    assert cfg.n_pairs == 28 and cfg.gene_space == 6 * 56


def test_canonical_u4_u8_cost_zero():
    for m in (4, 8):
        circuit = build_pairing(m)
        chrom = from_circuit(circuit)
        cfg = GAConfig(m, len(chrom), circuit.layout.d)
        assert fitness(chrom, cfg) == 0
        assert to_circuit(chrom, m, circuit.layout.d) == circuit


def test_identical_genes_cost():
    # every branch swaps r1 and r2 or not: one pair covered
    cfg = GAConfig(8, 9, 6)
    assert fitness(((1, 1, 2),) * 9, cfg) == 27
    # swapping two registers outside the front never changes (1,2): still one
    assert fitness(((1, 3, 4),) * 9, cfg) == 27
    # a1 swaps r1<->r3 nine times: odd count acts as one swap -> pairs (1,2), (2,3)
    assert fitness(((1, 1, 3),) * 9, cfg) == 26


def test_kernel_matches_permlab_and_oracle():
    rng = np.random.default_rng(3)
    for _ in range(150):
        m, d, c = int(rng.integers(2, 8)), int(rng.integers(1, 7)), int(rng.integers(1, 10))
        cfg = GAConfig(m, c, d)
        chrom = random_chromosome(cfg, rng)
        circuit = to_circuit(chrom, m, d)
        cov = chromosome_coverage(chrom, m, d)
        assert cov == coverage(circuit) == len(forward_coverage(circuit.cswaps(), m, d))


def test_random_gene_uniform_ordered_pairs():
    cfg = GAConfig(4, 3, 2)
    rng = np.random.default_rng(0)
    seen = {}
    for _ in range(24_000):
        a, t1, t2 = random_gene(cfg, rng)
        assert 1 <= a <= 2 and t1 != t2 and 1 <= t1 <= 4 and 1 <= t2 <= 4
        seen[(a, t1, t2)] = seen.get((a, t1, t2), 0) + 1
    assert len(seen) == cfg.gene_space
    assert max(seen.values()) < 1.3 * 1000 and min(seen.values()) > 0.7 * 1000


def test_crossover():
    a = tuple((1, 1, 2) for _ in range(4))
    b = tuple((2, 3, 4) for _ in range(4))
    x, y = crossover(a, b, pivot=3)
    assert x == a[:2] + b[2:] and y == b[:2] + a[2:]
    assert crossover(a, b, pivot=1) == (b, a)
    with pytest.raises(ValueError):
        crossover(a, b, pivot=5)
    with pytest.raises(ValueError):
        crossover(a, b[:3], pivot=1)


def test_mutate():
    cfg = GAConfig(5, 6, 3)
    rng = np.random.default_rng(1)
    chrom = random_chromosome(cfg, rng)
    assert mutate(chrom, 0.0, rng, cfg) == chrom
    changed = 0
    for _ in range(200):
        out = mutate(chrom, 1.0, rng, cfg)
        diff = sum(g != h for g, h in zip(chrom, out))
        assert diff <= 1
        changed += diff
    assert changed > 150
    with pytest.raises(ValueError):
        mutate(chrom, -0.1, rng, cfg)


def test_fitness_invariant_under_ancilla_relabel_and_target_order():
    cfg = GAConfig(6, 7, 4)
    rng = np.random.default_rng(5)
    for _ in range(40):
        chrom = random_chromosome(cfg, rng)
        sigma = rng.permutation(cfg.d) + 1
        relabelled = tuple((int(sigma[a - 1]), t1, t2) for a, t1, t2 in chrom)
        flipped = tuple((a, t2, t1) for a, t1, t2 in chrom)
        f = fitness(chrom, cfg)
        assert fitness(relabelled, cfg) == f == fitness(flipped, cfg)
        assert 0 <= f < cfg.n_pairs


def test_uniform_stream_reproducible():
    a, b = _UniformStream(9, block=16), _UniformStream(9, block=16)
    xs = [a.random() for _ in range(40)]
    assert xs == [b.random() for _ in range(40)]
    assert all(0 <= a.integers(3, 7) < 7 for _ in range(50))


def test_run_ga_deterministic_and_monotone():
    cfg = GAConfig(6, 7, 5, population_size=50, iterations=300, seed=12)
    r1, r2 = run_ga(cfg), run_ga(cfg)
    assert r1.best == r2.best and r1.cost_trace == r2.cost_trace
    assert all(x >= y for x, y in zip(r1.cost_trace, r1.cost_trace[1:]))
    assert r1.best_cost == fitness(r1.best, cfg)
    assert len(r1.cost_trace) == r1.iterations_run + 1


def test_run_ga_stops_at_zero():
    cfg = GAConfig(4, 3, 3, population_size=100, iterations=5000, seed=1)
    r = run_ga(cfg)
    assert r.best_cost == 0 and r.iterations_run < 5000


def test_m4_majority_success():
    cfg = GAConfig(4, 3, 3, population_size=100, iterations=2000)
    rep = success_rate(cfg, 10, seed=0)
    assert rep.rate > 0.5
    assert rep.mean_labelled == pytest.approx(6 - rep.mean_missed)


def test_trial_seeds():
    assert trial_seeds(1, 4) == trial_seeds(1, 4)
    assert len(set(trial_seeds(1, 4))) == 4


def test_parallel_equals_serial():
    cfg = GAConfig(5, 5, 4, population_size=40, iterations=200)
    a = success_rate(cfg, 3, seed=2, workers=1)
    b = success_rate(cfg, 3, seed=2, workers=2)
    assert [r.best for r in a.results] == [r.best for r in b.results]
