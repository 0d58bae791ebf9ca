import numpy as np
import pytest

from multiswap.core import Circuit, Layout
from multiswap.pairing import build_pairing, build_swap_test
from multiswap.permlab import label_table
from multiswap.simvec import AncillaDistribution, IncompleteLabeling, ancilla_distribution, haar_states, run
from multiswap.estimate import (
    ShotCounts,
    error_norm,
    estimate_overlaps,
    mse_bound,
    run_replications,
    sample_bound,
    sample_shots,
)


def _dist(m=4, seed=0):
    c = build_swap_test(m)
    states = haar_states(m, 1, seed)
    return c, states, ancilla_distribution(run(c, states))


@pytest.mark.parametrize("d, eps, n", [(0, 0.1, 400), (3, 0.1, 25600), (0, 1.0, 4), (6, 0.5, 65536)])
def test_sample_bound(d, eps, n):
    assert sample_bound(d, eps) == n


def test_sample_bound_rejects():
    with pytest.raises(ValueError):
        sample_bound(2, 0)


def test_mse_bound():
    assert mse_bound(3, 10 ** 5) == pytest.approx(256 / 10 ** 5)


def test_shots_validation():
    _, _, dist = _dist()
    with pytest.raises(ValueError):
        sample_shots(dist, 0)
    with pytest.raises(ValueError):
        ShotCounts(np.array([[1, 2]]), 4)


def test_sampling_deterministic():
    _, _, dist = _dist()
    a = sample_shots(dist, 1000, seed=3).counts
    b = sample_shots(dist, 1000, seed=3).counts
    assert np.array_equal(a, b) and a.sum() == 1000


def test_exact_counts_recover_truth():
    """Counts proportional to the exact distribution give the exact overlaps."""
    c, states, dist = _dist(4, 2)
    table = label_table(c.pairing_part())
    n = 2 ** 40
    raw = np.round(dist.probs * n).astype(np.int64)
    counts = ShotCounts(raw, int(raw.sum()))
    est = estimate_overlaps(counts, table)
    truth = {(i + 1, j + 1): abs(np.vdot(states[i], states[j])) ** 2 for i in range(4) for j in range(i + 1, 4)}
    assert error_norm(truth, est) < 1e-9


def test_single_pair_example():
    # m = 2, d = 0: p0 = 0.75 means overlap 0.5
    table = label_table(build_pairing(2))
    est = estimate_overlaps(ShotCounts(np.array([[75], [25]]), 100), table)
    assert est.raw == {(1, 2): pytest.approx(0.5)}
    est = estimate_overlaps(ShotCounts(np.array([[40], [60]]), 100), table)
    assert est.raw[(1, 2)] == pytest.approx(-0.2)
    assert est.clamped[(1, 2)] == 0.0 and est.was_clamped[(1, 2)]


def test_clamping_never_increases_error():
    c, states, dist = _dist(4, 5)
    table = label_table(c.pairing_part())
    truth = {(i + 1, j + 1): abs(np.vdot(states[i], states[j])) ** 2 for i in range(4) for j in range(i + 1, 4)}
    for seed in range(20):
        est = estimate_overlaps(sample_shots(dist, 200, seed), table)
        assert error_norm(truth, est, clamp=True) <= error_norm(truth, est) + 1e-15


def test_pooled_duplicates():
    table = label_table(build_pairing(4))
    counts = np.zeros((2, 8), dtype=np.int64)
    counts[0, 4] = 10  # one of the two labels of (1, 3)
    est = estimate_overlaps(ShotCounts(counts, 10), table)
    assert est.raw[(1, 3)] == pytest.approx(2 ** 4 * 1.0 / 2 - 1)


def test_error_norm_keys():
    with pytest.raises(KeyError):
        error_norm({(1, 2): 0.0}, {(1, 3): 0.0})
    assert error_norm({(1, 2): 0.0, (1, 3): 0.0}, {(1, 2): 0.3, (1, 3): 0.4}) == pytest.approx(0.5)


def test_incomplete_rejected():
    c = Circuit(Layout(4, 1, 3), build_pairing(4).gates[:-1])
    table = label_table(c)
    with pytest.raises(IncompleteLabeling):
        estimate_overlaps(ShotCounts(np.zeros((2, 8), dtype=np.int64), 0), table)


def test_unbiased_and_within_bound():
    c, states, _ = _dist(4, 1)
    rep = run_replications(c, states, 20_000, 200, seed=8)
    # standard error of each mean is about sqrt(bound / reps)
    tol = 5 * np.sqrt(rep.bound / rep.reps)
    assert max(abs(b) for b in rep.bias.values()) < tol
    assert rep.mse <= rep.bound


def test_replications_deterministic():
    c, states, _ = _dist(3, 1)
    a = run_replications(c, states, 1000, 5, seed=4)
    b = run_replications(c, states, 1000, 5, seed=4)
    assert a.errors == b.errors
