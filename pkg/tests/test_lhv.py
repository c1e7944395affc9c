import itertools
import math

import numpy as np
import pytest

from singlet_selftest import bellspec, lhv
from singlet_selftest.bellspec import BellSpec


def ordered_oracle(spec):
    """Minimum over every ordered strategy, evaluated from the raw correlator sum."""
    n, k = spec.n, spec.k
    a = np.arange(k)
    phi = np.asarray(spec.phases)
    best = math.inf
    for flat in itertools.product((-1, 1), repeat=n * k):
        s = np.array(flat).reshape(n, k)
        total = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    w = np.cos(np.pi * (a[:, None] - a[None, :]) / k + phi[i] - phi[j])
                    total += (2 / k) * s[i] @ w @ s[j]
        best = min(best, total)
    return best


def test_strategy_value_examples():
    spec = BellSpec(2, 3)
    assert math.isclose(lhv.strategy_value(np.ones((2, 3)), spec), 16 / 3)
    mixed = np.array([[1, 1, 1], [-1, -1, -1]])
    assert math.isclose(lhv.strategy_value(mixed, spec), -16 / 3)
    s = np.array([[1, -1, 1], [1, 1, -1]])
    assert math.isclose(lhv.strategy_value(s, spec), lhv.strategy_value(-s, spec))


def test_strategy_value_matches_table():
    rng = np.random.default_rng(0)
    spec = BellSpec(3, 4, (0.2, 1.0, -0.7))
    for _ in range(20):
        s = rng.choice([-1, 1], size=(3, 4))
        via_table = bellspec.bell_value(lhv.deterministic_table(s, spec), spec).value
        assert math.isclose(lhv.strategy_value(s, spec), via_table, abs_tol=1e-12)


def test_deterministic_table_examples():
    spec = BellSpec(2, 3)
    t = lhv.deterministic_table(np.ones((2, 3)), spec)
    assert np.all(t.values[0, 1] == 1)
    t = lhv.deterministic_table(np.array([[1, 1, 1], [-1, -1, -1]]), spec)
    assert np.all(t.values[0, 1] == -1)


def test_strategy_validation():
    with pytest.raises(ValueError):
        lhv.strategy_value(np.zeros((2, 3)), BellSpec(2, 3))
    with pytest.raises(ValueError):
        lhv.strategy_value(np.ones((2, 4)), BellSpec(2, 3))


@pytest.mark.parametrize("n,k", [(2, 3), (2, 4), (3, 3)])
def test_brute_force_matches_ordered_oracle(n, k):
    spec = BellSpec(n, k)
    assert math.isclose(lhv.brute_force_min(spec).min_value, ordered_oracle(spec), abs_tol=1e-12)


def test_brute_force_with_phases_matches_oracle():
    spec = BellSpec(2, 3, (0.4, 2.1))
    res = lhv.brute_force_min(spec)
    assert res.complete and res.enumerated == 64
    assert math.isclose(res.min_value, ordered_oracle(spec), abs_tol=1e-12)
    assert math.isclose(lhv.strategy_value(res.witness, spec), res.min_value, abs_tol=1e-12)


@pytest.mark.parametrize("n", [2, 4, 6])
@pytest.mark.parametrize("k", [3, 4, 5])
def test_classical_bound_exact(n, k):
    spec = BellSpec(n, k)
    res = lhv.brute_force_min(spec)
    assert res.complete
    assert abs(res.min_value - bellspec.classical_bound(spec)) < 1e-12
    assert res.min_value > bellspec.quantum_bound(spec)


def test_examples_and_class_counts():
    assert lhv.count_classes(BellSpec(4, 3)) == 330
    assert lhv.brute_force_min(BellSpec(4, 3)).enumerated == 330
    assert math.isclose(lhv.brute_force_min(BellSpec(2, 4)).min_value, -2 * (2 + math.sqrt(2)))


def test_odd_n_is_enumerated():
    res = lhv.brute_force_min(BellSpec(3, 3))
    assert res.complete and res.min_value > -9


def test_witness_is_lexicographically_first():
    spec = BellSpec(2, 3)
    res = lhv.brute_force_min(spec)
    vecs = lhv.class_vectors(3)
    minimizers = []
    for i, j in itertools.product(range(8), repeat=2):
        s = np.array([vecs[i], vecs[j]])
        if abs(lhv.strategy_value(s, spec) - res.min_value) < 1e-12:
            minimizers.append((i, j))
    i, j = min(minimizers)
    assert np.array_equal(res.witness, np.array([vecs[i], vecs[j]]))


def test_budget_truncates():
    res = lhv.brute_force_min(BellSpec(4, 4), budget=100)
    assert not res.complete and res.enumerated == 100


def test_permutation_invariance_zero_phases():
    rng = np.random.default_rng(4)
    spec = BellSpec(4, 3)
    for _ in range(10):
        s = rng.choice([-1, 1], size=(4, 3))
        assert math.isclose(
            lhv.strategy_value(s, spec), lhv.strategy_value(s[rng.permutation(4)], spec),
            abs_tol=1e-12,
        )


def test_result_serializes():
    d = lhv.brute_force_min(BellSpec(2, 3)).to_dict()
    assert set(d) == {"min_value", "witness", "enumerated", "complete"}
    assert all(v in (-1, 1) for row in d["witness"] for v in row)
