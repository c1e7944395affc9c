import json
import math

import numpy as np
import pytest

from singlet_selftest import bellspec
from singlet_selftest.bellspec import BellSpec, BellValue, CorrelatorTable


def singlet_table(n, k):
    a = np.arange(k)
    block = -np.cos(np.pi * (a[:, None] - a[None, :]) / k)
    values = np.zeros((n, n, k, k))
    for i in range(n):
        for j in range(n):
            if i != j:
                values[i, j] = block
    return CorrelatorTable(n, k, values)


def random_table(n, k, rng):
    v = rng.uniform(-1, 1, size=(n, n, k, k))
    v = (v + v.transpose(1, 0, 3, 2)) / 2
    return CorrelatorTable(n, k, v)


def test_spec_validation():
    with pytest.raises(ValueError):
        BellSpec(1, 3)
    with pytest.raises(ValueError):
        BellSpec(2, 2)
    with pytest.raises(ValueError):
        BellSpec(2, 3, (0.1,))
    assert BellSpec(3, 3).phases == (0.0, 0.0, 0.0)
    spec = BellSpec(2, 3, (0.5, -0.2))
    assert BellSpec.from_dict(spec.to_dict()) == spec


def test_bell_matrix_k3():
    m = bellspec.bell_matrix(3).m
    expected = np.array([[2, 1, -1], [1, 2, 1], [-1, 1, 2]]) / 3
    assert np.allclose(m, expected)


@pytest.mark.parametrize("k", range(3, 9))
def test_bell_matrix_rank_two(k):
    bm = bellspec.bell_matrix(k)
    assert np.allclose(bm.m, np.outer(bm.c, bm.c) + np.outer(bm.s, bm.s))
    assert np.linalg.matrix_rank(bm.m) == 2


def test_bell_value_examples():
    spec = BellSpec(2, 3)
    assert bellspec.bell_value(CorrelatorTable.zeros(2, 3), spec).value == 0
    assert math.isclose(bellspec.bell_value(singlet_table(2, 3), spec).value, -6, abs_tol=1e-12)
    ones = CorrelatorTable(2, 3, np.ones((2, 2, 3, 3)))
    assert math.isclose(bellspec.bell_value(ones, spec).value, 16 / 3)


def test_table_validation():
    with pytest.raises(ValueError):
        CorrelatorTable(2, 3, np.full((2, 2, 3, 3), 1.5))
    bad = np.zeros((2, 2, 3, 3))
    bad[0, 1, 0, 1] = 0.5
    with pytest.raises(ValueError):
        CorrelatorTable(2, 3, bad)
    with pytest.raises(ValueError):
        CorrelatorTable(2, 3, np.zeros((2, 2, 3, 2)))
    with pytest.raises(ValueError):
        bellspec.bell_value(CorrelatorTable.zeros(2, 3), BellSpec(2, 4))


@pytest.mark.parametrize("seed", range(10))
def test_bell_value_linear(seed):
    rng = np.random.default_rng(seed)
    spec = BellSpec(3, 4, tuple(rng.uniform(0, 2 * np.pi, 3)))
    t1, t2 = random_table(3, 4, rng), random_table(3, 4, rng)
    alpha, beta = 0.3, -0.6
    combo = CorrelatorTable(3, 4, alpha * t1.values + beta * t2.values)
    lhs = bellspec.bell_value(combo, spec).value
    rhs = alpha * bellspec.bell_value(t1, spec).value + beta * bellspec.bell_value(t2, spec).value
    assert abs(lhs - rhs) < 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_bell_value_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0, 2 * np.pi, 4)
    t = random_table(4, 3, rng)
    perm = rng.permutation(4)
    v = bellspec.bell_value(t, BellSpec(4, 3, tuple(phases))).value
    w = bellspec.bell_value(t.permuted(perm), BellSpec(4, 3, tuple(phases[perm]))).value
    assert abs(v - w) < 1e-9


def test_classical_bound_examples():
    assert math.isclose(bellspec.classical_bound(BellSpec(2, 3)), -16 / 3)
    assert math.isclose(bellspec.classical_bound(BellSpec(4, 3)), -32 / 3)
    assert math.isclose(bellspec.classical_bound(BellSpec(2, 4)), -2 * (2 + math.sqrt(2)))
    with pytest.raises(ValueError):
        bellspec.classical_bound(BellSpec(3, 3))
    with pytest.raises(ValueError):
        bellspec.classical_bound(BellSpec(2, 3, (0.1, 0.0)))


def test_quantum_bound_examples():
    assert bellspec.quantum_bound(BellSpec(2, 3)) == -6
    assert bellspec.quantum_bound(BellSpec(4, 5)) == -20
    assert bellspec.quantum_bound(BellSpec(4, 3, (0.3, 1.1, -0.4, 2.0))) == -12


def test_classical_strictly_above_quantum_and_monotone():
    per_party = []
    for k in range(3, 13):
        spec = BellSpec(2, k)
        assert bellspec.classical_bound(spec) > bellspec.quantum_bound(spec)
        per_party.append(bellspec.classical_bound(spec) / 2)
    # per party, each step in k lowers the classical value; the ratio to -k tends to 8/pi^2
    assert all(b < a for a, b in zip(per_party, per_party[1:]))
    ratio = bellspec.classical_bound(BellSpec(2, 400)) / bellspec.quantum_bound(BellSpec(2, 400))
    assert abs(ratio - 8 / math.pi**2) < 1e-4


def test_violation_deficit():
    assert bellspec.violation_deficit(BellValue(-12.0, BellSpec(4, 3))) == 0
    assert math.isclose(bellspec.violation_deficit(BellValue(-10.8, BellSpec(4, 3))), 0.1)
    assert math.isclose(bellspec.violation_deficit(BellValue(-16 / 3, BellSpec(2, 3))), 1 / 9)
    with pytest.warns(RuntimeWarning):
        assert bellspec.violation_deficit(BellValue(-6 - 1e-10, BellSpec(2, 3))) == 0
    with pytest.raises(bellspec.QuantumBoundViolation):
        bellspec.violation_deficit(BellValue(-6.01, BellSpec(2, 3)))


def test_table_json_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    spec = BellSpec(3, 3, (0.1, 0.2, 0.3))
    t = random_table(3, 3, rng)
    path = tmp_path / "t.json"
    bellspec.dump_table(t, path, spec)
    t2, spec2 = bellspec.load_table(path)
    assert spec2 == spec
    assert np.array_equal(t.values, t2.values)


def test_table_json_fills_by_symmetry_and_flags_missing():
    d = {"n": 2, "k": 3, "values": [{"i": 0, "j": 1, "a": a, "b": b, "v": 0.1 * (a - b)}
                                    for a in range(3) for b in range(3)]}
    t, _ = bellspec.table_from_json_dict(json.loads(json.dumps(d)))
    assert math.isclose(t.values[1, 0, 2, 0], -0.2)
    d["values"].pop()
    with pytest.raises(ValueError):
        bellspec.table_from_json_dict(d)
