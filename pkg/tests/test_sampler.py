import numpy as np
import pytest

from singlet_selftest import lhv, quantum, sampler
from singlet_selftest.bellspec import BellSpec
from singlet_selftest.hilbert import QuantumState


def singlet_run(rounds, seed, n=2, k=3):
    return sampler.sample_arrays(quantum.singlet_state(n), quantum.default_angles(n, k), rounds, seed)


def test_forced_settings_anticorrelated():
    recs = sampler.sample_rounds(
        quantum.singlet_state(2), quantum.default_angles(2, 3), 500, seed=3, fixed_settings=[0, 0]
    )
    assert all(r.settings == (0, 0) and r.outcomes[0] * r.outcomes[1] == -1 for r in recs)


def test_maximally_mixed_gives_fair_coins():
    s = QuantumState.maximally_mixed((2, 2))
    settings, outcomes = sampler.sample_arrays(s, quantum.default_angles(2, 3), 40000, seed=1)
    assert np.all(np.abs(outcomes.mean(axis=0)) < 0.02)
    rep = sampler.estimate((settings, outcomes), BellSpec(2, 3))
    assert np.max(np.abs(rep.table_hat.values)) < 0.06


def test_reproducible():
    a = sampler.sample_rounds(quantum.singlet_state(4), quantum.default_angles(4, 3), 300, seed=9)
    b = sampler.sample_rounds(quantum.singlet_state(4), quantum.default_angles(4, 3), 300, seed=9)
    c = sampler.sample_rounds(quantum.singlet_state(4), quantum.default_angles(4, 3), 300, seed=10)
    assert a == b and a != c


def test_round_streams_are_position_independent():
    full_s, full_o = singlet_run(200, seed=4)
    s, o = sampler.sample_arrays(
        quantum.singlet_state(2), quantum.default_angles(2, 3), 50, seed=4, start=120
    )
    assert np.array_equal(s, full_s[120:170]) and np.array_equal(o, full_o[120:170])


def test_settings_uniform():
    settings, _ = singlet_run(30000, seed=2, k=4)
    counts = np.bincount(settings.ravel(), minlength=4)
    assert np.all(np.abs(counts / counts.sum() - 0.25) < 0.01)


def test_sampling_matches_exact_correlators():
    n, k = 3, 3
    rng = np.random.default_rng(0)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    s = QuantumState.pure(v, (2,) * n)
    ang = quantum.default_angles(n, k)
    rep = sampler.estimate(sampler.sample_arrays(s, ang, 60000, seed=5), BellSpec(n, k))
    exact = quantum.correlator_table(s, ang).values
    err = np.abs(rep.table_hat.values - exact)
    sd = np.sqrt(np.maximum(1 - exact**2, 1e-3) / np.maximum(rep.counts, 1))
    assert np.all(err <= 5 * sd + 1e-12)


def test_sampler_rejects_bad_input():
    with pytest.raises(ValueError):
        singlet_run(0, seed=1)
    with pytest.raises(ValueError):
        sampler.sample_arrays(quantum.singlet_state(2), np.zeros((3, 3)), 10, seed=1)
    with pytest.raises(ValueError):
        sampler.sample_arrays(QuantumState.maximally_mixed((2, 3)), np.zeros((2, 3)), 10, seed=1)


def test_deterministic_strategy_is_exact():
    spec = BellSpec(4, 3)
    for seed in range(3):
        strat = np.random.default_rng(seed).choice([-1, 1], size=(4, 3))
        rep = sampler.estimate(sampler.strategy_rounds(strat, 3000, seed), spec)
        assert abs(rep.bell_hat - lhv.strategy_value(strat, spec)) < 1e-12
        assert rep.stderr == 0


def test_singlet_estimate_seed_7():
    rep = sampler.estimate(singlet_run(10**5, seed=7), BellSpec(2, 3))
    assert abs(rep.bell_hat + 6) <= 4 * rep.stderr
    assert rep.rounds_used == 10**5
    assert rep.counts.sum() == 2 * 10**5


def test_split_halves_agree():
    s, o = singlet_run(10**5, seed=8, n=4)
    spec = BellSpec(4, 3)
    even = sampler.estimate((s[::2], o[::2]), spec)
    odd = sampler.estimate((s[1::2], o[1::2]), spec)
    assert abs(even.bell_hat - odd.bell_hat) <= 6 * np.hypot(even.stderr, odd.stderr)


def test_estimator_consistency_over_seeds():
    spec = BellSpec(2, 3)
    hits = 0
    for seed in range(20):
        rep = sampler.estimate(singlet_run(10**5, seed=100 + seed), spec)
        hits += abs(rep.bell_hat + 6) <= 3 * rep.stderr
    assert hits >= 18


def test_stderr_scaling():
    spec = BellSpec(2, 3)
    s, o = singlet_run(16 * 6000, seed=11)
    small = sampler.estimate((s[:6000], o[:6000]), spec).stderr
    large = sampler.estimate((s, o), spec).stderr
    assert 0.8 * 4 <= small / large <= 1.2 * 4


def test_estimate_errors():
    spec = BellSpec(2, 3)
    with pytest.raises(sampler.EmptyCellError):
        sampler.estimate([], spec)
    with pytest.raises(sampler.EmptyCellError):
        sampler.estimate(singlet_run(3, seed=1), spec)
    recs = sampler.sample_rounds(quantum.singlet_state(2), quantum.default_angles(2, 3), 100, 1)
    with pytest.raises(ValueError):
        sampler.estimate(recs, BellSpec(3, 3))


def test_estimate_rejects_out_of_range_settings():
    recs = [sampler.RoundRecord((0, 5), (1, 1))] * 9
    with pytest.raises(ValueError):
        sampler.estimate(recs, BellSpec(2, 3))


def test_jsonl_roundtrip(tmp_path):
    recs = sampler.sample_rounds(quantum.singlet_state(4), quantum.default_angles(4, 3), 1000, 2)
    p = tmp_path / "r.jsonl"
    sampler.write_rounds(recs, p)
    assert sampler.read_rounds(p) == recs


def test_jsonl_errors_name_the_line(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"s": [0, 1], "o": [1, -1]}\n{"s": [0, 1], "o": [1, 0]}\n')
    with pytest.raises(ValueError, match="line 2"):
        sampler.read_rounds(p)
    p.write_text('{"s": [0, 1], "o": [1, -1]}\nnot json\n')
    with pytest.raises(ValueError, match="line 2"):
        sampler.read_rounds(p)
    p.write_text('{"s": [0, 1], "o": [1, -1]}\n{"s": [0], "o": [1]}\n')
    with pytest.raises(ValueError, match="line 2"):
        sampler.read_rounds(p)
    p.write_text('{"s": [0, 1], "o": [1, -1]}\n{"s": [0, 1], "o": [1, -1]}')
    with pytest.raises(ValueError, match="line 2"):
        sampler.read_rounds(p)


def test_empty_file(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    assert sampler.read_rounds(p) == []
    with pytest.raises(sampler.EmptyCellError):
        sampler.estimate([], BellSpec(2, 3))


def test_report_serializes():
    rep = sampler.estimate(singlet_run(2000, seed=1), BellSpec(2, 3))
    d = rep.to_dict()
    assert d["rounds_used"] == 2000 and d["stderr"] > 0
