import numpy as np
import pytest

from otmac.channels import identity_mac, noisy_adder_mac, su_sbc, transmit_arrays
from otmac.probcore import SeededRng
from otmac.typicality import (
    CheatStrategy,
    JointType,
    detection_bound,
    detection_epsilon,
    empirical_type,
    is_cond_typical,
    run_test_unit,
)


def bsc_like_kernel(flip=0.1):
    """Binary symmetric-ish MAC: Y = X1 xor X2, flipped with prob `flip`."""
    arr = np.zeros((2, 2, 2))
    for x1 in range(2):
        for x2 in range(2):
            y = x1 ^ x2
            arr[x1, x2, y] = 1 - flip
            arr[x1, x2, 1 - y] = flip
    return __import__("otmac.channels", fromlist=["MacKernel"]).MacKernel(arr)


def test_empirical_type_constant():
    t = empirical_type([1] * 5, [0] * 5, [2] * 5)
    assert t.counts[1, 0, 2] == 5
    assert t.n == 5


def test_empirical_type_hand_counts():
    t = empirical_type([0, 0, 1, 1], [0, 1, 0, 1], [0, 1, 1, 2], shape=(2, 2, 3))
    assert t.counts[0, 0, 0] == 1
    assert t.counts[0, 1, 1] == 1
    assert t.counts[1, 0, 1] == 1
    assert t.counts[1, 1, 2] == 1
    assert t.input_pair_counts().sum() == 4


def test_empirical_type_matches_identity_channel():
    rng = SeededRng(0)
    gen = rng.generator
    x1 = gen.integers(0, 2, 200)
    x2 = gen.integers(0, 2, 200)
    y = transmit_arrays(identity_mac(), x1, x2, rng)
    t = empirical_type(x1, x2, y, shape=(2, 2, 4))
    for a in range(2):
        for b in range(2):
            assert t.counts[a, b, 2 * a + b] == ((x1 == a) & (x2 == b)).sum()


def test_empirical_type_length_mismatch():
    with pytest.raises(ValueError):
        empirical_type([0, 1], [0], [0, 0])


def test_is_cond_typical_exact_type():
    rng = SeededRng(1)
    gen = rng.generator
    x1 = gen.integers(0, 2, 100)
    x2 = gen.integers(0, 2, 100)
    y = transmit_arrays(identity_mac(), x1, x2, rng)
    t = empirical_type(x1, x2, y, shape=(2, 2, 4))
    assert is_cond_typical(t, identity_mac(), 1e-6)


def test_is_cond_typical_flipped_outputs():
    rng = SeededRng(2)
    gen = rng.generator
    x1 = gen.integers(0, 2, 100)
    x2 = gen.integers(0, 2, 100)
    y = (2 * x1 + x2 + 1) % 4  # every output wrong
    t = empirical_type(x1, x2, y, shape=(2, 2, 4))
    # per-cell deviation equals the input-pair frequency, about 1/4 here
    max_dev = t.input_pair_counts().max() / t.n
    assert not is_cond_typical(t, identity_mac(), 0.9 * max_dev)
    assert is_cond_typical(t, identity_mac(), 1.1 * max_dev)


def test_is_cond_typical_concentration():
    kern = bsc_like_kernel(0.1)
    hits = 0
    for trial in range(500):
        rng = SeededRng(3, trial)
        gen = rng.generator
        x1 = gen.integers(0, 2, 1000)
        x2 = gen.integers(0, 2, 1000)
        y = transmit_arrays(kern, x1, x2, rng)
        t = empirical_type(x1, x2, y, shape=(2, 2, 2))
        hits += is_cond_typical(t, kern, 0.05)
    assert hits >= 495


def test_is_cond_typical_monotone_in_eps():
    rng = SeededRng(4)
    gen = rng.generator
    kern = noisy_adder_mac(0.5)
    x1 = gen.integers(0, 2, 300)
    x2 = gen.integers(0, 2, 300)
    y = transmit_arrays(kern, x1, x2, rng)
    t = empirical_type(x1, x2, y, shape=(2, 2, 4))
    verdicts = [is_cond_typical(t, kern, e) for e in (0.001, 0.01, 0.1, 0.5)]
    for a, b in zip(verdicts, verdicts[1:]):
        assert b >= a  # typical at eps stays typical at larger eps


def test_detection_epsilon_value():
    assert detection_epsilon(1.0, 1.0, 2, 2, 2) == pytest.approx(1 / 64)
    with pytest.raises(ValueError):
        detection_epsilon(0.0, 1.0, 2, 2, 2)


def test_detection_bound_limits():
    assert detection_bound(0, 0.1) == pytest.approx(2.0)
    assert detection_bound(10**9, 0.1) < 1e-6


def test_cheat_strategy_validation():
    with pytest.raises(ValueError):
        CheatStrategy(role="eve", delta=0.1)
    with pytest.raises(ValueError):
        CheatStrategy(role="sender1", delta=1.5)
    with pytest.raises(ValueError):
        CheatStrategy(role="sender1", delta=0.1, mode="warp")


def run_many(channel, n, strategy, eps, trials, seed):
    detected = 0
    for t in range(trials):
        rng = SeededRng(seed, t)
        gen = rng.generator
        x1 = gen.integers(0, 2, n).astype(np.intp)
        x2 = gen.integers(0, 2, n).astype(np.intp)
        rep = run_test_unit(channel, x1, x2, eps, rng, strategy)
        detected += not rep.typical
    return detected / trials


def test_test_unit_honest_deterministic_never_flags():
    assert run_many(identity_mac(), 400, None, 0.02, 100, 5) == 0.0


def test_test_unit_detects_flips_identity():
    strat = CheatStrategy(role="sender1", delta=0.3, mode="flip")
    assert run_many(identity_mac(), 400, strat, 0.02, 200, 6) >= 0.99


def test_test_unit_detects_flips_on_sbc():
    strat = CheatStrategy(role="sender1", delta=0.2, mode="flip")
    rate = run_many(su_sbc(0.5, identity_mac()), 400, strat, 0.02, 200, 7)
    assert rate >= 0.95


def test_test_unit_false_positive_noisy_kernel():
    # radius from the detection formula needs a large block to clear the
    # honest fluctuations of a noisy kernel
    kern = bsc_like_kernel(0.1)
    eps = detection_epsilon(1.0, 1.0, 2, 2, 2)
    fp = run_many(kern, 20_000, None, eps, 200, 8)
    assert fp <= 0.05


def test_test_unit_delta_one_always_detected():
    strat = CheatStrategy(role="sender1", delta=1.0, mode="flip")
    assert run_many(identity_mac(), 100, strat, 0.02, 100, 9) == 1.0


def test_test_unit_misreport_and_receiver_modes():
    strat = CheatStrategy(role="sender2", delta=0.3, mode="misreport")
    assert run_many(identity_mac(), 400, strat, 0.02, 100, 10) >= 0.99
    strat = CheatStrategy(role="receiver", delta=0.3, mode="flip")
    assert run_many(identity_mac(), 400, strat, 0.02, 100, 11) >= 0.99


def test_detection_rate_nondecreasing_in_n():
    strat = CheatStrategy(role="sender1", delta=0.2, mode="flip")
    rates = [
        run_many(su_sbc(0.5, identity_mac()), n, strat, 0.02, 200, 12)
        for n in (100, 200, 400)
    ]
    assert all(b >= a for a, b in zip(rates, rates[1:]))


def test_report_serializable():
    rng = SeededRng(13)
    gen = rng.generator
    x1 = gen.integers(0, 2, 50).astype(np.intp)
    x2 = gen.integers(0, 2, 50).astype(np.intp)
    rep = run_test_unit(identity_mac(), x1, x2, 0.05, rng)
    d = rep.to_dict()
    assert set(d) == {"queried", "typical", "tested_positions"}
    assert d["typical"] is True
