import numpy as np
import pytest

from otmac.probcore import (
    BitString,
    Distribution,
    JointDistribution,
    SeededRng,
    condition,
    marginalize,
    product,
    sample,
    sample_many,
)


def adder_joint_uniform():
    # enumerate the four equally likely input pairs of the adder channel
    probs = np.zeros((2, 2, 3))
    for x1 in range(2):
        for x2 in range(2):
            probs[x1, x2, x1 + x2] = 0.25
    return JointDistribution(probs)


def test_distribution_validation():
    with pytest.raises(ValueError):
        Distribution([0.5, 0.6])
    with pytest.raises(ValueError):
        Distribution([-0.1, 1.1])
    d = Distribution([0.3, 0.7])
    assert d.alphabet_size == 2


def test_joint_validation():
    with pytest.raises(ValueError):
        JointDistribution(np.ones(4) / 4)  # 1-d is not a joint
    with pytest.raises(ValueError):
        JointDistribution(np.full((2, 2), 0.3))


def test_marginalize_uniform_2x2():
    j = JointDistribution(np.full((2, 2), 0.25))
    m = marginalize(j, [0])
    assert np.allclose(m.probs, [0.5, 0.5])


def test_marginalize_point_mass():
    probs = np.zeros((2, 2))
    probs[0, 0] = 1.0
    m = marginalize(JointDistribution(probs), [1])
    assert np.allclose(m.probs, [1.0, 0.0])


def test_marginalize_adder_output():
    m = marginalize(adder_joint_uniform(), [2])
    assert np.allclose(m.probs, [0.25, 0.5, 0.25])


def test_marginalize_bad_axis():
    with pytest.raises(ValueError):
        marginalize(adder_joint_uniform(), [5])


def test_condition_independent_pair():
    j = JointDistribution(np.full((2, 2), 0.25))
    c = condition(j, 1, 0)
    assert np.allclose(c.probs, [0.5, 0.5])


def test_condition_adder_on_y1():
    c = condition(adder_joint_uniform(), 2, 1)
    assert np.allclose(c.probs, [[0.0, 0.5], [0.5, 0.0]])


def test_condition_adder_on_y0_point_mass():
    c = condition(adder_joint_uniform(), 2, 0)
    assert c.probs[0, 0] == pytest.approx(1.0)


def test_condition_zero_probability_event():
    probs = np.zeros((2, 2))
    probs[0, 0] = 1.0
    with pytest.raises(ValueError):
        condition(JointDistribution(probs), 0, 1)


def test_conditional_mass_is_one():
    rng = np.random.default_rng(0)
    for _ in range(50):
        probs = rng.dirichlet(np.ones(12)).reshape(2, 2, 3)
        j = JointDistribution(probs)
        for y in range(3):
            if probs[:, :, y].sum() > 1e-9:
                c = condition(j, 2, y)
                assert abs(c.probs.sum() - 1.0) < 1e-12


def test_product_point_masses():
    j = product(Distribution([1, 0]), Distribution([0, 1]))
    assert j.probs[0, 1] == 1.0


def test_product_uniform():
    j = product(Distribution.uniform(2), Distribution.uniform(2))
    assert np.allclose(j.probs, 0.25)


def test_product_entry():
    j = product(Distribution([0.3, 0.7]), Distribution([0.4, 0.6]))
    assert j.probs[0, 0] == pytest.approx(0.12)


def test_product_marginals_exact():
    rng = np.random.default_rng(1)
    for _ in range(50):
        p1 = Distribution(rng.dirichlet(np.ones(3)))
        p2 = Distribution(rng.dirichlet(np.ones(4)))
        j = product(p1, p2)
        assert np.abs(marginalize(j, [0]).probs - p1.probs).max() < 1e-15
        assert np.abs(marginalize(j, [1]).probs - p2.probs).max() < 1e-15


def test_sample_point_mass():
    d = Distribution.point_mass(2, 4)
    rng = SeededRng(0)
    assert all(sample(d, rng) == 2 for _ in range(20))


def test_sample_uniform_frequency():
    d = Distribution.uniform(2)
    draws = sample_many(d, 100_000, SeededRng(42))
    assert 0.49 <= draws.mean() <= 0.51


def test_sample_deterministic_replay():
    d = Distribution([0.2, 0.5, 0.3])
    a = sample_many(d, 1000, SeededRng(7, 3))
    b = sample_many(d, 1000, SeededRng(7, 3))
    assert np.array_equal(a, b)


def test_streams_independent():
    d = Distribution.uniform(2)
    a = sample_many(d, 1000, SeededRng(7, 0))
    b = sample_many(d, 1000, SeededRng(7, 1))
    assert not np.array_equal(a, b)


def test_substream_deterministic():
    r1 = SeededRng(9, 2).substream(5)
    r2 = SeededRng(9, 2).substream(5)
    assert r1.generator.integers(0, 1 << 30) == r2.generator.integers(0, 1 << 30)


def test_bitstring_ops():
    a = BitString([1, 0, 1])
    b = BitString([1, 1, 0])
    assert str(a ^ b) == "011"
    assert a.take([0, 2]) == BitString([1, 1])
    with pytest.raises(ValueError):
        BitString([0, 2])
    with pytest.raises(ValueError):
        BitString([])
