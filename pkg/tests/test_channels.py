import itertools

import numpy as np
import pytest

from otmac.channels import (
    Correlation,
    MacKernel,
    SbcParamsIndependent,
    adder_mac,
    bec,
    correlation_from,
    drop_redundant_inputs,
    find_redundant_inputs,
    identity_mac,
    is_perfect,
    merge_redundant_outputs,
    noisy_adder_mac,
    reduce_suco_to_sbc,
    reduce_to_suco,
    remove_redundancy,
    special_bemac,
    su_sbc,
    su_sbc_full,
    transmit,
    transmit_arrays,
)
from otmac.errors import PerfectChannelError
from otmac.info import mutual_information
from otmac.probcore import Distribution, JointDistribution, SeededRng

UNIF2 = Distribution.uniform(2)


def uniform_correlation(kernel):
    return correlation_from(
        kernel, Distribution.uniform(kernel.x1_size), Distribution.uniform(kernel.x2_size)
    )


# --- builders -----------------------------------------------------------------


def test_builders_are_stochastic():
    for kern in (identity_mac(), adder_mac(), noisy_adder_mac(0.3), bec(0.2), special_bemac()):
        assert np.allclose(kern.w.sum(axis=2), 1.0, atol=1e-15)
        assert kern.w.min() >= 0


def test_adder_deterministic_sum():
    k = adder_mac()
    assert k.w[0, 1, 1] == 1.0
    assert k.w[1, 0, 1] == 1.0
    assert k.w[1, 1, 2] == 1.0


def test_noisy_adder_branch_probabilities():
    k = noisy_adder_mac(0.5)
    assert k.w[0, 0, 0] == pytest.approx(0.5)  # erasure symbol
    assert k.w[0, 0, 1] == pytest.approx(0.5)  # revealed sum 0


def test_noisy_adder_p1_equals_adder():
    a, b = noisy_adder_mac(1.0), adder_mac()
    assert np.array_equal(a.w, b.w)
    assert a.x1_obs == b.x1_obs
    with pytest.raises(ValueError):
        noisy_adder_mac(0.0)


def test_bec_rows():
    k = bec(0.5)
    assert k.w[0, 0, 2] == pytest.approx(0.5)
    assert k.w[1, 0, 2] == pytest.approx(0.5)
    assert k.w[0, 0, 0] == pytest.approx(0.5)


def test_special_bemac_rows():
    k = special_bemac()
    for x1, x2 in itertools.product(range(2), range(2)):
        assert k.w[x1, x2, x1] == pytest.approx(0.5)
        assert k.w[x1, x2, 2 + x2] == pytest.approx(0.5)


def test_su_sbc_composite():
    comp = su_sbc(0.4, identity_mac()).composite_kernel()
    assert comp.w[0, 0, 0] == pytest.approx(0.6)  # erasure mass 1 - p
    assert comp.w[1, 1, 1 + 3] == pytest.approx(0.4)
    with pytest.raises(ValueError):
        su_sbc(0.0, identity_mac())
    with pytest.raises(ValueError):
        su_sbc(1.0, identity_mac())


def test_su_sbc_full_branch_probabilities():
    sbc = su_sbc_full(0.7, identity_mac(), special_bemac())
    comp = sbc.composite_kernel()
    p = 0.7
    # complete erasure, partial erasure, revealed: (1-p)^2, 2p(1-p), p^2
    assert comp.w[0, 1, 0] == pytest.approx((1 - p) ** 2)
    partial = comp.w[0, 1, 1 : 1 + 4].sum()
    assert partial == pytest.approx(2 * p * (1 - p))
    # stated erasure total: 1 - p^2
    erased_total = comp.w[0, 1, : 1 + 4].sum()
    assert erased_total == pytest.approx(1 - p**2)


def test_su_sbc_independent_variant():
    sbc = SbcParamsIndependent(p=0.6, w=identity_mac(), p2=0.3)
    comp = sbc.composite_kernel()
    assert np.allclose(comp.w.sum(axis=2), 1.0)
    assert comp.w[0, 0, 0] == pytest.approx(0.4 * 0.7)


# --- transmission ---------------------------------------------------------------


def test_transmit_identity_reproduces_inputs():
    rng = SeededRng(0)
    x1 = np.array([0, 1, 1, 0])
    x2 = np.array([1, 1, 0, 0])
    out = transmit(identity_mac(), x1, x2, rng)
    assert [o.x1_value for o in out] == list(x1)
    assert [o.x2_value for o in out] == list(x2)
    assert not any(o.x1_erased for o in out)


def test_transmit_bec_zero_never_erases():
    rng = SeededRng(1)
    out = transmit(bec(0.0), np.ones(50, dtype=int), np.zeros(50, dtype=int), rng)
    assert not any(o.x1_erased for o in out)
    assert all(o.x1_value == 1 for o in out)


def test_transmit_su_sbc_erasure_frequency():
    rng = SeededRng(2)
    comp = su_sbc(0.5, identity_mac()).composite_kernel()
    n = 10_000
    gen = rng.generator
    x1 = gen.integers(0, 2, n)
    x2 = gen.integers(0, 2, n)
    ys = transmit_arrays(comp, x1, x2, rng)
    erased = (ys == 0).mean()
    assert 0.48 <= erased <= 0.52


def test_transmit_alphabet_violation():
    with pytest.raises(ValueError):
        transmit_arrays(identity_mac(), np.array([0, 2]), np.array([0, 0]), SeededRng(0))


def test_transmit_empirical_frequencies_match_joint():
    rng = SeededRng(3)
    kern = noisy_adder_mac(0.6)
    n = 10_000
    gen = rng.generator
    x1 = gen.integers(0, 2, n)
    x2 = gen.integers(0, 2, n)
    ys = transmit_arrays(kern, x1, x2, rng)
    emp = np.zeros((2, 2, 4))
    np.add.at(emp, (x1, x2, ys), 1.0 / n)
    joint = uniform_correlation(kern).joint.probs
    assert 0.5 * np.abs(emp - joint).sum() < 0.05


# --- perfectness and redundancy ---------------------------------------------------


def test_is_perfect():
    assert is_perfect(uniform_correlation(identity_mac()))
    assert not is_perfect(uniform_correlation(adder_mac()))
    assert not is_perfect(uniform_correlation(bec(0.3)))


def test_find_redundant_planted_row():
    rows = np.zeros((2, 2, 3))
    rows[0, 0] = [1.0, 0.0, 0.0]
    rows[0, 1] = [0.0, 1.0, 0.0]
    rows[1, 0] = [0.0, 0.0, 1.0]
    rows[1, 1] = [0.5, 0.5, 0.0]
    assert find_redundant_inputs(MacKernel(rows)) == {(1, 1)}


def test_find_redundant_identity_none():
    assert find_redundant_inputs(identity_mac()) == set()


def test_find_redundant_duplicate_rows_tie_break():
    # the adder maps (0,1) and (1,0) to the same row; the lexicographically
    # larger pair is the one flagged
    assert find_redundant_inputs(adder_mac()) == {(1, 0)}


def test_find_redundant_matches_lp_oracle():
    linprog = pytest.importorskip("scipy.optimize").linprog

    def in_hull_lp(x, points):
        n = len(points)
        res = linprog(
            np.zeros(n),
            A_eq=np.vstack([np.array(points).T, np.ones(n)]),
            b_eq=np.concatenate([x, [1.0]]),
            bounds=[(0, None)] * n,
            method="highs",
        )
        return res.status == 0

    gen = np.random.default_rng(4)
    for _ in range(30):
        rows = gen.dirichlet(np.ones(4), size=(2, 2))
        kern = MacKernel(rows)
        flagged = find_redundant_inputs(kern)
        survivors = {
            p: kern.w[p] for p in itertools.product(range(2), range(2)) if p not in flagged
        }
        # every survivor is extremal among the survivors
        for pair, row in survivors.items():
            others = [r for q, r in survivors.items() if q != pair]
            assert not in_hull_lp(row, others)


def test_merge_redundant_outputs():
    # duplicated output column: Y=1 and Y=2 carry identical posteriors
    probs = np.zeros((2, 2, 3))
    probs[:, :, 1] = 0.125
    probs[:, :, 2] = 0.125
    merged = merge_redundant_outputs(Correlation(JointDistribution(probs)))
    assert merged.joint.shape == (2, 2, 1)
    assert merged.joint.probs.sum() == pytest.approx(1.0)


def test_merge_idempotent_on_nonredundant():
    corr = uniform_correlation(noisy_adder_mac(0.5))
    merged = merge_redundant_outputs(corr)
    assert merged.joint.shape == corr.joint.shape
    again = merge_redundant_outputs(merged)
    assert np.allclose(again.joint.probs, merged.joint.probs)


def test_merge_three_outputs_posterior_grouping():
    probs = np.zeros((2, 2, 3))
    # outputs 0 and 1 share posterior (0.5, 0.5, 0, 0); output 2 differs
    probs[0, 0, 0] = probs[0, 1, 0] = 0.2
    probs[0, 0, 1] = probs[0, 1, 1] = 0.1
    probs[1, 0, 2] = probs[1, 1, 2] = 0.2
    merged = merge_redundant_outputs(Correlation(JointDistribution(probs)))
    assert merged.joint.shape[2] == 2


def test_remove_redundancy_pipeline_idempotent():
    rows = np.zeros((2, 2, 3))
    rows[0, 0] = [1.0, 0.0, 0.0]
    rows[0, 1] = [0.0, 1.0, 0.0]
    rows[1, 0] = [0.0, 0.0, 1.0]
    rows[1, 1] = [0.5, 0.5, 0.0]
    corr = uniform_correlation(MacKernel(rows))
    reduced = remove_redundancy(corr)
    assert find_redundant_inputs(reduced) == set()
    again = remove_redundancy(reduced)
    assert again.joint.shape == reduced.joint.shape
    assert np.allclose(again.joint.probs, reduced.joint.probs)


# --- reductions -------------------------------------------------------------------


def test_reduce_to_suco_counts():
    rng = SeededRng(5)
    out = reduce_to_suco(adder_mac(), UNIF2, UNIF2, 100, rng)
    assert out.x1.size == 100
    assert 25 <= out.query_flags.sum() <= 75


def test_reduce_to_suco_rejects_perfect():
    with pytest.raises(PerfectChannelError):
        reduce_to_suco(identity_mac(), UNIF2, UNIF2, 10, SeededRng(6))


def test_reduce_to_suco_frequencies():
    rng = SeededRng(7)
    out = reduce_to_suco(adder_mac(), UNIF2, UNIF2, 10_000, rng)
    emp = np.zeros((2, 2, 3))
    np.add.at(emp, (out.x1, out.x2, out.y), 1.0 / out.x1.size)
    assert 0.5 * np.abs(emp - out.joint.probs).sum() < 0.05


def test_reduce_suco_to_sbc_consumption():
    corr = uniform_correlation(noisy_adder_mac(0.5))
    red = reduce_suco_to_sbc(corr, (0, 1), (0, 1), 500, SeededRng(8))
    # oracle: all 16 ordered pattern pairs are equally likely, 12 are kept
    assert red.keep_probability == pytest.approx(0.75)
    expected = 2.0 / red.keep_probability
    assert abs(red.consumption - expected) / expected < 0.2
    # the source's own claimed budget is a loose upper bound
    assert red.consumption <= (12.0 / red.keep_probability) * 1.25


def test_reduce_suco_to_sbc_partition_nonempty():
    corr = uniform_correlation(noisy_adder_mac(0.5))
    red = reduce_suco_to_sbc(corr, (0, 1), (0, 1), 400, SeededRng(9))
    for er in (red.bob_erased1, red.bob_erased2):
        assert 0 < er.sum() < er.size


def test_reduce_suco_to_sbc_symmetry():
    corr = uniform_correlation(noisy_adder_mac(0.5))
    red = reduce_suco_to_sbc(corr, (0, 1), (0, 1), 10_000, SeededRng(10))
    # the carried bits look like uniform inputs to the distilled correlation
    assert abs(red.stream_z1.mean() - 0.5) < 0.05
    assert abs(red.stream_z2.mean() - 0.5) < 0.05
    joint00 = ((red.stream_z1 == 0) & (red.stream_z2 == 0)).mean()
    assert abs(joint00 - 0.25) < 0.05
    # erasure events are independent of the sent bits (the symmetry that makes
    # the distilled resource a basic correlation)
    for bits, erased in ((red.stream_z1, red.bob_erased1), (red.stream_z2, red.bob_erased2)):
        r0 = erased[bits == 0].mean()
        r1 = erased[bits == 1].mean()
        assert abs(r0 - r1) < 0.05


def test_reduce_suco_to_sbc_missing_overlap():
    # identity channel: distinct input pairs never share an output
    corr = uniform_correlation(identity_mac())
    with pytest.raises(ValueError, match="common positive-probability output"):
        reduce_suco_to_sbc(corr, (0, 1), (0, 1), 10, SeededRng(11))


def test_noisy_adder_information_closed_forms():
    for p in (0.2, 0.5, 0.8):
        j = uniform_correlation(noisy_adder_mac(p)).joint
        assert mutual_information(j, (0, 1), (2,)) == pytest.approx(1.5 * p, abs=1e-9)
        assert mutual_information(j, (0,), (2,), (1,)) == pytest.approx(p, abs=1e-9)
