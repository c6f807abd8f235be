import numpy as np
import pytest

from otmac.channels import MacKernel, bec, identity_mac, su_sbc
from otmac.errors import SizeCapError
from otmac.hashing import LinearHashSeed, hash_apply
from otmac.probcore import BitString, SeededRng
from otmac.protocol import (
    OtOutcome,
    ProtocolParams,
    ReceiverChoice,
    SenderInput,
    Transcript,
    decode_step5,
    mac_ot,
    malicious_bob,
    mask,
    ot_to_fct,
    two_party_ot,
    unfair_sender,
)
from otmac.seceval import set_pair_distribution_by_z
from otmac.typicality import CheatStrategy, run_test_unit


def small_noise_identity(flip=0.02):
    """Identity MAC with a small symbol-flip probability."""
    arr = np.full((2, 2, 4), 0.0)
    for x1 in range(2):
        for x2 in range(2):
            y = 2 * x1 + x2
            arr[x1, x2, :] = flip / 3
            arr[x1, x2, y] = 1 - flip
    return MacKernel(arr)


def random_inputs(k, rng):
    return SenderInput(BitString.random(k, rng), BitString.random(k, rng))


# --- parameters and plumbing --------------------------------------------------


def test_params_defaults_and_gates():
    p = ProtocolParams.default(1024, 0.5)
    assert p.r1 == pytest.approx(0.4)
    assert p.k1 == int(0.39 * 1024)
    assert p.set_size == int(0.45 * 1024)
    with pytest.raises(ValueError):
        ProtocolParams(n=8, k1=1, k2=1, p=0.5, eta=0.45)  # (p - eta) * n < 1
    with pytest.raises(ValueError):
        ProtocolParams(n=100, k1=60, k2=10, p=0.5)  # k1 > r1 * n
    with pytest.raises(ValueError):
        ProtocolParams(n=100, k1=10, k2=10, p=0.5, r1=0.48)  # r1 > p - eta


def test_mask_involution():
    rng = SeededRng(0)
    m = BitString.random(32, rng)
    key = BitString.random(32, rng)
    assert mask(mask(m, key), key) == m


def test_transcript_append_only_and_freeze():
    t = Transcript()
    t.append("a", BitString([1, 0]))
    t.freeze()
    with pytest.raises(RuntimeError):
        t.append("b", BitString([1]))
    assert t.copy().serialize() == t.serialize()


def test_outcome_invariants():
    with pytest.raises(ValueError):
        OtOutcome("completed")  # missing recovered strings
    with pytest.raises(ValueError):
        OtOutcome("aborted", recovered=(BitString([1]),))


# --- two-party protocol ---------------------------------------------------------


def test_two_party_honest_monte_carlo():
    n, r, k = 2048, 0.45, 900
    correct = aborted = 0
    for t in range(200):
        rng = SeededRng(100, t)
        sender = random_inputs(k, rng)
        z = int(rng.generator.integers(2))
        outcome, _ = two_party_ot(bec(0.5), sender, z, n, r, rng)
        if outcome.status == "completed":
            want = sender.m1 if z else sender.m0
            correct += outcome.recovered[0] == want
        else:
            aborted += 1
    assert aborted <= 10
    assert correct == 200 - aborted  # no silent corruption


def test_two_party_tiny_n_aborts():
    aborts = 0
    for t in range(100):
        rng = SeededRng(101, t)
        sender = random_inputs(1, rng)
        outcome, _ = two_party_ot(bec(0.5), sender, 0, 4, 0.45, rng)
        aborts += outcome.status == "aborted"
    assert aborts >= 50


def test_two_party_no_erasures_always_aborts():
    for t in range(20):
        rng = SeededRng(102, t)
        sender = random_inputs(1, rng)
        outcome, _ = two_party_ot(bec(0.0), sender, 0, 64, 0.45, rng)
        assert outcome.status == "aborted"


def test_two_party_transcript_equality():
    rng = SeededRng(103, 0)
    sender = random_inputs(16, rng)
    outcome, (alice, bob) = two_party_ot(bec(0.5), sender, 1, 256, 0.3, rng)
    assert outcome.status == "completed"
    assert alice.transcript.serialize() == bob.transcript.serialize()


# --- Protocol 1 ------------------------------------------------------------------


def run_mac(params, sbc, seed, adversary=None):
    rng = SeededRng(seed[0], seed[1])
    in1 = random_inputs(params.k1, rng)
    in2 = random_inputs(params.k2, rng)
    choice = ReceiverChoice(int(rng.generator.integers(2)), int(rng.generator.integers(2)))
    outcome, views = mac_ot(sbc, in1, in2, choice, params, rng, adversary)
    return outcome, views, (in1, in2, choice)


def test_mac_ot_honest_identity_monte_carlo():
    params = ProtocolParams(n=1024, k1=64, k2=64, p=0.5)
    sbc = su_sbc(0.5, identity_mac())
    correct = aborted = errors = 0
    for t in range(200):
        outcome, _, (in1, in2, choice) = run_mac(params, sbc, (200, t))
        if outcome.status == "completed":
            want1 = in1.m1 if choice.z1 else in1.m0
            want2 = in2.m1 if choice.z2 else in2.m0
            correct += outcome.recovered == (want1, want2)
        elif outcome.status == "aborted":
            aborted += 1
        else:
            errors += 1
    assert errors == 0
    assert aborted <= 10
    assert correct == 200 - aborted


def test_mac_ot_set_sizes_invariant():
    params = ProtocolParams(n=256, k1=16, k2=16, p=0.5)
    sbc = su_sbc(0.5, identity_mac())
    outcome, (u1, u2, v), _ = run_mac(params, sbc, (201, 0))
    assert outcome.status == "completed"
    for key, idx in v.sets.items():
        assert idx.size == params.set_size


def test_mac_ot_transcript_equality_all_parties():
    params = ProtocolParams(n=256, k1=16, k2=16, p=0.5)
    outcome, (u1, u2, v), _ = run_mac(params, su_sbc(0.5, identity_mac()), (202, 0))
    blob = u1.transcript.serialize()
    assert u2.transcript.serialize() == blob
    assert v.transcript.serialize() == blob


def test_mac_ot_noisy_w_exhaustive_decode():
    # small-noise W forces the exhaustive decoder; digests disambiguate
    params = ProtocolParams(n=22, k1=3, k2=3, p=0.5, eps_typ=0.45)
    sbc = su_sbc(0.5, small_noise_identity(0.02))
    completed = correct = 0
    for t in range(200):
        outcome, _, (in1, in2, choice) = run_mac(params, sbc, (203, t))
        if outcome.status == "completed":
            completed += 1
            want1 = in1.m1 if choice.z1 else in1.m0
            want2 = in2.m1 if choice.z2 else in2.m0
            correct += outcome.recovered == (want1, want2)
    assert completed >= 50
    assert correct / completed >= 0.95


def test_decode_step5_direct_and_corruption():
    params = ProtocolParams(n=256, k1=16, k2=16, p=0.5)
    rng = SeededRng(204, 0)
    in1 = random_inputs(16, rng)
    in2 = random_inputs(16, rng)
    outcome, views, _ = run_mac(params, su_sbc(0.5, identity_mac()), (204, 1))
    assert outcome.status == "completed"


def test_decode_step5_plant_and_recover():
    # plant bits over |S1| = |S2| = 8 and recover them exhaustively
    rng = SeededRng(205, 0)
    gen = rng.generator
    kern = small_noise_identity(0.02)
    s1 = np.arange(8)
    s2 = np.arange(4, 12)
    x1 = gen.integers(0, 2, 16).astype(np.intp)
    x2 = gen.integers(0, 2, 16).astype(np.intp)
    from otmac.channels import transmit_arrays

    y = transmit_arrays(kern, x1, x2, rng)
    seeds = (
        LinearHashSeed(gen.integers(0, 2, size=(20, 8), dtype=np.uint8)),
        LinearHashSeed(gen.integers(0, 2, size=(20, 8), dtype=np.uint8)),
    )
    truths = (BitString(x1[s1].astype(np.uint8)), BitString(x2[s2].astype(np.uint8)))
    digests = (hash_apply(seeds[0], truths[0]), hash_apply(seeds[1], truths[1]))
    reads = (np.full(16, -1), np.full(16, -1))  # nothing read off: exhaustive mode
    res = decode_step5(y, (s1, s2), kern, 0.5, digests, seeds, reads)
    assert res.ok and res.reason == "exhaustive"
    assert res.x1_hat == truths[0]
    assert res.x2_hat == truths[1]


def test_decode_step5_corrupted_digest_errors():
    rng = SeededRng(206, 0)
    gen = rng.generator
    kern = identity_mac()
    s1 = np.arange(6)
    s2 = np.arange(6)
    x1 = gen.integers(0, 2, 6).astype(np.intp)
    x2 = gen.integers(0, 2, 6).astype(np.intp)
    y = (2 * x1 + x2).astype(np.intp)
    seeds = (
        LinearHashSeed(gen.integers(0, 2, size=(12, 6), dtype=np.uint8)),
        LinearHashSeed(gen.integers(0, 2, size=(12, 6), dtype=np.uint8)),
    )
    good = hash_apply(seeds[0], BitString(x1.astype(np.uint8)))
    bad = good ^ BitString([1] + [0] * 11)
    digests = (bad, hash_apply(seeds[1], BitString(x2.astype(np.uint8))))
    res = decode_step5(y, (s1, s2), kern, 0.5, digests, seeds, (x1, x2))
    assert not res.ok and res.reason == "none"


def test_decode_step5_size_cap():
    kern = small_noise_identity()
    s1 = np.arange(12)
    s2 = np.arange(12)
    seeds = (
        LinearHashSeed(np.ones((1, 12), dtype=np.uint8)),
        LinearHashSeed(np.ones((1, 12), dtype=np.uint8)),
    )
    digests = (BitString([0]), BitString([0]))
    reads = (np.full(12, -1), np.full(12, -1))
    with pytest.raises(SizeCapError):
        decode_step5(np.zeros(12, dtype=np.intp), (s1, s2), kern, 0.5,
                     digests, seeds, reads, cap=2**20)


def test_set_pair_distribution_identical_across_choice():
    # marginalized over the erasure patterns of one size, the revealed pair's
    # law does not depend on the choice bit
    d0, d1 = set_pair_distribution_by_z(n=6, n_nonerased=3, s_size=2)
    assert set(d0) == set(d1)
    for pair, w in d0.items():
        assert d1[pair] == pytest.approx(w, abs=1e-12)


def test_malicious_bob_split_properties():
    params = ProtocolParams(n=128, k1=8, k2=8, p=0.5)
    sbc = su_sbc(0.5, identity_mac())
    adv = malicious_bob("even")
    outcome, (u1, u2, v), _ = run_mac(params, sbc, (207, 3), adversary=adv)
    assert outcome.status == "decode_error"
    # both sets mix erased and non-erased positions
    for i in (1, 2):
        erased = v.erased1 if i == 1 else v.erased2
        for j in (0, 1):
            s_ij = v.sets[(i, j)]
            assert s_ij.size == params.set_size
            assert 0 < erased[s_ij].sum() < params.set_size


def test_malicious_bob_all_in_s0_matches_honest_shape():
    params = ProtocolParams(n=128, k1=8, k2=8, p=0.5)
    adv = malicious_bob("all_in_s0")
    outcome, (u1, u2, v), _ = run_mac(params, su_sbc(0.5, identity_mac()), (208, 1), adversary=adv)
    s0 = v.sets[(1, 0)]
    # the selected set holds only non-erased positions, as in an honest run
    assert v.erased1[s0].sum() == 0


def test_unfair_sender_wired_to_test_unit():
    spec = unfair_sender(CheatStrategy(role="sender1", delta=0.2, mode="flip"))
    detected = 0
    trials = 200
    for t in range(trials):
        rng = SeededRng(209, t)
        gen = rng.generator
        x1 = gen.integers(0, 2, 400).astype(np.intp)
        x2 = gen.integers(0, 2, 400).astype(np.intp)
        rep = run_test_unit(su_sbc(0.5, identity_mac()), x1, x2, 0.02, rng, spec.strategy)
        detected += not rep.typical
    assert detected / trials >= 0.95


def test_unfair_sender_delta_zero_false_positives():
    spec = unfair_sender(CheatStrategy(role="sender1", delta=0.0, mode="flip"))
    flagged = 0
    for t in range(200):
        rng = SeededRng(210, t)
        gen = rng.generator
        x1 = gen.integers(0, 2, 400).astype(np.intp)
        x2 = gen.integers(0, 2, 400).astype(np.intp)
        rep = run_test_unit(su_sbc(0.5, identity_mac()), x1, x2, 0.02, rng, spec.strategy)
        flagged += not rep.typical
    assert flagged / 200 <= 0.05


def test_unfair_sender_delta_one_always_detected():
    spec = unfair_sender(CheatStrategy(role="sender1", delta=1.0, mode="flip"))
    for t in range(50):
        rng = SeededRng(211, t)
        gen = rng.generator
        x1 = gen.integers(0, 2, 128).astype(np.intp)
        x2 = gen.integers(0, 2, 128).astype(np.intp)
        rep = run_test_unit(su_sbc(0.5, identity_mac()), x1, x2, 0.02, rng, spec.strategy)
        assert not rep.typical


# --- OT -> coin flip --------------------------------------------------------------


def test_fct_hand_values():
    res = ot_to_fct(SeededRng(212, 0), ot_runner=lambda m0, m1, z, rng: m0 if z == 0 else m1)
    assert res.b == res.b_alice ^ res.b_bob


def test_fct_uniform_over_runs():
    vals = [ot_to_fct(SeededRng(213, i)).b for i in range(10_000)]
    assert 0.48 <= np.mean(vals) <= 0.52


def test_fct_abort_reported():
    res = ot_to_fct(SeededRng(214, 0), ot_runner=lambda m0, m1, z, rng: None)
    assert res.aborted
    assert res.b is None
