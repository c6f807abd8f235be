"""Empirical and exact verification of the OT security conditions.

Exact quantities come from full enumerations of small state spaces (never
from samples); Monte-Carlo estimates are reported with Wilson 95% intervals.
Everything is a pure function of (config, master_seed).
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .channels import MacKernel, SbcParams, bec
from .errors import SizeCapError
from .probcore import BitString, SeededRng
from .protocol import (
    AdversarySpec,
    ProtocolParams,
    ReceiverChoice,
    SenderInput,
    mac_ot,
    malicious_bob,
    two_party_ot,
)

STATE_SPACE_CAP = 2**22


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple:
    """Wilson 95% score interval for a binomial proportion."""
    if trials == 0:
        return (0.0, 1.0)
    phat = successes / trials
    denom = 1 + z**2 / trials
    center = (phat + z**2 / (2 * trials)) / denom
    margin = z * math.sqrt(phat * (1 - phat) / trials + z**2 / (4 * trials**2)) / denom
    return (max(0.0, center - margin), min(1.0, center + margin))


@dataclass(frozen=True)
class TrialStats:
    trials: int
    completed: int
    aborted: int
    decode_errors: int
    correct: int
    correctness_rate: float        # correct / completed (0 when none completed)
    correctness_wilson: tuple
    abort_rate: float
    mean_runtime: float            # seconds; excluded from canonical documents

    def __post_init__(self):
        if self.completed + self.aborted + self.decode_errors != self.trials:
            raise ValueError("outcome counts must sum to the number of trials")

    def to_dict(self, include_runtime: bool = False) -> dict:
        d = {
            "trials": self.trials,
            "completed": self.completed,
            "aborted": self.aborted,
            "decode_errors": self.decode_errors,
            "correct": self.correct,
            "correctness_rate": round(self.correctness_rate, 12),
            "correctness_wilson": [round(x, 12) for x in self.correctness_wilson],
            "abort_rate": round(self.abort_rate, 12),
        }
        if include_runtime:
            d["mean_runtime"] = self.mean_runtime
        return d


@dataclass(frozen=True)
class LeakageReport:
    quantity: str
    exact: bool
    value: float                   # bits
    bound: Optional[float] = None  # bits
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "quantity": self.quantity,
            "exact": self.exact,
            "value": float(self.value),
        }
        if self.bound is not None:
            d["bound"] = float(self.bound)
        if self.details:
            d["details"] = {k: _jsonable(v) for k, v in self.details.items()}
        return d


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass(frozen=True)
class MacSimConfig:
    sbc: SbcParams
    params: ProtocolParams


@dataclass(frozen=True)
class TwoPartySimConfig:
    erasure_prob: float
    n: int
    r: float
    k: int


def _run_mac_trial(config: MacSimConfig, rng: SeededRng):
    p = config.params
    in1 = SenderInput(BitString.random(p.k1, rng), BitString.random(p.k1, rng))
    in2 = SenderInput(BitString.random(p.k2, rng), BitString.random(p.k2, rng))
    gen = rng.generator
    choice = ReceiverChoice(int(gen.integers(2)), int(gen.integers(2)))
    outcome, _ = mac_ot(config.sbc, in1, in2, choice, p, rng)
    if outcome.status != "completed":
        return outcome.status, False
    want1 = in1.m1 if choice.z1 else in1.m0
    want2 = in2.m1 if choice.z2 else in2.m0
    return "completed", outcome.recovered == (want1, want2)


def _run_two_party_trial(config: TwoPartySimConfig, rng: SeededRng):
    sender = SenderInput(BitString.random(config.k, rng), BitString.random(config.k, rng))
    z = int(rng.generator.integers(2))
    outcome, _ = two_party_ot(bec(config.erasure_prob), sender, z, config.n, config.r, rng)
    if outcome.status != "completed":
        return outcome.status, False
    want = sender.m1 if z else sender.m0
    return "completed", outcome.recovered == (want,)


def run_trials(config, trials: int, master_seed: int) -> TrialStats:
    """Independent seeded protocol runs; deterministic given master_seed."""
    if trials < 1:
        raise ValueError("need at least one trial")
    runner = _run_mac_trial if isinstance(config, MacSimConfig) else _run_two_party_trial
    completed = aborted = errors = correct = 0
    t0 = time.perf_counter()
    for t in range(trials):
        rng = SeededRng(master_seed, t)
        status, ok = runner(config, rng)
        if status == "completed":
            completed += 1
            correct += bool(ok)
        elif status == "aborted":
            aborted += 1
        else:
            errors += 1
    elapsed = (time.perf_counter() - t0) / trials
    rate = correct / completed if completed else 0.0
    return TrialStats(
        trials, completed, aborted, errors, correct, rate,
        wilson_interval(correct, completed) if completed else (0.0, 1.0),
        aborted / trials, elapsed,
    )


# ---------------------------------------------------------------------------
# receiver privacy: exact I(Z; revealed set pair)


def receiver_privacy_exact(
    n: int,
    p: float,
    eta: float = 0.05,
    r: Optional[float] = None,
    asymmetric_bug: bool = False,
) -> LeakageReport:
    """Exact I(Z_i; U_i) over the full enumeration of erasure patterns and set choices.

    Alice's view depends on the receiver's choice only through the revealed
    set pair (S_0, S_1): her inputs, randomness, and every derived message are
    independent of Z given the sets, so I(Z; U) = I(Z; S_0, S_1) exactly.
    The report is conditioned on non-abort.  ``asymmetric_bug`` shrinks the
    unselected set by one (a deliberately broken variant; the selected set's
    size then reveals the choice).
    """
    if r is None:
        r = p - 2 * eta
    s_sel = int((p - eta) * n)
    if s_sel < 1:
        raise ValueError("(p - eta) * n must be at least 1")
    s_unsel = s_sel - 1 if asymmetric_bug else s_sel
    threshold = max(int(np.ceil(r * n)), s_sel, s_unsel)

    total_states = 0
    joint = {}
    mass = 0.0
    for pattern in range(2**n):
        ne_idx = [i for i in range(n) if (pattern >> i) & 1]
        ne, e = len(ne_idx), n - len(ne_idx)
        if ne < threshold or e < threshold:
            continue
        e_idx = [i for i in range(n) if not (pattern >> i) & 1]
        w_pattern = p**ne * (1 - p) ** e
        n_choices = math.comb(ne, s_sel) * math.comb(e, s_unsel)
        total_states += 2 * n_choices
        if total_states > STATE_SPACE_CAP:
            raise SizeCapError(
                "receiver-privacy enumeration exceeds the state-space cap",
                cap=STATE_SPACE_CAP, requested=total_states,
            )
        w = w_pattern / n_choices
        for a in itertools.combinations(ne_idx, s_sel):
            for b in itertools.combinations(e_idx, s_unsel):
                joint[(0, (a, b))] = joint.get((0, (a, b)), 0.0) + w / 2
                joint[(1, (b, a))] = joint.get((1, (b, a)), 0.0) + w / 2
                mass += w
    if not joint:
        raise ValueError("every erasure pattern aborts at these parameters")
    # normalize to the non-abort ensemble
    total = sum(joint.values())
    pz = {0: 0.0, 1: 0.0}
    p_pair = {}
    for (z, pair), w in joint.items():
        w /= total
        pz[z] += w
        p_pair[pair] = p_pair.get(pair, 0.0) + w
    mi = 0.0
    for (z, pair), w in joint.items():
        w /= total
        mi += w * math.log2(w / (pz[z] * p_pair[pair]))
    return LeakageReport(
        "I(Z_i; U_i)", exact=True, value=max(mi, 0.0), bound=0.0,
        details={
            "n": n, "p": p, "selected_size": s_sel, "unselected_size": s_unsel,
            "nonabort_mass": total, "states": total_states,
        },
    )


def set_pair_distribution_by_z(n: int, n_nonerased: int, s_size: int) -> tuple:
    """Exhaustive distribution of the revealed pair for each choice bit.

    Conditioned on the erasure-pattern size (patterns of one size are
    exchangeable), returns two dicts pair -> probability, for Z = 0 and Z = 1.
    """
    dists = ({}, {})
    count = 0
    for pattern_bits in itertools.combinations(range(n), n_nonerased):
        ne_idx = list(pattern_bits)
        e_idx = [i for i in range(n) if i not in pattern_bits]
        if len(ne_idx) < s_size or len(e_idx) < s_size:
            continue
        count += 1
        w = 1.0 / (math.comb(len(ne_idx), s_size) * math.comb(len(e_idx), s_size))
        for a in itertools.combinations(ne_idx, s_size):
            for b in itertools.combinations(e_idx, s_size):
                dists[0][(a, b)] = dists[0].get((a, b), 0.0) + w
                dists[1][(b, a)] = dists[1].get((b, a), 0.0) + w
    if count == 0:
        raise ValueError("no feasible pattern of that size")
    return (
        {k: v / count for k, v in dists[0].items()},
        {k: v / count for k, v in dists[1].items()},
    )


# ---------------------------------------------------------------------------
# sender privacy: exact hashed-key entropy


def gf2_rank(rows: np.ndarray, width: int) -> int:
    """Rank over GF(2) of a matrix given as packed row integers."""
    rank = 0
    rows = [int(r) for r in rows]
    for bit in range(width - 1, -1, -1):
        pivot = None
        for i, r in enumerate(rows):
            if (r >> bit) & 1:
                pivot = i
                break
        if pivot is None:
            continue
        pr = rows.pop(pivot)
        rows = [r ^ pr if (r >> bit) & 1 else r for r in rows]
        rank += 1
    return rank


def _mean_rank_exhaustive(k: int, u: int) -> float:
    """E[rank] of a uniform k x u binary matrix by full seed enumeration."""
    if u == 0:
        return 0.0
    if k * u > 22:
        raise SizeCapError(
            f"2^{k * u} seeds exceed the state-space cap",
            cap=STATE_SPACE_CAP, requested=2 ** (k * u),
        )
    n_rows = 2**u
    idx = np.arange(2 ** (k * u), dtype=np.int64)
    rows = [(idx >> (j * u)) & (n_rows - 1) for j in range(k)]
    # span size: count distinct xors over all row subsets; rank = log2(size)
    subset_vals = np.zeros((2**k, idx.size), dtype=np.int64)
    for s in range(2**k):
        acc = np.zeros(idx.size, dtype=np.int64)
        for j in range(k):
            if (s >> j) & 1:
                acc ^= rows[j]
        subset_vals[s] = acc
    subset_vals.sort(axis=0)
    distinct = 1 + (np.diff(subset_vals, axis=0) != 0).sum(axis=0)
    ranks = np.log2(distinct)
    return float(ranks.mean())


def sender_privacy_exact(set_size: int, k: int, known_positions: int = 0) -> LeakageReport:
    """Exact H(kappa(X) | kappa, Y-side information) for the unselected set.

    Honest runs on the joint-erasure correlation have every unselected-set
    position erased (known_positions = 0); a set-splitting receiver knows the
    bits at ``known_positions`` of them.  For a uniform input, the key's
    conditional entropy under seed matrix M is exactly rank(M restricted to
    the unknown columns), so the exact value is the mean rank over all seeds.
    Leakage k - H is checked against the bound 2^(k - H2) / ln 2 with
    H2 = number of unknown bits.
    """
    if not 0 <= known_positions <= set_size:
        raise ValueError("known positions must lie within the set")
    if k > set_size:
        raise ValueError("key length cannot exceed the set size")
    u = set_size - known_positions
    h_exact = _mean_rank_exhaustive(k, u)
    leakage = k - h_exact
    bound = 2.0 ** (k - u) / math.log(2.0) if u > 0 else None
    ok = bound is None or leakage <= bound + 1e-12
    return LeakageReport(
        "k - H(kappa(X)|kappa, Y)", exact=True, value=leakage, bound=bound,
        details={
            "set_size": set_size, "k": k, "unknown_bits": u,
            "exact_entropy": h_exact, "bennet_ok": ok,
        },
    )


# ---------------------------------------------------------------------------
# malicious receiver advantage


class AdvantageReport(NamedTuple):
    trials: int
    mean_success_honest: float
    mean_success_malicious: float
    unselected_honest: float        # success at the unselected string alone
    unselected_malicious: float
    baseline: float                 # 2^-k
    erased_floor_checked: int       # trials where the floor's premise held
    erased_floor_ok: bool
    details: dict

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "mean_success_honest": self.mean_success_honest,
            "mean_success_malicious": self.mean_success_malicious,
            "unselected_honest": self.unselected_honest,
            "unselected_malicious": self.unselected_malicious,
            "baseline": self.baseline,
            "erased_floor_checked": self.erased_floor_checked,
            "erased_floor_ok": bool(self.erased_floor_ok),
        }


def _seed_from_transcript(transcript, label: str):
    for lab, payload in transcript.entries:
        if lab == label:
            return payload
    raise KeyError(label)


def _pack_rows(matrix: np.ndarray) -> np.ndarray:
    width = matrix.shape[1]
    if width == 0:
        return np.zeros(matrix.shape[0], dtype=np.int64)
    return (matrix.astype(np.int64) * (1 << np.arange(width - 1, -1, -1))).sum(axis=1)


def _string_success(view, sender: int, j: int) -> float:
    """Exact probability the receiver outputs string j of the given sender.

    The receiver knows the set bits he could read, the published digest
    h(X|_S), and the key seed.  Over the unknown positions the digest pins X
    to a coset, and the key's residual entropy is
    rank([h; kappa]_J) - rank(h_J); his best guess succeeds with 2^-that.
    """
    erased = view.erased1 if sender == 1 else view.erased2
    s_ij = view.sets[(sender, j)]
    kappa = _seed_from_transcript(view.transcript, f"kappa{sender}{j}")
    h_seed = _seed_from_transcript(view.transcript, f"h{sender}{j}")
    unknown = np.flatnonzero(erased[s_ij])
    if unknown.size == 0:
        return 1.0
    width = int(unknown.size)
    h_rows = _pack_rows(h_seed.entries[:, unknown])
    both = np.concatenate([h_rows, _pack_rows(kappa.entries[:, unknown])])
    residual = gf2_rank(both, width) - gf2_rank(h_rows, width)
    return 2.0**-residual


def _success_both_strings(view, sender: int) -> float:
    """Joint success at both strings; the two keys use independent seeds."""
    return _string_success(view, sender, 0) * _string_success(view, sender, 1)


def malicious_bob_advantage(
    sbc: SbcParams,
    params: ProtocolParams,
    split_rule: str = "even",
    trials: int = 100,
    master_seed: int = 0,
) -> AdvantageReport:
    """Compare a set-splitting receiver's success at learning both strings
    of sender 1 against an honest receiver's, and verify the erased-count
    floor (p - 3*eta) * n / 2 on every trial where non-erasures stay below
    (p + eta) * n."""
    succ_honest, succ_mal = [], []
    unsel_honest, unsel_mal = [], []
    floor_checked = 0
    floor_ok = True
    floor = 0.5 * (params.p - 3 * params.eta) * params.n
    # set sizes and the non-erasure cap are integers, so the analytic floor
    # is met only up to the two roundings involved
    floor_int = math.floor(floor) - 2
    for t in range(trials):
        for adversary, sink, usink in (
            (None, succ_honest, unsel_honest),
            (malicious_bob(split_rule), succ_mal, unsel_mal),
        ):
            rng = SeededRng(master_seed, 2 * t + (adversary is not None))
            in1 = SenderInput(BitString.random(params.k1, rng), BitString.random(params.k1, rng))
            in2 = SenderInput(BitString.random(params.k2, rng), BitString.random(params.k2, rng))
            choice = ReceiverChoice(0, 0)
            outcome, (u1, u2, v) = mac_ot(sbc, in1, in2, choice, params, rng, adversary)
            if outcome.status == "aborted":
                continue
            sink.append(_success_both_strings(v, sender=1))
            usink.append(_string_success(v, 1, 1 - choice.z1))
            if adversary is not None:
                nonerased = int((~v.erased1).sum())
                if nonerased <= (params.p + params.eta) * params.n:
                    floor_checked += 1
                    for j in (0, 1):
                        s_ij = v.sets[(1, j)]
                        if int(v.erased1[s_ij].sum()) < floor_int:
                            floor_ok = False
    return AdvantageReport(
        trials,
        float(np.mean(succ_honest)) if succ_honest else 0.0,
        float(np.mean(succ_mal)) if succ_mal else 0.0,
        float(np.mean(unsel_honest)) if unsel_honest else 0.0,
        float(np.mean(unsel_mal)) if unsel_mal else 0.0,
        2.0**-params.k1,
        floor_checked,
        floor_ok,
        {"split_rule": split_rule, "floor": floor, "floor_int": floor_int},
    )


# ---------------------------------------------------------------------------
# coin-flip bias


def fct_bias(
    abort_strategy: Optional[str],
    rounds: int,
    runs: int,
    master_seed: int = 0,
) -> dict:
    """Bias of the majority-of-rounds coin under an aborting receiver.

    'abort_when_losing': the receiver aborts the first round whose outcome is
    0; that round and all later rounds are re-randomized by the honest party,
    exactly the recovery rule of the trapdoor-round protocol this demo mirrors.
    """
    if runs < 100:
        raise ValueError("need at least 100 runs for a bias estimate")
    if abort_strategy not in (None, "abort_when_losing"):
        raise ValueError(f"unknown abort strategy {abort_strategy!r}")
    ones = 0
    for run in range(runs):
        gen = SeededRng(master_seed, run).generator
        bits = []
        aborted = False
        for _ in range(rounds):
            if aborted:
                bits.append(int(gen.integers(2)))
                continue
            m0, m1, zb = int(gen.integers(2)), int(gen.integers(2)), int(gen.integers(2))
            b_round = (m0 ^ m1) ^ ((m1 if zb else m0) ^ zb)
            if abort_strategy == "abort_when_losing" and b_round == 0:
                aborted = True
                bits.append(int(gen.integers(2)))
            else:
                bits.append(b_round)
        ones += int(sum(bits) * 2 > rounds)
    p1 = ones / runs
    return {
        "rounds": rounds,
        "runs": runs,
        "pr_one": p1,
        "bias": abs(p1 - 0.5),
        "wilson": wilson_interval(ones, runs),
    }
