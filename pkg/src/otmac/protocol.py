"""Executable oblivious-transfer protocols.

Includes the two-party erasure-channel protocol, the two-sender protocol over
a reduced symmetric basic correlation, receiver/sender adversary strategies,
and the OT-to-coin-flip demo.  A single run is inherently round-ordered and
sequential; independent runs use disjoint rng streams.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .channels import (
    MacKernel,
    OBS_ERASED,
    SbcParams,
    bec,
    transmit_arrays,
)
from .errors import SizeCapError
from .hashing import LinearHashSeed, hash_apply, sample_seed
from .probcore import BitString, SeededRng
from .typicality import empirical_type, is_cond_typical

DECODE_CANDIDATE_CAP = 2**20


@dataclass(frozen=True)
class ProtocolParams:
    """Parameters of one protocol run over n channel uses.

    Defaults follow the visible-slack convention: eta = 0.05, r_i = p - 2*eta,
    and k_i = floor((r_i - gamma) * n) with gamma = 0.01 when not given.  The
    abort thresholds r_i * n of step 2 are complemented by the step-3
    feasibility requirement |set| >= (p - eta) * n; the protocol assumes
    r_i <= p - eta throughout.
    """

    n: int
    k1: int
    k2: int
    p: float
    eta: float = 0.05
    r1: float = None
    r2: float = None
    s1: float = None
    s2: float = None
    eps_typ: float = 0.25

    def __post_init__(self):
        if self.r1 is None:
            object.__setattr__(self, "r1", self.p - 2 * self.eta)
        if self.r2 is None:
            object.__setattr__(self, "r2", self.p - 2 * self.eta)
        if self.s1 is None:
            object.__setattr__(self, "s1", min(32, self.n) / self.n)
        if self.s2 is None:
            object.__setattr__(self, "s2", min(32, self.n) / self.n)
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if not 0.0 < self.eta < self.p:
            raise ValueError("eta must lie in (0, p)")
        if min(self.r1, self.r2) <= 0:
            raise ValueError("rate parameters must be positive")
        if self.r1 > self.p - self.eta + 1e-12 or self.r2 > self.p - self.eta + 1e-12:
            raise ValueError("r_i <= p - eta is required for set feasibility")
        if int((self.p - self.eta) * self.n) < 1:
            raise ValueError("(p - eta) * n must be at least 1")
        if self.k1 > self.r1 * self.n or self.k2 > self.r2 * self.n:
            raise ValueError("string lengths must satisfy k_i <= r_i * n")
        if min(self.k1, self.k2) < 1:
            raise ValueError("string lengths must be positive")
        for s in (self.s1, self.s2):
            if s * self.n < 1:
                raise ValueError("verification-hash rates need s_i * n >= 1")

    @property
    def set_size(self) -> int:
        return int((self.p - self.eta) * self.n)

    @property
    def digest_bits1(self) -> int:
        return int(round(self.s1 * self.n))

    @property
    def digest_bits2(self) -> int:
        return int(round(self.s2 * self.n))

    @staticmethod
    def default(n: int, p: float, eta: float = 0.05, gamma: float = 0.01) -> "ProtocolParams":
        r = p - 2 * eta
        k = int((r - gamma) * n)
        return ProtocolParams(n=n, k1=k, k2=k, p=p, eta=eta)


@dataclass(frozen=True)
class SenderInput:
    m0: BitString
    m1: BitString

    def __post_init__(self):
        if self.m0.length != self.m1.length:
            raise ValueError("a sender's two strings must have equal length")


@dataclass(frozen=True)
class ReceiverChoice:
    z1: int
    z2: int

    def __post_init__(self):
        if self.z1 not in (0, 1) or self.z2 not in (0, 1):
            raise ValueError("choice bits must be 0 or 1")


class Transcript:
    """Append-only public-channel log; both parties hold identical copies."""

    def __init__(self):
        self._entries = []
        self._frozen = False

    def append(self, label: str, payload):
        if self._frozen:
            raise RuntimeError("transcript is frozen")
        self._entries.append((label, payload))

    def freeze(self):
        self._frozen = True

    @property
    def entries(self):
        return list(self._entries)

    def serialize(self) -> bytes:
        parts = []
        for label, payload in self._entries:
            parts.append(f"{label}={_canonical(payload)}".encode())
        return b"\n".join(parts)

    def copy(self) -> "Transcript":
        t = Transcript()
        t._entries = copy.deepcopy(self._entries)
        t._frozen = self._frozen
        return t


def _canonical(payload) -> str:
    if isinstance(payload, BitString):
        return str(payload)
    if isinstance(payload, LinearHashSeed):
        return "".join(str(b) for b in payload.entries.ravel())
    if isinstance(payload, (list, tuple)):
        return "[" + ",".join(_canonical(x) for x in payload) + "]"
    if isinstance(payload, np.ndarray):
        return "[" + ",".join(str(int(v)) for v in payload) + "]"
    return repr(payload)


@dataclass
class AliceView:
    """Everything sender i legitimately observes: U_i."""

    inputs: SenderInput
    sent_symbols: np.ndarray
    hash_seeds: tuple
    transcript: Transcript


@dataclass
class BobView:
    """Everything the receiver legitimately observes: V."""

    choice: object
    received_y: np.ndarray
    x1_values: np.ndarray          # per-position read-off or -1
    x2_values: np.ndarray
    erased1: np.ndarray
    erased2: np.ndarray
    sets: dict                     # {(sender, label): sorted index array}
    transcript: Transcript


@dataclass(frozen=True)
class OtOutcome:
    status: str                    # 'completed' | 'aborted' | 'decode_error'
    reason: str = ""
    recovered: Optional[tuple] = None

    def __post_init__(self):
        if self.status not in ("completed", "aborted", "decode_error"):
            raise ValueError(f"unknown status {self.status!r}")
        if (self.recovered is not None) != (self.status == "completed"):
            raise ValueError("recovered strings accompany exactly the completed status")


def mask(message: BitString, key: BitString) -> BitString:
    """One-time-pad masking; applying twice restores the message."""
    return message ^ key


def _digest_seed(bits: int, m: int, rng: SeededRng) -> LinearHashSeed:
    # verification digests may be longer than their input: the linear family
    # keeps collision probability 2^-bits for any output length
    return LinearHashSeed(rng.generator.integers(0, 2, size=(bits, m), dtype=np.uint8))


# ---------------------------------------------------------------------------
# two-party protocol over the erasure channel


def two_party_ot(
    channel: MacKernel,
    sender: SenderInput,
    z: int,
    n: int,
    r: float,
    rng: SeededRng,
) -> tuple:
    """One run of the erasure-channel OT protocol.

    The sender transmits n uniform bits; the receiver forms the erased and
    non-erased index sets, aborts when either has fewer than n*r elements,
    and announces equal-size sets S_0, S_1 (the selected one drawn from the
    non-erased positions).  Keys are two-universal hashes of the set bits.
    """
    if z not in (0, 1):
        raise ValueError("choice bit must be 0 or 1")
    k = sender.m0.length
    nr = int(np.ceil(n * r))
    if k > nr:
        raise ValueError("string length exceeds n*r key bits")
    transcript = Transcript()

    x = BitString.random(n, rng)
    y = transmit_arrays(channel, x.bits.astype(np.intp), np.zeros(n, dtype=np.intp), rng)
    obs = np.array([channel.x1_obs[v] for v in y])
    erased = obs == OBS_ERASED
    received = np.where(obs >= 0, obs, -1)
    e_idx = np.flatnonzero(erased)
    ne_idx = np.flatnonzero(~erased)

    if e_idx.size < nr or ne_idx.size < nr:
        transcript.append("abort", "insufficient-erasures")
        transcript.freeze()
        outcome = OtOutcome("aborted", "insufficient erasures or receptions")
        alice = AliceView(sender, x.bits, (), transcript)
        bob = BobView(z, y, received, np.array([]), erased, erased, {}, transcript.copy())
        return outcome, (alice, bob)

    sel = np.sort(rng.generator.choice(ne_idx, size=nr, replace=False))
    unsel = np.sort(rng.generator.choice(e_idx, size=nr, replace=False))
    sets = {0: sel if z == 0 else unsel, 1: sel if z == 1 else unsel}
    transcript.append("S0", sets[0])
    transcript.append("S1", sets[1])

    seeds = (sample_seed(k, nr, rng), sample_seed(k, nr, rng))
    ciphers = []
    for j in (0, 1):
        key = hash_apply(seeds[j], x.take(sets[j]))
        m = sender.m0 if j == 0 else sender.m1
        ciphers.append(mask(m, key))
        transcript.append(f"seed{j}", seeds[j])
        transcript.append(f"cipher{j}", ciphers[j])
    transcript.freeze()

    x_sel = BitString(received[sets[z]].astype(np.uint8))
    m_hat = mask(ciphers[z], hash_apply(seeds[z], x_sel))
    outcome = OtOutcome("completed", recovered=(m_hat,))
    alice = AliceView(sender, x.bits, seeds, transcript)
    bob = BobView(
        z, y, received, np.array([]),
        erased, erased, {(1, z): sets[z]}, transcript.copy(),
    )
    return outcome, (alice, bob)


# ---------------------------------------------------------------------------
# adversary specifications


@dataclass(frozen=True)
class AdversarySpec:
    """A deviation plugged into a protocol run."""

    kind: str                      # 'malicious_bob' | 'unfair_sender'
    split_rule: Optional[str] = None
    strategy: object = None


def malicious_bob(split_rule: str = "even") -> AdversarySpec:
    """Receiver who distributes non-erased positions over both revealed sets.

    'even' alternates non-erasures between S_i0 and S_i1, padding both back
    to full size from the erased positions.
    """
    if split_rule not in ("even", "all_in_s0"):
        raise ValueError("split_rule must be 'even' or 'all_in_s0'")
    return AdversarySpec(kind="malicious_bob", split_rule=split_rule)


def unfair_sender(strategy) -> AdversarySpec:
    """Sender deviating from the channel statistics; detected by the test unit."""
    return AdversarySpec(kind="unfair_sender", strategy=strategy)


# ---------------------------------------------------------------------------
# Protocol 1 over the reduced correlation


class DecodeResult(NamedTuple):
    ok: bool
    reason: str
    x1_hat: Optional[BitString]
    x2_hat: Optional[BitString]


def decode_step5(
    y_outputs: np.ndarray,
    sel_sets: tuple,
    kernel: MacKernel,
    eps_typ: float,
    digests: tuple,
    digest_seeds: tuple,
    x_values: tuple,
    cap: int = DECODE_CANDIDATE_CAP,
) -> DecodeResult:
    """Recover the senders' selected-set bits from the channel outputs.

    Direct mode reads the inputs off the outputs when the kernel determines
    them; exhaustive mode enumerates candidate pairs (capped), keeping those
    whose verification digests match and whose joint type with the outputs is
    typical.  Zero or multiple surviving candidates are decode errors.
    """
    s1_idx, s2_idx = sel_sets
    x1_read, x2_read = x_values
    direct1 = np.all(x1_read[s1_idx] >= 0)
    direct2 = np.all(x2_read[s2_idx] >= 0)
    if direct1 and direct2:
        c1 = BitString(x1_read[s1_idx].astype(np.uint8))
        c2 = BitString(x2_read[s2_idx].astype(np.uint8))
        if hash_apply(digest_seeds[0], c1) != digests[0]:
            return DecodeResult(False, "none", None, None)
        if hash_apply(digest_seeds[1], c2) != digests[1]:
            return DecodeResult(False, "none", None, None)
        return DecodeResult(True, "direct", c1, c2)

    n1, n2 = s1_idx.size, s2_idx.size
    if 2 ** (n1 + n2) > cap:
        raise SizeCapError(
            f"2^{n1 + n2} candidate pairs exceed the decode cap",
            cap=cap, requested=2 ** (n1 + n2),
        )

    def survivors(n_bits, seed, digest):
        cands = np.arange(2**n_bits, dtype=np.int64)
        bits = (cands[:, None] >> np.arange(n_bits - 1, -1, -1)) & 1
        out = (bits @ seed.entries.T) % 2
        target = digest.bits
        hit = np.all(out == target, axis=1)
        return bits[hit].astype(np.uint8)

    cand1 = survivors(n1, digest_seeds[0], digests[0])
    cand2 = survivors(n2, digest_seeds[1], digests[1])

    overlap, i1, i2 = np.intersect1d(s1_idx, s2_idx, return_indices=True)
    valid = y_outputs[overlap] >= 0 if overlap.size else np.array([], dtype=bool)
    overlap, i1, i2 = overlap[valid], i1[valid], i2[valid]
    matches = []
    for b1 in cand1:
        for b2 in cand2:
            if overlap.size:
                jt = empirical_type(
                    b1[i1], b2[i2], y_outputs[overlap],
                    shape=(kernel.x1_size, kernel.x2_size, kernel.y_size),
                )
                if not is_cond_typical(jt, kernel, eps_typ):
                    continue
            matches.append((b1, b2))
            if len(matches) > 1:
                return DecodeResult(False, "ambiguous", None, None)
    if not matches:
        return DecodeResult(False, "none", None, None)
    b1, b2 = matches[0]
    return DecodeResult(True, "exhaustive", BitString(b1), BitString(b2))


def mac_ot(
    sbc: SbcParams,
    in1: SenderInput,
    in2: SenderInput,
    choice: ReceiverChoice,
    params: ProtocolParams,
    rng: SeededRng,
    adversary: Optional[AdversarySpec] = None,
) -> tuple:
    """One run of the two-sender OT protocol over the reduced correlation.

    Returns (outcome, (U1, U2, V)).  Honest flow: uniform inputs, erased and
    non-erased index sets, equal-size selected/unselected subsets revealed per
    sender, hashed keys and verification digests published, then decode.
    """
    if in1.m0.length != params.k1 or in2.m0.length != params.k2:
        raise ValueError("message lengths must match params.k1/params.k2")
    n = params.n
    s_size = params.set_size
    kernel = sbc.composite_kernel()
    transcript = Transcript()

    # step 1: i.i.d. uniform n-tuples
    x1 = BitString.random(n, rng)
    x2 = BitString.random(n, rng)

    # channel uses
    y = transmit_arrays(kernel, x1.bits.astype(np.intp), x2.bits.astype(np.intp), rng)
    obs1 = np.array([kernel.x1_obs[v] for v in y])
    obs2 = np.array([kernel.x2_obs[v] for v in y])
    erased1 = obs1 == OBS_ERASED
    erased2 = obs2 == OBS_ERASED

    # step 2: erased / non-erased index sets per sender
    abort_threshold = max(int(np.ceil(params.r1 * n)), int(np.ceil(params.r2 * n)), s_size)
    sets = {}
    for i, erased in ((1, erased1), (2, erased2)):
        ne_idx = np.flatnonzero(~erased)
        e_idx = np.flatnonzero(erased)
        if ne_idx.size < abort_threshold or e_idx.size < abort_threshold:
            transcript.append("abort", f"sender{i}-sets-too-small")
            transcript.freeze()
            outcome = OtOutcome("aborted", f"sender-{i} erased/non-erased sets too small")
            views = _final_views(
                in1, in2, choice, x1, x2, y, obs1, obs2,
                erased1, erased2, {}, (), transcript,
            )
            return outcome, views
        sets[i] = (ne_idx, e_idx)

    # step 3: equal-size selected/unselected sets, selected from non-erased
    revealed = {}
    z = {1: choice.z1, 2: choice.z2}
    for i in (1, 2):
        ne_idx, e_idx = sets[i]
        if adversary is not None and adversary.kind == "malicious_bob":
            s_sel, s_unsel = _malicious_split(ne_idx, e_idx, s_size, adversary.split_rule, rng)
        else:
            s_sel = np.sort(rng.generator.choice(ne_idx, size=s_size, replace=False))
            s_unsel = np.sort(rng.generator.choice(e_idx, size=s_size, replace=False))
        revealed[(i, z[i])] = s_sel
        revealed[(i, 1 - z[i])] = s_unsel
        transcript.append(f"S{i}0", revealed[(i, 0)])
        transcript.append(f"S{i}1", revealed[(i, 1)])

    # step 4: keys, digests, ciphertexts
    seeds = {}
    digests = {}
    ciphers = {}
    for i, inp, k_i, d_bits in ((1, in1, params.k1, params.digest_bits1),
                                (2, in2, params.k2, params.digest_bits2)):
        x = x1 if i == 1 else x2
        for j in (0, 1):
            s_ij = revealed[(i, j)]
            kappa = sample_seed(k_i, s_size, rng)
            h_seed = _digest_seed(d_bits, s_size, rng)
            x_set = x.take(s_ij)
            key = hash_apply(kappa, x_set)
            m = inp.m0 if j == 0 else inp.m1
            seeds[(i, j)] = (kappa, h_seed)
            digests[(i, j)] = hash_apply(h_seed, x_set)
            ciphers[(i, j)] = mask(m, key)
            transcript.append(f"kappa{i}{j}", kappa)
            transcript.append(f"h{i}{j}", h_seed)
            transcript.append(f"digest{i}{j}", digests[(i, j)])
            transcript.append(f"cipher{i}{j}", ciphers[(i, j)])
    transcript.freeze()

    # step 5: decode
    x1_read = np.where(obs1 >= 0, obs1, -1)
    x2_read = np.where(obs2 >= 0, obs2, -1)
    w = sbc.w
    y_branch = y - (kernel.y_size - w.y_size)  # W-branch symbol or negative
    sel1, sel2 = revealed[(1, choice.z1)], revealed[(2, choice.z2)]
    views = _final_views(
        in1, in2, choice, x1, x2, y, obs1, obs2, erased1, erased2,
        revealed, seeds, transcript,
    )
    if adversary is not None and adversary.kind == "malicious_bob":
        # a deviating receiver forfeits the honest decoder; his actual
        # guessing advantage is measured from the views downstream
        return OtOutcome("decode_error", "adversarial-sets"), views
    dec = decode_step5(
        y_branch, (sel1, sel2), w, params.eps_typ,
        (digests[(1, choice.z1)], digests[(2, choice.z2)]),
        (seeds[(1, choice.z1)][1], seeds[(2, choice.z2)][1]),
        (x1_read, x2_read),
    )
    if not dec.ok:
        return OtOutcome("decode_error", dec.reason), views
    m1_hat = mask(ciphers[(1, choice.z1)], hash_apply(seeds[(1, choice.z1)][0], dec.x1_hat))
    m2_hat = mask(ciphers[(2, choice.z2)], hash_apply(seeds[(2, choice.z2)][0], dec.x2_hat))
    return OtOutcome("completed", recovered=(m1_hat, m2_hat)), views


def _malicious_split(ne_idx, e_idx, s_size, split_rule, rng):
    """Build set pairs that mix non-erased positions into both sets."""
    if split_rule == "all_in_s0":
        take = min(s_size, ne_idx.size)
        s_sel = ne_idx[:take]
        pad = e_idx[: s_size - take]
        s_sel = np.sort(np.concatenate([s_sel, pad]))
        s_unsel = np.sort(e_idx[s_size - take : 2 * s_size - take])
        if s_unsel.size < s_size:
            raise ValueError("infeasible split: not enough erased positions")
        return s_sel, s_unsel
    half_a = ne_idx[0::2]
    half_b = ne_idx[1::2]
    avail_e = list(e_idx)
    need_a = s_size - min(half_a.size, s_size)
    need_b = s_size - min(half_b.size, s_size)
    if need_a + need_b > len(avail_e):
        raise ValueError("infeasible split: not enough erased positions to pad")
    s_a = np.sort(np.concatenate([half_a[:s_size], np.array(avail_e[:need_a], dtype=np.intp)]))
    s_b = np.sort(
        np.concatenate([half_b[:s_size], np.array(avail_e[need_a : need_a + need_b], dtype=np.intp)])
    )
    return s_a, s_b


def _final_views(in1, in2, choice, x1, x2, y, obs1, obs2, erased1, erased2,
                 revealed, seeds, transcript):
    u1 = AliceView(in1, x1.bits, tuple(v for k, v in sorted(seeds.items()) if k[0] == 1) if seeds else (), transcript)
    u2 = AliceView(in2, x2.bits, tuple(v for k, v in sorted(seeds.items()) if k[0] == 2) if seeds else (), transcript.copy())
    v = BobView(
        choice, y,
        np.where(obs1 >= 0, obs1, -1), np.where(obs2 >= 0, obs2, -1),
        erased1, erased2,
        {k: v for k, v in revealed.items()} if revealed else {},
        transcript.copy(),
    )
    return (u1, u2, v)


# ---------------------------------------------------------------------------
# OT -> fair coin tossing demo


class FctResult(NamedTuple):
    b: Optional[int]
    b_alice: Optional[int]
    b_bob: Optional[int]
    consistent: Optional[bool]
    aborted: bool


def ot_to_fct(rng: SeededRng, ot_runner: Optional[Callable] = None) -> FctResult:
    """Single coin flip built from one 1-bit OT.

    The sender draws (m0, m1), the receiver draws z and learns m_z; both
    announce b_A = m0 xor m1 and b_B = m_z xor z, and the coin is their xor.
    The protocol's consistency check (b_A xor b_B == 0) is recorded but never
    acted on.  ``ot_runner(m0, m1, z, rng) -> m_z or None`` defaults to an
    ideal OT; None signals an abort.
    """
    gen = rng.generator
    m0, m1 = int(gen.integers(2)), int(gen.integers(2))
    zb = int(gen.integers(2))
    if ot_runner is None:
        m_z = m1 if zb else m0
    else:
        m_z = ot_runner(m0, m1, zb, rng)
    if m_z is None:
        return FctResult(None, None, None, None, True)
    b_alice = m0 ^ m1
    b_bob = m_z ^ zb
    b = b_alice ^ b_bob
    return FctResult(b, b_alice, b_bob, (b_alice ^ b_bob) == 0, False)
