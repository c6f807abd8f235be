"""Empirical types, conditional typicality, and the cheating-detection test unit.

Typicality is the max-deviation notion: a joint type is eps-typical for a
kernel W when every cell satisfies
|count(x1,x2,y)/n - W(y|x1,x2) * count(x1,x2)/n| <= eps.
This is the simplest notion that supports both the detection argument and the
protocol decoder; strong typicality can swap in behind the same interface.

On an erasure composite the test unit conditions on the non-erased queried
positions and checks them against the revealed-branch kernel: erasures are
input-independent by construction, so they carry no evidence about honesty.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .channels import MacKernel, SbcParams, transmit_arrays
from .probcore import SeededRng


@dataclass(frozen=True)
class JointType:
    """Empirical counts over (x1, x2, y) triples."""

    counts: np.ndarray
    n: int

    def __post_init__(self):
        arr = np.array(self.counts, dtype=np.int64)
        if arr.ndim != 3 or np.any(arr < 0):
            raise ValueError("counts must be a nonnegative 3-axis array")
        if arr.sum() != self.n:
            raise ValueError("counts must sum to n")
        arr.flags.writeable = False
        object.__setattr__(self, "counts", arr)

    def input_pair_counts(self) -> np.ndarray:
        return self.counts.sum(axis=2)


@dataclass(frozen=True)
class CheatStrategy:
    """A bounded deviation: alter delta*n positions in the given mode.

    roles: 'sender1' | 'sender2' | 'receiver'; modes: 'flip' | 'constant'
    | 'misreport'.  Senders in 'flip'/'constant' mode transmit altered
    symbols while reporting the honest ones; 'misreport' transmits honestly
    and reports altered values.  A cheating receiver reports altered outputs.
    """

    role: str
    delta: float
    mode: str = "flip"
    constant_symbol: int = 0

    def __post_init__(self):
        if self.role not in ("sender1", "sender2", "receiver"):
            raise ValueError(f"unknown role {self.role!r}")
        if self.mode not in ("flip", "constant", "misreport"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")


def empirical_type(x1seq, x2seq, yseq, shape=None) -> JointType:
    """Exact counting of (x1, x2, y) triples."""
    x1seq = np.asarray(x1seq, dtype=np.intp)
    x2seq = np.asarray(x2seq, dtype=np.intp)
    yseq = np.asarray(yseq, dtype=np.intp)
    if not (x1seq.shape == x2seq.shape == yseq.shape) or x1seq.ndim != 1:
        raise ValueError("sequences must be equal-length 1-d arrays")
    if shape is None:
        shape = (int(x1seq.max()) + 1, int(x2seq.max()) + 1, int(yseq.max()) + 1)
    counts = np.zeros(shape, dtype=np.int64)
    np.add.at(counts, (x1seq, x2seq, yseq), 1)
    return JointType(counts, x1seq.size)


def is_cond_typical(jtype: JointType, kernel: MacKernel, eps: float) -> bool:
    """Max-deviation conditional typicality of the type against the kernel."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = jtype.n
    if n == 0:
        return True
    pair_counts = jtype.input_pair_counts()
    expected = kernel.w * pair_counts[:, :, None]
    deviation = np.abs(jtype.counts - expected) / n
    return bool(deviation.max() <= eps)


def detection_epsilon(delta: float, eta: float, x1_size: int, x2_size: int, y_size: int) -> float:
    """The typicality radius delta^4 eta^2 / (2 |X1|^2 |X2|^2 |Z|)."""
    if not (0.0 < delta <= 1.0 and 0.0 < eta <= 1.0):
        raise ValueError("delta and eta must lie in (0, 1]")
    return float(delta**4 * eta**2 / (2.0 * x1_size**2 * x2_size**2 * y_size))


def detection_bound(n: int, eps: float) -> float:
    """Escape-probability bound 2 exp(-n eps^4 / 2); vacuous (> 1) at small n."""
    return float(2.0 * np.exp(-n * eps**4 / 2.0))


class TestReport(NamedTuple):
    queried: np.ndarray           # indices the receiver asked about
    reported_x1: np.ndarray       # senders' reports at queried positions
    reported_x2: np.ndarray
    reported_y: np.ndarray        # receiver's reports at queried positions
    typical: bool
    tested_positions: int         # positions entering the typicality test

    def to_dict(self) -> dict:
        return {
            "queried": [int(i) for i in self.queried],
            "typical": bool(self.typical),
            "tested_positions": int(self.tested_positions),
        }


def _apply_sender_cheat(x: np.ndarray, strategy: CheatStrategy, size: int, rng: SeededRng):
    """Returns (transmitted, reported) for the cheating sender."""
    n = x.size
    n_cheat = int(np.ceil(strategy.delta * n))
    pos = rng.generator.permutation(n)[:n_cheat]
    transmitted = x.copy()
    reported = x.copy()
    if strategy.mode == "flip":
        transmitted[pos] = (transmitted[pos] + 1) % size
    elif strategy.mode == "constant":
        transmitted[pos] = strategy.constant_symbol
    else:  # misreport
        reported[pos] = (reported[pos] + 1) % size
    return transmitted, reported


def run_test_unit(
    channel,
    x1seq,
    x2seq,
    eps: float,
    rng: SeededRng,
    strategy: Optional[CheatStrategy] = None,
) -> TestReport:
    """One round of the random-query typicality audit.

    The receiver queries each position independently with probability 1/2;
    the parties report their symbols (cheaters per their strategy) and the
    queried subsample's joint type is tested against the kernel.  For an
    SbcParams channel, erased queried positions are discarded and the
    remainder tested against the revealed-branch kernel W.
    """
    if isinstance(channel, SbcParams):
        kernel = channel.composite_kernel()
        test_kernel = channel.w
        composite = True
    else:
        kernel = channel
        test_kernel = channel
        composite = False

    x1 = np.asarray(x1seq, dtype=np.intp).copy()
    x2 = np.asarray(x2seq, dtype=np.intp).copy()
    rep1, rep2 = x1.copy(), x2.copy()
    if strategy is not None and strategy.role == "sender1":
        x1, rep1 = _apply_sender_cheat(x1, strategy, kernel.x1_size, rng)
    if strategy is not None and strategy.role == "sender2":
        x2, rep2 = _apply_sender_cheat(x2, strategy, kernel.x2_size, rng)

    y = transmit_arrays(kernel, x1, x2, rng)
    rep_y = y.copy()
    if strategy is not None and strategy.role == "receiver":
        n_cheat = int(np.ceil(strategy.delta * y.size))
        pos = rng.generator.permutation(y.size)[:n_cheat]
        rep_y[pos] = (rep_y[pos] + 1) % kernel.y_size

    queried = np.flatnonzero(rng.generator.random(y.size) < 0.5)
    q1, q2, qy = rep1[queried], rep2[queried], rep_y[queried]

    if composite:
        offset = kernel.y_size - test_kernel.y_size
        keep = qy >= offset  # W-branch outputs sit at the top of the composite alphabet
        q1t, q2t, qyt = q1[keep], q2[keep], qy[keep] - offset
    else:
        q1t, q2t, qyt = q1, q2, qy

    if q1t.size == 0:
        typical = True
    else:
        jtype = empirical_type(
            q1t, q2t, qyt,
            shape=(test_kernel.x1_size, test_kernel.x2_size, test_kernel.y_size),
        )
        typical = is_cond_typical(jtype, test_kernel, eps)
    return TestReport(queried, q1, q2, qy, bool(typical), int(q1t.size))
