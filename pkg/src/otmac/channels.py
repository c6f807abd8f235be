"""Channel and correlation models: builders, redundancy/perfectness analysis,
and the reductions from general non-perfect MACs down to symmetric basic
correlations.

Erasure is modeled as distinguished output symbols with per-sender erasure
flags attached to every output symbol, so the protocol's erased/non-erased
index sets are well defined for both the joint-erasure and partial-erasure
models.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import PerfectChannelError
from .probcore import Distribution, JointDistribution, SeededRng

ROW_TOL = 1e-12
HULL_TOL = 1e-9

# per-sender observation codes attached to each output symbol
OBS_ERASED = -1   # the sender's symbol is erased at this output
OBS_OPAQUE = -2   # non-erased but not directly readable from the output


@dataclass(frozen=True)
class MacKernel:
    """Stochastic transition kernel W(y | x1, x2) over finite alphabets.

    ``x1_obs[y]`` / ``x2_obs[y]`` give the per-sender observation carried by
    output symbol y: a concrete input value, OBS_ERASED, or OBS_OPAQUE.
    """

    w: np.ndarray
    x1_obs: tuple = None
    x2_obs: tuple = None
    name: str = ""

    def __post_init__(self):
        arr = np.array(self.w, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError("kernel array must have shape (x1, x2, y)")
        if np.any(arr < -ROW_TOL):
            raise ValueError("kernel entries must be nonnegative")
        if np.any(np.abs(arr.sum(axis=2) - 1.0) > ROW_TOL):
            raise ValueError("every (x1, x2) row must sum to 1")
        arr.flags.writeable = False
        object.__setattr__(self, "w", arr)
        if self.x1_obs is None:
            object.__setattr__(self, "x1_obs", (OBS_OPAQUE,) * arr.shape[2])
        if self.x2_obs is None:
            object.__setattr__(self, "x2_obs", (OBS_OPAQUE,) * arr.shape[2])
        if len(self.x1_obs) != arr.shape[2] or len(self.x2_obs) != arr.shape[2]:
            raise ValueError("observation metadata must cover every output symbol")

    @property
    def x1_size(self) -> int:
        return self.w.shape[0]

    @property
    def x2_size(self) -> int:
        return self.w.shape[1]

    @property
    def y_size(self) -> int:
        return self.w.shape[2]

    def row(self, x1: int, x2: int) -> np.ndarray:
        return self.w[x1, x2]


@dataclass(frozen=True)
class Correlation:
    """Joint distribution P(x1, x2, y): the source-model view of a channel."""

    joint: JointDistribution

    def __post_init__(self):
        if self.joint.probs.ndim != 3:
            raise ValueError("a correlation is a 3-axis joint (x1, x2, y)")

    def input_marginal(self) -> JointDistribution:
        return JointDistribution(self.joint.probs.sum(axis=2))

    def kernel_rows(self):
        """Induced rows W(y|x1,x2) wherever the input pair has positive mass."""
        p_in = self.joint.probs.sum(axis=2)
        rows = {}
        for x1, x2 in np.argwhere(p_in > 0):
            rows[(int(x1), int(x2))] = self.joint.probs[x1, x2] / p_in[x1, x2]
        return rows


def correlation_from(kernel: MacKernel, d1: Distribution, d2: Distribution) -> Correlation:
    if d1.alphabet_size != kernel.x1_size or d2.alphabet_size != kernel.x2_size:
        raise ValueError("input distribution sizes must match the kernel alphabets")
    joint = np.einsum("i,j,ijy->ijy", d1.probs, d2.probs, kernel.w)
    return Correlation(JointDistribution(joint))


@dataclass(frozen=True)
class SbcParams:
    """Configuration of a (slightly unfair) symmetric basic correlation.

    ``p`` is the non-erasure probability; ``w`` the revealed-branch kernel;
    ``w_prime`` optionally enables the partial-erasure branch; ``delta`` is
    the unfairness budget (fraction of positions a cheater may corrupt).
    """

    p: float
    w: MacKernel
    w_prime: Optional[MacKernel] = None
    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("non-erasure probability must lie in (0, 1)")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("unfairness budget must lie in [0, 1)")

    def composite_kernel(self) -> MacKernel:
        """The mixture channel Bob actually observes.

        Joint-erasure form: one erasure symbol with probability 1-p, W scaled
        by p.  With ``w_prime``: complete erasure (1-p)^2, partial erasure
        2p(1-p) through w_prime, revealed branch p^2 through w.
        """
        w = self.w
        if self.w_prime is None:
            y_size = w.y_size + 1
            arr = np.zeros((w.x1_size, w.x2_size, y_size))
            arr[:, :, 0] = 1.0 - self.p
            arr[:, :, 1:] = self.p * w.w
            x1_obs = (OBS_ERASED,) + w.x1_obs
            x2_obs = (OBS_ERASED,) + w.x2_obs
            return MacKernel(arr, x1_obs, x2_obs, name=f"su-sbc(p={self.p},{w.name})")
        wp = self.w_prime
        if (wp.x1_size, wp.x2_size) != (w.x1_size, w.x2_size):
            raise ValueError("w and w_prime must share input alphabets")
        y_size = 1 + wp.y_size + w.y_size
        arr = np.zeros((w.x1_size, w.x2_size, y_size))
        pe_full = (1.0 - self.p) ** 2
        pe_part = 2.0 * self.p * (1.0 - self.p)
        arr[:, :, 0] = pe_full
        arr[:, :, 1 : 1 + wp.y_size] = pe_part * wp.w
        arr[:, :, 1 + wp.y_size :] = self.p**2 * w.w
        x1_obs = (OBS_ERASED,) + wp.x1_obs + w.x1_obs
        x2_obs = (OBS_ERASED,) + wp.x2_obs + w.x2_obs
        return MacKernel(
            arr, x1_obs, x2_obs, name=f"su-sbc(p={self.p},{w.name},{wp.name})"
        )


@dataclass(frozen=True)
class SbcParamsIndependent(SbcParams):
    """Footnote variant with independent per-sender erasure probabilities.

    Simulation only; no rate-region formulas are claimed for it.
    """

    p2: float = 0.5

    def composite_kernel(self) -> MacKernel:
        w = self.w
        p1, p2 = self.p, self.p2
        if not 0.0 < p2 < 1.0:
            raise ValueError("p2 must lie in (0, 1)")
        # outputs: e-e | (x1, e) values | (e, x2) values | W outputs
        y_size = 1 + w.x1_size + w.x2_size + w.y_size
        arr = np.zeros((w.x1_size, w.x2_size, y_size))
        arr[:, :, 0] = (1 - p1) * (1 - p2)
        for x1 in range(w.x1_size):
            arr[x1, :, 1 + x1] = p1 * (1 - p2)
        for x2 in range(w.x2_size):
            arr[:, x2, 1 + w.x1_size + x2] = (1 - p1) * p2
        arr[:, :, 1 + w.x1_size + w.x2_size :] = p1 * p2 * w.w
        x1_obs = (
            (OBS_ERASED,)
            + tuple(range(w.x1_size))
            + (OBS_ERASED,) * w.x2_size
            + w.x1_obs
        )
        x2_obs = (
            (OBS_ERASED,)
            + (OBS_ERASED,) * w.x1_size
            + tuple(range(w.x2_size))
            + w.x2_obs
        )
        return MacKernel(arr, x1_obs, x2_obs, name=f"su-sbc(p1={p1},p2={p2},{w.name})")


class MacSymbolOut(NamedTuple):
    """One channel use as seen by the receiver."""

    y: int
    x1_value: Optional[int]
    x2_value: Optional[int]
    x1_erased: bool
    x2_erased: bool


# ---------------------------------------------------------------------------
# builders


def identity_mac() -> MacKernel:
    """Noiseless binary MAC whose output reveals the input pair."""
    arr = np.zeros((2, 2, 4))
    for x1, x2 in itertools.product(range(2), range(2)):
        arr[x1, x2, 2 * x1 + x2] = 1.0
    x1_obs = tuple(y // 2 for y in range(4))
    x2_obs = tuple(y % 2 for y in range(4))
    return MacKernel(arr, x1_obs, x2_obs, name="identity")


def adder_mac() -> MacKernel:
    """Noiseless binary adder: Y = X1 + X2 over {0, 1, 2}.

    Y = 1 hides which sender sent the 1, acting as a correlated erasure of
    both inputs; Y in {0, 2} reveals both.
    """
    arr = np.zeros((2, 2, 3))
    for x1, x2 in itertools.product(range(2), range(2)):
        arr[x1, x2, x1 + x2] = 1.0
    x1_obs = (0, OBS_ERASED, 1)
    x2_obs = (0, OBS_ERASED, 1)
    return MacKernel(arr, x1_obs, x2_obs, name="adder")


def noisy_adder_mac(p: float) -> MacKernel:
    """Y = X1 + X2 with probability p, erasure otherwise; p = 1 is the plain adder."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    if p == 1.0:
        return adder_mac()
    base = adder_mac()
    arr = np.zeros((2, 2, 4))
    arr[:, :, 0] = 1.0 - p
    arr[:, :, 1:] = p * base.w
    x1_obs = (OBS_ERASED,) + base.x1_obs
    x2_obs = (OBS_ERASED,) + base.x2_obs
    return MacKernel(arr, x1_obs, x2_obs, name=f"noisy-adder(p={p})")


def bec(p_erase: float) -> MacKernel:
    """Point-to-point binary erasure channel, embedded with a degenerate sender 2.

    Outputs: 0, 1, e.
    """
    if not 0.0 <= p_erase <= 1.0:
        raise ValueError("erasure probability must lie in [0, 1]")
    arr = np.zeros((2, 1, 3))
    for x in range(2):
        arr[x, 0, x] = 1.0 - p_erase
        arr[x, 0, 2] = p_erase
    x1_obs = (0, 1, OBS_ERASED)
    x2_obs = (0, 0, 0)
    return MacKernel(arr, x1_obs, x2_obs, name=f"bec(p_erase={p_erase})")


def special_bemac() -> MacKernel:
    """The balanced partial-erasure MAC: each use erases exactly one sender.

    Outputs (x1, e) and (e, x2), each with probability 1/2.
    """
    arr = np.zeros((2, 2, 4))
    for x1, x2 in itertools.product(range(2), range(2)):
        arr[x1, x2, x1] = 0.5          # outputs 0,1: (x1, e)
        arr[x1, x2, 2 + x2] = 0.5      # outputs 2,3: (e, x2)
    x1_obs = (0, 1, OBS_ERASED, OBS_ERASED)
    x2_obs = (OBS_ERASED, OBS_ERASED, 0, 1)
    return MacKernel(arr, x1_obs, x2_obs, name="special-bemac")


def su_sbc(p: float, w: MacKernel, delta: float = 0.0) -> SbcParams:
    """Joint-erasure symmetric basic correlation: Pr{Y erased} = 1 - p."""
    return SbcParams(p=p, w=w, delta=delta)


def su_sbc_full(p: float, w: MacKernel, w_prime: MacKernel, delta: float = 0.0) -> SbcParams:
    """Full correlation with the partial-erasure branch; Pr{Y erased} = 1 - p^2."""
    return SbcParams(p=p, w=w, w_prime=w_prime, delta=delta)


_BUILDERS = {
    "identity": identity_mac,
    "adder": adder_mac,
    "special-bemac": special_bemac,
}


def builder_by_name(name: str) -> MacKernel:
    if name not in _BUILDERS:
        raise ValueError(f"unknown kernel name {name!r}; known: {sorted(_BUILDERS)}")
    return _BUILDERS[name]()


# ---------------------------------------------------------------------------
# transmission


def transmit_arrays(kernel: MacKernel, x1seq, x2seq, rng: SeededRng):
    """Vectorized memoryless sampling; returns the raw output index array."""
    x1seq = np.asarray(x1seq, dtype=np.intp)
    x2seq = np.asarray(x2seq, dtype=np.intp)
    if x1seq.shape != x2seq.shape or x1seq.ndim != 1:
        raise ValueError("input sequences must be equal-length 1-d arrays")
    if x1seq.size and (x1seq.min() < 0 or x1seq.max() >= kernel.x1_size):
        raise ValueError("sender-1 symbols outside the alphabet")
    if x2seq.size and (x2seq.min() < 0 or x2seq.max() >= kernel.x2_size):
        raise ValueError("sender-2 symbols outside the alphabet")
    rows = kernel.w[x1seq, x2seq]
    u = rng.generator.random(x1seq.size)
    return (u[:, None] > np.cumsum(rows, axis=1)).sum(axis=1).astype(np.intp)


def transmit(kernel: MacKernel, x1seq, x2seq, rng: SeededRng):
    """Memoryless transmission returning per-position receiver observations."""
    ys = transmit_arrays(kernel, x1seq, x2seq, rng)
    out = []
    for y in ys:
        o1, o2 = kernel.x1_obs[y], kernel.x2_obs[y]
        out.append(
            MacSymbolOut(
                y=int(y),
                x1_value=o1 if o1 >= 0 else None,
                x2_value=o2 if o2 >= 0 else None,
                x1_erased=o1 == OBS_ERASED,
                x2_erased=o2 == OBS_ERASED,
            )
        )
    return out


# ---------------------------------------------------------------------------
# perfectness and redundancy


def is_perfect(c: Correlation, tol: float = 1e-9) -> bool:
    """True iff the output determines the input pair: H(X1, X2 | Y) <= tol."""
    from .info import conditional_entropy

    return conditional_entropy(c.joint, (0, 1), (2,)) <= tol


def _in_convex_hull(x: np.ndarray, points: np.ndarray, tol: float = HULL_TOL) -> bool:
    """Exact membership via Caratheodory: x is in the hull iff some subset of
    at most dim+1 points contains it with nonnegative barycentric weights."""
    n, d = points.shape
    if n == 0:
        return False
    max_support = min(n, d + 1)
    for r in range(1, max_support + 1):
        for subset in itertools.combinations(range(n), r):
            pts = points[list(subset)]
            a = np.vstack([pts.T, np.ones(r)])
            b = np.concatenate([x, [1.0]])
            lam, *_ = np.linalg.lstsq(a, b, rcond=None)
            if np.all(lam >= -tol) and np.abs(a @ lam - b).max() <= tol:
                return True
    return False


def find_redundant_inputs(kernel_or_corr, tol: float = HULL_TOL) -> set:
    """Input pairs whose output row is a convex combination of the others.

    Greedy sieve in reverse lexicographic order, so of two identical rows the
    lexicographically larger pair is flagged.  The survivors are exactly the
    extreme points of the row polytope.
    """
    if isinstance(kernel_or_corr, Correlation):
        rows = kernel_or_corr.kernel_rows()
    else:
        k = kernel_or_corr
        rows = {
            (x1, x2): k.w[x1, x2]
            for x1, x2 in itertools.product(range(k.x1_size), range(k.x2_size))
        }
    survivors = dict(rows)
    flagged = set()
    for pair in sorted(rows, reverse=True):
        others = np.array([r for p, r in survivors.items() if p != pair])
        if others.size and _in_convex_hull(np.asarray(rows[pair]), others, tol):
            flagged.add(pair)
            del survivors[pair]
    return flagged


def merge_redundant_outputs(c: Correlation, tol: float = HULL_TOL) -> Correlation:
    """Merge output symbols with identical posteriors over input pairs.

    Zero-probability outputs are dropped; total mass is preserved.  Idempotent.
    """
    probs = c.joint.probs
    p_y = probs.sum(axis=(0, 1))
    groups = []  # list of (posterior, [y indices])
    for y in range(probs.shape[2]):
        if p_y[y] <= 0:
            continue
        post = probs[:, :, y] / p_y[y]
        for rep, ys in groups:
            if np.abs(rep - post).max() <= tol:
                ys.append(y)
                break
        else:
            groups.append((post, [y]))
    merged = np.stack(
        [probs[:, :, ys].sum(axis=2) for _, ys in groups], axis=2
    )
    return Correlation(JointDistribution(merged))


def drop_redundant_inputs(c: Correlation, tol: float = HULL_TOL) -> Correlation:
    """Zero out redundant input pairs and renormalize."""
    flagged = find_redundant_inputs(c, tol)
    if not flagged:
        return c
    probs = np.array(c.joint.probs)
    for x1, x2 in flagged:
        probs[x1, x2, :] = 0.0
    return Correlation(JointDistribution(probs / probs.sum()))


def remove_redundancy(c: Correlation, tol: float = HULL_TOL) -> Correlation:
    """Drop redundant input pairs, then merge redundant outputs.  Idempotent."""
    return merge_redundant_outputs(drop_redundant_inputs(c, tol), tol)


# ---------------------------------------------------------------------------
# reductions (general MAC -> SUCO -> SBC)


class SucoSamples(NamedTuple):
    """Proposition-1 output: i.i.d. correlation triples plus test-unit hooks."""

    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray
    query_flags: np.ndarray    # True where the receiver asks for the inputs
    joint: JointDistribution   # the analytic correlation the samples follow


def reduce_to_suco(
    kernel: MacKernel, d1: Distribution, d2: Distribution, n: int, rng: SeededRng
) -> SucoSamples:
    """Emit n i.i.d. triples from the channel at product inputs, with each
    position independently flagged for test-unit verification w.p. 1/2.

    Perfect channels are rejected: they cannot yield a useful correlation.
    """
    corr = correlation_from(kernel, d1, d2)
    if is_perfect(corr):
        raise PerfectChannelError(
            "perfect channel at these inputs: the output determines the input "
            "pair, so no obliviousness can be extracted"
        )
    from .probcore import sample_many

    x1 = sample_many(d1, n, rng)
    x2 = sample_many(d2, n, rng)
    y = transmit_arrays(kernel, x1, x2, rng)
    flags = rng.generator.random(n) < 0.5
    return SucoSamples(x1, x2, y, flags, corr.joint)


def _pattern_good_set(a1, b1, a2, b2):
    """The twelve ordered pattern pairs kept by the Proposition-2 filter."""
    combos = [(a1, a2), (a1, b2), (b1, a2), (b1, b2)]
    return {(v, vp) for v in combos for vp in combos if v != vp}


class SbcReduction(NamedTuple):
    stream_z1: np.ndarray       # sender-1 bits carried by kept pairs
    stream_z2: np.ndarray       # sender-2 bits carried by kept pairs
    bob_obs: list               # per kept pair: (y, y') raw observation
    bob_erased1: np.ndarray     # True where Bob's posterior of z1 is uniform
    bob_erased2: np.ndarray
    consumption: float          # correlation realizations used per SBC sample
    keep_probability: float     # analytic Pr(pair pattern kept)
    discarded_announcements: int


def reduce_suco_to_sbc(
    c: Correlation,
    sender1_symbols: tuple,
    sender2_symbols: tuple,
    n_target: int,
    rng: SeededRng,
) -> SbcReduction:
    """Distill SBC realizations from pairs of independent correlation samples.

    Pairs of consecutive realizations are kept when both input pairs fall in
    the two-symbol sub-alphabet and differ; all other pairs are discarded and
    publicly announced.  The bit carried to the SBC is the second
    realization's symbol per sender (0 for the 'a' symbol, 1 for 'b').  Bob's
    side is erased wherever his exact posterior of that bit, given his output
    pair and the kept-pattern constraint, is uniform.
    """
    a1, b1 = sender1_symbols
    a2, b2 = sender2_symbols
    probs = c.joint.probs
    p_in = probs.sum(axis=2)
    combos = [(a1, a2), (a1, b2), (b1, a2), (b1, b2)]
    common = None
    for x1, x2 in combos:
        if p_in[x1, x2] <= 0:
            raise ValueError(f"input pair {(x1, x2)} has zero probability")
        supp = set(np.flatnonzero(probs[x1, x2] > 0).tolist())
        common = supp if common is None else (common & supp)
    if not common:
        raise ValueError(
            "the four symbol pairs share no common positive-probability output; "
            "the correlation's equivocation over this sub-alphabet is zero"
        )

    good = _pattern_good_set(a1, b1, a2, b2)
    keep_prob = 0.0
    for v, vp in good:
        keep_prob += float(p_in[v] * p_in[vp])

    # exact posterior of (v, vp) given Bob's (y, y') within the kept set
    post = {}
    for v, vp in good:
        py = np.multiply.outer(probs[v] / p_in[v], probs[vp] / p_in[vp])
        post[(v, vp)] = py * p_in[v] * p_in[vp]

    from .probcore import sample_many

    flat_in = Distribution(p_in.ravel() / p_in.sum())
    x2_size = p_in.shape[1]

    def draw_realizations(count):
        idx = sample_many(flat_in, count, rng)
        v1, v2 = idx // x2_size, idx % x2_size
        rows = probs[v1, v2] / p_in[v1, v2, None]
        u = rng.generator.random(count)
        ys = (u[:, None] > np.cumsum(rows, axis=1)).sum(axis=1)
        return v1, v2, ys

    z1_out, z2_out, obs_out, er1, er2 = [], [], [], [], []
    consumed = 0
    discarded = 0
    while len(z1_out) < n_target:
        batch = max(256, 4 * (n_target - len(z1_out)))
        v1, v2, ys = draw_realizations(2 * batch)
        for j in range(batch):
            if len(z1_out) >= n_target:
                break
            consumed += 2
            v = (int(v1[2 * j]), int(v2[2 * j]))
            vp = (int(v1[2 * j + 1]), int(v2[2 * j + 1]))
            if (v, vp) not in good:
                discarded += 1
                continue
            y, yp = int(ys[2 * j]), int(ys[2 * j + 1])
            z1 = 0 if vp[0] == a1 else 1
            z2 = 0 if vp[1] == a2 else 1
            # Bob's exact posterior over (z1, z2) given (y, y')
            w = np.zeros((2, 2))
            for (u_, up), table in post.items():
                zz1 = 0 if up[0] == a1 else 1
                zz2 = 0 if up[1] == a2 else 1
                w[zz1, zz2] += table[y, yp]
            w /= w.sum()
            m1, m2 = w.sum(axis=1), w.sum(axis=0)
            z1_out.append(z1)
            z2_out.append(z2)
            obs_out.append((y, yp))
            er1.append(bool(abs(m1[0] - 0.5) <= 1e-9))
            er2.append(bool(abs(m2[0] - 0.5) <= 1e-9))
    return SbcReduction(
        np.array(z1_out), np.array(z2_out), obs_out,
        np.array(er1), np.array(er2),
        consumption=consumed / n_target,
        keep_probability=keep_prob,
        discarded_announcements=discarded,
    )
