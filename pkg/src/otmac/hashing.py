"""Two-universal hashing over the binary field.

The family is the set of all linear maps {0,1}^m -> {0,1}^k, sampled as
uniform random k x m binary matrices.  Collision probability for distinct
inputs is exactly 2^-k, verified here by exhaustive seed enumeration at tiny
sizes.  Also houses the distributed leftover-hash distance check and the
entropy-smoothing lower bound for hashed outputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import SizeCapError
from .info import LN2, entropy_of_array
from .probcore import BitString, Distribution, JointDistribution, SeededRng

SEED_ENUM_CAP = 2**16  # exhaustive seed enumeration
ATOM_ENUM_CAP = 2**20  # exhaustive joint enumeration


@dataclass(frozen=True)
class LinearHashSeed:
    """A k x m binary matrix; hashing is matrix-vector product over GF(2)."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.uint8)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("seed must be a non-empty 2-d binary matrix")
        if np.any((arr != 0) & (arr != 1)):
            raise ValueError("seed entries must be 0 or 1")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]


def sample_seed(k: int, m: int, rng: SeededRng) -> LinearHashSeed:
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    return LinearHashSeed(rng.generator.integers(0, 2, size=(k, m), dtype=np.uint8))


def hash_apply(seed: LinearHashSeed, x: BitString) -> BitString:
    if x.length != seed.cols:
        raise ValueError(f"input length {x.length} != seed cols {seed.cols}")
    return BitString((seed.entries @ x.bits) % 2)


def _all_matrices(k: int, m: int):
    """Iterate every k x m binary matrix (2^(k*m) of them)."""
    for flat in itertools.product((0, 1), repeat=k * m):
        yield np.array(flat, dtype=np.uint8).reshape(k, m)


def exact_collision_probability(k: int, m: int, x0: BitString, x1: BitString) -> float:
    """Pr over uniform seeds that h(x0) = h(x1), for x0 != x1.

    Exhaustive over all 2^(k*m) seeds when k*m <= 16, closed form 2^-k
    otherwise (each row annihilates x0 xor x1 independently w.p. 1/2).
    """
    if x0 == x1:
        raise ValueError("collision probability is defined for distinct inputs")
    if x0.length != m or x1.length != m:
        raise ValueError("inputs must have length m")
    if k * m <= 16:
        hits = 0
        for mat in _all_matrices(k, m):
            if np.array_equal((mat @ x0.bits) % 2, (mat @ x1.bits) % 2):
                hits += 1
        p = hits / 2 ** (k * m)
    else:
        p = 2.0**-k
    assert p <= 2.0**-k + 1e-15
    return p


def exact_pair_collision_probability(
    k1: int, m1: int, x0: BitString, x1: BitString,
    k2: int, m2: int, y0: BitString, y1: BitString,
) -> float:
    """Joint collision probability for two independent hashes; exactly 2^-(k1+k2)."""
    p1 = exact_collision_probability(k1, m1, x0, x1)
    p2 = exact_collision_probability(k2, m2, y0, y1)
    p = p1 * p2
    assert p <= 2.0 ** -(k1 + k2) + 1e-15
    return p


class DlhlResult(NamedTuple):
    distance: float
    bound: float
    ok: bool
    mi_values: Optional[tuple]
    mi_bound: Optional[float]
    mi_skipped: bool


def _source_bit_length(dist: Distribution) -> int:
    m = int(np.log2(dist.alphabet_size))
    if 2**m != dist.alphabet_size:
        raise ValueError("source alphabets must be powers of two (bit strings)")
    return m


def dlhl_premise_holds(
    sources: Sequence[tuple], eps: float,
    joint_with_z: Optional[JointDistribution] = None,
) -> bool:
    """Check H^eps'(X|_S | Z) >= sum_S k_i + 2 log2(1/eps) for every subset S.

    Evaluated with the unsmoothed conditional min-entropy, which lower-bounds
    the smooth quantity for every radius, so a pass here implies the lemma's
    premise.  With ``joint_with_z`` the axes are (X_1, ..., X_n, Z); otherwise
    sources are independent and Z is constant.
    """
    from .info import conditional_min_entropy

    n_src = len(sources)
    for subset in itertools.chain.from_iterable(
        itertools.combinations(range(n_src), r) for r in range(1, n_src + 1)
    ):
        need = sum(sources[i][1] for i in subset) + 2 * np.log2(1.0 / eps)
        if joint_with_z is None:
            have = sum(-np.log2(sources[i][0].probs.max()) for i in subset)
        else:
            drop = tuple(a for a in range(n_src) if a not in subset)
            reduced = joint_with_z.probs.sum(axis=drop) if drop else joint_with_z.probs
            flat = reduced.reshape(-1, reduced.shape[-1])
            have = conditional_min_entropy(JointDistribution(flat))
        if have < need - 1e-9:
            return False
    return True


def dlhl_distance_to_uniform(
    sources: Sequence[tuple],
    eps: float,
    eps_prime: float,
    joint_with_z: Optional[JointDistribution] = None,
    z_size: int = 1,
) -> DlhlResult:
    """Exact statistical distance of (hash outputs, seeds, Z) from uniform x seeds x Z.

    ``sources`` is a list of (Distribution over {0,1}^{m_i}, k_i).  With
    ``joint_with_z`` given, its axes are (X_1, ..., X_n, Z) and the per-source
    marginals must match; otherwise the sources are independent and Z is
    constant.  Returns the distance together with the lemma bound
    2^n_src * eps / 2 + 2^n_src * eps_prime and the mutual-information
    corollary values (skipped with a flag when the bound's eps'' is zero).
    """
    n_src = len(sources)
    ms = [_source_bit_length(d) for d, _ in sources]
    ks = [k for _, k in sources]
    seed_space = 2 ** sum(k * m for k, m in zip(ks, ms))
    if seed_space > SEED_ENUM_CAP:
        raise SizeCapError(
            f"{seed_space} seed tuples exceed the enumeration cap",
            cap=SEED_ENUM_CAP, requested=seed_space,
        )
    if joint_with_z is None:
        probs = sources[0][0].probs
        for d, _ in sources[1:]:
            probs = np.multiply.outer(probs, d.probs)
        px_z = probs.reshape(probs.shape + (1,)) if n_src > 1 else probs.reshape(-1, 1)
        z_card = 1
    else:
        px_z = joint_with_z.probs
        z_card = px_z.shape[-1]
    atoms = px_z.size * seed_space * 2 ** sum(ks)
    if atoms > ATOM_ENUM_CAP:
        raise SizeCapError(
            f"{atoms} atoms exceed the enumeration cap", cap=ATOM_ENUM_CAP, requested=atoms
        )

    # precompute, per source, the output symbol of every input under every seed
    per_source_maps = []
    for (d, k), m in zip(sources, ms):
        seeds = list(_all_matrices(k, m))
        inputs = np.array(list(itertools.product((0, 1), repeat=m)), dtype=np.uint8)
        # table[s, x] = output index under seed s
        table = np.zeros((len(seeds), 2**m), dtype=np.intp)
        for si, mat in enumerate(seeds):
            outs = (inputs @ mat.T) % 2
            table[si] = outs @ (1 << np.arange(k - 1, -1, -1))
        per_source_maps.append(table)

    out_card = 2 ** sum(ks)
    seed_counts = [t.shape[0] for t in per_source_maps]
    n_seed_tuples = int(np.prod(seed_counts))
    # P(u, t, z); seeds uniform and independent of (X, Z)
    dist_sum = 0.0
    flat_px_z = px_z.reshape(-1, z_card)
    x_shapes = [2**m for m in ms]
    x_indices = np.array(
        list(itertools.product(*[range(s) for s in x_shapes])), dtype=np.intp
    )
    mi_joint = np.zeros((2 ** ks[0], seed_counts[0], z_card)) if n_src >= 1 else None
    for t_tuple in itertools.product(*[range(c) for c in seed_counts]):
        # output index for every x-combination under this seed tuple
        u = np.zeros(len(x_indices), dtype=np.intp)
        for i, (tbl, ti) in enumerate(zip(per_source_maps, t_tuple)):
            u = u * (2 ** ks[i]) + tbl[ti][x_indices[:, i]]
        p_uz = np.zeros((out_card, z_card))
        np.add.at(p_uz, u, flat_px_z)
        dist_sum += 0.5 * np.abs(p_uz - p_uz.sum(axis=0, keepdims=True) / out_card).sum()
        if mi_joint is not None:
            u0 = per_source_maps[0][t_tuple[0]][x_indices[:, 0]]
            np.add.at(mi_joint[:, t_tuple[0], :], u0, flat_px_z)
    distance = dist_sum / n_seed_tuples
    bound = (2**n_src) * eps / 2.0 + (2**n_src) * eps_prime

    eps_dd = bound
    if eps_dd <= 0:
        mi_values, mi_bound, mi_skipped = None, None, True
    else:
        mi_joint /= n_seed_tuples
        # I(g1(T1,X1); T1, Z) from the exact joint table
        h_u = entropy_of_array(mi_joint.sum(axis=(1, 2)))
        p_tz = mi_joint.sum(axis=0)
        h_u_given_tz = entropy_of_array(mi_joint) - entropy_of_array(p_tz)
        mi = h_u - h_u_given_tz
        mi_bound = float(
            -eps_dd * np.log2(eps_dd / (2 ** ks[0] * max(z_card, z_size) * seed_counts[0]))
        )
        mi_values, mi_skipped = (float(mi),), False
    return DlhlResult(
        float(distance), float(bound), bool(distance <= bound + 1e-12),
        mi_values, mi_bound, mi_skipped,
    )


def bennet_entropy_bound(l: int, c: float) -> float:
    """Lower bound l - 2^(l-c)/ln 2 on the entropy of an l-bit universal hash output."""
    if l < 1:
        raise ValueError("output length must be >= 1")
    if c < 0:
        raise ValueError("the collision-entropy premise requires c >= 0")
    return float(l - 2.0 ** (l - c) / LN2)


class BennetCheck(NamedTuple):
    exact_entropy: float
    bound: float
    ok: bool
    c: float


def bennet_check(joint: JointDistribution, y: int, l: int) -> BennetCheck:
    """Exact H(kappa(X) | kappa, Y=y) averaged over all seeds, against the bound.

    Axes of ``joint`` are (X, Y); X's alphabet must be a power of two.
    """
    if joint.probs.ndim != 2:
        raise ValueError("bennet_check needs a 2-axis joint (X, Y)")
    col = joint.probs[:, y]
    if col.sum() <= 0:
        raise ValueError("conditioning value has zero probability")
    p_x = col / col.sum()
    m = _source_bit_length(Distribution(p_x))
    if 2 ** (l * m) > SEED_ENUM_CAP:
        raise SizeCapError(
            f"2^{l * m} seeds exceed the enumeration cap",
            cap=SEED_ENUM_CAP, requested=2 ** (l * m),
        )
    c = float(-np.log2(np.square(p_x).sum()))
    inputs = np.array(list(itertools.product((0, 1), repeat=m)), dtype=np.uint8)
    weights = np.arange(l - 1, -1, -1)
    total = 0.0
    n_seeds = 0
    for mat in _all_matrices(l, m):
        outs = ((inputs @ mat.T) % 2) @ (1 << weights)
        p_out = np.zeros(2**l)
        np.add.at(p_out, outs, p_x)
        total += entropy_of_array(p_out)
        n_seeds += 1
    exact = total / n_seeds
    bound = bennet_entropy_bound(l, c)
    return BennetCheck(float(exact), bound, bool(exact >= bound - 1e-9), c)
