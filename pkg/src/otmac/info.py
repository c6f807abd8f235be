"""Shannon and min-entropy measures, statistical distance, and bound checkers.

All logarithms are base 2 and 0*log 0 := 0.  Bound values may legitimately be
negative at tiny block lengths; callers clamp where they need to.

Conditional smoothing here holds the conditioning marginal fixed and smooths
only the target direction of the joint; that restriction turns the optimum
into a linear program with an exact threshold (cap-and-redistribute) solution.
The value is a lower bound of the unrestricted definition, which is what every
premise check in this package needs.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .probcore import Distribution, JointDistribution

LN2 = float(np.log(2.0))

Bits = float


def _xlog2x(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p, dtype=np.float64)
    mask = p > 0
    out[mask] = p[mask] * np.log2(p[mask])
    return out


def entropy_of_array(p: np.ndarray) -> Bits:
    """Shannon entropy of a raw (possibly multi-axis) probability array."""
    return float(-_xlog2x(np.asarray(p, dtype=np.float64)).sum())


def shannon_entropy(d: Distribution) -> Bits:
    return entropy_of_array(d.probs)


def binary_entropy(p: float) -> Bits:
    if not 0.0 <= p <= 1.0:
        raise ValueError("binary entropy needs p in [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def _resolve_axes(joint: JointDistribution, axes) -> tuple:
    axes = tuple(int(a) for a in axes)
    if len(set(axes)) != len(axes) or any(
        a < 0 or a >= joint.probs.ndim for a in axes
    ):
        raise ValueError(f"invalid axes {axes} for shape {joint.shape}")
    return axes


def conditional_entropy(joint: JointDistribution, target_axes, given_axes) -> Bits:
    """H(target | given) = H(target, given) - H(given)."""
    t = _resolve_axes(joint, target_axes)
    g = _resolve_axes(joint, given_axes)
    if set(t) & set(g):
        raise ValueError("target and given axes must be disjoint")
    ndim = joint.probs.ndim
    drop_tg = tuple(a for a in range(ndim) if a not in t + g)
    p_tg = joint.probs.sum(axis=drop_tg) if drop_tg else joint.probs
    drop_g = tuple(a for a in range(ndim) if a not in g)
    p_g = joint.probs.sum(axis=drop_g)
    return entropy_of_array(p_tg) - entropy_of_array(p_g)


def mutual_information(joint: JointDistribution, axes_a, axes_b, given_axes=()) -> Bits:
    """I(A; B | C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)."""
    a = _resolve_axes(joint, axes_a)
    b = _resolve_axes(joint, axes_b)
    c = _resolve_axes(joint, given_axes) if given_axes else ()
    if (set(a) & set(b)) or (set(a) & set(c)) or (set(b) & set(c)):
        raise ValueError("axis groups must be disjoint")

    def h(keep):
        ndim = joint.probs.ndim
        drop = tuple(x for x in range(ndim) if x not in keep)
        p = joint.probs.sum(axis=drop) if drop else joint.probs
        return entropy_of_array(p)

    hc = h(c) if c else 0.0
    return h(a + c) + h(b + c) - h(a + b + c) - hc


def statistical_distance(p: Distribution, q: Distribution) -> float:
    if p.alphabet_size != q.alphabet_size:
        raise ValueError("distributions live on different alphabets")
    return float(0.5 * np.abs(p.probs - q.probs).sum())


def min_entropy(d: Distribution) -> Bits:
    return float(-np.log2(d.probs.max()))


def zero_entropy(d: Distribution) -> Bits:
    return float(np.log2(np.count_nonzero(d.probs > 0)))


def _target_given_matrix(joint: JointDistribution, target_axes, given_axes):
    """Reshape the joint to a (targets x givens) matrix."""
    t = _resolve_axes(joint, target_axes)
    g = tuple(a for a in range(joint.probs.ndim) if a not in t)
    if given_axes is not None:
        g_req = _resolve_axes(joint, given_axes)
        if set(g_req) != set(g):
            raise ValueError("target and given axes must partition the joint")
        g = g_req
    arr = np.transpose(joint.probs, t + g)
    t_size = int(np.prod([joint.shape[a] for a in t]))
    return arr.reshape(t_size, -1)


def conditional_min_entropy(joint: JointDistribution, target_axes=(0,), given_axes=None) -> Bits:
    """H_inf(T|G) = min over positive-mass g of -log2 max_t P(t|g)."""
    m = _target_given_matrix(joint, target_axes, given_axes)
    pg = m.sum(axis=0)
    pos = pg > 0
    if not pos.any():
        raise ValueError("degenerate joint: no positive-mass conditioning value")
    return float(-np.log2((m[:, pos] / pg[pos]).max()))


def conditional_zero_entropy(joint: JointDistribution, target_axes=(0,), given_axes=None) -> Bits:
    """H_0(T|G) = max over positive-mass g of log2 |supp(T | G=g)|."""
    m = _target_given_matrix(joint, target_axes, given_axes)
    pg = m.sum(axis=0)
    pos = pg > 0
    supp = (m[:, pos] > 0).sum(axis=0)
    return float(np.log2(supp.max()))


def collision_probability(d: Distribution) -> float:
    return float(np.square(d.probs).sum())


def renyi2_entropy(d: Distribution) -> Bits:
    h2 = float(-np.log2(collision_probability(d)))
    assert h2 <= shannon_entropy(d) + 1e-9
    return h2


def _smallest_cap(masses: np.ndarray, weights: np.ndarray, eps: float, floor: float) -> float:
    """Exact threshold optimum of the restricted smoothing LP.

    Minimizes t subject to cell <= t * weight with per-slice mass preserved and
    total moved mass (half L1) <= eps.  E(t) = sum max(mass - t*weight, 0) is
    piecewise linear and decreasing, so the crossing is solved on its segments.
    """
    ratios = masses / weights
    order = np.argsort(-ratios)
    r = ratios[order]
    a = np.cumsum(masses[order])
    b = np.cumsum(weights[order])
    if eps <= 0:
        return max(float(r[0]), floor)
    if eps >= float(np.maximum(masses - floor * weights, 0.0).sum()):
        # capping everything at the floor already moves no more than eps
        return floor
    t_eps = 0.0
    for j in range(len(r)):
        lo = r[j + 1] if j + 1 < len(r) else 0.0
        t = (a[j] - eps) / b[j]
        if lo - 1e-15 <= t <= r[j] + 1e-15:
            t_eps = min(max(t, lo), float(r[j]))
            break
    return max(t_eps, floor)


def smooth_min_entropy(d: Distribution, eps: float) -> Bits:
    """Exact eps-smooth min-entropy via the cap-and-redistribute construction."""
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    t = _smallest_cap(
        np.asarray(d.probs, dtype=np.float64),
        np.ones(d.alphabet_size),
        eps,
        1.0 / d.alphabet_size,
    )
    return float(-np.log2(t))


EXACT_SMOOTHING_CAP = 4096


def smooth_conditional_min_entropy(
    joint: JointDistribution, eps: float, target_axes=(0,), given_axes=None
) -> Bits:
    """Restricted-smoothing optimum: the conditioning marginal is held fixed.

    Exact linear-program optimum (threshold form): minimize t subject to
    P'(t_cell, g) <= t * P(g), per-g mass preserved, half-L1 distance <= eps.
    Returns -log2 t; a lower bound of the unrestricted smooth min-entropy.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    m = _target_given_matrix(joint, target_axes, given_axes)
    if m.size > EXACT_SMOOTHING_CAP:
        from .errors import SizeCapError

        raise SizeCapError(
            f"alphabet product {m.size} exceeds exact-smoothing cap",
            cap=EXACT_SMOOTHING_CAP,
            requested=m.size,
        )
    pg = m.sum(axis=0)
    pos = pg > 0
    if not pos.any():
        raise ValueError("degenerate joint: all conditioning values have zero mass")
    t_size = m.shape[0]
    masses = m[:, pos].ravel()
    weights = np.broadcast_to(pg[pos], (t_size, int(pos.sum()))).ravel()
    t = _smallest_cap(masses, weights, eps, 1.0 / t_size)
    return float(-np.log2(t))


def _smooth_cond_clamped(joint, eps, target_axes=(0,), given_axes=None) -> Bits:
    # radii >= 1 reach the uniform conditional exactly; used by the bound checkers
    if eps >= 1.0:
        t = _target_given_matrix(joint, target_axes, given_axes).shape[0]
        return float(np.log2(t))
    return smooth_conditional_min_entropy(joint, eps, target_axes, given_axes)


class Lemma1Check(NamedTuple):
    lower_ok: bool
    upper_ok: bool
    h_inf: Bits
    h_smooth: Bits


def check_lemma1(joint: JointDistribution, eps: float, slack: float = 1e-9) -> Lemma1Check:
    """Sandwich H^eps - log2(1/eps) <= H_inf <= H^eps for the first axis given the rest.

    The sandwich is guaranteed for eps < 1/|target alphabet|; outside that
    regime the truth values are reported as computed.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    h_inf = conditional_min_entropy(joint)
    h_smooth = smooth_conditional_min_entropy(joint, eps)
    lower_ok = h_smooth - np.log2(1.0 / eps) <= h_inf + slack
    upper_ok = h_inf <= h_smooth + slack
    return Lemma1Check(bool(lower_ok), bool(upper_ok), h_inf, h_smooth)


def iid_smooth_lower_bound(n: int, h_cond: Bits, eps: float, alphabet_size: int) -> Bits:
    """n H(X|Y) - 4 sqrt(n log2(1/eps)) log2|X|; may be negative, caller clamps."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    return float(
        n * h_cond - 4.0 * np.sqrt(n * np.log2(1.0 / eps)) * np.log2(alphabet_size)
    )


class ChainRuleInequality(NamedTuple):
    name: str
    lhs: Bits
    rhs: Bits
    margin: Bits
    ok: bool


class ChainRuleReport(NamedTuple):
    eq1: ChainRuleInequality
    eq2_upper: ChainRuleInequality
    eq2_lower: ChainRuleInequality
    eq3: ChainRuleInequality

    def all_ok(self) -> bool:
        return all(x.ok for x in self)


def chain_rule_bounds(
    joint: JointDistribution, eps: float, eps_prime: float, slack: float = 1e-9
) -> ChainRuleReport:
    """Evaluate the smooth-entropy chain-rule inequalities on a 3-axis joint (U, V, W).

    The middle display is a sandwich on H^eps(U,V|W): lower bound
    H_inf(U|W) + H^eps(V|U,W), upper bound H^{eps+eps'}(U|V,W) + H_0(V|W)
    + log2(1/eps').  (The source display prints the sandwich with the
    comparison signs reversed, which the uniform joint already refutes; the
    orientation used here is the one its own derivation supports.)
    Radii at or above 1 are clamped to the uniform-conditional optimum.
    """
    if joint.probs.ndim != 3:
        raise ValueError("chain-rule bounds need a 3-axis joint")
    if not (0.0 < eps < 1.0 and 0.0 < eps_prime < 1.0):
        raise ValueError("eps and eps' must lie in (0, 1)")
    log_inv_ep = float(np.log2(1.0 / eps_prime))

    h_u_given_vw = _smooth_cond_clamped(joint, eps + eps_prime, (0,), (1, 2))
    h_uv_given_w = _smooth_cond_clamped(joint, eps, (0, 1), (2,))
    h_v_given_uw = _smooth_cond_clamped(joint, eps, (1,), (0, 2))
    uw = JointDistribution(joint.probs.sum(axis=1))
    h_inf_u_given_w = conditional_min_entropy(uw)
    vw = JointDistribution(joint.probs.sum(axis=0))
    h0_v_given_w = conditional_zero_entropy(vw)

    def ineq(name, lhs, rhs):
        return ChainRuleInequality(name, lhs, rhs, lhs - rhs, bool(lhs >= rhs - slack))

    eq1 = ineq(
        "eq1",
        h_u_given_vw,
        h_inf_u_given_w + h_v_given_uw - h0_v_given_w - log_inv_ep,
    )
    eq2_upper = ineq("eq2_upper", h_u_given_vw + h0_v_given_w + log_inv_ep, h_uv_given_w)
    eq2_lower = ineq("eq2_lower", h_uv_given_w, h_inf_u_given_w + h_v_given_uw)
    eq3 = ineq("eq3", h_uv_given_w, h_inf_u_given_w + h_v_given_uw)
    return ChainRuleReport(eq1, eq2_upper, eq2_lower, eq3)


class ContinuityCheck(NamedTuple):
    bound: Bits
    difference: Bits
    ok: bool


def entropy_continuity_bound(
    joint: JointDistribution, z1: int, z2: int, slack: float = 1e-9
) -> ContinuityCheck:
    """|H(X|Y, Z=z1) - H(X|Y, Z=z2)| <= 1 + 3 log2|X| sqrt((p+q) ln2 / (2pq) I(X,Y;Z)).

    Axes are (X, Y, Z); both z values must have positive probability.
    """
    if joint.probs.ndim != 3:
        raise ValueError("continuity bound needs a 3-axis joint (X, Y, Z)")
    pz = joint.probs.sum(axis=(0, 1))
    p, q = float(pz[z1]), float(pz[z2])
    if p <= 0 or q <= 0:
        raise ValueError("both conditioning values must have positive probability")
    i_xy_z = max(mutual_information(joint, (0, 1), (2,)), 0.0)
    x_size = joint.shape[0]
    bound = 1.0 + 3.0 * np.log2(x_size) * np.sqrt((p + q) * LN2 / (2 * p * q) * i_xy_z)

    def h_x_given_y_at(z):
        sl = joint.probs[:, :, z]
        cond = JointDistribution(sl / sl.sum())
        return conditional_entropy(cond, (0,), (1,))

    diff = abs(h_x_given_y_at(z1) - h_x_given_y_at(z2))
    return ContinuityCheck(float(bound), float(diff), bool(diff <= bound + slack))


def fano_key_bound(eps1: float, eps2: float, s1_card: int, s2_card: int) -> Bits:
    """h(eps1) + h(eps2) + log2(|S1|-1) + log2(|S2|-1)."""
    if s1_card < 2 or s2_card < 2:
        raise ValueError("key alphabets must have at least 2 values")
    return (
        binary_entropy(eps1)
        + binary_entropy(eps2)
        + float(np.log2(s1_card - 1))
        + float(np.log2(s2_card - 1))
    )


def entropy_ordering_ok(d: Distribution, slack: float = 1e-9) -> bool:
    """H_inf <= H_2 <= H <= H_0 for every distribution."""
    h_inf = min_entropy(d)
    h2 = float(-np.log2(collision_probability(d)))
    h = shannon_entropy(d)
    h0 = zero_entropy(d)
    return h_inf <= h2 + slack and h2 <= h + slack and h <= h0 + slack
