"""Rate regions via optimization over product input distributions.

Binary inputs make the product space two dimensional; a dense grid (default
step 1e-3) followed by per-coordinate golden-section refinement is exhaustive
at this scale.  Non-concave min-objectives are handled by the dense grid.
Larger input alphabets (up to 4 symbols) use simplex grids whose step is
coarsened as needed to keep the joint grid enumerable; refinement recovers
local accuracy.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import Correlation, MacKernel, SbcParams, correlation_from
from .info import mutual_information
from .probcore import Distribution

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

OBJECTIVES = (
    "i_x1_y_given_x2",
    "i_x2_y_given_x1",
    "i_x1x2_y",
    "h_x1_given_y",
    "h_x2_given_y",
    "h_x1x2_given_y",
    "min_i1_h1",
    "min_i2_h2",
    "min_isum_hsum",
    "half_i1_plus_ix1x2",
    "half_i2_plus_ix1x2",
    "half_isum",
)


@dataclass(frozen=True)
class RateRegion:
    """Three nonnegative rate bounds plus the maximizing product input."""

    r1_max: float
    r2_max: float
    sum_max: float
    argmax: tuple  # (Distribution, Distribution) per bound is overkill; sum bound's argmax
    method: str
    grid_step: float
    strict: bool = False  # True when the source region uses strict inequalities

    def __post_init__(self):
        if min(self.r1_max, self.r2_max, self.sum_max) < -1e-9:
            raise ValueError("rate bounds must be nonnegative")
        if self.sum_max > self.r1_max + self.r2_max + 1e-9:
            raise ValueError("sum bound cannot exceed the individual bounds' sum")

    def bounds(self) -> tuple:
        return (self.r1_max, self.r2_max, self.sum_max)


def _xlog2x(p):
    out = np.zeros_like(p)
    np.log2(p, out=out, where=p > 0)
    return p * out


def _entropy_last(p):
    return -_xlog2x(p).sum(axis=-1)


def _quantities(kernel: MacKernel, a: np.ndarray, b: np.ndarray) -> dict:
    """Base information quantities for product inputs over a grid.

    ``a``/``b`` are arrays of P(X1=1), P(X2=1) probabilities... generalized:
    they are (n, x1_size) and (n, x2_size) stacks of input distributions of
    equal length n.  Returns dict of (n,) arrays.
    """
    w = kernel.w  # (x1, x2, y)
    # joint over (n, x1, x2, y)
    joint = a[:, :, None, None] * b[:, None, :, None] * w[None, :, :, :]
    p_y = joint.sum(axis=(1, 2))
    h_y = _entropy_last(p_y)
    h_y_given_12 = _entropy_last(w).ravel()[None, :]  # (1, x1*x2)
    pw = (a[:, :, None] * b[:, None, :]).reshape(a.shape[0], -1)
    h_y_given_x1x2 = (pw * h_y_given_12).sum(axis=1)
    # H(Y|X1) and H(Y|X2)
    p_y_given_x1 = np.einsum("nj,ijy->niy", b, w)  # rows per x1
    h_y_given_x1 = (a * _entropy_last(p_y_given_x1)).sum(axis=1)
    p_y_given_x2 = np.einsum("ni,ijy->njy", a, w)
    h_y_given_x2 = (b * _entropy_last(p_y_given_x2)).sum(axis=1)
    h_x1 = _entropy_last(a)
    h_x2 = _entropy_last(b)

    i_x1x2_y = h_y - h_y_given_x1x2
    i_x1_y_given_x2 = h_y_given_x2 - h_y_given_x1x2
    i_x2_y_given_x1 = h_y_given_x1 - h_y_given_x1x2
    i_x1_y = h_y - h_y_given_x1
    i_x2_y = h_y - h_y_given_x2
    h_x1_given_y = h_x1 - i_x1_y
    h_x2_given_y = h_x2 - i_x2_y
    h_x1x2_given_y = h_x1 + h_x2 - i_x1x2_y
    i_x1_x2_given_y = h_x1_given_y + h_x2_given_y - h_x1x2_given_y
    return {
        "i_x1_y_given_x2": i_x1_y_given_x2,
        "i_x2_y_given_x1": i_x2_y_given_x1,
        "i_x1x2_y": i_x1x2_y,
        "h_x1_given_y": h_x1_given_y,
        "h_x2_given_y": h_x2_given_y,
        "h_x1x2_given_y": h_x1x2_given_y,
        "i_x1_x2_given_y": np.clip(i_x1_x2_given_y, 0.0, None),
    }


def _objective_value(q: dict, objective: str) -> np.ndarray:
    if objective in q:
        return q[objective]
    if objective == "min_i1_h1":
        return np.minimum(q["i_x1_y_given_x2"], q["h_x1_given_y"])
    if objective == "min_i2_h2":
        return np.minimum(q["i_x2_y_given_x1"], q["h_x2_given_y"])
    if objective == "min_isum_hsum":
        return np.minimum(q["i_x1x2_y"], q["h_x1x2_given_y"])
    if objective == "half_i1_plus_ix1x2":
        return 0.5 * (q["i_x1_y_given_x2"] + q["i_x1_x2_given_y"])
    if objective == "half_i2_plus_ix1x2":
        return 0.5 * (q["i_x2_y_given_x1"] + q["i_x1_x2_given_y"])
    if objective == "half_isum":
        return 0.5 * q["i_x1x2_y"]
    raise ValueError(f"unknown objective {objective!r}; known: {OBJECTIVES}")


def _simplex_grid(size: int, step: float) -> np.ndarray:
    """All distributions over `size` symbols with coordinates on a step lattice."""
    if size == 1:
        return np.ones((1, 1))
    if size == 2:
        xs = np.arange(0.0, 1.0 + step / 2, step)
        xs = np.clip(xs, 0.0, 1.0)
        return np.stack([1.0 - xs, xs], axis=1)
    k = int(round(1.0 / step))
    pts = []
    for comp in itertools.combinations(range(k + size - 1), size - 1):
        prev = -1
        parts = []
        for c in comp + (k + size - 1,):
            parts.append(c - prev - 1)
            prev = c
        pts.append([x / k for x in parts])
    return np.array(pts)


def _default_grid_step(kernel: MacKernel) -> float:
    if kernel.x1_size <= 2 and kernel.x2_size <= 2:
        return 1e-3
    return 0.02


def _grid_for(kernel: MacKernel, grid_step: float):
    """Per-sender simplex grids, coarsened if the joint grid would blow up."""
    step = grid_step
    while True:
        g1 = _simplex_grid(kernel.x1_size, step)
        g2 = _simplex_grid(kernel.x2_size, step)
        if g1.shape[0] * g2.shape[0] <= 4_000_000:
            return g1, g2, step
        step *= 2.0


def _scan(kernel: MacKernel, grid_step: float):
    """Evaluate the base quantities over the full product grid, chunked."""
    g1, g2, step = _grid_for(kernel, grid_step)
    n1, n2 = g1.shape[0], g2.shape[0]
    chunk = max(1, int(2e5 // n2))
    results = None
    for start in range(0, n1, chunk):
        a_block = g1[start : start + chunk]
        a_rep = np.repeat(a_block, n2, axis=0)
        b_rep = np.tile(g2, (a_block.shape[0], 1))
        q = _quantities(kernel, a_rep, b_rep)
        if results is None:
            results = {k: [v] for k, v in q.items()}
        else:
            for k, v in q.items():
                results[k].append(v)
    q_full = {k: np.concatenate(v) for k, v in results.items()}
    return q_full, g1, g2, step


def _point_value(kernel: MacKernel, objective: str, d1: np.ndarray, d2: np.ndarray) -> float:
    q = _quantities(kernel, d1[None, :], d2[None, :])
    return float(_objective_value(q, objective)[0])


def _refine_coordinatewise(
    kernel: MacKernel, objective: str, d1: np.ndarray, d2: np.ndarray, iters: int
) -> tuple:
    """Golden-section polish, one simplex coordinate pair at a time.

    Moves mass between two symbols of one sender while the rest stays fixed;
    for binary senders this is plain golden section on P(X=1).
    """
    best = (_point_value(kernel, objective, d1, d2), d1.copy(), d2.copy())

    def line_search(d_self, d_other, which, i, j):
        total = d_self[i] + d_self[j]
        if total <= 0:
            return None
        lo, hi = 0.0, total

        def val(x):
            d = d_self.copy()
            d[i], d[j] = x, total - x
            return (
                _point_value(kernel, objective, d, d_other)
                if which == 0
                else _point_value(kernel, objective, d_other, d)
            )

        a_pt, b_pt = lo, hi
        c = b_pt - GOLDEN * (b_pt - a_pt)
        d_ = a_pt + GOLDEN * (b_pt - a_pt)
        fc, fd = val(c), val(d_)
        for _ in range(40):
            if fc > fd:
                b_pt, d_, fd = d_, c, fc
                c = b_pt - GOLDEN * (b_pt - a_pt)
                fc = val(c)
            else:
                a_pt, c, fc = c, d_, fd
                d_ = a_pt + GOLDEN * (b_pt - a_pt)
                fd = val(d_)
        x = (a_pt + b_pt) / 2
        d = d_self.copy()
        d[i], d[j] = x, total - x
        return d

    d1c, d2c = best[1], best[2]
    for _ in range(iters):
        improved = False
        for which, size in ((0, d1c.size), (1, d2c.size)):
            for i, j in itertools.combinations(range(size), 2):
                d_new = line_search(
                    d1c if which == 0 else d2c,
                    d2c if which == 0 else d1c,
                    which, i, j,
                )
                if d_new is None:
                    continue
                cand = (d_new, d2c) if which == 0 else (d1c, d_new)
                v = _point_value(kernel, objective, cand[0], cand[1])
                if v > best[0] + 1e-15:
                    best = (v, cand[0].copy(), cand[1].copy())
                    d1c, d2c = best[1], best[2]
                    improved = True
        if not improved:
            break
    return best


def max_over_products(
    kernel: MacKernel,
    objective: str,
    grid_step: Optional[float] = None,
    refine_iters: int = 50,
) -> tuple:
    """Maximize a named information functional over product input distributions.

    Grid search followed by coordinate-ascent refinement; the returned value
    is never below the grid optimum and the search is fully deterministic
    (ties broken toward the lexicographically smallest grid point).
    """
    if grid_step is None:
        grid_step = _default_grid_step(kernel)
    if not 0.0 < grid_step <= 0.5:
        raise ValueError("grid_step must lie in (0, 0.5]")
    q, g1, g2, step = _scan(kernel, grid_step)
    vals = _objective_value(q, objective)
    idx = int(np.argmax(vals))
    n2 = g2.shape[0]
    d1, d2 = g1[idx // n2].copy(), g2[idx % n2].copy()
    grid_best = float(vals[idx])
    refined, d1r, d2r = _refine_coordinatewise(kernel, objective, d1, d2, refine_iters)
    if refined >= grid_best:
        return refined, (Distribution(d1r), Distribution(d2r))
    return grid_best, (Distribution(d1), Distribution(d2))


def _as_kernel(channel) -> MacKernel:
    if isinstance(channel, SbcParams):
        return channel.composite_kernel()
    if isinstance(channel, Correlation):
        raise TypeError("pass a kernel or SbcParams; correlations fix the input law")
    return channel


def region_hbc_upper(channel, grid_step: Optional[float] = None, refine_iters: int = 50) -> RateRegion:
    """Honest-but-curious upper bound: maxima of min{I, H} objectives."""
    kernel = _as_kernel(channel)
    if grid_step is None:
        grid_step = _default_grid_step(kernel)
    q, g1, g2, step = _scan(kernel, grid_step)
    vals = {}
    args = {}
    for name in ("min_i1_h1", "min_i2_h2", "min_isum_hsum"):
        v = _objective_value(q, name)
        idx = int(np.argmax(v))
        n2 = g2.shape[0]
        d1, d2 = g1[idx // n2].copy(), g2[idx % n2].copy()
        refined, d1r, d2r = _refine_coordinatewise(kernel, name, d1, d2, refine_iters)
        vals[name] = max(float(v[idx]), refined)
        args[name] = (d1r, d2r) if refined >= float(v[idx]) else (d1, d2)
    d1, d2 = args["min_isum_hsum"]
    return RateRegion(
        max(vals["min_i1_h1"], 0.0),
        max(vals["min_i2_h2"], 0.0),
        min(max(vals["min_isum_hsum"], 0.0), vals["min_i1_h1"] + vals["min_i2_h2"]),
        (Distribution(d1), Distribution(d2)),
        method="grid+refine",
        grid_step=step,
    )


def _region_from_objectives(kernel, names, grid_step, refine_iters, strict=False) -> RateRegion:
    if grid_step is None:
        grid_step = _default_grid_step(kernel)
    q, g1, g2, step = _scan(kernel, grid_step)
    out = []
    arg_sum = None
    for name in names:
        v = _objective_value(q, name)
        idx = int(np.argmax(v))
        n2 = g2.shape[0]
        d1, d2 = g1[idx // n2].copy(), g2[idx % n2].copy()
        refined, d1r, d2r = _refine_coordinatewise(kernel, name, d1, d2, refine_iters)
        if refined >= float(v[idx]):
            out.append(refined)
            cand = (d1r, d2r)
        else:
            out.append(float(v[idx]))
            cand = (d1, d2)
        arg_sum = cand
    r1, r2, rsum = (max(x, 0.0) for x in out)
    return RateRegion(
        r1, r2, min(rsum, r1 + r2),
        (Distribution(arg_sum[0]), Distribution(arg_sum[1])),
        method="grid+refine", grid_step=step, strict=strict,
    )


def region_hbc_capacity(channel, grid_step: Optional[float] = None, refine_iters: int = 50) -> RateRegion:
    """Capacity region of the reduced correlation for honest-but-curious parties."""
    kernel = _as_kernel(channel)
    return _region_from_objectives(
        kernel, ("i_x1_y_given_x2", "i_x2_y_given_x1", "i_x1x2_y"),
        grid_step, refine_iters,
    )


def region_ska_upper(channel, grid_step: Optional[float] = None, refine_iters: int = 50) -> RateRegion:
    """Secret-key rate region with constant eavesdropper side information.

    Numerically the same functionals as the honest-but-curious capacity;
    exposed under the key-agreement name with its own semantics.
    """
    return region_hbc_capacity(channel, grid_step, refine_iters)


def region_malicious(
    channel, grid_step: Optional[float] = None, refine_iters: int = 50
) -> RateRegion:
    """Achievable region with a malicious receiver (strict-inequality suprema).

    When the X1 - Y - X2 Markov test passes at the maximizing inputs, the
    simplified region (conditional-MI terms only) must agree with the general
    one; that consistency is asserted here.
    """
    kernel = _as_kernel(channel)
    region = _region_from_objectives(
        kernel,
        ("half_i1_plus_ix1x2", "half_i2_plus_ix1x2", "half_isum"),
        grid_step, refine_iters, strict=True,
    )
    d1, d2 = region.argmax
    corr = correlation_from(kernel, d1, d2)
    if markov_x1_y_x2(corr):
        simplified = _region_from_objectives(
            kernel,
            ("i_x1_y_given_x2", "i_x2_y_given_x1", "i_x1x2_y"),
            grid_step, refine_iters, strict=True,
        )
        half = tuple(0.5 * b for b in simplified.bounds())
        # the conditional-MI term vanishes under the Markov chain, so the
        # general bounds collapse to half the capacity functionals
        general = region.bounds()
        if max(abs(h - g) for h, g in zip(half, general)) > 1e-6:
            raise AssertionError(
                f"Markov simplification mismatch: {half} vs {general}"
            )
    return region


def markov_x1_y_x2(c: Correlation, tol: float = 1e-9) -> bool:
    """True iff I(X1; X2 | Y) <= tol, i.e. X1 - Y - X2 is a Markov chain."""
    return mutual_information(c.joint, (0,), (1,), (2,)) <= tol
