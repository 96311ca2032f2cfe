"""Calibrated empirical constants used by the verification suite.

The boundedness statements realised here are norm equivalences with
unquantified constants; the frozen values below pin them numerically.
Each was produced by the sweep in :func:`recompute` (run
``python -m prodbmo.calibration``) and widened by a safety margin so that
fresh random draws from the same generators stay inside.  Tests treat the
frozen values as the contract; regenerate and widen them only when the
solvers or generators change.
"""

from __future__ import annotations

import math

import numpy as np

from .core import (
    DyadicInterval,
    DyadicRect,
    GridFunction2D,
    HaarSpectrum2D,
    haar_forward_2d,
    haar_inverse_2d,
)
from .norms import (
    bmo_d_norm_sq,
    extremal_bmo_function,
    lmo_char_norm,
    lmo_d_norm,
)
from .paraproducts import DELTA, PI, paraproduct
from .shifts import iterated_commutator_apply

LN2 = math.log(2.0)

#: exact constant of the necessity chain: each scale weight log(4/|I|)
#: = (k+2) log 2 is at most 2 log 2 * (k+1), squared per axis
NECESSITY_CHAIN_CONSTANT_SQ = (2.0 * LN2) ** 4

CALIBRATED = {
    # max BMO norm of the staircase symbols over every rectangle, depths <= (4,4);
    # observed 1.4336, converging towards ~2 with depth (deterministic sweep)
    "extremal_norm_bound": 1.45,
    # growth sweep: worst |m_Q b| / ((k1+1)(k2+1) ||b||) over the family;
    # observed exactly 9.0, depth-stable (deterministic sweep)
    "extremal_growth_bound": 9.5,
    # sharpness: the defining-rectangle ratio the family attains; observed 0.6975
    "extremal_growth_sharpness": 0.65,
    # ratio lmo_char / lmo_d^2: certified bracket per depth D is
    # [((D+1)/D)^4, 16] * (ln 2)^4; the sweep attains the floor exactly
    # (0.72955 at depth 3, 1.16860 at depth 2) and 2000 draws at depth 3
    # never exceeded the structural plateau 0.92334
    "lmo_ratio_lo_depth2": 1.10,
    "lmo_ratio_hi_depth2": 3.70,
    "lmo_ratio_lo_depth3": 0.70,
    "lmo_ratio_hi_depth3": 3.70,
    # sup over depths (2,2),(3,3),(4,4) of bmo(Pi_phi b) / (lmo(phi) bmo(b));
    # observed <= 0.219 across seeds
    "pi_bound_constant": 0.40,
    # two-sided constants of the adjoint paraproduct against the probe set,
    # ratios M(phi) / ||phi||_bmo at depth (2,2); observed [0.103, 0.524]
    "delta_bound_lo": 0.05,
    "delta_bound_hi": 0.80,
    # shared constant of the iterated-commutator experiment at (2,2), (3,3);
    # observed <= 1.332 across seeds
    "shift_commutator_bound": 2.00,
}


def random_hh_symbol(depth, rng) -> HaarSpectrum2D:
    """The reference symbol distribution: iid standard normal hh block."""
    j1, j2 = depth
    c = np.zeros((1 << j1, 1 << j2))
    c[1:, 1:] = rng.standard_normal(((1 << j1) - 1, (1 << j2) - 1))
    return HaarSpectrum2D(depth, c)


def delta_probe_set(depth):
    """Fixed 20-element probe family for the adjoint-paraproduct bounds:
    single product Haar functions, staircases, and seeded hh-span draws."""
    j1d, j2d = depth
    probes = []
    for (j1, i1, j2, i2) in [
        (0, 0, 0, 0), (0, 0, 1, 0), (1, 0, 0, 0), (1, 1, 1, 1),
        (1, 0, 1, 1), (0, 0, j2d - 1, 0), (j1d - 1, 0, 0, 0),
        (j1d - 1, (1 << (j1d - 1)) - 1, j2d - 1, (1 << (j2d - 1)) - 1),
    ]:
        c = HaarSpectrum2D.zeros(depth).with_hh_coef(
            DyadicRect(DyadicInterval(j1, i1), DyadicInterval(j2, i2)), 1.0
        )
        probes.append(haar_inverse_2d(c))
    for (j1, j2) in [(1, 1), (j1d, j2d), (1, j2d), (j1d, 1)]:
        probes.append(
            extremal_bmo_function(DyadicRect.from_levels(j1, 0, j2, 0), depth)
        )
    rng = np.random.default_rng(987654321)
    while len(probes) < 20:
        probes.append(haar_inverse_2d(random_hh_symbol(depth, rng)))
    return probes[:20]


def delta_operator_ratio(phi: HaarSpectrum2D, probes) -> float:
    """max over the probe set of bmo(Delta_phi b) / bmo(b)."""
    best = 0.0
    for b in probes:
        denom = math.sqrt(bmo_d_norm_sq(haar_forward_2d(b))[0])
        if denom == 0.0:
            continue
        out = paraproduct(DELTA, phi, b)
        num = math.sqrt(bmo_d_norm_sq(haar_forward_2d(out))[0])
        best = max(best, num / denom)
    return best


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def sweep_extremal(max_depth=(4, 4)):
    from .core import PrefixTable, dyadic_rect_mean

    worst_norm = 0.0
    worst_growth = 0.0
    sharpness = None
    depths = [(d, d) for d in range(2, max_depth[0] + 1)]
    for depth in depths:
        for j1 in range(depth[0] + 1):
            for j2 in range(depth[1] + 1):
                for i1 in range(1 << j1):
                    for i2 in range(1 << j2):
                        r = DyadicRect.from_levels(j1, i1, j2, i2)
                        b = extremal_bmo_function(r, depth)
                        bnorm = math.sqrt(bmo_d_norm_sq(haar_forward_2d(b))[0])
                        worst_norm = max(worst_norm, bnorm)
                        if bnorm == 0.0:
                            continue
                        pt = PrefixTable(b)
                        for k1 in range(depth[0] + 1):
                            for k2 in range(depth[1] + 1):
                                best_here = max(
                                    abs(
                                        dyadic_rect_mean(
                                            pt,
                                            DyadicRect.from_levels(k1, p1, k2, p2),
                                        )
                                    )
                                    for p1 in range(1 << k1)
                                    for p2 in range(1 << k2)
                                )
                                worst_growth = max(
                                    worst_growth,
                                    best_here / ((k1 + 1) * (k2 + 1) * bnorm),
                                )
                        att = dyadic_rect_mean(pt, r) / (
                            (j1 + 1) * (j2 + 1) * bnorm
                        )
                        sharpness = att if sharpness is None else min(sharpness, att)
    return {
        "extremal_norm_bound": worst_norm,
        "extremal_growth_bound": worst_growth,
        "extremal_growth_sharpness": sharpness,
    }


def lmo_ratio_interval(depth: int):
    """Pinned (c1, c2) for the lmo_char / lmo_d^2 ratio at the given depth."""
    try:
        return (
            CALIBRATED[f"lmo_ratio_lo_depth{depth}"],
            CALIBRATED[f"lmo_ratio_hi_depth{depth}"],
        )
    except KeyError:
        raise ValueError(f"no calibrated ratio interval for depth {depth}")


def sweep_lmo_ratio(n=200, depth=(3, 3), seed=20240501):
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(n):
        phi = random_hh_symbol(depth, rng)
        num = lmo_char_norm(phi)
        den = lmo_d_norm(phi) ** 2
        ratios.append(num / den)
    key = depth[0]
    return {
        f"lmo_ratio_lo_depth{key}": min(ratios),
        f"lmo_ratio_hi_depth{key}": max(ratios),
    }


def sweep_pi_bound(n=100, seed=20240502):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for depth in [(2, 2), (3, 3), (4, 4)]:
        for _ in range(n):
            phi = random_hh_symbol(depth, rng)
            b = haar_inverse_2d(random_hh_symbol(depth, rng))
            denom = lmo_d_norm(phi) * math.sqrt(
                bmo_d_norm_sq(haar_forward_2d(b))[0]
            )
            if denom == 0.0:
                continue
            num = math.sqrt(
                bmo_d_norm_sq(haar_forward_2d(paraproduct(PI, phi, b)))[0]
            )
            worst = max(worst, num / denom)
    return {"pi_bound_constant": worst}


def sweep_delta_bounds(n=50, depth=(2, 2), seed=20240503):
    rng = np.random.default_rng(seed)
    probes = delta_probe_set(depth)
    lo, hi = math.inf, 0.0
    for _ in range(n):
        phi = random_hh_symbol(depth, rng)
        norm = math.sqrt(bmo_d_norm_sq(phi)[0])
        if norm == 0.0:
            continue
        ratio = delta_operator_ratio(phi, probes) / norm
        lo, hi = min(lo, ratio), max(hi, ratio)
    return {"delta_bound_lo": lo, "delta_bound_hi": hi}


def sweep_shift_commutator(n=100, seed=20240504):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for depth in [(2, 2), (3, 3)]:
        for _ in range(n):
            phi = haar_inverse_2d(random_hh_symbol(depth, rng))
            b = haar_inverse_2d(random_hh_symbol(depth, rng))
            denom = lmo_d_norm(haar_forward_2d(phi)) * math.sqrt(
                bmo_d_norm_sq(haar_forward_2d(b))[0]
            )
            if denom == 0.0:
                continue
            out = iterated_commutator_apply(phi, b)
            num = math.sqrt(bmo_d_norm_sq(haar_forward_2d(out))[0])
            worst = max(worst, num / denom)
    return {"shift_commutator_bound": worst}


def recompute(verbose=True):
    """Re-run every sweep and report raw values (no margins applied)."""
    out = {}
    out.update(sweep_extremal())
    out.update(sweep_lmo_ratio())
    out.update(sweep_pi_bound())
    out.update(sweep_delta_bounds())
    out.update(sweep_shift_commutator())
    if verbose:
        for k, v in out.items():
            frozen = CALIBRATED.get(k)
            print(f"{k:32s} raw={v:.6f} frozen={frozen}")
    return out


if __name__ == "__main__":
    recompute()
